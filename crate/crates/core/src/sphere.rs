//! Sphere packing exponents, averaged capacities and the non-asymptotic
//! lower bounds on the error probability of list codes.

use std::collections::HashMap;
use std::f64::consts::E;
use std::sync::Mutex;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::capacity::{CapacityConfig, CapacityResult, CapacitySolver};
use crate::dual::minimize_dual;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::fw::{bisect, golden_section_max};
use crate::measures::{divergence_raw, kl_raw, tilt_raw, Channel, FiniteDist, Order};
use crate::polytope::ConstraintSet;
use crate::quad::{adaptive_simpson, adaptive_simpson_vec};

/// Orders closer than this to 0 or 1 are not searched.
pub const ORDER_MARGIN: f64 = 1e-6;
pub const QUAD_TOL: f64 = 1e-9;
pub const QUAD_PANELS: usize = 10_000;

/// `α ↦ C_α` on `(0, 1]`.
pub trait CapacityCurve {
    fn capacity_at(&self, alpha: f64) -> Result<f64>;
}

fn key(alpha: f64) -> u64 {
    alpha.to_bits()
}

/// `C_α(W, A)` for one channel and a convex prior set, memoized per order
/// and warm-started across orders.
pub struct ConstrainedCapacity {
    solver: Mutex<CapacitySolver>,
    cache: Mutex<HashMap<u64, CapacityResult>>,
}

impl ConstrainedCapacity {
    pub fn new(ch: &Channel, cons: &ConstraintSet) -> Result<Self> {
        Ok(ConstrainedCapacity {
            solver: Mutex::new(CapacitySolver::new(ch, cons, CapacityConfig::default())?),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn result_at(&self, alpha: f64) -> Result<CapacityResult> {
        if let Some(r) = self.cache.lock().expect("cache lock").get(&key(alpha)) {
            return Ok(r.clone());
        }
        let order = Order::new(alpha)?.check_unit()?;
        let r = self.solver.lock().expect("solver lock").solve(order)?;
        if !r.converged {
            return Err(Error::NonConvergence {
                what: "capacity",
                iterations: r.iterations,
                residual: r.kkt_gap,
            });
        }
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key(alpha), r.clone());
        Ok(r)
    }
}

impl CapacityCurve for ConstrainedCapacity {
    fn capacity_at(&self, alpha: f64) -> Result<f64> {
        Ok(self.result_at(alpha)?.value.to_f64())
    }
}

/// The dual solution for a product channel under a joint additive cost
/// constraint at one order.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub value: f64,
    pub lambda: Vec<f64>,
    /// Per-component A-L centers at the optimal multiplier.
    pub centers: Vec<FiniteDist>,
}

/// `C_α(W, ρ)` for `W = W₁ ⊗ … ⊗ W_n` with additive cost, computed as
/// `min_λ Σ_t C^λ_α(W_t) + λ·ρ` without forming the product channel.
pub struct ProductCostCapacity {
    components: Vec<Channel>,
    rho: Vec<f64>,
    interior: bool,
    state: Mutex<(Vec<CapacitySolver>, HashMap<u64, DualPoint>)>,
}

impl ProductCostCapacity {
    pub fn new(components: &[Channel], rho: &[f64]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("empty component list".into()));
        }
        for c in components {
            if !c.has_cost() {
                return Err(Error::MissingCost);
            }
            crate::measures::check_dim(c.cost_dim(), rho.len())?;
        }
        let interior = joint_interior(components, rho)?;
        let solvers = components
            .iter()
            .map(|c| CapacitySolver::penalized(c, vec![0.0; c.inputs()], CapacityConfig::default()))
            .collect::<Result<_>>()?;
        Ok(ProductCostCapacity {
            components: components.to_vec(),
            rho: rho.to_vec(),
            interior,
            state: Mutex::new((solvers, HashMap::new())),
        })
    }

    pub fn components(&self) -> &[Channel] {
        &self.components
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Whether `ρ` is strictly feasible for the joint cost.
    pub fn is_interior(&self) -> bool {
        self.interior
    }

    pub fn dual_at(&self, alpha: f64) -> Result<DualPoint> {
        let order = Order::new(alpha)?.check_unit()?;
        let mut guard = self.state.lock().expect("state lock");
        let (solvers, cache) = &mut *guard;
        if let Some(d) = cache.get(&key(alpha)) {
            return Ok(d.clone());
        }
        let comps = &self.components;
        let rho = &self.rho;
        let (lam, (h, _, centers)) = minimize_dual(rho.len(), None, |lam| {
            let mut h: f64 = lam.iter().zip(rho).map(|(a, b)| a * b).sum();
            let mut used = vec![0.0; rho.len()];
            let mut centers = Vec::with_capacity(comps.len());
            for (s, c) in solvers.iter_mut().zip(comps) {
                s.set_penalty(c.penalties(lam)?);
                let r = s.solve(order)?;
                h += r.value.to_f64();
                for (u, e) in used.iter_mut().zip(c.expected_cost(r.prior.weights())?) {
                    *u += e;
                }
                centers.push(r.center);
            }
            let slope = used.iter().zip(rho).map(|(u, r)| u - r).collect();
            Ok((h, slope, centers))
        })?;
        let d = DualPoint {
            value: h,
            lambda: lam,
            centers,
        };
        cache.insert(key(alpha), d.clone());
        Ok(d)
    }
}

impl CapacityCurve for ProductCostCapacity {
    fn capacity_at(&self, alpha: f64) -> Result<f64> {
        Ok(self.dual_at(alpha)?.value)
    }
}

/// Whether some choice of per-component priors has expected joint cost
/// strictly below `ρ` in every coordinate.
fn joint_interior(components: &[Channel], rho: &[f64]) -> Result<bool> {
    let mut pb = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Vec<_>> = components
        .iter()
        .map(|c| {
            (0..c.inputs())
                .map(|_| pb.add_var(0.0, (0.0, 1.0)))
                .collect()
        })
        .collect();
    let t = pb.add_var(1.0, (-1e6, 1.0));
    for v in &vars {
        pb.add_constraint(
            v.iter().map(|&x| (x, 1.0)).collect::<Vec<_>>(),
            ComparisonOp::Eq,
            1.0,
        );
    }
    for (j, &r) in rho.iter().enumerate() {
        let mut e = vec![(t, 1.0)];
        for (c, v) in components.iter().zip(&vars) {
            for (x, &var) in v.iter().enumerate() {
                e.push((var, c.cost_matrix()?[x][j]));
            }
        }
        pb.add_constraint(e, ComparisonOp::Le, r);
    }
    match pb.solve() {
        Ok(sol) => Ok(sol.objective() > 1e-12),
        Err(minilp::Error::Infeasible) => Err(Error::Infeasible(format!(
            "cost level {rho:?} is not achievable"
        ))),
        Err(e) => Err(Error::Lp(e.to_string())),
    }
}

/// A point on an exponent curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPoint {
    pub rate: f64,
    pub exponent: ExtReal,
    pub argmax_alpha: Order,
}

/// `sup_{α∈(0,1)} ((1−α)/α)(c(α) − R)`, searched in `u = ln((1−α)/α)`:
/// a coarse scan followed by golden section around the best cell.
fn maximize_over_order<F: FnMut(f64) -> Result<f64>>(mut c: F, rate: f64) -> Result<(f64, f64)> {
    let umax = ((1.0 - ORDER_MARGIN) / ORDER_MARGIN).ln();
    let alpha_of = |u: f64| 1.0 / (1.0 + u.exp());
    let mut g = |u: f64| -> Result<f64> { Ok(u.exp() * (c(alpha_of(u))? - rate)) };
    let cells = 56;
    let h = 2.0 * umax / cells as f64;
    let grid: Vec<f64> = (0..=cells).map(|i| -umax + i as f64 * h).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| g(u)).collect::<Result<_>>()?;
    let best = (0..vals.len())
        .max_by(|&i, &j| vals[i].total_cmp(&vals[j]).then(j.cmp(&i)))
        .expect("non-empty grid");
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(cells)];
    let (u, v) = golden_section_max(&mut g, lo, hi, 1e-7)?;
    Ok(if v >= vals[best] {
        (v, alpha_of(u))
    } else {
        (vals[best], alpha_of(grid[best]))
    })
}

/// `lim_{α↓0} c(α) > R` detected from `c(δ) > R` and `c(δ) ≥ 0.75 c(2δ)`,
/// i.e. the curve does not vanish linearly at the origin.
fn zero_error<F: FnMut(f64) -> Result<f64>>(c: &mut F, rate: f64) -> Result<bool> {
    let d = c(ORDER_MARGIN)?;
    let d2 = c(2.0 * ORDER_MARGIN)?;
    Ok(d > rate && d >= 0.75 * d2)
}

fn exponent_with<F: FnMut(f64) -> Result<f64>>(
    mut c: F,
    c_one: f64,
    rate: f64,
) -> Result<ExponentPoint> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rate must be finite and non-negative, got {rate}"
        )));
    }
    if rate >= c_one {
        return Ok(ExponentPoint {
            rate,
            exponent: ExtReal::ZERO,
            argmax_alpha: Order::ONE,
        });
    }
    if zero_error(&mut c, rate)? {
        return Ok(ExponentPoint {
            rate,
            exponent: ExtReal::Infinite,
            argmax_alpha: Order::new(ORDER_MARGIN)?,
        });
    }
    let (v, a) = maximize_over_order(c, rate)?;
    Ok(ExponentPoint {
        rate,
        exponent: ExtReal::Finite(v.max(0.0)),
        argmax_alpha: Order::new(a)?,
    })
}

/// `E_sp(R) = sup_{α∈(0,1)} ((1−α)/α)(C_α − R)`; `+∞` for rates below the
/// zero-error limit of the curve.
pub fn sphere_packing_exponent(curve: &dyn CapacityCurve, rate: f64) -> Result<ExponentPoint> {
    let c_one = curve.capacity_at(1.0)?;
    exponent_with(|a| curve.capacity_at(a), c_one, rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedCapacity {
    pub alpha: Order,
    pub epsilon: f64,
    pub value: f64,
    pub quadrature_error_estimate: f64,
}

/// `C^ε_α = (1/ε) ∫_{α−εα}^{α+ε(1−α)} [1 ∨ (α/(1−α))((1−a)/a)] C_a da`, split at
/// the kink `a = α`.
pub fn averaged_capacity(
    curve: &dyn CapacityCurve,
    alpha: Order,
    eps: f64,
    quad_tol: f64,
) -> Result<AveragedCapacity> {
    let a = alpha.check_open_unit()?.value();
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0,1), got {eps}"
        )));
    }
    let lo = a - eps * a;
    let hi = a + eps * (1.0 - a);
    let r = a / (1.0 - a);
    let left = adaptive_simpson(
        |x| Ok(r * (1.0 - x) / x * curve.capacity_at(x)?),
        lo,
        a,
        0.5 * quad_tol * eps,
        QUAD_PANELS,
    )?;
    let right = adaptive_simpson(
        |x| curve.capacity_at(x),
        a,
        hi,
        0.5 * quad_tol * eps,
        QUAD_PANELS,
    )?;
    Ok(AveragedCapacity {
        alpha,
        epsilon: eps,
        value: (left.value + right.value) / eps,
        quadrature_error_estimate: (left.error + right.error) / eps,
    })
}

/// `E^ε_sp(R) = sup_{α∈(0,1)} ((1−α)/α)(C^ε_α − R)`.
pub fn averaged_exponent(
    curve: &dyn CapacityCurve,
    rate: f64,
    eps: f64,
    quad_tol: f64,
) -> Result<ExponentPoint> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rate must be finite and non-negative, got {rate}"
        )));
    }
    // C^ε ≥ C, so a zero-error curve stays infinite
    let mut base = |a: f64| curve.capacity_at(a);
    if rate < curve.capacity_at(1.0)? && zero_error(&mut base, rate)? {
        return Ok(ExponentPoint {
            rate,
            exponent: ExtReal::Infinite,
            argmax_alpha: Order::new(ORDER_MARGIN)?,
        });
    }
    let (v, a) = maximize_over_order(
        |a| Ok(averaged_capacity(curve, Order::new(a)?, eps, quad_tol)?.value),
        rate,
    )?;
    Ok(ExponentPoint {
        rate,
        exponent: ExtReal::Finite(v.max(0.0)),
        argmax_alpha: Order::new(a)?,
    })
}

/// `(E^ε − E, (ε/(φ−ε))·R/φ)` under `φ ∈ (0,1)`, `R ∈ [C_φ, C₁)`, `ε ∈ (0,φ)`.
pub fn avsp_gap_check(
    curve: &dyn CapacityCurve,
    rate: f64,
    eps: f64,
    phi: Order,
    quad_tol: f64,
) -> Result<(f64, f64)> {
    let f = phi.check_open_unit()?.value();
    if !(eps > 0.0 && eps < f) {
        return Err(Error::Hypothesis(format!(
            "need 0 < epsilon < phi, got epsilon {eps}, phi {f}"
        )));
    }
    let cf = curve.capacity_at(f)?;
    let c1 = curve.capacity_at(1.0)?;
    if !(rate >= cf - 1e-12 && rate < c1) {
        return Err(Error::Hypothesis(format!(
            "rate {rate} outside [C_phi, C_1) = [{cf}, {c1})"
        )));
    }
    let e = sphere_packing_exponent(curve, rate)?.exponent;
    let ee = averaged_exponent(curve, rate, eps, quad_tol)?.exponent;
    let gap = match (ee, e) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => a - b,
        _ => return Err(Error::Hypothesis("infinite exponent".into())),
    };
    Ok((gap, eps / (f - eps) * rate / f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HtVerdict {
    HypothesisFails,
    Holds,
    Violation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HtReport {
    pub c_k: f64,
    /// `Q(E)`.
    pub lhs_hypothesis: f64,
    pub rhs_hypothesis: f64,
    /// `W(Eᶜ)`.
    pub lhs_conclusion: f64,
    pub rhs_conclusion: f64,
    pub verdict: HtVerdict,
}

/// Outcome probabilities and thresholds for the hypothesis-testing bound.
struct HtSetup {
    q: Vec<f64>,
    w: Vec<f64>,
    c_k: f64,
    rhs_h: f64,
    rhs_c: f64,
}

const HT_OUTCOME_LIMIT: usize = 1 << 20;

fn ht_setup(alpha: Order, components: &[(FiniteDist, FiniteDist)], k: u32) -> Result<HtSetup> {
    let a = alpha.check_open_unit()?.value();
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "k must be at least 3, got {k}"
        )));
    }
    if components.is_empty() {
        return Err(Error::InvalidParameter("empty component list".into()));
    }
    let n = components.len() as f64;
    let mut outcomes = 1usize;
    let mut moments = 0.0;
    let mut d_vq = 0.0;
    let mut d_vw = 0.0;
    for (w, q) in components {
        crate::measures::check_dim(w.len(), q.len())?;
        outcomes = outcomes.saturating_mul(w.len());
        let mut v = vec![0.0; w.len()];
        if !tilt_raw(a, w.weights(), q.weights(), &mut v) {
            return Err(Error::TiltUndefined);
        }
        let llr: Vec<f64> = (0..w.len())
            .map(|y| {
                if v[y] > 0.0 {
                    w.weights()[y].ln() - q.weights()[y].ln()
                } else {
                    0.0
                }
            })
            .collect();
        let mean: f64 = v.iter().zip(&llr).map(|(p, l)| p * l).sum();
        moments += v
            .iter()
            .zip(&llr)
            .map(|(p, l)| p * (l - mean).abs().powi(k as i32))
            .sum::<f64>();
        d_vq += kl_raw(&v, q.weights());
        d_vw += kl_raw(&v, w.weights());
    }
    if outcomes > HT_OUTCOME_LIMIT {
        return Err(Error::SizeGuard(format!(
            "{outcomes} product outcomes exceed {HT_OUTCOME_LIMIT}"
        )));
    }
    let c_k = moments.powf(1.0 / k as f64);
    let pre = 1.0 / (16.0 * n).sqrt();
    let joint = |pick: fn(&(FiniteDist, FiniteDist)) -> &FiniteDist| -> Vec<f64> {
        let mut out = vec![1.0];
        for c in components {
            let d = pick(c).weights();
            out = out
                .iter()
                .flat_map(|p| d.iter().map(move |x| p * x))
                .collect();
        }
        out
    };
    Ok(HtSetup {
        q: joint(|c| &c.1),
        w: joint(|c| &c.0),
        c_k,
        rhs_h: pre * (-d_vq - 3.0 * a * c_k).exp(),
        rhs_c: pre * (-d_vw - 3.0 * (1.0 - a) * c_k).exp(),
    })
}

fn ht_verdict(s: &HtSetup, event: impl Fn(usize) -> bool) -> HtReport {
    let mut qe = 0.0;
    let mut wc = 0.0;
    for i in 0..s.q.len() {
        if event(i) {
            qe += s.q[i];
        } else {
            wc += s.w[i];
        }
    }
    let verdict = if qe > s.rhs_h {
        HtVerdict::HypothesisFails
    } else if wc >= s.rhs_c {
        HtVerdict::Holds
    } else {
        HtVerdict::Violation
    };
    HtReport {
        c_k: s.c_k,
        lhs_hypothesis: qe,
        rhs_hypothesis: s.rhs_h,
        lhs_conclusion: wc,
        rhs_conclusion: s.rhs_c,
        verdict,
    }
}

/// Evaluates the hypothesis-testing bound for `W = ⊗w_t`, `Q = ⊗q_t` on the
/// event given as an indicator over product outcomes (first component most
/// significant).
pub fn ht_bound_check(
    alpha: Order,
    components: &[(FiniteDist, FiniteDist)],
    k: u32,
    event: &[bool],
) -> Result<HtReport> {
    let s = ht_setup(alpha, components, k)?;
    crate::measures::check_dim(s.q.len(), event.len())?;
    Ok(ht_verdict(&s, |i| event[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HtSummary {
    pub events: u64,
    pub hypothesis_fails: u64,
    pub holds: u64,
    pub violations: u64,
}

/// Runs [`ht_bound_check`] on every event; at most 20 product outcomes.
pub fn ht_exhaustive(
    alpha: Order,
    components: &[(FiniteDist, FiniteDist)],
    k: u32,
) -> Result<HtSummary> {
    let s = ht_setup(alpha, components, k)?;
    let m = s.q.len();
    if m > 20 {
        return Err(Error::SizeGuard(format!(
            "2^{m} events are too many to enumerate"
        )));
    }
    let mut out = HtSummary {
        events: 0,
        hypothesis_fails: 0,
        holds: 0,
        violations: 0,
    };
    for mask in 0u64..(1u64 << m) {
        let r = ht_verdict(&s, |i| mask >> i & 1 == 1);
        out.events += 1;
        match r.verdict {
            HtVerdict::HypothesisFails => out.hypothesis_fails += 1,
            HtVerdict::Holds => out.holds += 1,
            HtVerdict::Violation => out.violations += 1,
        }
    }
    Ok(out)
}

fn check_gamma_args(eps2: f64, k: u32) -> Result<()> {
    if !(eps2 > 0.0 && eps2 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps2 must lie in (0,1), got {eps2}"
        )));
    }
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "k must be at least 3, got {k}"
        )));
    }
    Ok(())
}

/// `γ = 3·3^{1/k}·(Σ_t ((c_t + ln(1/ε₂)) ∨ k)^k)^{1/k}` from the
/// per-component order-½ capacities `c_t`.
pub fn gamma_from_capacities(c_half: &[f64], eps2: f64, k: u32) -> Result<f64> {
    check_gamma_args(eps2, k)?;
    let kk = k as f64;
    let terms: Vec<f64> = c_half.iter().map(|c| (c - eps2.ln()).max(kk)).collect();
    let top = terms.iter().copied().fold(0.0, f64::max);
    let s: f64 = terms.iter().map(|t| (t / top).powf(kk)).sum();
    Ok(3.0 * 3f64.powf(1.0 / kk) * top * s.powf(1.0 / kk))
}

/// Order-½ capacity of each component under the joint cost level `ρ`.
pub fn component_half_capacities(components: &[Channel], rho: &[f64]) -> Result<Vec<FiniteDist>> {
    half_capacities(components, rho).map(|v| v.into_iter().map(|r| r.center).collect())
}

fn half_capacities(components: &[Channel], rho: &[f64]) -> Result<Vec<CapacityResult>> {
    components
        .iter()
        .map(|c| {
            let cons = if rho.is_empty() && !c.has_cost() {
                ConstraintSet::Simplex
            } else {
                ConstraintSet::cost(rho.to_vec())
            };
            crate::capacity::capacity(Order::HALF, c, &cons, &CapacityConfig::default())
        })
        .collect()
}

/// `γ` with `C_{1/2}(W_t, ρ)` evaluated for each component at the joint `ρ`.
pub fn gamma_constant(components: &[Channel], rho: &[f64], eps2: f64, k: u32) -> Result<f64> {
    check_gamma_args(eps2, k)?;
    let c: Vec<f64> = half_capacities(components, rho)?
        .iter()
        .map(|r| r.value.to_f64())
        .collect();
    gamma_from_capacities(&c, eps2, k)
}

/// `γ̃ = 3·(3n)^{1/k}·((C_{1/2} + ln(1/ε₂)) ∨ k)`.
pub fn gamma_tilde(c_half: f64, n: usize, eps2: f64, k: u32) -> Result<f64> {
    check_gamma_args(eps2, k)?;
    let kk = k as f64;
    Ok(3.0 * (3.0 * n as f64).powf(1.0 / kk) * (c_half - eps2.ln()).max(kk))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVerdict {
    Applicable,
    Inapplicable,
}

/// Every quantity entering a sphere packing lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub m: f64,
    pub l: f64,
    pub k: u32,
    pub alpha0: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub gamma: f64,
    /// `C^{ε₁}_{α₀}`, of the whole product (or `n` times the single letter).
    pub averaged_capacity: f64,
    pub threshold_m_over_l: ExtReal,
    pub ln_threshold: f64,
    pub side_condition: bool,
    pub hypothesis_satisfied: bool,
    pub prefactor: f64,
    pub ln_prefactor: f64,
    /// The rate at which the averaged exponent is evaluated.
    pub rate: f64,
    pub exponent: ExtReal,
    /// `−ln` of the bound expression, whether or not the hypothesis holds.
    pub neg_ln_bound: ExtReal,
    pub pe_lower_bound: f64,
    pub per_component_c_half: Vec<f64>,
    pub verdict: BoundVerdict,
}

/// Parameters shared by both bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub m: f64,
    pub l: f64,
    pub k: u32,
    pub alpha0: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl BoundParams {
    fn check(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !(unit(self.alpha0) && unit(self.eps1) && unit(self.eps2)) {
            return Err(Error::InvalidParameter(
                "alpha0, eps1 and eps2 must lie in (0,1)".into(),
            ));
        }
        if self.k < 3 {
            return Err(Error::InvalidParameter(format!(
                "k must be at least 3, got {}",
                self.k
            )));
        }
        if !(self.l >= 1.0 && self.m >= 1.0 && self.m.is_finite()) {
            return Err(Error::InvalidParameter("need M ≥ 1 and L ≥ 1".into()));
        }
        Ok(())
    }

    /// `ln(8e²(1−α₀)(1−ε₁)n^{1.5}/ε₁)`.
    fn ln_base(&self, n: usize) -> f64 {
        (8.0 * E * E * (1.0 - self.alpha0) * (1.0 - self.eps1) / self.eps1).ln()
            + 1.5 * (n as f64).ln()
    }

    /// `ln` of the threshold on `M/L` for a given exponent of `e`.
    pub fn ln_threshold(&self, n: usize, averaged_capacity: f64, gamma: f64) -> f64 {
        self.ln_base(n)
            + (n as f64).ln()
            + (self.eps2 / (1.0 - self.eps2)).ln()
            + averaged_capacity
            + gamma / (1.0 - self.alpha0)
    }

    /// `ln((ε₁e^{−2γ}/(8e²(1−α₀)(1−ε₁)n^{1.5}))^{1/α₀})`.
    pub fn ln_prefactor(&self, n: usize, gamma: f64) -> f64 {
        (-2.0 * gamma - self.ln_base(n)) / self.alpha0
    }

    pub fn side_condition(&self, n: usize) -> bool {
        (n as f64 - 1.0) * (1.0 - self.alpha0) * (1.0 - self.eps1) / self.eps1 >= 1.0
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    n: usize,
    p: &BoundParams,
    gamma: f64,
    averaged_capacity: f64,
    rate: f64,
    exponent: ExtReal,
    scale: f64,
    c_half: Vec<f64>,
) -> BoundReport {
    let ln_mol = (p.m / p.l).ln();
    let ln_threshold = p.ln_threshold(n, averaged_capacity, gamma);
    let threshold = if ln_threshold > 709.0 {
        ExtReal::Infinite
    } else {
        ExtReal::Finite(ln_threshold.exp())
    };
    let side = p.side_condition(n);
    let hyp = side && ln_mol > ln_threshold;
    let ln_prefactor = p.ln_prefactor(n, gamma);
    let neg_ln_bound = exponent.scale(scale).sub_finite(ln_prefactor);
    let formula = match neg_ln_bound {
        ExtReal::Finite(v) => (-v).exp(),
        ExtReal::Infinite => 0.0,
    };
    BoundReport {
        n,
        m: p.m,
        l: p.l,
        k: p.k,
        alpha0: p.alpha0,
        eps1: p.eps1,
        eps2: p.eps2,
        gamma,
        averaged_capacity,
        threshold_m_over_l: threshold,
        ln_threshold,
        side_condition: side,
        hypothesis_satisfied: hyp,
        prefactor: ln_prefactor.exp(),
        ln_prefactor,
        rate,
        exponent,
        neg_ln_bound,
        pe_lower_bound: if hyp { formula } else { 0.0 },
        per_component_c_half: c_half,
        verdict: if hyp {
            BoundVerdict::Applicable
        } else {
            BoundVerdict::Inapplicable
        },
    }
}

/// Lower bound on the average error probability of `(M, L)` list codes on a
/// product channel whose codewords all satisfy the additive cost `≤ ρ`.
pub fn cc_augustin_bound(
    components: &[Channel],
    rho: &[f64],
    params: &BoundParams,
) -> Result<BoundReport> {
    params.check()?;
    let curve = ProductCostCapacity::new(components, rho)?;
    cc_augustin_bound_with(&curve, params)
}

/// [`cc_augustin_bound`] on a prepared product curve, reusing its cache.
pub fn cc_augustin_bound_with(
    curve: &ProductCostCapacity,
    params: &BoundParams,
) -> Result<BoundReport> {
    params.check()?;
    if !curve.is_interior() {
        return Err(Error::Hypothesis(
            "cost level must be strictly feasible".into(),
        ));
    }
    let n = curve.components().len();
    let c_half: Vec<f64> = half_capacities(curve.components(), curve.rho())?
        .iter()
        .map(|r| r.value.to_f64())
        .collect();
    let gamma = gamma_from_capacities(&c_half, params.eps2, params.k)?;
    let avg = averaged_capacity(curve, Order::new(params.alpha0)?, params.eps1, QUAD_TOL)?.value;
    let rate = (params.m / params.l).ln();
    let e = averaged_exponent(curve, rate, params.eps1, QUAD_TOL)?.exponent;
    Ok(assemble(n, params, gamma, avg, rate, e, 1.0, c_half))
}

/// Inputs that some prior in the set uses.
fn union_support(ch: &Channel, cons: &ConstraintSet) -> Result<Vec<usize>> {
    let set = cons.resolve(ch)?;
    (0..ch.inputs())
        .filter_map(|x| {
            let mut c = vec![0.0; ch.inputs()];
            c[x] = 1.0;
            match set.support_value(&c) {
                Ok(v) if v > 1e-12 => Some(Ok(x)),
                Ok(_) => None,
                Err(e) => Some(Err(e)),
            }
        })
        .collect()
}

/// The bound for codes on the `n`-fold memoryless extension of `ch1` whose
/// codeword compositions lie in `cons`.
pub fn stationary_bound(
    ch1: &Channel,
    cons: &ConstraintSet,
    n: usize,
    params: &BoundParams,
) -> Result<BoundReport> {
    let curve = ConstrainedCapacity::new(ch1, cons)?;
    stationary_bound_with(ch1, cons, &curve, n, params)
}

/// [`stationary_bound`] on a prepared single-letter curve.
pub fn stationary_bound_with(
    ch1: &Channel,
    cons: &ConstraintSet,
    curve: &ConstrainedCapacity,
    n: usize,
    params: &BoundParams,
) -> Result<BoundReport> {
    params.check()?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "block length must be positive".into(),
        ));
    }
    let b = ConstraintSet::SupportRestricted {
        inputs: union_support(ch1, cons)?,
    };
    let c_half = crate::capacity::capacity(Order::HALF, ch1, &b, &CapacityConfig::default())?
        .value
        .to_f64();
    let gamma = gamma_tilde(c_half, n, params.eps2, params.k)?;
    let avg = n as f64
        * averaged_capacity(curve, Order::new(params.alpha0)?, params.eps1, QUAD_TOL)?.value;
    let rate = (params.m / params.l).ln() / n as f64;
    let e = averaged_exponent(curve, rate, params.eps1, QUAD_TOL)?.exponent;
    Ok(assemble(
        n,
        params,
        gamma,
        avg,
        rate,
        e,
        n as f64,
        vec![c_half],
    ))
}

/// The mixed reference measures `Q_α = ⊗_t ((1−ε₂) q^{ε₁}_{α,t} + ε₂ q_{1/2,t})`
/// built from A-L centers at the optimal multipliers, averaged over the
/// order window.
pub struct ReferenceFamily {
    curve: ProductCostCapacity,
    eps1: f64,
    eps2: f64,
    half_centers: Vec<FiniteDist>,
    c_half: Vec<f64>,
}

/// Both sides of the two inequalities the reference measures satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCheck {
    /// `D_α(W(x)‖Q_α)`.
    pub divergence: f64,
    /// `nε₂/(1−ε₂) + C^{ε₁}_α`.
    pub divergence_bound: f64,
    /// `(Σ_t E_V|ξ_t|^k)^{1/k}`.
    pub moment: f64,
    /// `γ/(3α(1−α))`.
    pub moment_bound: f64,
}

impl ReferenceFamily {
    pub fn new(components: &[Channel], rho: &[f64], eps1: f64, eps2: f64) -> Result<Self> {
        if !(eps1 > 0.0 && eps1 < 1.0 && eps2 > 0.0 && eps2 < 1.0) {
            return Err(Error::InvalidParameter(
                "eps1 and eps2 must lie in (0,1)".into(),
            ));
        }
        let curve = ProductCostCapacity::new(components, rho)?;
        let half = half_capacities(components, rho)?;
        Ok(ReferenceFamily {
            curve,
            eps1,
            eps2,
            c_half: half.iter().map(|r| r.value.to_f64()).collect(),
            half_centers: half.into_iter().map(|r| r.center).collect(),
        })
    }

    pub fn curve(&self) -> &ProductCostCapacity {
        &self.curve
    }

    pub fn c_half(&self) -> &[f64] {
        &self.c_half
    }

    pub fn gamma(&self, k: u32) -> Result<f64> {
        gamma_from_capacities(&self.c_half, self.eps2, k)
    }

    /// Per-component factors of `Q_α`.
    pub fn q_alpha(&self, alpha: Order) -> Result<Vec<Vec<f64>>> {
        let a = alpha.check_open_unit()?.value();
        let lo = a - a * self.eps1;
        let hi = a + (1.0 - a) * self.eps1;
        let q = adaptive_simpson_vec(
            |x| {
                Ok(self
                    .curve
                    .dual_at(x)?
                    .centers
                    .iter()
                    .flat_map(|c| c.weights().to_vec())
                    .collect())
            },
            lo,
            hi,
            QUAD_TOL * self.eps1,
            QUAD_PANELS,
        )?;
        let mut out = Vec::new();
        let mut off = 0;
        for h in &self.half_centers {
            let len = h.len();
            let mut v: Vec<f64> = (0..len)
                .map(|y| {
                    (1.0 - self.eps2) * q.value[off + y] / self.eps1 + self.eps2 * h.weights()[y]
                })
                .map(|v| v.max(0.0))
                .collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            out.push(v);
            off += len;
        }
        Ok(out)
    }

    fn codeword_rows<'a>(&'a self, codeword: &[usize]) -> Result<Vec<&'a [f64]>> {
        let comps = self.curve.components();
        crate::measures::check_dim(comps.len(), codeword.len())?;
        let mut cost = vec![0.0; self.curve.rho().len()];
        for (c, &x) in comps.iter().zip(codeword) {
            if x >= c.inputs() {
                return Err(Error::InvalidParameter(format!("input {x} out of range")));
            }
            for (o, v) in cost.iter_mut().zip(&c.cost_matrix()?[x]) {
                *o += v;
            }
        }
        if cost
            .iter()
            .zip(self.curve.rho())
            .any(|(c, r)| *c > r + 1e-12)
        {
            return Err(Error::InvalidParameter(format!(
                "codeword cost {cost:?} exceeds the constraint"
            )));
        }
        Ok(comps
            .iter()
            .zip(codeword)
            .map(|(c, &x)| c.row(x).weights())
            .collect())
    }

    /// `D_1(V_α‖Q_α)` for `V_α` the tilted measure between `W(x)` and `Q_α`.
    pub fn tilted_divergence(&self, alpha: Order, codeword: &[usize]) -> Result<f64> {
        let a = alpha.check_open_unit()?.value();
        let rows = self.codeword_rows(codeword)?;
        let q = self.q_alpha(alpha)?;
        let mut d = 0.0;
        for (w, qt) in rows.iter().zip(&q) {
            let mut v = vec![0.0; qt.len()];
            if !tilt_raw(a, w, qt, &mut v) {
                return Err(Error::TiltUndefined);
            }
            d += kl_raw(&v, qt);
        }
        Ok(d)
    }

    /// Divergence and moment bounds for one codeword with cost `≤ ρ`.
    pub fn check(&self, alpha: Order, k: u32, codeword: &[usize]) -> Result<ReferenceCheck> {
        let a = alpha.check_open_unit()?.value();
        let rows = self.codeword_rows(codeword)?;
        let q = self.q_alpha(alpha)?;
        let n = rows.len() as f64;
        let divergence: f64 = rows
            .iter()
            .zip(&q)
            .map(|(w, qt)| divergence_raw(a, w, qt))
            .sum();
        let avg = averaged_capacity(&self.curve, alpha, self.eps1, QUAD_TOL)?.value;
        let mut moments = 0.0;
        for (w, qt) in rows.iter().zip(&q) {
            let mut v = vec![0.0; qt.len()];
            if !tilt_raw(a, w, qt, &mut v) {
                return Err(Error::TiltUndefined);
            }
            let llr: Vec<f64> = (0..v.len())
                .map(|y| {
                    if v[y] > 0.0 {
                        w[y].ln() - qt[y].ln()
                    } else {
                        0.0
                    }
                })
                .collect();
            let mean: f64 = v.iter().zip(&llr).map(|(p, l)| p * l).sum();
            moments += v
                .iter()
                .zip(&llr)
                .map(|(p, l)| p * (l - mean).abs().powi(k as i32))
                .sum::<f64>();
        }
        Ok(ReferenceCheck {
            divergence,
            divergence_bound: n * self.eps2 / (1.0 - self.eps2) + avg,
            moment: moments.powf(1.0 / k as f64),
            moment_bound: self.gamma(k)? / (3.0 * a * (1.0 - a)),
        })
    }
}

/// The order `α_m ∈ (α₀, 1)` at which
/// `D₁(V_α‖Q_α) + γ/(3(1−α)) = ln(M/L) + ln(ε₁/(8e²(1−α₀)(1−ε₁)n^{1.5}))`.
pub fn root_find_alpha_m(
    family: &ReferenceFamily,
    params: &BoundParams,
    gamma: f64,
    codeword: &[usize],
) -> Result<Order> {
    params.check()?;
    let n = family.curve.components().len();
    let target = (params.m / params.l).ln() - params.ln_base(n);
    let f = |a: f64| -> Result<f64> {
        Ok(
            family.tilted_divergence(Order::new(a)?, codeword)? + gamma / (3.0 * (1.0 - a))
                - target,
        )
    };
    let lo = params.alpha0;
    let hi = 1.0 - ORDER_MARGIN;
    if f(lo)? >= 0.0 {
        return Err(Error::Hypothesis(
            "hypothesis regime not met: no sign change above alpha0".into(),
        ));
    }
    let root = bisect(f, lo, hi, 1e-9)?;
    Order::new(root)
}
