//! Augustin-Legendre and Rényi-Gallager quantities and the Lagrangian dual
//! of cost-constrained capacity.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::capacity::{
    capacity, product_prior_ascent, AugustinObjective, CapacityConfig, CapacityResult,
    CapacitySolver, ProductCheck,
};
use crate::error::{Error, Result};
use crate::fw::{self, ConcaveObjective, FwConfig};
use crate::mean::{seed_raw, solve_mean, NEWTON_TOL};
use crate::measures::{
    check_dim, divergence_raw, log_sum_exp, tilt_raw, Channel, FiniteDist, Order,
};
use crate::polytope::ConstraintSet;

/// Lagrange multiplier `λ ≥ 0` for the cost constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Multiplier(Vec<f64>);

impl Multiplier {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "multiplier must be finite and non-negative: {lambda:?}"
            )));
        }
        Ok(Multiplier(lambda))
    }

    pub fn zero(l: usize) -> Self {
        Multiplier(vec![0.0; l])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, rho: &[f64]) -> f64 {
        self.0.iter().zip(rho).map(|(a, b)| a * b).sum()
    }
}

impl TryFrom<Vec<f64>> for Multiplier {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Multiplier::new(v)
    }
}

impl From<Multiplier> for Vec<f64> {
    fn from(m: Multiplier) -> Vec<f64> {
        m.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualResult {
    pub lambda_star: Multiplier,
    /// `C^λ + λ·ρ` at `λ*`.
    pub dual_value: f64,
    /// `C_α(W, ρ)` from the constrained solver.
    pub primal_value: f64,
    pub gap: f64,
    pub al_center: FiniteDist,
    /// `E_{P*}[ρ] − ρ` at `λ*`.
    pub slope_certificate: Vec<f64>,
    /// Whether `ρ` is a strictly feasible cost level. Strong duality and the
    /// center identity are only asserted when it is.
    pub interior: bool,
    /// Total variation between the A-L center at `λ*` and the constrained center.
    pub center_tv: f64,
}

fn check_lambda(ch: &Channel, lambda: &Multiplier) -> Result<Vec<f64>> {
    ch.penalties(lambda.values())
}

fn effective(alpha: Order) -> f64 {
    if alpha.is_one() {
        1.0
    } else {
        alpha.value()
    }
}

/// `I_α(P;W) − λ·E_P[ρ]`.
pub fn al_information(
    alpha: Order,
    ch: &Channel,
    p: &FiniteDist,
    lambda: &Multiplier,
) -> Result<f64> {
    check_dim(ch.inputs(), p.len())?;
    let pen = check_lambda(ch, lambda)?;
    let info = solve_mean(
        effective(alpha),
        &ch.row_slices(),
        p.weights(),
        None,
        NEWTON_TOL,
    )?
    .value;
    Ok(info - p.expectation(&pen))
}

/// `C^λ_α(W) = sup_P I_α(P;W) − λ·E_P[ρ]` over the whole simplex; the
/// center is the mean at the optimal prior.
pub fn al_capacity(
    alpha: Order,
    ch: &Channel,
    lambda: &Multiplier,
    cfg: &CapacityConfig,
) -> Result<CapacityResult> {
    let alpha = alpha.check_unit()?;
    let pen = check_lambda(ch, lambda)?;
    CapacitySolver::penalized(ch, pen, *cfg)?.solve(alpha)
}

/// `sup_x D_α(W(x)‖q) − λ·ρ(x)`.
fn radius_at(alpha: f64, rows: &[&[f64]], pen: &[f64], q: &[f64]) -> f64 {
    rows.iter()
        .zip(pen)
        .map(|(r, c)| divergence_raw(alpha, r, q) - c)
        .fold(f64::NEG_INFINITY, f64::max)
}

struct Smoothed {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

/// `(1/β) ln Σ_x exp(β(D_α(W(x)‖q) − c_x))` on the coordinates `sup`.
fn smoothed(alpha: f64, rows: &[Vec<f64>], pen: &[f64], q: &[f64], beta: f64) -> Option<Smoothed> {
    let m = q.len();
    let mut a = Vec::with_capacity(rows.len());
    let mut grads = Vec::with_capacity(rows.len());
    let mut hs = Vec::with_capacity(rows.len());
    let mut t = vec![0.0; m];
    for (r, c) in rows.iter().zip(pen) {
        let d = divergence_raw(alpha, r, q);
        if !d.is_finite() || !tilt_raw(alpha, r, q, &mut t) {
            return None;
        }
        a.push(d - c);
        let u = DVector::from_iterator(m, t.iter().zip(q).map(|(ti, qi)| ti / qi));
        let mut h = (1.0 - alpha) * &u * u.transpose();
        for y in 0..m {
            h[(y, y)] += alpha * t[y] / (q[y] * q[y]);
        }
        grads.push(-u);
        hs.push(h);
    }
    let lse = log_sum_exp(a.iter().map(|v| beta * v)) / beta;
    let pi: Vec<f64> = a.iter().map(|v| (beta * (v - lse)).exp()).collect();
    let mut grad = DVector::zeros(m);
    let mut hess = DMatrix::zeros(m, m);
    for ((w, g), h) in pi.iter().zip(&grads).zip(&hs) {
        grad += *w * g;
        hess += *w * h + (beta * w) * g * g.transpose();
    }
    hess -= beta * &grad * grad.transpose();
    Some(Smoothed {
        value: lse,
        grad,
        hess,
    })
}

/// `inf_Q sup_x D_α(W(x)‖Q) − λ·ρ(x)` by Newton's method on the entropic
/// smoothing, continued from `β = 1` to `β = 1e10`. Returns the radius and
/// the minimizer.
pub fn al_radius(alpha: Order, ch: &Channel, lambda: &Multiplier) -> Result<(f64, FiniteDist)> {
    let alpha = alpha.check_unit()?;
    let a = effective(alpha);
    let pen = check_lambda(ch, lambda)?;
    let n = ch.outputs();
    let mut sup: Vec<usize> = (0..n)
        .filter(|&y| ch.rows().iter().any(|r| r.weights()[y] > 0.0))
        .collect();
    let mut q: Vec<f64> = vec![1.0 / sup.len() as f64; sup.len()];
    let embed = |sup: &[usize], q: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; n];
        for (&y, &v) in sup.iter().zip(q) {
            full[y] = v;
        }
        full
    };
    let all = ch.row_slices();
    let mut best = (radius_at(a, &all, &pen, &embed(&sup, &q)), embed(&sup, &q));
    let mut beta = 1.0;
    while beta <= 1e10 {
        for _ in 0..200 {
            let rows: Vec<Vec<f64>> = all
                .iter()
                .map(|r| sup.iter().map(|&y| r[y]).collect())
                .collect();
            let Some(s) = smoothed(a, &rows, &pen, &q, beta) else {
                break;
            };
            let m = q.len();
            if m <= 1 {
                break;
            }
            let mut kkt = DMatrix::zeros(m + 1, m + 1);
            kkt.view_mut((0, 0), (m, m)).copy_from(&s.hess);
            for i in 0..m {
                kkt[(i, m)] = 1.0;
                kkt[(m, i)] = 1.0;
            }
            let mut rhs = DVector::zeros(m + 1);
            rhs.rows_mut(0, m).copy_from(&(-&s.grad));
            let Some(sol) = kkt.lu().solve(&rhs) else {
                break;
            };
            let mut d: Vec<f64> = sol.rows(0, m).iter().copied().collect();
            let mean = d.iter().sum::<f64>() / m as f64;
            d.iter_mut().for_each(|v| *v -= mean);
            let dv = DVector::from_column_slice(&d);
            let dec = (dv.transpose() * &s.hess * &dv)[(0, 0)];
            let gbar = s.grad.mean();
            let slope: f64 = d
                .iter()
                .zip(s.grad.iter())
                .map(|(di, gi)| di * (gi - gbar))
                .sum();
            if !(dec > 1e-30) || slope >= 0.0 {
                break;
            }
            let mut step = 1.0f64;
            for (qi, di) in q.iter().zip(&d) {
                if *di < 0.0 {
                    step = step.min(-0.99 * qi / di);
                }
            }
            let mut accepted = false;
            for _ in 0..60 {
                let nq: Vec<f64> = q
                    .iter()
                    .zip(&d)
                    .map(|(qi, di)| (qi + step * di).max(0.0))
                    .collect();
                if let Some(ns) = smoothed(a, &rows, &pen, &nq, beta) {
                    if ns.value <= s.value + 1e-4 * step * slope {
                        q = nq;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            if a < 1.0 {
                let keep: Vec<usize> = (0..q.len()).filter(|&i| q[i] >= 1e-40).collect();
                if keep.len() < q.len() {
                    sup = keep.iter().map(|&i| sup[i]).collect();
                    q = keep.iter().map(|&i| q[i]).collect();
                }
            }
            let tot: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= tot);
            if dec < 1e-24 {
                break;
            }
        }
        let full = embed(&sup, &q);
        let r = radius_at(a, &all, &pen, &full);
        if r <= best.0 {
            best = (r, full);
        }
        beta *= 10.0;
    }
    if !best.0.is_finite() {
        return Err(Error::NonConvergence {
            what: "A-L radius",
            iterations: 0,
            residual: f64::INFINITY,
        });
    }
    Ok((best.0, FiniteDist::new(best.1)?))
}

fn rg_shift(alpha: f64, ch: &Channel, lambda: &Multiplier) -> Result<Vec<f64>> {
    Ok(check_lambda(ch, lambda)?
        .iter()
        .map(|c| (1.0 - alpha) * c)
        .collect())
}

fn check_rg_order(alpha: Order) -> Result<f64> {
    if alpha.is_one() {
        return Err(Error::OrderOutOfRange {
            alpha: alpha.value(),
            range: "(0,1)∪(1,∞)",
        });
    }
    Ok(alpha.value())
}

/// The Rényi-Gallager mean, normalized `[Σ_x P(x) e^{(1−α)λ·ρ(x)} W(x)^α]^{1/α}`.
pub fn rg_mean(
    alpha: Order,
    ch: &Channel,
    p: &FiniteDist,
    lambda: &Multiplier,
) -> Result<FiniteDist> {
    let a = check_rg_order(alpha)?;
    check_dim(ch.inputs(), p.len())?;
    let shift = rg_shift(a, ch, lambda)?;
    FiniteDist::new(seed_raw(a, &ch.row_slices(), p.weights(), Some(&shift)))
}

/// `ln Σ_y [Σ_x P(x) e^{s_x} W(x)(y)^α]^{1/α}`.
fn rg_log_norm(alpha: f64, rows: &[&[f64]], p: &[f64], shift: &[f64]) -> f64 {
    let n = rows[0].len();
    let logm: Vec<f64> = (0..n)
        .filter_map(|y| {
            let v: Vec<f64> = rows
                .iter()
                .zip(p)
                .zip(shift)
                .filter(|((r, &px), _)| px > 0.0 && r[y] > 0.0)
                .map(|((r, &px), s)| px.ln() + s + alpha * r[y].ln())
                .collect();
            (!v.is_empty()).then(|| log_sum_exp(v.iter().copied()) / alpha)
        })
        .collect();
    log_sum_exp(logm.iter().copied())
}

/// Rényi-Gallager information `G^λ_α(P;W) = α/(α−1) ln ‖m‖₁` with `m` the
/// unnormalized R-G mean.
pub fn rg_information(
    alpha: Order,
    ch: &Channel,
    p: &FiniteDist,
    lambda: &Multiplier,
) -> Result<f64> {
    let a = check_rg_order(alpha)?;
    check_dim(ch.inputs(), p.len())?;
    let shift = rg_shift(a, ch, lambda)?;
    Ok(a / (a - 1.0) * rg_log_norm(a, &ch.row_slices(), p.weights(), &shift))
}

/// `D_α(μ‖P⊗Q)` for the tilted joint measure
/// `μ(x,y) = P(x) W(x)(y) e^{((1−α)/α)λ·ρ(x)}`.
pub fn rg_joint_divergence(
    alpha: Order,
    ch: &Channel,
    p: &FiniteDist,
    lambda: &Multiplier,
    q: &FiniteDist,
) -> Result<f64> {
    let a = check_rg_order(alpha)?;
    check_dim(ch.inputs(), p.len())?;
    check_dim(ch.outputs(), q.len())?;
    let shift = rg_shift(a, ch, lambda)?;
    let mut terms = Vec::new();
    for ((r, &px), s) in ch.rows().iter().zip(p.weights()).zip(&shift) {
        if px <= 0.0 {
            continue;
        }
        for (&w, &qy) in r.weights().iter().zip(q.weights()) {
            if w > 0.0 && qy > 0.0 {
                terms.push(px.ln() + s + a * w.ln() + (1.0 - a) * qy.ln());
            } else if w > 0.0 && a > 1.0 {
                return Ok(f64::INFINITY);
            }
        }
    }
    if terms.is_empty() {
        return Ok(f64::INFINITY);
    }
    Ok(log_sum_exp(terms.iter().copied()) / (a - 1.0))
}

/// `G = c ln Σ_y (Σ_x P(x) b_x(y))^r` with `c = α/(α−1)`, `r = 1/α` and
/// `ln b_x = s_x + α ln W(x)`, all in the log domain. `G` is a strictly
/// increasing transform of the concave `−F`, so its stationary points on the
/// simplex are global maxima.
struct RgObjective {
    c: f64,
    r: f64,
    /// `ln b_x(y)`, `−∞` off the support.
    lb: Vec<Vec<f64>>,
}

impl RgObjective {
    fn log_sums(&self, p: &[f64]) -> Vec<f64> {
        let n = self.lb[0].len();
        (0..n)
            .map(|y| {
                let t: Vec<f64> = self
                    .lb
                    .iter()
                    .zip(p)
                    .filter(|(b, &px)| px > 0.0 && b[y] > f64::NEG_INFINITY)
                    .map(|(b, px)| px.ln() + b[y])
                    .collect();
                if t.is_empty() {
                    f64::NEG_INFINITY
                } else {
                    log_sum_exp(t.iter().copied())
                }
            })
            .collect()
    }

    fn log_f(&self, ls: &[f64]) -> f64 {
        log_sum_exp(ls.iter().filter(|v| v.is_finite()).map(|v| self.r * v))
    }

    /// `∇F / F`.
    fn phi(&self, ls: &[f64], lf: f64) -> Vec<f64> {
        self.lb
            .iter()
            .map(|b| {
                ls.iter()
                    .zip(b)
                    .filter(|(s, bb)| s.is_finite() && bb.is_finite())
                    .map(|(s, bb)| self.r * ((self.r - 1.0) * s + bb - lf).exp())
                    .sum()
            })
            .collect()
    }
}

impl ConcaveObjective for RgObjective {
    fn value_grad(&mut self, p: &[f64]) -> Result<(f64, Vec<f64>)> {
        let ls = self.log_sums(p);
        let lf = self.log_f(&ls);
        let grad = self.phi(&ls, lf).iter().map(|v| self.c * v).collect();
        Ok((self.c * lf, grad))
    }

    /// Hessian of the concave model `c·F/F(p)`, which shares the gradient of
    /// `G` at `p`; the exact Hessian `c(Ψ − φφᵀ)` of `G` is indefinite.
    fn hessian(&mut self, p: &[f64]) -> Option<DMatrix<f64>> {
        let ls = self.log_sums(p);
        let lf = self.log_f(&ls);
        let k = self.lb.len();
        let mut h = DMatrix::zeros(k, k);
        for i in (0..k).filter(|&i| p[i] > 0.0) {
            for j in (0..k).filter(|&j| p[j] > 0.0) {
                let psi: f64 = (0..ls.len())
                    .filter(|&y| {
                        ls[y].is_finite() && self.lb[i][y].is_finite() && self.lb[j][y].is_finite()
                    })
                    .map(|y| {
                        self.r
                            * (self.r - 1.0)
                            * ((self.r - 2.0) * ls[y] + self.lb[i][y] + self.lb[j][y] - lf).exp()
                    })
                    .sum();
                h[(i, j)] = self.c * psi;
            }
        }
        h.iter().all(|v| v.is_finite()).then_some(h)
    }
}

/// `sup_P G^λ_α(P;W)` for `α ∈ (0,1)`, through the convex
/// `P ↦ Σ_y (Σ_x P(x) e^{(1−α)λ·ρ(x)} W(x)(y)^α)^{1/α}` it is a decreasing
/// function of.
pub fn rg_capacity(alpha: Order, ch: &Channel, lambda: &Multiplier) -> Result<f64> {
    let a = alpha.check_open_unit()?.value();
    let shift = rg_shift(a, ch, lambda)?;
    let lb = ch
        .rows()
        .iter()
        .zip(&shift)
        .map(|(r, s)| {
            r.weights()
                .iter()
                .map(|w| {
                    if *w > 0.0 {
                        s + a * w.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect()
        })
        .collect();
    let mut obj = RgObjective {
        c: a / (a - 1.0),
        r: 1.0 / a,
        lb,
    };
    let set = ConstraintSet::Simplex.resolve(ch)?;
    let cfg = FwConfig {
        tol: 1e-13,
        ..FwConfig::default()
    };
    Ok(fw::maximize(&mut obj, &set, None, &cfg)?.value)
}

/// `(h(λ), subgradient, payload)` at one multiplier.
pub(crate) type DualEval<T> = (f64, Vec<f64>, T);

/// Minimizes a convex dual `h(λ)` over `λ ≥ 0`, where `eval` returns
/// `(h(λ), E_{P*}[ρ] − ρ, payload)`; the slope is minus a subgradient.
/// For one multiplier: bracket by doubling until the slope is non-positive,
/// then golden section. Otherwise projected subgradient with Polyak steps
/// toward `target` (the optimal value when known, else a decreasing level
/// below the best value), keeping the best iterate.
pub(crate) fn minimize_dual<T: Clone>(
    l: usize,
    target: Option<f64>,
    mut eval: impl FnMut(&[f64]) -> Result<DualEval<T>>,
) -> Result<(Vec<f64>, DualEval<T>)> {
    if l == 1 {
        let at0 = eval(&[0.0])?;
        if at0.1[0] <= 0.0 {
            return Ok((vec![0.0], at0));
        }
        let mut hi = 1.0f64;
        loop {
            let (_, s, _) = eval(&[hi])?;
            if s[0] <= 0.0 || hi >= 2f64.powi(40) {
                break;
            }
            hi *= 2.0;
        }
        let (x, _) = fw::golden_section_max(|x| Ok(-eval(&[x])?.0), 0.0, hi, 1e-11 * hi)?;
        let at = eval(&[x])?;
        return Ok(if at0.0 <= at.0 {
            (vec![0.0], at0)
        } else {
            (vec![x], at)
        });
    }
    let mut lam = vec![0.0; l];
    let mut cur = eval(&lam)?;
    let mut best = (lam.clone(), cur.clone());
    let mut level = 0.1 * (1.0 + cur.0.abs());
    let mut stall = 0;
    for _ in 0..2000 {
        let (h, s, _) = &cur;
        let norm2: f64 = s.iter().map(|v| v * v).sum();
        if norm2 <= 1e-30 {
            break;
        }
        let goal = match target {
            Some(t) => t,
            None => best.1 .0 - level,
        };
        let excess = h - goal;
        if target.is_some() && excess <= 1e-12 {
            break;
        }
        let t = excess.max(1e-12) / norm2;
        lam.iter_mut()
            .zip(s)
            .for_each(|(x, g)| *x = (*x + t * g).max(0.0));
        cur = eval(&lam)?;
        if cur.0 < best.1 .0 - 1e-15 {
            best = (lam.clone(), cur.clone());
            stall = 0;
        } else {
            stall += 1;
            if stall >= 20 {
                level *= 0.5;
                stall = 0;
                lam = best.0.clone();
                cur = best.1.clone();
                if level < 1e-14 {
                    break;
                }
            }
        }
    }
    Ok(best)
}

/// Minimizes `λ ↦ C^λ_α + λ·ρ` over `λ ≥ 0` and compares with the
/// constrained capacity at `ρ`.
pub fn solve_dual(
    alpha: Order,
    ch: &Channel,
    rho: &[f64],
    cfg: &CapacityConfig,
) -> Result<DualResult> {
    let alpha = alpha.check_unit()?;
    let l = ch.cost_dim();
    if !ch.has_cost() {
        return Err(Error::MissingCost);
    }
    check_dim(l, rho.len())?;
    let cons = ConstraintSet::cost(rho.to_vec());
    let set = cons.resolve(ch)?;
    let interior = set.is_interior();
    let primal = capacity(alpha, ch, &cons, cfg)?;
    let primal_value = primal.value.to_f64();

    let mut solver = CapacitySolver::penalized(ch, vec![0.0; ch.inputs()], *cfg)?;

    let (lam, (h, slope, r)) = minimize_dual(l, Some(primal_value), |lam| {
        let lambda = Multiplier::new(lam.to_vec())?;
        solver.set_penalty(ch.penalties(lambda.values())?);
        let r = solver.solve(alpha)?;
        let h = r.value.to_f64() + lambda.dot(rho);
        let slope: Vec<f64> = ch
            .expected_cost(r.prior.weights())?
            .iter()
            .zip(rho)
            .map(|(e, r)| e - r)
            .collect();
        Ok((h, slope, r))
    })?;
    let center_tv = r.center.total_variation(&primal.center)?;
    if interior && center_tv > 1e-5 {
        return Err(Error::Certificate(format!(
            "A-L center differs from the constrained center by {center_tv:e} in total variation"
        )));
    }
    Ok(DualResult {
        lambda_star: Multiplier::new(lam)?,
        dual_value: h,
        primal_value,
        gap: h - primal_value,
        al_center: r.center,
        slope_certificate: slope,
        interior,
        center_tv,
    })
}

/// `(Σ_t C^λ_α(W_t), C^λ_α of the product channel over product priors)`.
pub fn al_capacity_product_check(
    alpha: Order,
    components: &[Channel],
    lambda: &Multiplier,
) -> Result<ProductCheck> {
    let alpha = alpha.check_unit()?;
    if components.is_empty() {
        return Err(Error::InvalidParameter("empty component list".into()));
    }
    let cfg = CapacityConfig::default();
    let mut separate = 0.0;
    let mut centers = Vec::new();
    let mut sets = Vec::new();
    for ch in components {
        let r = al_capacity(alpha, ch, lambda, &cfg)?;
        separate += r.value.to_f64();
        centers.push(r.center);
        sets.push(ConstraintSet::Simplex.resolve(ch)?);
    }
    let joint = crate::measures::product_channel(components)?;
    let pen = check_lambda(&joint, lambda)?;
    let (value, prior) = product_prior_ascent(alpha, &joint, &sets, Some(pen))?;
    let mut obj = AugustinObjective::new(alpha.value(), &joint, None);
    let center = FiniteDist::new(obj.mean(&prior)?)?;
    let center_tv = center.total_variation(&FiniteDist::product_all(&centers)?)?;
    Ok(ProductCheck {
        separate,
        joint: value,
        center_tv,
    })
}
