//! Constrained Augustin capacity and center.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::fw::{self, ActiveSet, ConcaveObjective, FwConfig};
use crate::mean::{information_hessian, solve_inner, InnerSolution};
use crate::measures::{divergence_raw, Channel, FiniteDist, Order};
use crate::polytope::{to_dist, ConstraintSet, FeasibleSet};

#[derive(Debug, Clone, Copy, Default)]
pub struct CapacityConfig {
    pub fw: FwConfig,
}

/// Capacity, an optimal prior, the center and the Frank-Wolfe certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub value: ExtReal,
    pub prior: FiniteDist,
    pub center: FiniteDist,
    /// `max_v ⟨∇, v − P*⟩` over the feasible set.
    pub kkt_gap: f64,
    pub order: Order,
    pub iterations: usize,
    pub converged: bool,
}

/// `P ↦ I_α(P;W) − Σ_x P(x) penalty(x)`, with warm-started inner solves.
pub(crate) struct AugustinObjective {
    alpha: f64,
    rows: Vec<Vec<f64>>,
    penalty: Option<Vec<f64>>,
    warm: Option<Vec<f64>>,
    cache: Option<(Vec<f64>, InnerSolution)>,
}

impl AugustinObjective {
    pub fn new(alpha: f64, ch: &Channel, penalty: Option<Vec<f64>>) -> Self {
        let a = if Order::new(alpha).map(Order::is_one).unwrap_or(false) {
            1.0
        } else {
            alpha
        };
        AugustinObjective {
            alpha: a,
            rows: ch.rows().iter().map(|r| r.weights().to_vec()).collect(),
            penalty,
            warm: None,
            cache: None,
        }
    }

    fn refs(&self) -> Vec<&[f64]> {
        self.rows.iter().map(Vec::as_slice).collect()
    }

    fn inner(&mut self, p: &[f64]) -> Result<&InnerSolution> {
        let hit = matches!(&self.cache, Some((cp, _)) if cp.as_slice() == p);
        if !hit {
            let rows = self.refs();
            let inner = solve_inner(self.alpha, &rows, p, self.warm.as_deref())?;
            self.warm = Some(inner.sol.q.clone());
            self.cache = Some((p.to_vec(), inner));
        }
        Ok(&self.cache.as_ref().expect("cache filled").1)
    }

    /// The mean at `p`.
    pub fn mean(&mut self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.inner(p)?.sol.q.clone())
    }
}

impl ConcaveObjective for AugustinObjective {
    fn value_grad(&mut self, p: &[f64]) -> Result<(f64, Vec<f64>)> {
        let alpha = self.alpha;
        let inner = self.inner(p)?;
        let q = inner.sol.q.clone();
        let mut value = inner.sol.value;
        let mut grad: Vec<f64> = self
            .rows
            .iter()
            .map(|r| divergence_raw(alpha, r, &q))
            .collect();
        if let Some(pen) = &self.penalty {
            value -= p.iter().zip(pen).map(|(a, b)| a * b).sum::<f64>();
            grad.iter_mut().zip(pen).for_each(|(g, b)| *g -= b);
        }
        Ok((value, grad))
    }

    fn hessian(&mut self, p: &[f64]) -> Option<DMatrix<f64>> {
        let alpha = self.alpha;
        self.inner(p).ok()?;
        let rows: Vec<&[f64]> = self.rows.iter().map(Vec::as_slice).collect();
        let inner = &self.cache.as_ref()?.1;
        information_hessian(alpha, &rows, p, inner)
    }
}

/// A concave objective pulled back through a linear map `p = L·u`.
pub(crate) struct Mapped<'a, O: ConcaveObjective> {
    pub inner: &'a mut O,
    /// `K × k` matrix.
    pub map: DMatrix<f64>,
}

impl<O: ConcaveObjective> Mapped<'_, O> {
    fn lift(&self, u: &[f64]) -> Vec<f64> {
        (0..self.map.nrows())
            .map(|i| {
                (0..u.len())
                    .map(|j| self.map[(i, j)] * u[j])
                    .sum::<f64>()
                    .max(0.0)
            })
            .collect()
    }
}

impl<O: ConcaveObjective> ConcaveObjective for Mapped<'_, O> {
    fn value_grad(&mut self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let p = self.lift(u);
        let (v, g) = self.inner.value_grad(&p)?;
        let gu = (0..u.len())
            .map(|j| {
                let col: Vec<f64> = (0..p.len()).map(|i| self.map[(i, j)]).collect();
                fw::ext_dot(&g, &col)
            })
            .collect();
        Ok((v, gu))
    }

    fn hessian(&mut self, u: &[f64]) -> Option<DMatrix<f64>> {
        let p = self.lift(u);
        let h = self.inner.hessian(&p)?;
        Some(self.map.transpose() * h * &self.map)
    }
}

/// Repeated capacity solves on one channel and constraint set, warm-started
/// from the previous optimal active set.
pub struct CapacitySolver {
    ch: Channel,
    set: FeasibleSet,
    penalty: Option<Vec<f64>>,
    cfg: CapacityConfig,
    warm: Option<ActiveSet>,
}

impl CapacitySolver {
    pub fn new(ch: &Channel, cons: &ConstraintSet, cfg: CapacityConfig) -> Result<Self> {
        Ok(CapacitySolver {
            set: cons.resolve(ch)?,
            ch: ch.clone(),
            penalty: None,
            cfg,
            warm: None,
        })
    }

    /// Maximizes `I_α(P;W) − Σ P(x) penalty(x)` over the simplex instead.
    pub(crate) fn penalized(ch: &Channel, penalty: Vec<f64>, cfg: CapacityConfig) -> Result<Self> {
        Ok(CapacitySolver {
            set: ConstraintSet::Simplex.resolve(ch)?,
            ch: ch.clone(),
            penalty: Some(penalty),
            cfg,
            warm: None,
        })
    }

    pub(crate) fn set_penalty(&mut self, penalty: Vec<f64>) {
        self.penalty = Some(penalty);
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn channel(&self) -> &Channel {
        &self.ch
    }

    pub fn solve(&mut self, alpha: Order) -> Result<CapacityResult> {
        let mut obj = AugustinObjective::new(alpha.value(), &self.ch, self.penalty.clone());
        if let Some(p) = self.set.single_point() {
            let value = obj.value_grad(&p)?.0;
            let center = obj.mean(&p)?;
            return Ok(CapacityResult {
                value: ExtReal::from(value),
                prior: to_dist(&p)?,
                center: FiniteDist::new(center)?,
                kkt_gap: 0.0,
                order: alpha,
                iterations: 0,
                converged: true,
            });
        }
        let start = self
            .warm
            .take()
            .or_else(|| Some(ActiveSet::barycentric(&self.set)));
        let r = fw::maximize(&mut obj, &self.set, start, &self.cfg.fw)?;
        let center = obj.mean(&r.p)?;
        self.warm = Some(r.active.clone());
        Ok(CapacityResult {
            value: ExtReal::from(if self.penalty.is_some() {
                r.value
            } else {
                r.value.max(0.0)
            }),
            prior: to_dist(&r.p)?,
            center: FiniteDist::new(center)?,
            kkt_gap: r.gap,
            order: alpha,
            iterations: r.iterations,
            converged: r.converged,
        })
    }
}

/// `C_α(W, A) = sup_{P ∈ A} I_α(P;W)`, by fully corrective Frank-Wolfe.
pub fn capacity(
    alpha: Order,
    ch: &Channel,
    cons: &ConstraintSet,
    cfg: &CapacityConfig,
) -> Result<CapacityResult> {
    let alpha = alpha.check_unit()?;
    CapacitySolver::new(ch, cons, *cfg)?.solve(alpha)
}

/// Capacities along a list of orders, evaluated in parallel, in input order.
/// Fails if the results break monotonicity of `C_α` or of `(1−α)/α·C_α`.
pub fn capacity_curve(
    ch: &Channel,
    cons: &ConstraintSet,
    alphas: &[Order],
) -> Result<Vec<(Order, ExtReal)>> {
    for a in alphas {
        a.check_unit()?;
    }
    let cfg = CapacityConfig::default();
    let out: Vec<(Order, ExtReal)> = alphas
        .par_iter()
        .map(|&a| capacity(a, ch, cons, &cfg).map(|r| (a, r.value)))
        .collect::<Result<_>>()?;
    let mut sorted: Vec<(f64, f64)> = out.iter().map(|(a, v)| (a.value(), v.to_f64())).collect();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    for w in sorted.windows(2) {
        let ((a, ca), (b, cb)) = (w[0], w[1]);
        if cb < ca - 1e-8 {
            return Err(Error::Certificate(format!(
                "capacity decreased from {ca} at {a} to {cb} at {b}"
            )));
        }
        let s = |x: f64| (1.0 - x) / x;
        if s(b) * cb > s(a) * ca + 1e-8 {
            return Err(Error::Certificate(format!(
                "(1-a)/a C_a increased between {a} and {b}"
            )));
        }
    }
    Ok(out)
}

/// `sup_{P∈A} D_α(W‖q|P) − C_α − D_α(q_{α,W,A}‖q)`, non-negative.
pub fn ehb_capacity_residual(
    alpha: Order,
    ch: &Channel,
    cons: &ConstraintSet,
    q_probe: &FiniteDist,
) -> Result<ExtReal> {
    let alpha = alpha.check_unit()?;
    crate::measures::check_dim(ch.outputs(), q_probe.len())?;
    let a = if alpha.is_one() { 1.0 } else { alpha.value() };
    let set = cons.resolve(ch)?;
    let c: Vec<f64> = ch
        .rows()
        .iter()
        .map(|r| divergence_raw(a, r.weights(), q_probe.weights()))
        .collect();
    let sup = set.support_value(&c)?;
    if !sup.is_finite() {
        return Ok(ExtReal::Infinite);
    }
    let r = capacity(alpha, ch, cons, &CapacityConfig::default())?;
    let d = divergence_raw(a, r.center.weights(), q_probe.weights());
    if !d.is_finite() {
        return Ok(ExtReal::Infinite);
    }
    Ok(ExtReal::Finite(sup - r.value.to_f64() - d))
}

/// `C_β − C_α − D_α(q_α‖q_β)` for `α < β`, non-negative.
pub fn center_continuity_check(
    ch: &Channel,
    cons: &ConstraintSet,
    alpha_low: Order,
    alpha_high: Order,
) -> Result<f64> {
    alpha_high.check_unit()?;
    if !(alpha_low.value() < alpha_high.value()) {
        return Err(Error::InvalidParameter(
            "need alpha_low < alpha_high".into(),
        ));
    }
    let cfg = CapacityConfig::default();
    let lo = capacity(alpha_low, ch, cons, &cfg)?;
    let hi = capacity(alpha_high, ch, cons, &cfg)?;
    let d = divergence_raw(alpha_low.value(), lo.center.weights(), hi.center.weights());
    Ok(hi.value.to_f64() - lo.value.to_f64() - d)
}

/// Both sides of capacity additivity for a product channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductCheck {
    /// `Σ_t` of the per-component values.
    pub separate: f64,
    /// The value computed on the product channel.
    pub joint: f64,
    /// Total variation between the joint center and the product of centers.
    pub center_tv: f64,
}

/// Maximizes a penalized Augustin information of the product channel over
/// product priors `⊗ P_t` with `P_t ∈ A_t`, by cyclic coordinate ascent.
pub(crate) fn product_prior_ascent(
    alpha: Order,
    joint: &Channel,
    sets: &[FeasibleSet],
    penalty: Option<Vec<f64>>,
) -> Result<(f64, Vec<f64>)> {
    let dims: Vec<usize> = sets.iter().map(FeasibleSet::dim).collect();
    let mut priors: Vec<Vec<f64>> = sets.iter().map(FeasibleSet::barycenter).collect();
    let mut obj = AugustinObjective::new(alpha.value(), joint, penalty);
    let joint_prior = |priors: &[Vec<f64>]| -> Vec<f64> {
        let k: usize = dims.iter().product();
        (0..k)
            .map(|i| {
                crate::measures::unrank(i, &dims)
                    .iter()
                    .zip(priors)
                    .map(|(&d, p)| p[d])
                    .product()
            })
            .collect()
    };
    let mut value = obj.value_grad(&joint_prior(&priors))?.0;
    let cfg = FwConfig {
        tol: 1e-12,
        ..FwConfig::default()
    };
    for _sweep in 0..100 {
        let before = value;
        for t in 0..sets.len() {
            let k: usize = dims.iter().product();
            let map = DMatrix::from_fn(k, dims[t], |i, j| {
                let digits = crate::measures::unrank(i, &dims);
                if digits[t] != j {
                    return 0.0;
                }
                digits
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| *s != t)
                    .map(|(s, &d)| priors[s][d])
                    .product()
            });
            let mut mapped = Mapped {
                inner: &mut obj,
                map,
            };
            let r = fw::maximize(
                &mut mapped,
                &sets[t],
                Some(ActiveSet::from_point(priors[t].clone())),
                &cfg,
            )?;
            if r.value >= value {
                priors[t] = r.p;
                value = r.value;
            }
        }
        if value - before <= 1e-14 * (1.0 + value.abs()) {
            break;
        }
    }
    Ok((value, joint_prior(&priors)))
}

/// `(Σ_t C_α(W_t, A_t), C_α of the product over product priors)`.
pub fn capacity_product_check(
    alpha: Order,
    components: &[(Channel, ConstraintSet)],
) -> Result<ProductCheck> {
    let alpha = alpha.check_unit()?;
    if components.is_empty() {
        return Err(Error::InvalidParameter("empty component list".into()));
    }
    let cfg = CapacityConfig::default();
    let mut separate = 0.0;
    let mut centers = Vec::new();
    let mut sets = Vec::new();
    for (ch, cons) in components {
        let r = capacity(alpha, ch, cons, &cfg)?;
        separate += r.value.to_f64();
        centers.push(r.center);
        sets.push(cons.resolve(ch)?);
    }
    let chans: Vec<Channel> = components.iter().map(|(c, _)| c.clone()).collect();
    let joint = crate::measures::product_channel(&chans)?;
    let (value, prior) = product_prior_ascent(alpha, &joint, &sets, None)?;
    let mut obj = AugustinObjective::new(alpha.value(), &joint, None);
    let center = FiniteDist::new(obj.mean(&prior)?)?;
    let center_tv = center.total_variation(&FiniteDist::product_all(&centers)?)?;
    Ok(ProductCheck {
        separate,
        joint: value,
        center_tv,
    })
}

/// Midpoint concavity and monotonicity of `ρ ↦ C_α(W, ρ)` across `rho_list`.
pub fn cost_capacity_concavity_check(
    alpha: Order,
    ch: &Channel,
    rho_list: &[Vec<f64>],
) -> Result<bool> {
    let alpha = alpha.check_unit()?;
    let cfg = CapacityConfig::default();
    let cap = |rho: &Vec<f64>| -> Result<f64> {
        Ok(
            capacity(alpha, ch, &ConstraintSet::cost(rho.clone()), &cfg)?
                .value
                .to_f64(),
        )
    };
    let values: Vec<f64> = rho_list.iter().map(cap).collect::<Result<_>>()?;
    for i in 0..rho_list.len() {
        for j in i + 1..rho_list.len() {
            let mid: Vec<f64> = rho_list[i]
                .iter()
                .zip(&rho_list[j])
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            if cap(&mid)? < 0.5 * (values[i] + values[j]) - 1e-7 {
                return Ok(false);
            }
            let le = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y);
            if le(&rho_list[i], &rho_list[j]) && values[i] > values[j] + 1e-7 {
                return Ok(false);
            }
            if le(&rho_list[j], &rho_list[i]) && values[j] > values[i] + 1e-7 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
