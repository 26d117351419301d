//! Augustin means and information.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::measures::{
    check_dim, conditional_raw, divergence_raw, kl_raw, log_sum_exp, tilt_raw, tv, Channel,
    FiniteDist, Order,
};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Outcome of the fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugustinMeanResult {
    pub mean: FiniteDist,
    pub information: f64,
    pub iterations: usize,
    pub fixed_point_residual: f64,
    pub seed: FiniteDist,
    /// Whether successive-iterate distances never grew after the first step.
    pub residual_monotone: bool,
}

/// `q_{1,P} = Σ_x P(x) W(x)`.
pub fn order_one_mean(ch: &Channel, p: &FiniteDist) -> Result<FiniteDist> {
    check_dim(ch.inputs(), p.len())?;
    FiniteDist::new(mixture(&ch.row_slices(), p.weights()))
}

pub(crate) fn mixture(rows: &[&[f64]], p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rows[0].len()];
    for (r, &px) in rows.iter().zip(p) {
        if px > 0.0 {
            for (o, w) in out.iter_mut().zip(r.iter()) {
                *o += px * w;
            }
        }
    }
    out
}

/// Normalized `[Σ_x P(x) W(x)^α]^{1/α}`, evaluated in the log domain.
pub fn renyi_mean_seed(alpha: Order, ch: &Channel, p: &FiniteDist) -> Result<FiniteDist> {
    check_dim(ch.inputs(), p.len())?;
    if alpha.is_one() {
        return order_one_mean(ch, p);
    }
    FiniteDist::new(seed_raw(alpha.value(), &ch.row_slices(), p.weights(), None))
}

/// Normalized `[Σ_x P(x) e^{c_x} W(x)^α]^{1/α}`; `c` defaults to zero.
pub(crate) fn seed_raw(alpha: f64, rows: &[&[f64]], p: &[f64], shift: Option<&[f64]>) -> Vec<f64> {
    let n = rows[0].len();
    let mut logm = vec![f64::NEG_INFINITY; n];
    for (y, lm) in logm.iter_mut().enumerate() {
        let terms = rows
            .iter()
            .zip(p)
            .enumerate()
            .filter(|(_, (r, &px))| px > 0.0 && r[y] > 0.0)
            .map(|(x, (r, &px))| px.ln() + shift.map_or(0.0, |s| s[x]) + alpha * r[y].ln());
        let v: Vec<f64> = terms.collect();
        if !v.is_empty() {
            *lm = log_sum_exp(v.iter().copied()) / alpha;
        }
    }
    let m = logm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logm.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

/// `A_{α,P}(q) = Σ_x P(x) W_α^q(x)`.
pub fn augustin_operator(
    alpha: Order,
    ch: &Channel,
    p: &FiniteDist,
    q: &FiniteDist,
) -> Result<FiniteDist> {
    check_dim(ch.inputs(), p.len())?;
    check_dim(ch.outputs(), q.len())?;
    let rows = ch.row_slices();
    if !conditional_raw(alpha.value(), &rows, q.weights(), p.weights()).is_finite() {
        return Err(Error::InfiniteDivergence);
    }
    let a = if alpha.is_one() { 1.0 } else { alpha.value() };
    FiniteDist::new(operator_raw(a, &rows, p.weights(), q.weights()))
}

fn operator_raw(alpha: f64, rows: &[&[f64]], p: &[f64], q: &[f64]) -> Vec<f64> {
    let n = q.len();
    let mut out = vec![0.0; n];
    let mut t = vec![0.0; n];
    for (r, &px) in rows.iter().zip(p) {
        if px > 0.0 && tilt_raw(alpha, r, q, &mut t) {
            for (o, v) in out.iter_mut().zip(&t) {
                *o += px * v;
            }
        }
    }
    out
}

/// Augustin mean by the fixed-point iteration started at the Rényi mean.
///
/// Stops once the total variation between successive iterates is at most
/// `tol`. At `α = 1` the mean is the output mixture.
pub fn augustin_mean(
    alpha: Order,
    ch: &Channel,
    p: &FiniteDist,
    tol: f64,
    max_iter: usize,
) -> Result<AugustinMeanResult> {
    let alpha = alpha.check_unit()?;
    check_dim(ch.inputs(), p.len())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let rows = ch.row_slices();
    let pw = p.weights();
    if alpha.is_one() {
        let q1 = mixture(&rows, pw);
        let info = conditional_raw(1.0, &rows, &q1, pw).to_f64();
        let mean = FiniteDist::new(q1)?;
        return Ok(AugustinMeanResult {
            seed: mean.clone(),
            mean,
            information: info,
            iterations: 0,
            fixed_point_residual: 0.0,
            residual_monotone: true,
        });
    }
    let a = alpha.value();
    let seed = seed_raw(a, &rows, pw, None);
    let mut q = seed.clone();
    let mut last = f64::INFINITY;
    let mut monotone = true;
    for it in 1..=max_iter {
        let next = operator_raw(a, &rows, pw, &q);
        let r = tv(&next, &q);
        if it > 2 && r > last * (1.0 + 1e-9) + 1e-15 {
            monotone = false;
        }
        last = r;
        q = next;
        if r <= tol {
            let info = conditional_raw(a, &rows, &q, pw).to_f64();
            let final_res = tv(&operator_raw(a, &rows, pw, &q), &q);
            return Ok(AugustinMeanResult {
                mean: FiniteDist::new(q)?,
                information: info,
                iterations: it,
                fixed_point_residual: final_res,
                seed: FiniteDist::new(seed)?,
                residual_monotone: monotone,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "augustin mean iteration",
        iterations: max_iter,
        residual: last,
    })
}

/// Augustin mean and information through a Newton solve of the convex
/// minimization over the output simplex. Much faster than the fixed-point
/// iteration at small orders; also valid for `α > 1`.
pub fn solve_augustin_mean(
    alpha: Order,
    ch: &Channel,
    p: &FiniteDist,
) -> Result<AugustinMeanResult> {
    check_dim(ch.inputs(), p.len())?;
    let rows = ch.row_slices();
    let sol = solve_mean(alpha.value(), &rows, p.weights(), None, NEWTON_TOL)?;
    let seed = if alpha.is_one() {
        mixture(&rows, p.weights())
    } else {
        seed_raw(alpha.value(), &rows, p.weights(), None)
    };
    Ok(AugustinMeanResult {
        mean: FiniteDist::new(sol.q)?,
        information: sol.value,
        iterations: sol.iterations,
        fixed_point_residual: sol.residual,
        seed: FiniteDist::new(seed)?,
        residual_monotone: true,
    })
}

/// `I_α(P;W)`.
pub fn augustin_information(alpha: Order, ch: &Channel, p: &FiniteDist) -> Result<f64> {
    check_dim(ch.inputs(), p.len())?;
    Ok(solve_mean(
        alpha.value(),
        &ch.row_slices(),
        p.weights(),
        None,
        NEWTON_TOL,
    )?
    .value)
}

/// `D_α(W‖q|P) − I_α(P;W) − D_α(q_{α,P}‖q)`; non-negative for `α ≤ 1`
/// and zero at `α = 1`.
pub fn ehb_residual(
    alpha: Order,
    ch: &Channel,
    p: &FiniteDist,
    q_probe: &FiniteDist,
) -> Result<ExtReal> {
    let alpha = alpha.check_unit()?;
    check_dim(ch.inputs(), p.len())?;
    check_dim(ch.outputs(), q_probe.len())?;
    let a = if alpha.is_one() { 1.0 } else { alpha.value() };
    let rows = ch.row_slices();
    let lhs = conditional_raw(a, &rows, q_probe.weights(), p.weights());
    if !lhs.is_finite() {
        return Ok(ExtReal::Infinite);
    }
    let sol = solve_mean(a, &rows, p.weights(), None, NEWTON_TOL)?;
    let d = divergence_raw(a, &sol.q, q_probe.weights());
    if !d.is_finite() {
        return Ok(ExtReal::Infinite);
    }
    Ok(ExtReal::Finite(lhs.to_f64() - sol.value - d))
}

/// `(Σ_t I_α(P_t;W_t), ⊗_t q_{α,P_t})`.
pub fn augustin_information_product(
    alpha: Order,
    components: &[(Channel, FiniteDist)],
) -> Result<(f64, FiniteDist)> {
    let alpha = alpha.check_unit()?;
    if components.is_empty() {
        return Err(Error::InvalidParameter("empty component list".into()));
    }
    let mut total = 0.0;
    let mut means = Vec::with_capacity(components.len());
    for (ch, p) in components {
        let r = solve_augustin_mean(alpha, ch, p)?;
        total += r.information;
        means.push(r.mean);
    }
    Ok((total, FiniteDist::product_all(&means)?))
}

pub(crate) const NEWTON_TOL: f64 = 1e-14;

/// Solution of `min_q Σ_x P(x) D_α(W(x)‖q)`.
#[derive(Debug, Clone)]
pub(crate) struct MeanSolution {
    /// Full-length mean.
    pub q: Vec<f64>,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Per-point quantities of the inner problem on the support of `q_{1,P}`.
pub(crate) struct InnerState {
    /// Output indices where the mean is positive.
    pub support: Vec<usize>,
    /// Active inputs (`P(x) > 0`).
    pub active: Vec<usize>,
    /// Mean restricted to the support.
    pub qs: Vec<f64>,
}

/// Newton solve for the Augustin mean, warm-started when `warm` is
/// positive on the support.
pub(crate) fn solve_mean(
    alpha: f64,
    rows: &[&[f64]],
    p: &[f64],
    warm: Option<&[f64]>,
    tol: f64,
) -> Result<MeanSolution> {
    let n = rows[0].len();
    let q1 = mixture(rows, p);
    if (alpha - 1.0).abs() < crate::measures::KL_SWITCH {
        let value = rows
            .iter()
            .zip(p)
            .filter(|(_, px)| **px > 0.0)
            .map(|(r, px)| px * kl_raw(r, &q1))
            .sum();
        return Ok(MeanSolution {
            q: q1,
            value,
            residual: 0.0,
            iterations: 0,
        });
    }
    let active: Vec<usize> = (0..p.len()).filter(|&x| p[x] > 0.0).collect();
    let sp: Vec<f64> = active.iter().map(|&x| p[x]).collect();
    let mut support: Vec<usize> = (0..n).filter(|&y| q1[y] > 0.0).collect();
    let restrict = |support: &[usize]| -> Vec<Vec<f64>> {
        active
            .iter()
            .map(|&x| support.iter().map(|&y| rows[x][y]).collect())
            .collect()
    };

    let mut qs: Vec<f64> = match warm {
        Some(w) if support.iter().all(|&y| w[y] > 1e-300) => {
            let v: Vec<f64> = support.iter().map(|&y| w[y]).collect();
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect()
        }
        _ => {
            let srows = restrict(&support);
            let srefs: Vec<&[f64]> = srows.iter().map(Vec::as_slice).collect();
            let seed = seed_raw(alpha, &srefs, &sp, None);
            if seed.iter().all(|v| *v > 0.0) {
                seed
            } else {
                let s: f64 = support.iter().map(|&y| q1[y]).sum();
                support.iter().map(|&y| q1[y] / s).collect()
            }
        }
    };

    let mut iterations = 0;
    let residual = loop {
        let srows = restrict(&support);
        let srefs: Vec<&[f64]> = srows.iter().map(Vec::as_slice).collect();
        if support.len() == 1 {
            qs = vec![1.0];
            break 0.0;
        }
        let (res, drop) = newton_loop(alpha, &srefs, &sp, &mut qs, tol, &mut iterations);
        if drop.is_empty() {
            break res;
        }
        // coordinates driven far below any meaningful mass: the optimum sits
        // there at values that underflow, so remove them
        let keep: Vec<usize> = (0..support.len()).filter(|i| !drop.contains(i)).collect();
        support = keep.iter().map(|&i| support[i]).collect();
        qs = keep.iter().map(|&i| qs[i]).collect();
        let s: f64 = qs.iter().sum();
        qs.iter_mut().for_each(|v| *v /= s);
    };
    if !(residual <= 1e-8) {
        return Err(Error::NonConvergence {
            what: "augustin mean (newton)",
            iterations,
            residual,
        });
    }
    let mut q = vec![0.0; n];
    for (&y, v) in support.iter().zip(&qs) {
        q[y] = *v;
    }
    let value = rows
        .iter()
        .zip(p)
        .filter(|(_, px)| **px > 0.0)
        .map(|(r, px)| px * divergence_raw(alpha, r, &q))
        .sum();
    Ok(MeanSolution {
        q,
        value,
        residual,
        iterations,
    })
}

/// Threshold below which a mean coordinate is treated as zero at small orders.
const DROP_MASS: f64 = 1e-40;

/// Damped Newton on the simplex of the current support. Returns the final
/// fixed-point residual and the coordinates to drop (empty when done).
fn newton_loop(
    alpha: f64,
    srefs: &[&[f64]],
    sp: &[f64],
    qs: &mut Vec<f64>,
    tol: f64,
    iterations: &mut usize,
) -> (f64, Vec<usize>) {
    let mut ev = Eval::new(alpha, srefs, sp, qs);
    let mut stalls = 0;
    while *iterations < 400 {
        if ev.residual <= tol {
            break;
        }
        *iterations += 1;
        let Some((d, dec)) = newton_direction(&ev, alpha, sp, qs) else {
            fixed_point_steps(alpha, srefs, sp, qs, 20);
            ev = Eval::new(alpha, srefs, sp, qs);
            stalls += 1;
            if stalls > 20 {
                break;
            }
            continue;
        };
        if dec < 1e-32 && ev.residual < 1e-10 {
            break;
        }
        let mut t: f64 = 1.0;
        for (qi, di) in qs.iter().zip(&d) {
            if *di < 0.0 {
                t = t.min(0.99 * qi / -di);
            }
        }
        let mean_g = ev.grad.iter().sum::<f64>() / ev.grad.len() as f64;
        let slope: f64 = ev
            .grad
            .iter()
            .zip(&d)
            .map(|(g, di)| (g - mean_g) * di)
            .sum();
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = qs
                .iter()
                .zip(&d)
                .map(|(q, di)| (q + t * di).max(1e-300))
                .collect();
            let s: f64 = trial.iter().sum();
            let trial: Vec<f64> = trial.iter().map(|v| v / s).collect();
            let tev = Eval::new(alpha, srefs, sp, &trial);
            if tev.value <= ev.value + 1e-4 * t * slope + 1e-15 * ev.value.abs().max(1.0) {
                *qs = trial;
                ev = tev;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            fixed_point_steps(alpha, srefs, sp, qs, 20);
            ev = Eval::new(alpha, srefs, sp, qs);
            stalls += 1;
            if stalls > 20 {
                break;
            }
            continue;
        }
        if alpha < 1.0 {
            let drop: Vec<usize> = (0..qs.len()).filter(|&i| qs[i] < DROP_MASS).collect();
            let rows_ok = srefs
                .iter()
                .all(|r| (0..qs.len()).any(|i| r[i] > 0.0 && !drop.contains(&i)));
            if !drop.is_empty() && rows_ok && drop.len() < qs.len() {
                return (ev.residual, drop);
            }
        }
    }
    (ev.residual, vec![])
}

fn fixed_point_steps(alpha: f64, rows: &[&[f64]], p: &[f64], qs: &mut Vec<f64>, k: usize) {
    for _ in 0..k {
        let next = operator_raw(alpha, rows, p, qs);
        if next.iter().any(|v| !(*v > 0.0)) {
            break;
        }
        *qs = next;
    }
}

/// Value, gradient, tilted rows and fixed-point residual at `qs`.
pub(crate) struct Eval {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Tilted rows, one per active input.
    pub tilts: Vec<Vec<f64>>,
    pub residual: f64,
}

impl Eval {
    pub fn new(alpha: f64, rows: &[&[f64]], p: &[f64], qs: &[f64]) -> Eval {
        let m = qs.len();
        let mut value = 0.0;
        let mut grad = vec![0.0; m];
        let mut tilts = Vec::with_capacity(rows.len());
        let mut aq = vec![0.0; m];
        for (r, &px) in rows.iter().zip(p) {
            let mut t = vec![0.0; m];
            tilt_raw(alpha, r, qs, &mut t);
            value += px * divergence_raw(alpha, r, qs);
            for y in 0..m {
                grad[y] -= px * t[y] / qs[y];
                aq[y] += px * t[y];
            }
            tilts.push(t);
        }
        Eval {
            value,
            grad,
            tilts,
            residual: tv(&aq, qs),
        }
    }
}

/// Hessian of `q ↦ Σ P(x) D_α(W(x)‖q)` on the support.
pub(crate) fn inner_hessian(alpha: f64, ev: &Eval, p: &[f64], qs: &[f64]) -> DMatrix<f64> {
    let m = qs.len();
    let mut h = DMatrix::zeros(m, m);
    for (t, &px) in ev.tilts.iter().zip(p) {
        let u: Vec<f64> = t.iter().zip(qs).map(|(a, b)| a / b).collect();
        for i in 0..m {
            h[(i, i)] += px * alpha * u[i] / qs[i];
            for j in 0..m {
                h[(i, j)] += px * (1.0 - alpha) * u[i] * u[j];
            }
        }
    }
    h
}

/// Bordered KKT matrix `[H 1; 1ᵀ 0]`.
pub(crate) fn bordered(h: &DMatrix<f64>) -> DMatrix<f64> {
    let m = h.nrows();
    let mut k = DMatrix::zeros(m + 1, m + 1);
    k.view_mut((0, 0), (m, m)).copy_from(h);
    for i in 0..m {
        k[(i, m)] = 1.0;
        k[(m, i)] = 1.0;
    }
    k
}

fn newton_direction(ev: &Eval, alpha: f64, p: &[f64], qs: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = qs.len();
    let h = inner_hessian(alpha, ev, p, qs);
    let k = bordered(&h);
    let mut rhs = DVector::zeros(m + 1);
    for i in 0..m {
        rhs[i] = -ev.grad[i];
    }
    let sol = k.lu().solve(&rhs)?;
    let mut d: Vec<f64> = (0..m).map(|i| sol[i]).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let md = d.iter().sum::<f64>() / m as f64;
    d.iter_mut().for_each(|v| *v -= md);
    let dv = DVector::from_column_slice(&d);
    let dec = (dv.transpose() * &h * &dv)[(0, 0)];
    if !(dec >= 0.0) {
        return None;
    }
    Some((d, dec))
}

/// Inner solution with everything needed for the Hessian of `P ↦ I_α(P;W)`.
pub(crate) struct InnerSolution {
    pub sol: MeanSolution,
    pub state: InnerState,
}

pub(crate) fn solve_inner(
    alpha: f64,
    rows: &[&[f64]],
    p: &[f64],
    warm: Option<&[f64]>,
) -> Result<InnerSolution> {
    let sol = solve_mean(alpha, rows, p, warm, NEWTON_TOL)?;
    let support: Vec<usize> = (0..sol.q.len()).filter(|&y| sol.q[y] > 0.0).collect();
    let active: Vec<usize> = (0..p.len()).filter(|&x| p[x] > 0.0).collect();
    let qs = support.iter().map(|&y| sol.q[y]).collect();
    Ok(InnerSolution {
        sol,
        state: InnerState {
            support,
            active,
            qs,
        },
    })
}

/// Hessian of `P ↦ I_α(P;W)` at the active inputs, embedded in a `K × K`
/// matrix. Equal to `−B Z Bᵀ` where `B` holds the per-row gradients of the
/// divergence in `q` and `Z` is the tangent-space inverse of the inner Hessian.
pub(crate) fn information_hessian(
    alpha: f64,
    rows: &[&[f64]],
    p: &[f64],
    inner: &InnerSolution,
) -> Option<DMatrix<f64>> {
    let k = rows.len();
    let st = &inner.state;
    let m = st.support.len();
    let na = st.active.len();
    let srows: Vec<Vec<f64>> = st
        .active
        .iter()
        .map(|&x| st.support.iter().map(|&y| rows[x][y]).collect())
        .collect();
    let srefs: Vec<&[f64]> = srows.iter().map(Vec::as_slice).collect();
    let sp: Vec<f64> = st.active.iter().map(|&x| p[x]).collect();
    let mut out = DMatrix::zeros(k, k);
    if m <= 1 {
        return Some(out);
    }
    let a = if (alpha - 1.0).abs() < crate::measures::KL_SWITCH {
        1.0
    } else {
        alpha
    };
    let ev = Eval::new(a, &srefs, &sp, &st.qs);
    let h = inner_hessian(a, &ev, &sp, &st.qs);
    let kk = bordered(&h);
    let mut b = DMatrix::zeros(m + 1, na);
    for (j, t) in ev.tilts.iter().enumerate() {
        for y in 0..m {
            b[(y, j)] = -t[y] / st.qs[y];
        }
    }
    let x = kk.lu().solve(&b)?;
    for (i, &xi) in st.active.iter().enumerate() {
        for (j, &xj) in st.active.iter().enumerate() {
            let v: f64 = (0..m).map(|y| b[(y, i)] * x[(y, j)]).sum();
            out[(xi, xj)] = -v;
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(out)
}
