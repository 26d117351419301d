//! Brute-force references: simplex grids with local refinement and exact
//! maximum-likelihood list decoding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::mean::solve_mean;
use crate::measures::{conditional_raw, divergence_raw, unrank, Channel, FiniteDist, Order};
use crate::polytope::{ConstraintSet, FeasibleSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub step: f64,
    pub refine_rounds: usize,
    pub refine_factor: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            step: 0.01,
            refine_rounds: 5,
            refine_factor: 0.1,
        }
    }
}

impl GridSpec {
    fn check(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grid step {} not in (0,1]",
                self.step
            )));
        }
        if !(self.refine_factor > 0.0 && self.refine_factor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "refine factor {} not in (0,1)",
                self.refine_factor
            )));
        }
        Ok(())
    }
}

/// All points of the simplex in `R^d` with coordinates in multiples of `1/n`.
fn simplex_grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(d: usize, left: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == d - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / n as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(d, left - c, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, n, n, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Points `c + Σ_i k_i h e_i` (last coordinate absorbing the sum) with
/// `|k_i| ≤ 1/factor` that stay in the simplex.
fn local_grid(center: &[f64], h: f64, factor: f64) -> Vec<Vec<f64>> {
    let d = center.len();
    let r = (1.0 / factor).ceil() as i64;
    let free = d - 1;
    let side = (2 * r + 1) as usize;
    let total = side.pow(free as u32);
    let radices = vec![side; free];
    (0..total)
        .filter_map(|i| {
            let ks = unrank(i, &radices);
            let mut p: Vec<f64> = center.to_vec();
            let mut shift = 0.0;
            for (j, k) in ks.iter().enumerate() {
                let delta = (*k as i64 - r) as f64 * h;
                p[j] += delta;
                shift += delta;
            }
            p[d - 1] -= shift;
            if p.iter().any(|v| *v < -1e-15) {
                return None;
            }
            p.iter_mut().for_each(|v| *v = v.max(0.0));
            Some(p)
        })
        .collect()
}

/// Deterministic arg-optimum: best value, lowest index on ties.
fn best_of(vals: &[f64], maximize: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in vals.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                let better = if maximize { *v > vals[b] } else { *v < vals[b] };
                if better {
                    best = Some(i);
                }
            }
        }
    }
    best
}

const MAX_MOVES: usize = 200;

/// Grid search with local refinement. `f` returns `NaN` for excluded points.
fn grid_search<F>(d: usize, grid: &GridSpec, maximize: bool, f: F) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    grid.check()?;
    let n = (1.0 / grid.step).round().max(1.0) as usize;
    let pts = simplex_grid(d, n);
    let vals: Vec<f64> = pts.par_iter().map(|p| f(p)).collect();
    let i = best_of(&vals, maximize)
        .ok_or_else(|| Error::Infeasible("no admissible grid point".into()))?;
    let (mut bv, mut bp) = (vals[i], pts[i].clone());
    let mut h = 1.0 / n as f64;
    for _ in 0..grid.refine_rounds {
        h *= grid.refine_factor;
        // re-center until the window stops improving; a single pass stalls
        // along the ridges of nonsmooth objectives
        for _ in 0..MAX_MOVES {
            let pts = local_grid(&bp, h, grid.refine_factor);
            let vals: Vec<f64> = pts.par_iter().map(|p| f(p)).collect();
            match best_of(&vals, maximize) {
                Some(i) if (maximize && vals[i] > bv) || (!maximize && vals[i] < bv) => {
                    bv = vals[i];
                    bp = pts[i].clone();
                }
                _ => break,
            }
        }
    }
    Ok((bv, bp))
}

const GRID_DIM_LIMIT: usize = 4;

fn check_grid_dim(d: usize) -> Result<()> {
    if d > GRID_DIM_LIMIT {
        return Err(Error::SizeGuard(format!(
            "grid oracles handle at most {GRID_DIM_LIMIT} coordinates, got {d}"
        )));
    }
    Ok(())
}

fn order_value(alpha: Order) -> f64 {
    if alpha.is_one() {
        1.0
    } else {
        alpha.value()
    }
}

/// `inf_Q D_α(W‖Q|P)` over a refined grid on the output simplex.
pub fn min_over_q_grid(
    alpha: Order,
    ch: &Channel,
    p: &FiniteDist,
    grid: &GridSpec,
) -> Result<(f64, FiniteDist)> {
    check_grid_dim(ch.outputs())?;
    crate::measures::check_dim(ch.inputs(), p.len())?;
    let a = order_value(alpha);
    let rows = ch.row_slices();
    let (v, q) = grid_search(ch.outputs(), grid, false, |q| {
        match conditional_raw(a, &rows, q, p.weights()) {
            ExtReal::Finite(v) => v,
            ExtReal::Infinite => f64::NAN,
        }
    })?;
    Ok((v, FiniteDist::new(q)?))
}

/// `sup_{P ∈ A} I_α(P;W)` over a refined grid of feasible priors, with the
/// inner minimum solved exactly.
pub fn max_over_p_grid(
    alpha: Order,
    ch: &Channel,
    cons: &ConstraintSet,
    grid: &GridSpec,
) -> Result<(f64, FiniteDist)> {
    check_grid_dim(ch.inputs())?;
    let set = cons.resolve(ch)?;
    let a = order_value(alpha);
    let rows = ch.row_slices();
    if let Some(p) = set.single_point() {
        let v = solve_mean(a, &rows, &p, None, crate::mean::NEWTON_TOL)?.value;
        return Ok((v, FiniteDist::new(p)?));
    }
    let (v, p) = grid_search(ch.inputs(), grid, true, |p| {
        if !set.contains(p, 1e-12) {
            return f64::NAN;
        }
        solve_mean(a, &rows, p, None, crate::mean::NEWTON_TOL)
            .map(|s| s.value)
            .unwrap_or(f64::NAN)
    })?;
    Ok((v, FiniteDist::new(p)?))
}

/// `(sup_P inf_Q, inf_Q sup_P)` of `D_α(W‖Q|P)` with every optimization done
/// on grids.
pub fn minimax_cross_check(
    alpha: Order,
    ch: &Channel,
    cons: &ConstraintSet,
    grid: &GridSpec,
) -> Result<(f64, f64)> {
    if ch.inputs() > 3 || ch.outputs() > 3 {
        return Err(Error::SizeGuard(
            "minimax grids handle alphabets of at most 3 letters".into(),
        ));
    }
    let set: FeasibleSet = cons.resolve(ch)?;
    let a = order_value(alpha);
    let rows = ch.row_slices();
    let inner = GridSpec {
        step: grid.step.max(0.05),
        ..*grid
    };
    let inf_q = |p: &[f64]| -> f64 {
        let (v, _) = grid_search(ch.outputs(), &inner, false, |q| {
            match conditional_raw(a, &rows, q, p) {
                ExtReal::Finite(v) => v,
                ExtReal::Infinite => f64::NAN,
            }
        })
        .unwrap_or((f64::NAN, vec![]));
        v
    };
    let sup_inf = match set.single_point() {
        Some(p) => inf_q(&p),
        None => {
            let outer = GridSpec {
                step: grid.step.max(0.05),
                ..*grid
            };
            grid_search(ch.inputs(), &outer, true, |p| {
                if set.contains(p, 1e-12) {
                    inf_q(p)
                } else {
                    f64::NAN
                }
            })?
            .0
        }
    };
    let (inf_sup, _) = grid_search(ch.outputs(), grid, false, |q| {
        let c: Vec<f64> = rows.iter().map(|r| divergence_raw(a, r, q)).collect();
        match set.support_value(&c) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NAN,
        }
    })?;
    Ok((sup_inf, inf_sup))
}

const CODE_OUTCOME_LIMIT: usize = 1 << 20;
const CODE_MESSAGE_LIMIT: usize = 64;

/// Average error probability of the code `encoder` on `⊗ components` under
/// maximum-likelihood list-of-`l` decoding, ties going to lower message
/// indices.
pub fn exact_code_pe(components: &[Channel], encoder: &[Vec<usize>], l: usize) -> Result<f64> {
    let m = encoder.len();
    if m == 0 || m > CODE_MESSAGE_LIMIT {
        return Err(Error::SizeGuard(format!(
            "need 1..={CODE_MESSAGE_LIMIT} messages, got {m}"
        )));
    }
    if l == 0 {
        return Err(Error::InvalidParameter("list size must be positive".into()));
    }
    let n = components.len();
    for w in encoder {
        crate::measures::check_dim(n, w.len())?;
        for (c, &x) in components.iter().zip(w) {
            if x >= c.inputs() {
                return Err(Error::InvalidParameter(format!("input {x} out of range")));
            }
        }
    }
    let radices: Vec<usize> = components.iter().map(Channel::outputs).collect();
    let outcomes = radices.iter().try_fold(1usize, |a, &r| {
        a.checked_mul(r).filter(|v| *v <= CODE_OUTCOME_LIMIT)
    });
    let outcomes = outcomes
        .ok_or_else(|| Error::SizeGuard(format!("more than {CODE_OUTCOME_LIMIT} outcomes")))?;
    let err: f64 = (0..outcomes)
        .into_par_iter()
        .map(|i| {
            let ys = unrank(i, &radices);
            let lik: Vec<f64> = encoder
                .iter()
                .map(|w| {
                    components
                        .iter()
                        .zip(w)
                        .zip(&ys)
                        .map(|((c, &x), &y)| c.row(x).weights()[y])
                        .product()
                })
                .collect();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| lik[b].total_cmp(&lik[a]).then(a.cmp(&b)));
            order[l.min(m)..].iter().map(|&j| lik[j]).sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(err / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_sizes() {
        assert_eq!(simplex_grid(3, 2).len(), 6);
        assert!(simplex_grid(2, 4).contains(&vec![1.0, 0.0]));
    }

    #[test]
    fn q_grid_examples() {
        let ch = Channel::bsc(0.1).unwrap();
        let (v, q) = min_over_q_grid(
            Order::ONE,
            &ch,
            &FiniteDist::point(2, 0),
            &GridSpec::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        assert!(q.total_variation(ch.row(0)).unwrap() < 1e-9);
        let p = FiniteDist::new(vec![0.7, 0.3]).unwrap();
        let (v, _) = min_over_q_grid(Order::ONE, &ch, &p, &GridSpec::default()).unwrap();
        let exact = crate::mean::augustin_information(Order::ONE, &ch, &p).unwrap();
        assert_abs_diff_eq!(v, exact, epsilon = 1e-9);
        assert!(min_over_q_grid(
            Order::HALF,
            &Channel::identity(5).unwrap(),
            &FiniteDist::uniform(5),
            &GridSpec::default()
        )
        .is_err());
    }

    #[test]
    fn p_grid_examples() {
        let id = Channel::identity(2).unwrap();
        let (v, p) = max_over_p_grid(
            Order::HALF,
            &id,
            &ConstraintSet::Simplex,
            &GridSpec::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(v, 2f64.ln(), epsilon = 1e-12);
        assert!(p.total_variation(&FiniteDist::uniform(2)).unwrap() < 1e-12);
        let ch = Channel::bsc(0.1)
            .unwrap()
            .with_cost(vec![vec![0.0], vec![1.0]])
            .unwrap();
        let (v, _) = max_over_p_grid(
            Order::ONE,
            &ch,
            &ConstraintSet::cost(vec![0.2]),
            &GridSpec::default(),
        )
        .unwrap();
        let c = crate::capacity::capacity(
            Order::ONE,
            &ch,
            &ConstraintSet::cost(vec![0.2]),
            &Default::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(v, c.value.to_f64(), epsilon = 1e-6);
    }

    #[test]
    fn minimax_examples() {
        let (a, b) = minimax_cross_check(
            Order::HALF,
            &Channel::identity(2).unwrap(),
            &ConstraintSet::Simplex,
            &GridSpec::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(a, 2f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(b, 2f64.ln(), epsilon = 1e-9);
        let (a, b) = minimax_cross_check(
            Order::HALF,
            &Channel::bsc(0.1).unwrap(),
            &ConstraintSet::Simplex,
            &GridSpec::default(),
        )
        .unwrap();
        assert!((a - b).abs() <= 1e-4, "{a} {b}");
    }

    #[test]
    fn codes() {
        let bsc = Channel::bsc(0.1).unwrap();
        let comps = vec![bsc.clone(), bsc.clone(), bsc];
        assert_eq!(exact_code_pe(&comps, &[vec![0, 1, 0]], 1).unwrap(), 0.0);
        let rep = exact_code_pe(&comps, &[vec![0, 0, 0], vec![1, 1, 1]], 1).unwrap();
        assert_abs_diff_eq!(rep, 3.0 * 0.01 * 0.9 + 0.001, epsilon = 1e-15);
        let same = exact_code_pe(&comps, &[vec![0, 0, 0], vec![0, 0, 0]], 1).unwrap();
        assert_abs_diff_eq!(same, 0.5, epsilon = 1e-15);
        assert_eq!(
            exact_code_pe(&comps, &[vec![0, 0, 0], vec![0, 0, 0]], 2).unwrap(),
            0.0
        );
    }
}
