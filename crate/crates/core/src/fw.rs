//! Frank-Wolfe maximization of concave functions over a [`FeasibleSet`].
//!
//! The fully corrective variant keeps the iterate as a convex combination of
//! oracle vertices and re-optimizes the weights by Newton steps on that face
//! after every oracle call.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::polytope::FeasibleSet;

/// A concave function on priors. Gradients may contain `+∞` at coordinates
/// where the current point has no mass.
pub trait ConcaveObjective {
    fn value_grad(&mut self, p: &[f64]) -> Result<(f64, Vec<f64>)>;

    /// Hessian on the coordinates where `p` is positive; other entries are
    /// ignored. `None` disables the Newton correction.
    fn hessian(&mut self, _p: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FwStrategy {
    /// Open-loop step `2/(t+2)`.
    Vanilla,
    /// Exact line search plus Newton re-optimization over the active vertices.
    #[default]
    FullyCorrective,
}

#[derive(Debug, Clone, Copy)]
pub struct FwConfig {
    pub strategy: FwStrategy,
    /// Stop once the duality gap is at most `tol·(1 + |f|)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FwConfig {
    fn default() -> Self {
        FwConfig {
            strategy: FwStrategy::FullyCorrective,
            tol: 1e-9,
            max_iter: 5000,
        }
    }
}

/// The iterate as a convex combination of vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    pub vertices: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl ActiveSet {
    pub fn from_point(p: Vec<f64>) -> Self {
        ActiveSet {
            vertices: vec![p],
            weights: vec![1.0],
        }
    }

    /// Equal-weight combination of the known vertices of `set` (or of
    /// coordinate-maximizing oracle answers).
    pub fn barycentric(set: &FeasibleSet) -> Self {
        match set.vertices() {
            Some(v) => {
                let n = v.len() as f64;
                ActiveSet {
                    vertices: v.to_vec(),
                    weights: vec![1.0 / n; v.len()],
                }
            }
            None => ActiveSet::from_point(set.barycenter()),
        }
    }

    pub fn point(&self) -> Vec<f64> {
        let k = self.vertices[0].len();
        let mut p = vec![0.0; k];
        for (v, w) in self.vertices.iter().zip(&self.weights) {
            for (o, x) in p.iter_mut().zip(v) {
                *o += w * x;
            }
        }
        p
    }

    /// Drops vertices of weight at most `eps`; true if any were dropped.
    fn prune(&mut self, eps: f64) -> bool {
        let keep: Vec<bool> = self.weights.iter().map(|w| *w > eps).collect();
        let before = self.weights.len();
        let mut i = 0;
        self.vertices.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        self.weights.retain(|w| *w > eps);
        let s: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= s);
        self.weights.len() != before
    }

    fn add(&mut self, v: Vec<f64>) -> usize {
        if let Some(i) = self
            .vertices
            .iter()
            .position(|u| u.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-14))
        {
            return i;
        }
        self.vertices.push(v);
        self.weights.push(0.0);
        self.vertices.len() - 1
    }
}

#[derive(Debug, Clone)]
pub struct FwResult {
    pub p: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub active: ActiveSet,
}

/// `Σ c_i v_i` skipping zero `v_i`, so `∞·0` contributes nothing.
pub fn ext_dot(c: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for (ci, vi) in c.iter().zip(v) {
        if *vi != 0.0 {
            if *ci == f64::INFINITY {
                return if *vi > 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                };
            }
            s += ci * vi;
        }
    }
    s
}

fn direction_slope(g: &[f64], v: &[f64], p: &[f64]) -> f64 {
    let d: Vec<f64> = v.iter().zip(p).map(|(a, b)| a - b).collect();
    ext_dot(g, &d)
}

pub fn maximize<O: ConcaveObjective + ?Sized>(
    obj: &mut O,
    set: &FeasibleSet,
    start: Option<ActiveSet>,
    cfg: &FwConfig,
) -> Result<FwResult> {
    let mut active = start.unwrap_or_else(|| ActiveSet::barycentric(set));
    active.prune(0.0);
    let mut p = active.point();
    let (mut f, mut g) = obj.value_grad(&p)?;
    if cfg.strategy == FwStrategy::FullyCorrective {
        newton_correct(obj, &mut active, &mut p, &mut f, &mut g)?;
    }
    let mut gap = f64::INFINITY;
    for it in 0..cfg.max_iter {
        let v = set.linear_max(&g)?;
        gap = direction_slope(&g, &v, &p);
        if gap <= cfg.tol * (1.0 + f.abs()) {
            return Ok(FwResult {
                p,
                value: f,
                grad: g,
                gap: gap.max(0.0),
                iterations: it,
                converged: true,
                active,
            });
        }
        let idx = active.add(v.clone());
        let t = match cfg.strategy {
            FwStrategy::Vanilla => 2.0 / (it as f64 + 2.0),
            FwStrategy::FullyCorrective => line_search(obj, &p, &v, f)?,
        };
        if t > 0.0 {
            active.weights.iter_mut().for_each(|w| *w *= 1.0 - t);
            active.weights[idx] += t;
            let np = active.point();
            let (nf, ng) = obj.value_grad(&np)?;
            if cfg.strategy == FwStrategy::FullyCorrective && nf < f - 1e-13 * (1.0 + f.abs()) {
                // the line search overshot on a flat stretch; keep the old iterate
                active.weights[idx] -= t;
                active.weights.iter_mut().for_each(|w| *w /= 1.0 - t);
            } else {
                f = nf;
                g = ng;
            }
        }
        let dropped = active.prune(1e-15);
        p = active.point();
        if dropped && cfg.strategy == FwStrategy::Vanilla {
            (f, g) = obj.value_grad(&p)?;
        }
        if cfg.strategy == FwStrategy::FullyCorrective {
            let before = f;
            let (nf, ng) = obj.value_grad(&p)?;
            f = nf;
            g = ng;
            newton_correct(obj, &mut active, &mut p, &mut f, &mut g)?;
            if t == 0.0 && f <= before + 1e-15 * (1.0 + f.abs()) && gap < 1e-7 * (1.0 + f.abs()) {
                // numerically stuck at the optimum
                return Ok(FwResult {
                    p,
                    value: f,
                    grad: g,
                    gap,
                    iterations: it + 1,
                    converged: true,
                    active,
                });
            }
        }
    }
    Ok(FwResult {
        p,
        value: f,
        grad: g,
        gap,
        iterations: cfg.max_iter,
        converged: false,
        active,
    })
}

/// Maximizes `t ↦ f(p + t(v − p))` on `[0, 1]` by safeguarded Newton on the
/// derivative, falling back to bisection.
fn line_search<O: ConcaveObjective + ?Sized>(
    obj: &mut O,
    p: &[f64],
    v: &[f64],
    _f0: f64,
) -> Result<f64> {
    let d: Vec<f64> = v.iter().zip(p).map(|(a, b)| a - b).collect();
    let at = |t: f64| -> Vec<f64> {
        p.iter()
            .zip(&d)
            .map(|(a, b)| (a + t * b).max(0.0))
            .collect()
    };
    let slope = |obj: &mut O, t: f64| -> Result<(f64, f64, Option<f64>)> {
        let q = at(t);
        let (val, g) = obj.value_grad(&q)?;
        let s = ext_dot(&g, &d);
        let curv = obj.hessian(&q).map(|h| {
            let dv = DVector::from_column_slice(&d);
            (dv.transpose() * h * &dv)[(0, 0)]
        });
        Ok((val, s, curv))
    };
    let (f1, s1, _) = slope(obj, 1.0)?;
    if s1 >= 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut t = 0.5;
    let mut best = (f1, 1.0);
    for _ in 0..100 {
        let (val, s, curv) = slope(obj, t)?;
        if val > best.0 {
            best = (val, t);
        }
        if s.abs() <= 1e-14 * (1.0 + val.abs()) {
            return Ok(t);
        }
        if s > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo < 1e-14 {
            break;
        }
        let newton = match curv {
            Some(c) if c < 0.0 && c.is_finite() => t - s / c,
            _ => f64::NAN,
        };
        t = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(best.1)
}

/// Newton steps on the weights of the active vertices.
fn newton_correct<O: ConcaveObjective + ?Sized>(
    obj: &mut O,
    active: &mut ActiveSet,
    p: &mut Vec<f64>,
    f: &mut f64,
    g: &mut Vec<f64>,
) -> Result<()> {
    for _ in 0..40 {
        let n = active.vertices.len();
        if n < 2 {
            return Ok(());
        }
        let gt: Vec<f64> = active.vertices.iter().map(|v| ext_dot(g, v)).collect();
        if gt.iter().any(|v| !v.is_finite()) {
            return Ok(());
        }
        let Some(h) = obj.hessian(p) else {
            return Ok(());
        };
        let vm = DMatrix::from_fn(n, p.len(), |i, j| active.vertices[i][j]);
        let ht = &vm * h * vm.transpose();
        let scale = ht.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tau = 1e-12 * (1.0 + scale);
        let mut kk = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                kk[(i, j)] = -ht[(i, j)];
            }
            kk[(i, i)] += tau;
            kk[(i, n)] = 1.0;
            kk[(n, i)] = 1.0;
        }
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            rhs[i] = gt[i];
        }
        let Some(sol) = kk.lu().solve(&rhs) else {
            return Ok(());
        };
        let d: Vec<f64> = (0..n).map(|i| sol[i]).collect();
        if d.iter().any(|v| !v.is_finite()) {
            return Ok(());
        }
        let dec: f64 = gt.iter().zip(&d).map(|(a, b)| a * b).sum();
        if dec <= 1e-22 * (1.0 + f.abs()) {
            return Ok(());
        }
        let mut tmax = f64::INFINITY;
        let mut block = None;
        for (i, (w, di)) in active.weights.iter().zip(&d).enumerate() {
            if *di < 0.0 && w / -di < tmax {
                tmax = w / -di;
                block = Some(i);
            }
        }
        let mut t = tmax.min(1.0);
        let mut accepted = false;
        for _ in 0..50 {
            let w: Vec<f64> = active
                .weights
                .iter()
                .zip(&d)
                .map(|(a, b)| (a + t * b).max(0.0))
                .collect();
            let trial = ActiveSet {
                vertices: active.vertices.clone(),
                weights: w,
            };
            let tp = trial.point();
            let (tf, tg) = obj.value_grad(&tp)?;
            if tf >= *f + 1e-4 * t * dec - 1e-15 * (1.0 + f.abs()) {
                let hit = t == tmax;
                *active = trial;
                if hit {
                    if let Some(b) = block {
                        active.weights[b] = 0.0;
                    }
                }
                // a dropped vertex moves the point, and a tiny weight can
                // still carry most of the objective
                let dropped = active.prune(1e-15);
                *p = active.point();
                if hit || dropped {
                    let (nf, ng) = obj.value_grad(p)?;
                    *f = nf;
                    *g = ng;
                } else {
                    *f = tf;
                    *g = tg;
                }
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Ok(());
        }
    }
    Ok(())
}

/// Maximizes a unimodal function on `[a, b]` by golden-section search.
/// Returns `(argmax, max)`.
pub fn golden_section_max<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
        iters += 1;
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Root of a function with `f(a)` and `f(b)` of opposite signs, to `|f| ≤ ftol`.
pub fn bisect<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    ftol: f64,
) -> Result<f64> {
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Hypothesis("no sign change on the bracket".into()));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.abs() <= ftol || (b - a) < 1e-15 * (1.0 + m.abs()) {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Channel;
    use crate::polytope::ConstraintSet;

    /// `−‖p − c‖²` with `c` possibly outside the simplex.
    struct Quad(Vec<f64>);
    impl ConcaveObjective for Quad {
        fn value_grad(&mut self, p: &[f64]) -> Result<(f64, Vec<f64>)> {
            let v = -p
                .iter()
                .zip(&self.0)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
            let g = p.iter().zip(&self.0).map(|(a, b)| -2.0 * (a - b)).collect();
            Ok((v, g))
        }
        fn hessian(&mut self, p: &[f64]) -> Option<DMatrix<f64>> {
            Some(DMatrix::identity(p.len(), p.len()) * -2.0)
        }
    }

    #[test]
    fn projects_onto_simplex() {
        let set = ConstraintSet::Simplex
            .resolve(&Channel::identity(3).unwrap())
            .unwrap();
        let mut q = Quad(vec![0.8, 0.6, -0.4]);
        let r = maximize(&mut q, &set, None, &FwConfig::default()).unwrap();
        assert!(r.converged);
        assert!(
            (r.p[0] - 0.6).abs() < 1e-10 && (r.p[1] - 0.4).abs() < 1e-10 && r.p[2].abs() < 1e-12
        );
    }

    #[test]
    fn vanilla_makes_progress() {
        let set = ConstraintSet::Simplex
            .resolve(&Channel::identity(3).unwrap())
            .unwrap();
        let mut q = Quad(vec![0.5, 0.3, 0.2]);
        let cfg = FwConfig {
            strategy: FwStrategy::Vanilla,
            tol: 1e-4,
            max_iter: 5000,
        };
        let r = maximize(
            &mut q,
            &set,
            Some(ActiveSet::from_point(vec![1.0, 0.0, 0.0])),
            &cfg,
        )
        .unwrap();
        assert!(r.value > -1e-3);
    }

    #[test]
    fn scalar_helpers() {
        let (x, v) = golden_section_max(|x| Ok(-(x - 0.3f64).powi(2)), 0.0, 1.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-8 && v.abs() < 1e-15);
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x| Ok(x * x + 1.0), 0.0, 1.0, 1e-9).is_err());
    }

    #[test]
    fn ext_dot_skips_zero_mass() {
        assert_eq!(ext_dot(&[f64::INFINITY, 2.0], &[0.0, 1.0]), 2.0);
        assert_eq!(ext_dot(&[f64::INFINITY, 2.0], &[0.5, 0.5]), f64::INFINITY);
    }
}
