//! Adaptive Simpson quadrature for scalar and vector integrands.

use crate::error::{Error, Result};

/// Integral and an error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    fa: Vec<f64>,
    fm: Vec<f64>,
    fb: Vec<f64>,
    whole: Vec<f64>,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: &[f64], fm: &[f64], fb: &[f64]) -> Vec<f64> {
    let h = (b - a) / 6.0;
    fa.iter()
        .zip(fm)
        .zip(fb)
        .map(|((x, y), z)| h * (x + 4.0 * y + z))
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `∫_a^b f` componentwise to absolute tolerance `tol` in the max norm,
/// with at most `max_panels` accepted panels.
pub fn adaptive_simpson_vec<F>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<Quadrature<Vec<f64>>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::InvalidParameter(format!("bad interval [{a}, {b}]")));
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let dim = fa.len();
    if a == b {
        return Ok(Quadrature {
            value: vec![0.0; dim],
            error: 0.0,
            panels: 0,
        });
    }
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = simpson(a, b, &fa, &fm, &fb);
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol,
        depth: 0,
    }];
    let mut total = vec![0.0; dim];
    let mut error = 0.0;
    let mut panels = 0usize;
    let mut evals = 0usize;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm)?;
        let frm = f(rm)?;
        evals += 2;
        let left = simpson(p.a, m, &p.fa, &flm, &p.fm);
        let right = simpson(m, p.b, &p.fm, &frm, &p.fb);
        let both: Vec<f64> = left.iter().zip(&right).map(|(x, y)| x + y).collect();
        let diff = max_abs_diff(&both, &p.whole);
        if diff <= 15.0 * p.tol || p.depth >= 50 {
            // Richardson extrapolation
            for ((t, s), w) in total.iter_mut().zip(&both).zip(&p.whole) {
                *t += s + (s - w) / 15.0;
            }
            error += diff / 15.0;
            panels += 1;
            continue;
        }
        if panels + stack.len() + 2 > max_panels || evals > 4 * max_panels {
            return Err(Error::NonConvergence {
                what: "adaptive Simpson",
                iterations: panels,
                residual: diff / 15.0,
            });
        }
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm.clone(),
            fm: frm,
            fb: p.fb,
            whole: right,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
    }
    Ok(Quadrature {
        value: total,
        error,
        panels,
    })
}

/// Scalar version of [`adaptive_simpson_vec`].
pub fn adaptive_simpson<F>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<Quadrature<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let q = adaptive_simpson_vec(|x| Ok(vec![f(x)?]), a, b, tol, max_panels)?;
    Ok(Quadrature {
        value: q.value[0],
        error: q.error,
        panels: q.panels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomials_are_exact() {
        let q = adaptive_simpson(|x| Ok(x * x * x - 2.0 * x), 0.0, 2.0, 1e-12, 100).unwrap();
        assert_abs_diff_eq!(q.value, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn smooth_and_kinked() {
        let q = adaptive_simpson(|x: f64| Ok(x.exp()), 0.0, 1.0, 1e-12, 10_000).unwrap();
        assert_abs_diff_eq!(q.value, 1f64.exp() - 1.0, epsilon = 1e-11);
        let q = adaptive_simpson(|x: f64| Ok((x - 0.3).abs()), 0.0, 1.0, 1e-10, 10_000).unwrap();
        assert_abs_diff_eq!(q.value, 0.5 * (0.09 + 0.49), epsilon = 1e-9);
        let v = adaptive_simpson_vec(|x: f64| Ok(vec![x.sin(), x.cos()]), 0.0, 1.0, 1e-12, 10_000)
            .unwrap();
        assert_abs_diff_eq!(v.value[0], 1.0 - 1f64.cos(), epsilon = 1e-11);
        assert_abs_diff_eq!(v.value[1], 1f64.sin(), epsilon = 1e-11);
    }

    #[test]
    fn budget_exhaustion() {
        let r = adaptive_simpson(
            |x: f64| Ok((1.0 / x.max(1e-300)).sin()),
            0.0,
            1.0,
            1e-14,
            20,
        );
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }
}
