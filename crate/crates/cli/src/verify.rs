//! Invariant suite on seeded random instances.

use augustin::random::{channel, costed_channel, dist, rng, sparse_dist};
use augustin::sphere::QUAD_TOL;
use augustin::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub name: &'static str,
    pub cases: usize,
    /// Largest violation seen; the check passes when it is at most `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

type Check = fn(&mut ChaCha8Rng) -> Result<f64>;

fn order<R: Rng>(r: &mut R, lo: f64, hi: f64) -> Order {
    Order::new(r.random_range(lo..hi)).expect("order in range")
}

fn sizes<R: Rng>(r: &mut R) -> (usize, usize) {
    (r.random_range(2..=4), r.random_range(2..=4))
}

fn lam(l: f64) -> Multiplier {
    Multiplier::new(vec![l]).expect("non-negative")
}

fn divergence_nonnegative(r: &mut ChaCha8Rng) -> Result<f64> {
    let n = r.random_range(2..=5);
    let (w, q) = (dist(r, n), dist(r, n));
    let a = order(r, 0.05, 2.0);
    Ok(-renyi_divergence(a, &w, &q)?.to_f64())
}

fn ehb_information(r: &mut ChaCha8Rng) -> Result<f64> {
    let (k, n) = sizes(r);
    let ch = channel(r, k, n);
    let (p, q) = (sparse_dist(r, k, 0.3), dist(r, n));
    Ok(-ehb_residual(order(r, 0.05, 1.0), &ch, &p, &q)?.to_f64())
}

fn mean_fixed_point(r: &mut ChaCha8Rng) -> Result<f64> {
    let (k, n) = sizes(r);
    let ch = channel(r, k, n);
    let p = dist(r, k);
    let a = order(r, 0.2, 1.0);
    let m = solve_augustin_mean(a, &ch, &p)?;
    augustin_operator(a, &ch, &p, &m.mean)?.total_variation(&m.mean)
}

fn capacity_certificate(r: &mut ChaCha8Rng) -> Result<f64> {
    let (k, n) = sizes(r);
    let ch = channel(r, k, n);
    let c = capacity(
        order(r, 0.1, 1.0),
        &ch,
        &ConstraintSet::Simplex,
        &CapacityConfig::default(),
    )?;
    Ok(if c.converged {
        c.kkt_gap
    } else {
        f64::INFINITY
    })
}

fn weak_duality(r: &mut ChaCha8Rng) -> Result<f64> {
    let (k, n) = sizes(r);
    let ch = costed_channel(r, k, n);
    let a = order(r, 0.1, 1.0);
    let rho = r.random_range(0.05..1.0);
    let l = r.random_range(0.0..4.0);
    let cfg = CapacityConfig::default();
    let c = capacity(a, &ch, &ConstraintSet::cost(vec![rho]), &cfg)?
        .value
        .to_f64();
    let cl = al_capacity(a, &ch, &lam(l), &cfg)?.value.to_f64();
    Ok(c - cl - l * rho)
}

fn jensen_ordering(r: &mut ChaCha8Rng) -> Result<f64> {
    let (k, n) = sizes(r);
    let ch = costed_channel(r, k, n);
    let p = dist(r, k);
    let l = lam(r.random_range(0.0..2.0));
    let a = order(r, 0.05, 0.95);
    Ok(rg_information(a, &ch, &p, &l)? - al_information(a, &ch, &p, &l)?)
}

fn rg_decomposition(r: &mut ChaCha8Rng) -> Result<f64> {
    let (k, n) = sizes(r);
    let ch = costed_channel(r, k, n);
    let (p, q) = (dist(r, k), dist(r, n));
    let l = lam(r.random_range(0.0..2.0));
    let a = order(r, 0.05, 0.95);
    let joint = rg_joint_divergence(a, &ch, &p, &l, &q)?;
    let g = rg_information(a, &ch, &p, &l)?;
    let d = renyi_divergence(a, &rg_mean(a, &ch, &p, &l)?, &q)?.to_f64();
    Ok((joint - g - d).abs())
}

fn averaged_dominates(r: &mut ChaCha8Rng) -> Result<f64> {
    let (k, n) = sizes(r);
    let c = ConstrainedCapacity::new(&channel(r, k, n), &ConstraintSet::Simplex)?;
    let a = order(r, 0.05, 0.95);
    let eps = r.random_range(0.01..0.9);
    Ok(c.capacity_at(a.value())? - averaged_capacity(&c, a, eps, QUAD_TOL)?.value)
}

fn hypothesis_testing(r: &mut ChaCha8Rng) -> Result<f64> {
    let n = r.random_range(1..=3);
    let comps: Vec<_> = (0..n).map(|_| (dist(r, 2), dist(r, 2))).collect();
    let s = ht_exhaustive(order(r, 0.05, 0.95), &comps, r.random_range(3..=6))?;
    Ok(s.violations as f64)
}

const CHECKS: [(&str, f64, Check); 9] = [
    ("divergence nonnegative", 1e-15, divergence_nonnegative),
    ("EHB residual nonnegative", 1e-8, ehb_information),
    ("mean is a fixed point", 1e-10, mean_fixed_point),
    ("capacity certificate", 1e-8, capacity_certificate),
    ("weak duality", 1e-9, weak_duality),
    ("Jensen ordering", 1e-12, jensen_ordering),
    ("R-G decomposition", 1e-10, rg_decomposition),
    ("averaged capacity dominates", 1e-8, averaged_dominates),
    ("hypothesis testing bound", 0.0, hypothesis_testing),
];

/// Each check draws from its own stream, so adding a check leaves the others
/// unchanged.
pub fn run(seed: u64, cases: usize) -> Vec<Row> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(i, &(name, tolerance, f))| {
            let mut r = rng(seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(i as u64));
            let mut worst = f64::NEG_INFINITY;
            let mut error = None;
            for _ in 0..cases {
                match f(&mut r) {
                    Ok(v) => worst = worst.max(if v.is_nan() { f64::INFINITY } else { v }),
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
            Row {
                name,
                cases,
                worst,
                tolerance,
                passed: error.is_none() && worst <= tolerance,
                error,
            }
        })
        .collect()
}

pub fn render(rows: &[Row]) -> String {
    let mut s = format!(
        "{:<30} {:>6} {:>12} {:>10}  result\n",
        "check", "cases", "worst", "tolerance"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<30} {:>6} {:>12.3e} {:>10.1e}  {}\n",
            r.name,
            r.cases,
            r.worst,
            r.tolerance,
            match (&r.error, r.passed) {
                (Some(e), _) => format!("ERROR {e}"),
                (None, true) => "PASS".into(),
                (None, false) => "FAIL".into(),
            }
        ));
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    s.push_str(&format!(
        "{} of {} checks passed\n",
        rows.len() - failed,
        rows.len()
    ));
    s
}
