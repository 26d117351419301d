//! Finite probability objects, Rényi divergence and tilted measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;

/// Entries below this are treated as exact zeros.
pub const SUPPORT_EPS: f64 = 1e-15;
/// Orders closer than this to 1 use the Kullback-Leibler branch.
pub const KL_SWITCH: f64 = 1e-9;
/// Largest product alphabet [`product_channel`] will build.
pub const PRODUCT_SIZE_LIMIT: usize = 10_000_000;

/// A probability mass function on `{0, .., N-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FiniteDist(Vec<f64>);

impl FiniteDist {
    /// Normalizes `weights`, zeroes entries below [`SUPPORT_EPS`] and renormalizes.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty weight vector".into()));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("bad weight {bad}")));
        }
        let mut w = weights;
        for _ in 0..2 {
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(Error::InvalidDistribution("zero total mass".into()));
            }
            for v in w.iter_mut() {
                *v /= total;
                if *v < SUPPORT_EPS {
                    *v = 0.0;
                }
            }
        }
        Ok(FiniteDist(w))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        FiniteDist(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        FiniteDist(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.0[i] > 0.0
    }

    /// Half the L1 distance.
    pub fn total_variation(&self, other: &FiniteDist) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        Ok(tv(&self.0, &other.0))
    }

    /// Tensor product; `self` indexes the most significant digit.
    pub fn product(&self, other: &FiniteDist) -> FiniteDist {
        let w = self
            .0
            .iter()
            .flat_map(|a| other.0.iter().map(move |b| a * b))
            .collect();
        FiniteDist(w)
    }

    pub fn product_all(parts: &[FiniteDist]) -> Result<FiniteDist> {
        let (first, rest) = parts
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty product".into()))?;
        Ok(rest.iter().fold(first.clone(), |acc, d| acc.product(d)))
    }

    pub fn expectation(&self, f: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(f)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, v)| w * v)
            .sum()
    }
}

impl TryFrom<Vec<f64>> for FiniteDist {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        FiniteDist::new(v)
    }
}

impl From<FiniteDist> for Vec<f64> {
    fn from(d: FiniteDist) -> Vec<f64> {
        d.0
    }
}

impl AsRef<[f64]> for FiniteDist {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A finite non-negative measure, not necessarily normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMeasure(Vec<f64>);

impl FiniteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "negative or non-finite weight".into(),
            ));
        }
        Ok(FiniteMeasure(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn mass(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn normalized(&self) -> Result<FiniteDist> {
        FiniteDist::new(self.0.clone())
    }
}

/// An order `α > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Order(f64);

impl Order {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 {
            Ok(Order(alpha))
        } else {
            Err(Error::OrderOutOfRange {
                alpha,
                range: "(0, inf)",
            })
        }
    }

    pub const ONE: Order = Order(1.0);
    pub const HALF: Order = Order(0.5);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_one(self) -> bool {
        (self.0 - 1.0).abs() < KL_SWITCH
    }

    /// Accepts `α ∈ (0, 1]`.
    pub fn check_unit(self) -> Result<Self> {
        if self.0 <= 1.0 || self.is_one() {
            Ok(self)
        } else {
            Err(Error::OrderOutOfRange {
                alpha: self.0,
                range: "(0, 1]",
            })
        }
    }

    /// Accepts `α ∈ (0, 1)`.
    pub fn check_open_unit(self) -> Result<Self> {
        if self.0 < 1.0 {
            Ok(self)
        } else {
            Err(Error::OrderOutOfRange {
                alpha: self.0,
                range: "(0, 1)",
            })
        }
    }
}

impl TryFrom<f64> for Order {
    type Error = Error;
    fn try_from(a: f64) -> Result<Self> {
        Order::new(a)
    }
}

impl From<Order> for f64 {
    fn from(o: Order) -> f64 {
        o.0
    }
}

/// A finite channel: one output distribution per input letter, optionally
/// with an `ℓ`-dimensional cost per letter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::ChannelFile", into = "crate::io::ChannelFile")]
pub struct Channel {
    rows: Vec<FiniteDist>,
    cost: Option<Vec<Vec<f64>>>,
    input_labels: Vec<String>,
    output_labels: Vec<String>,
}

impl Channel {
    pub fn new(rows: Vec<FiniteDist>, cost: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map(FiniteDist::len).unwrap_or(0);
        let input_labels = (0..k).map(|i| i.to_string()).collect();
        let output_labels = (0..n).map(|i| i.to_string()).collect();
        Channel::with_labels(rows, cost, input_labels, output_labels)
    }

    pub fn from_matrix(w: Vec<Vec<f64>>, cost: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let rows = w
            .into_iter()
            .map(FiniteDist::new)
            .collect::<Result<Vec<_>>>()?;
        Channel::new(rows, cost)
    }

    pub fn with_labels(
        rows: Vec<FiniteDist>,
        cost: Option<Vec<Vec<f64>>>,
        input_labels: Vec<String>,
        output_labels: Vec<String>,
    ) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidChannel("no input letters".into()))?;
        let n = first.len();
        for r in &rows {
            check_dim(n, r.len())?;
        }
        check_dim(rows.len(), input_labels.len())?;
        check_dim(n, output_labels.len())?;
        if let Some(c) = &cost {
            validate_cost(c, rows.len())?;
        }
        Ok(Channel {
            rows,
            cost,
            input_labels,
            output_labels,
        })
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "crossover {p} not in [0,1]"
            )));
        }
        Channel::from_matrix(vec![vec![1.0 - p, p], vec![p, 1.0 - p]], None)
    }

    /// Noiseless channel on `k` letters.
    pub fn identity(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidChannel("no input letters".into()));
        }
        Channel::new((0..k).map(|i| FiniteDist::point(k, i)).collect(), None)
    }

    pub fn with_cost(mut self, cost: Vec<Vec<f64>>) -> Result<Self> {
        validate_cost(&cost, self.rows.len())?;
        self.cost = Some(cost);
        Ok(self)
    }

    pub fn without_cost(mut self) -> Self {
        self.cost = None;
        self
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &FiniteDist {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[FiniteDist] {
        &self.rows
    }

    pub fn row_slices(&self) -> Vec<&[f64]> {
        self.rows.iter().map(FiniteDist::weights).collect()
    }

    pub fn has_cost(&self) -> bool {
        self.cost.is_some()
    }

    pub fn cost_matrix(&self) -> Result<&[Vec<f64>]> {
        self.cost.as_deref().ok_or(Error::MissingCost)
    }

    /// Number of cost coordinates, 0 without a cost.
    pub fn cost_dim(&self) -> usize {
        self.cost.as_ref().map(|c| c[0].len()).unwrap_or(0)
    }

    /// `Σ_x p(x) ρ(x)`.
    pub fn expected_cost(&self, p: &[f64]) -> Result<Vec<f64>> {
        let c = self.cost_matrix()?;
        check_dim(self.inputs(), p.len())?;
        let mut out = vec![0.0; self.cost_dim()];
        for (px, cx) in p.iter().zip(c) {
            if *px > 0.0 {
                for (o, v) in out.iter_mut().zip(cx) {
                    *o += px * v;
                }
            }
        }
        Ok(out)
    }

    /// `λ·ρ(x)` for every input; an empty `λ` on a cost-free channel gives zeros.
    pub fn penalties(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        if lambda.is_empty() && !self.has_cost() {
            return Ok(vec![0.0; self.inputs()]);
        }
        let c = self.cost_matrix()?;
        check_dim(self.cost_dim(), lambda.len())?;
        Ok(c.iter().map(|cx| dot(cx, lambda)).collect())
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    /// Channel restricted to a subset of inputs, in the given order.
    pub fn restrict_inputs(&self, inputs: &[usize]) -> Result<Channel> {
        if inputs.is_empty() {
            return Err(Error::InvalidChannel("no input letters".into()));
        }
        if let Some(&bad) = inputs.iter().find(|&&x| x >= self.inputs()) {
            return Err(Error::InvalidParameter(format!("input {bad} out of range")));
        }
        Ok(Channel {
            rows: inputs.iter().map(|&x| self.rows[x].clone()).collect(),
            cost: self
                .cost
                .as_ref()
                .map(|c| inputs.iter().map(|&x| c[x].clone()).collect()),
            input_labels: inputs
                .iter()
                .map(|&x| self.input_labels[x].clone())
                .collect(),
            output_labels: self.output_labels.clone(),
        })
    }
}

fn validate_cost(c: &[Vec<f64>], k: usize) -> Result<()> {
    check_dim(k, c.len())?;
    let l = c[0].len();
    if l == 0 {
        return Err(Error::InvalidChannel("cost with zero coordinates".into()));
    }
    for row in c {
        check_dim(l, row.len())?;
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidChannel(
                "costs must be finite and non-negative".into(),
            ));
        }
    }
    for i in 0..l {
        let m = c.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min);
        if m > 1e-12 {
            return Err(Error::InvalidChannel(format!(
                "cost coordinate {i} has minimum {m}, expected 0"
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Kullback-Leibler divergence on raw slices; `+∞` when `w ⊄ q`.
pub(crate) fn kl_raw(w: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&a, &b) in w.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            s += a * (a / b).ln();
        }
    }
    s.max(0.0)
}

/// Order-α Rényi divergence on raw slices, `+∞` as `f64::INFINITY`.
///
/// `q` may be an unnormalized measure; `w` is assumed normalized except in
/// the joint-divergence helper, which passes masses through [`renyi_sum_ln`].
pub(crate) fn divergence_raw(alpha: f64, w: &[f64], q: &[f64]) -> f64 {
    if (alpha - 1.0).abs() < KL_SWITCH {
        return kl_raw(w, q);
    }
    match renyi_sum_ln(alpha, w, q) {
        None => f64::INFINITY,
        Some(ln_s) => (ln_s / (alpha - 1.0)).max(0.0),
    }
}

/// `ln Σ w^α q^{1-α}` over the common support, `None` when the sum is
/// degenerate in a way that makes the divergence infinite.
pub(crate) fn renyi_sum_ln(alpha: f64, w: &[f64], q: &[f64]) -> Option<f64> {
    let one_minus = 1.0 - alpha;
    let mut missing = 0.0;
    let mut x = 0.0;
    let mut common = 0usize;
    let mut overflow = false;
    let mut wmass = 0.0;
    for (&a, &b) in w.iter().zip(q) {
        if a <= 0.0 {
            continue;
        }
        wmass += a;
        if b <= 0.0 {
            if alpha > 1.0 {
                return None;
            }
            missing += a;
            continue;
        }
        common += 1;
        let e = one_minus * (b / a).ln();
        if e > 700.0 {
            overflow = true;
        } else {
            x += a * e.exp_m1();
        }
    }
    if common == 0 {
        return None;
    }
    // Σ w (q/w)^{1-α} = wmass - missing + Σ w expm1(..); the expm1 route keeps
    // precision when the sum is close to 1.
    let x = x + (wmass - 1.0) - missing;
    if !overflow && x > -0.5 && x.is_finite() {
        return Some(x.ln_1p());
    }
    let terms = w
        .iter()
        .zip(q)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(&a, &b)| alpha * a.ln() + one_minus * b.ln());
    Some(log_sum_exp(terms))
}

/// Tilted distribution `∝ w^α q^{1-α}` on raw slices, written into `out`.
/// Returns false when the common support is empty.
pub(crate) fn tilt_raw(alpha: f64, w: &[f64], q: &[f64], out: &mut [f64]) -> bool {
    if alpha == 1.0 {
        out.copy_from_slice(w);
        return w.iter().zip(q).all(|(a, b)| *a <= 0.0 || *b > 0.0);
    }
    let one_minus = 1.0 - alpha;
    let mut m = f64::NEG_INFINITY;
    for ((o, &a), &b) in out.iter_mut().zip(w).zip(q) {
        *o = if a > 0.0 && b > 0.0 {
            alpha * a.ln() + one_minus * b.ln()
        } else {
            f64::NEG_INFINITY
        };
        m = m.max(*o);
    }
    if m == f64::NEG_INFINITY {
        return false;
    }
    let mut s = 0.0;
    for o in out.iter_mut() {
        *o = (*o - m).exp();
        s += *o;
    }
    for o in out.iter_mut() {
        *o /= s;
    }
    true
}

/// `D_α(w‖q)`. Infinite when `α ≥ 1` and `w ⊄ q`, or when the supports are disjoint.
pub fn renyi_divergence(alpha: Order, w: &FiniteDist, q: &FiniteDist) -> Result<ExtReal> {
    check_dim(w.len(), q.len())?;
    Ok(ExtReal::from(divergence_raw(
        alpha.value(),
        w.weights(),
        q.weights(),
    )))
}

/// `Σ_x p(x) D_α(W(x)‖q)` with `0·∞ = 0`.
pub fn conditional_divergence(
    alpha: Order,
    ch: &Channel,
    q: &FiniteDist,
    p: &FiniteDist,
) -> Result<ExtReal> {
    check_dim(ch.inputs(), p.len())?;
    check_dim(ch.outputs(), q.len())?;
    Ok(conditional_raw(
        alpha.value(),
        &ch.row_slices(),
        q.weights(),
        p.weights(),
    ))
}

pub(crate) fn conditional_raw(alpha: f64, rows: &[&[f64]], q: &[f64], p: &[f64]) -> ExtReal {
    rows.iter()
        .zip(p)
        .filter(|(_, px)| **px > 0.0)
        .map(|(r, px)| ExtReal::from(divergence_raw(alpha, r, q)).scale(*px))
        .sum()
}

/// The tilted measure `∝ w^α q^{1-α}`.
pub fn tilted_measure(alpha: Order, w: &FiniteDist, q: &FiniteDist) -> Result<FiniteDist> {
    check_dim(w.len(), q.len())?;
    if !renyi_divergence(alpha, w, q)?.is_finite() {
        return Err(Error::TiltUndefined);
    }
    let mut out = vec![0.0; w.len()];
    if !tilt_raw(alpha.value(), w.weights(), q.weights(), &mut out) {
        return Err(Error::TiltUndefined);
    }
    FiniteDist::new(out)
}

/// `‖a − b‖₁ / 2`.
pub fn total_variation(a: &FiniteDist, b: &FiniteDist) -> Result<f64> {
    a.total_variation(b)
}

/// Tensor product of channels with additive costs. The first component is
/// the most significant digit of the joint input and output index.
pub fn product_channel(components: &[Channel]) -> Result<Channel> {
    let (first, rest) = components
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("empty component list".into()))?;
    let costed = first.has_cost();
    let l = first.cost_dim();
    for c in rest {
        if c.has_cost() != costed || c.cost_dim() != l {
            return Err(Error::InvalidChannel(
                "components must all carry costs of equal dimension or none".into(),
            ));
        }
    }
    let mut nin = 1usize;
    let mut nout = 1usize;
    for c in components {
        nin = nin.saturating_mul(c.inputs());
        nout = nout.saturating_mul(c.outputs());
        if nin > PRODUCT_SIZE_LIMIT || nout > PRODUCT_SIZE_LIMIT {
            return Err(Error::SizeGuard(format!(
                "product alphabet exceeds {PRODUCT_SIZE_LIMIT}"
            )));
        }
    }
    if nin.saturating_mul(nout) > 10 * PRODUCT_SIZE_LIMIT {
        return Err(Error::SizeGuard("product kernel too large".into()));
    }
    let mut acc = first.clone();
    for c in rest {
        let rows = acc
            .rows
            .iter()
            .flat_map(|a| c.rows.iter().map(move |b| a.product(b)))
            .collect();
        let cost = match (&acc.cost, &c.cost) {
            (Some(ca), Some(cb)) => Some(
                ca.iter()
                    .flat_map(|a| {
                        cb.iter()
                            .map(move |b| a.iter().zip(b).map(|(u, v)| u + v).collect())
                    })
                    .collect(),
            ),
            _ => None,
        };
        let join = |a: &[String], b: &[String]| -> Vec<String> {
            a.iter()
                .flat_map(|x| b.iter().map(move |y| format!("{x},{y}")))
                .collect()
        };
        acc = Channel {
            rows,
            cost,
            input_labels: join(&acc.input_labels, &c.input_labels),
            output_labels: join(&acc.output_labels, &c.output_labels),
        };
    }
    Ok(acc)
}

/// Splits a mixed-radix index (first digit most significant).
pub fn unrank(mut idx: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (o, r) in out.iter_mut().zip(radices).rev() {
        *o = idx % r;
        idx /= r;
    }
    out
}

pub fn rank(digits: &[usize], radices: &[usize]) -> usize {
    digits
        .iter()
        .zip(radices)
        .fold(0, |acc, (d, r)| acc * r + d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn d(v: &[f64]) -> FiniteDist {
        FiniteDist::new(v.to_vec()).unwrap()
    }

    #[test]
    fn construction_normalizes_and_clamps() {
        let p = d(&[2.0, 2.0, 1e-17]);
        assert_eq!(p.weights(), &[0.5, 0.5, 0.0]);
        assert!(FiniteDist::new(vec![0.0, 0.0]).is_err());
        assert!(FiniteDist::new(vec![-1.0, 2.0]).is_err());
    }

    #[test]
    fn divergence_examples() {
        let h = Order::new(0.5).unwrap();
        let u = d(&[0.5, 0.5]);
        assert_eq!(renyi_divergence(h, &u, &u).unwrap(), ExtReal::ZERO);
        let v = renyi_divergence(Order::ONE, &d(&[1.0, 0.0]), &u).unwrap();
        assert_abs_diff_eq!(v.to_f64(), 2f64.ln(), epsilon = 1e-15);
        let v = renyi_divergence(h, &d(&[0.9, 0.1]), &u).unwrap();
        let exact = -2.0 * (0.45f64.sqrt() + 0.05f64.sqrt()).ln();
        assert_abs_diff_eq!(v.to_f64(), exact, epsilon = 1e-15);
        assert_abs_diff_eq!(exact, 0.223144, epsilon = 1e-6);
    }

    #[test]
    fn infinite_cases() {
        let a = d(&[1.0, 0.0]);
        let b = d(&[0.0, 1.0]);
        let c = d(&[0.5, 0.5]);
        for alpha in [0.3, 1.0, 2.0] {
            let o = Order::new(alpha).unwrap();
            assert_eq!(renyi_divergence(o, &a, &b).unwrap(), ExtReal::Infinite);
        }
        assert_eq!(
            renyi_divergence(Order::ONE, &c, &a).unwrap(),
            ExtReal::Infinite
        );
        assert!(renyi_divergence(Order::HALF, &c, &a).unwrap().is_finite());
        assert_abs_diff_eq!(
            renyi_divergence(Order::HALF, &c, &a).unwrap().to_f64(),
            -2.0 * 0.5f64.sqrt().ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn near_one_is_continuous() {
        let w = d(&[0.9, 0.1]);
        let q = d(&[0.3, 0.7]);
        let kl = renyi_divergence(Order::ONE, &w, &q).unwrap().to_f64();
        for eps in [1e-8, 1e-7, 1e-6] {
            let lo = renyi_divergence(Order::new(1.0 - eps).unwrap(), &w, &q)
                .unwrap()
                .to_f64();
            let hi = renyi_divergence(Order::new(1.0 + eps).unwrap(), &w, &q)
                .unwrap()
                .to_f64();
            assert!((lo - kl).abs() < 1e-5 && (hi - kl).abs() < 1e-5);
            assert!(lo <= kl + 1e-12 && kl <= hi + 1e-12);
        }
    }

    #[test]
    fn deep_product_masses_use_log_domain() {
        let w = vec![1e-300, 1.0 - 1e-300];
        let q = vec![1.0 - 1e-300, 1e-300];
        let v = divergence_raw(0.5, &w, &q);
        assert!(v.is_finite() && v > 100.0);
    }

    #[test]
    fn tilt_examples() {
        let w = d(&[0.9, 0.1]);
        let q = d(&[0.5, 0.5]);
        let t = tilted_measure(Order::HALF, &w, &q).unwrap();
        let s = 0.45f64.sqrt() + 0.05f64.sqrt();
        assert_abs_diff_eq!(t.weights()[0], 0.45f64.sqrt() / s, epsilon = 1e-15);
        assert_abs_diff_eq!(t.weights()[0], 0.75, epsilon = 1e-15);
        let near = tilted_measure(Order::new(1.0 - 1e-12).unwrap(), &w, &q).unwrap();
        assert!(near.total_variation(&w).unwrap() < 1e-6);
        assert!(
            tilted_measure(Order::HALF, &w, &w)
                .unwrap()
                .total_variation(&w)
                .unwrap()
                < 1e-15
        );
        let e = tilted_measure(Order::HALF, &d(&[1.0, 0.0]), &d(&[0.0, 1.0]));
        assert_eq!(e, Err(Error::TiltUndefined));
    }

    #[test]
    fn tv_examples() {
        assert_eq!(
            total_variation(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(),
            1.0
        );
        assert_abs_diff_eq!(
            total_variation(&d(&[0.9, 0.1]), &d(&[0.5, 0.5])).unwrap(),
            0.4,
            epsilon = 1e-15
        );
        assert!(total_variation(&d(&[1.0]), &d(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn conditional_examples() {
        let ch = Channel::bsc(0.1).unwrap();
        let u = FiniteDist::uniform(2);
        let v = conditional_divergence(Order::HALF, &ch, &u, &u)
            .unwrap()
            .to_f64();
        assert_abs_diff_eq!(
            v,
            -2.0 * (0.45f64.sqrt() + 0.05f64.sqrt()).ln(),
            epsilon = 1e-15
        );
        let p = FiniteDist::point(2, 1);
        let q = d(&[0.2, 0.8]);
        let v = conditional_divergence(Order::HALF, &ch, &q, &p).unwrap();
        assert_eq!(v, renyi_divergence(Order::HALF, ch.row(1), &q).unwrap());
        // zero-weight rows with infinite divergence do not contribute
        let id = Channel::identity(2).unwrap();
        let v = conditional_divergence(
            Order::ONE,
            &id,
            &FiniteDist::point(2, 0),
            &FiniteDist::point(2, 0),
        )
        .unwrap();
        assert_eq!(v, ExtReal::ZERO);
    }

    #[test]
    fn product_examples() {
        let b = Channel::bsc(0.1)
            .unwrap()
            .with_cost(vec![vec![0.0], vec![1.0]])
            .unwrap();
        let one = product_channel(std::slice::from_ref(&b)).unwrap();
        assert_eq!(one, b);
        let two = product_channel(&[b.clone(), b]).unwrap();
        assert_eq!(two.inputs(), 4);
        let r0 = two.row(0).weights();
        for (a, e) in r0.iter().zip([0.81, 0.09, 0.09, 0.01]) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-15);
        }
        let costs: Vec<f64> = two.cost_matrix().unwrap().iter().map(|c| c[0]).collect();
        assert_eq!(costs, vec![0.0, 1.0, 1.0, 2.0]);
        assert_eq!(two.input_labels()[2], "1,0");
    }

    #[test]
    fn cost_normalization_enforced() {
        let ch = Channel::bsc(0.1).unwrap();
        assert!(ch.clone().with_cost(vec![vec![0.5], vec![1.0]]).is_err());
        assert!(ch.with_cost(vec![vec![0.0], vec![1.0]]).is_ok());
    }

    #[test]
    fn radix_round_trip() {
        let r = [2, 3, 2];
        for i in 0..12 {
            assert_eq!(rank(&unrank(i, &r), &r), i);
        }
        assert_eq!(unrank(5, &r), vec![0, 2, 1]);
    }
}
