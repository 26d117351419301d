//! Convex sets of priors: the simplex, cost constraints and general
//! polytopes, with vertex enumeration or a linear-programming oracle.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{check_dim, Channel, FiniteDist};

const FEAS_TOL: f64 = 1e-10;

/// A convex set of priors on the channel input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSet {
    Simplex,
    /// `Σ_x P(x) ρ(x) ≤ rho` coordinatewise.
    #[serde(rename = "cost")]
    CostBox {
        rho: Vec<f64>,
    },
    /// `A·P ≤ b`.
    Polytope {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    /// Priors supported on the listed inputs.
    #[serde(rename = "support")]
    SupportRestricted {
        inputs: Vec<usize>,
    },
}

impl ConstraintSet {
    pub fn cost(rho: Vec<f64>) -> Self {
        ConstraintSet::CostBox { rho }
    }

    /// Checks feasibility against `ch` and prepares the linear oracle.
    pub fn resolve(&self, ch: &Channel) -> Result<FeasibleSet> {
        FeasibleSet::new(self, ch)
    }
}

/// A resolved constraint set: `{P ∈ simplex : A·P ≤ b, P(x) = 0 off `allowed`}`.
#[derive(Debug, Clone)]
pub struct FeasibleSet {
    k: usize,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    allowed: Vec<bool>,
    vertices: Option<Vec<Vec<f64>>>,
    interior: bool,
}

impl FeasibleSet {
    fn new(cons: &ConstraintSet, ch: &Channel) -> Result<Self> {
        let k = ch.inputs();
        let mut allowed = vec![true; k];
        let (a, b) = match cons {
            ConstraintSet::Simplex => (vec![], vec![]),
            ConstraintSet::CostBox { rho } => {
                let c = ch.cost_matrix()?;
                check_dim(ch.cost_dim(), rho.len())?;
                if rho.iter().any(|r| !r.is_finite()) {
                    return Err(Error::InvalidParameter("cost bound must be finite".into()));
                }
                let a = (0..rho.len())
                    .map(|i| c.iter().map(|cx| cx[i]).collect())
                    .collect();
                (a, rho.clone())
            }
            ConstraintSet::Polytope { a, b } => {
                check_dim(a.len(), b.len())?;
                for row in a {
                    check_dim(k, row.len())?;
                }
                (a.clone(), b.clone())
            }
            ConstraintSet::SupportRestricted { inputs } => {
                if inputs.is_empty() {
                    return Err(Error::Infeasible("empty support".into()));
                }
                allowed = vec![false; k];
                for &x in inputs {
                    if x >= k {
                        return Err(Error::InvalidParameter(format!("input {x} out of range")));
                    }
                    allowed[x] = true;
                }
                (vec![], vec![])
            }
        };
        let mut set = FeasibleSet {
            k,
            a,
            b,
            allowed,
            vertices: None,
            interior: true,
        };
        if set.a.len() <= 2 && k <= 12 {
            let v = set.enumerate_vertices();
            if v.is_empty() {
                return Err(Error::Infeasible(format!("{cons:?} admits no prior")));
            }
            set.vertices = Some(v);
        } else {
            set.lp_max(&vec![0.0; k])
                .map_err(|_| Error::Infeasible(format!("{cons:?} admits no prior")))?;
        }
        if matches!(cons, ConstraintSet::CostBox { .. }) {
            set.interior = set.strictly_feasible()?;
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    /// Whether some prior satisfies every inequality strictly.
    pub fn is_interior(&self) -> bool {
        self.interior
    }

    /// Explicit vertex list when the set is small enough to enumerate.
    pub fn vertices(&self) -> Option<&[Vec<f64>]> {
        self.vertices.as_deref()
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.k
            && p.iter()
                .zip(&self.allowed)
                .all(|(v, ok)| *v >= -tol && (*ok || *v <= tol))
            && (p.iter().sum::<f64>() - 1.0).abs() <= tol
            && self
                .a
                .iter()
                .zip(&self.b)
                .all(|(row, bi)| dot(row, p) <= bi + tol)
    }

    /// The single feasible prior, if the set is a point.
    pub fn single_point(&self) -> Option<Vec<f64>> {
        match self.vertices.as_deref() {
            Some([v]) => Some(v.clone()),
            _ => None,
        }
    }

    /// A relative-interior starting point: the barycenter of known vertices.
    pub fn barycenter(&self) -> Vec<f64> {
        let pts: Vec<Vec<f64>> = match &self.vertices {
            Some(v) => v.clone(),
            None => {
                let mut pts: Vec<Vec<f64>> = Vec::new();
                for x in 0..self.k {
                    let mut c = vec![0.0; self.k];
                    c[x] = 1.0;
                    if let Ok(v) = self.linear_max(&c) {
                        if !pts.iter().any(|p| same(p, &v)) {
                            pts.push(v);
                        }
                    }
                }
                pts
            }
        };
        let mut out = vec![0.0; self.k];
        for p in &pts {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v / pts.len() as f64;
            }
        }
        out
    }

    /// A maximizer of `⟨c, P⟩` over the set. Entries of `c` may be `+∞`;
    /// mass on those coordinates is then maximized first.
    pub fn linear_max(&self, c: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.k, c.len())?;
        let inf: Vec<bool> = c.iter().map(|v| *v == f64::INFINITY).collect();
        if let Some(vs) = &self.vertices {
            let mut best = 0;
            let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (i, v) in vs.iter().enumerate() {
                let key = score(c, &inf, v);
                if key.0 > best_key.0 + 1e-15 || (key.0 >= best_key.0 - 1e-15 && key.1 > best_key.1)
                {
                    best = i;
                    best_key = key;
                }
            }
            return Ok(vs[best].clone());
        }
        if inf.iter().any(|&b| b) {
            let ci: Vec<f64> = inf.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            let (v, mass) = self.lp_max(&ci)?;
            if mass > 1e-12 {
                return Ok(v);
            }
        }
        let cf: Vec<f64> = c
            .iter()
            .map(|v| if v.is_finite() { *v } else { 0.0 })
            .collect();
        Ok(self.lp_max(&cf)?.0)
    }

    /// `max_P ⟨c, P⟩` with the same `+∞` convention.
    pub fn support_value(&self, c: &[f64]) -> Result<f64> {
        let v = self.linear_max(c)?;
        Ok(crate::fw::ext_dot(c, &v))
    }

    fn lp_max(&self, c: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut pb = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = (0..self.k)
            .map(|x| pb.add_var(c[x], (0.0, if self.allowed[x] { 1.0 } else { 0.0 })))
            .collect();
        pb.add_constraint(
            vars.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(),
            ComparisonOp::Eq,
            1.0,
        );
        for (row, bi) in self.a.iter().zip(&self.b) {
            pb.add_constraint(
                vars.iter()
                    .zip(row)
                    .map(|(&v, &r)| (v, r))
                    .collect::<Vec<_>>(),
                ComparisonOp::Le,
                *bi,
            );
        }
        let sol = pb.solve().map_err(|e| Error::Lp(e.to_string()))?;
        let mut p: Vec<f64> = vars.iter().map(|&v| sol[v].max(0.0)).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= s);
        Ok((p, sol.objective()))
    }

    fn strictly_feasible(&self) -> Result<bool> {
        if self.a.is_empty() {
            return Ok(true);
        }
        // min t subject to A·P − t ≤ b over the simplex
        let mut pb = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..self.k)
            .map(|x| pb.add_var(0.0, (0.0, if self.allowed[x] { 1.0 } else { 0.0 })))
            .collect();
        let t = pb.add_var(1.0, (-1e6, 1e6));
        pb.add_constraint(
            vars.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(),
            ComparisonOp::Eq,
            1.0,
        );
        for (row, bi) in self.a.iter().zip(&self.b) {
            let mut e: Vec<_> = vars.iter().zip(row).map(|(&v, &r)| (v, r)).collect();
            e.push((t, -1.0));
            pb.add_constraint(e, ComparisonOp::Le, *bi);
        }
        let sol = pb.solve().map_err(|e| Error::Lp(e.to_string()))?;
        Ok(sol.objective() < -1e-12)
    }

    fn enumerate_vertices(&self) -> Vec<Vec<f64>> {
        let k = self.k;
        let m = self.a.len();
        let allowed: Vec<usize> = (0..k).filter(|&x| self.allowed[x]).collect();
        let mut out: Vec<Vec<f64>> = Vec::new();
        for tight in subsets(m, m.min(k.saturating_sub(1))) {
            let t = tight.len();
            for supp in combos(&allowed, t + 1) {
                let n = t + 1;
                let mut mat = nalgebra::DMatrix::zeros(n, n);
                let mut rhs = nalgebra::DVector::zeros(n);
                for j in 0..n {
                    mat[(0, j)] = 1.0;
                }
                rhs[0] = 1.0;
                for (r, &i) in tight.iter().enumerate() {
                    for (j, &x) in supp.iter().enumerate() {
                        mat[(r + 1, j)] = self.a[i][x];
                    }
                    rhs[r + 1] = self.b[i];
                }
                let lu = mat.lu();
                if lu.determinant().abs() < 1e-12 {
                    continue;
                }
                let Some(sol) = lu.solve(&rhs) else { continue };
                let mut p = vec![0.0; k];
                for (j, &x) in supp.iter().enumerate() {
                    p[x] = sol[j];
                }
                if !self.contains(&p, FEAS_TOL) {
                    continue;
                }
                p.iter_mut().for_each(|v| *v = v.max(0.0));
                let s: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= s);
                if !out.iter().any(|q| same(q, &p)) {
                    out.push(p);
                }
            }
        }
        out
    }
}

fn score(c: &[f64], inf: &[bool], v: &[f64]) -> (f64, f64) {
    let mut mass = 0.0;
    let mut fin = 0.0;
    for ((ci, &ii), vi) in c.iter().zip(inf).zip(v) {
        if *vi > 0.0 {
            if ii {
                mass += vi;
            } else {
                fin += ci * vi;
            }
        }
    }
    (mass, fin)
}

fn same(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// All subsets of `0..m` with at most `max` elements.
fn subsets(m: usize, max: usize) -> Vec<Vec<usize>> {
    let idx: Vec<usize> = (0..m).collect();
    (0..=max).flat_map(|s| combos(&idx, s)).collect()
}

fn combos(items: &[usize], r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    if items.len() < r {
        return vec![];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in combos(&items[i + 1..], r - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

/// Builds the prior as a distribution, clamping tiny negative round-off.
pub(crate) fn to_dist(p: &[f64]) -> Result<FiniteDist> {
    FiniteDist::new(p.iter().map(|v| v.max(0.0)).collect())
}
