//! Python bindings. Distributions are lists of floats and channels are
//! row-stochastic nested lists with an optional cost matrix.

use augustin::{
    CapacityConfig, Channel, ChannelFile, ConstrainedCapacity, ConstraintSet, FiniteDist, Order,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: augustin::Error) -> PyErr {
    match e {
        augustin::Error::NonConvergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn order(alpha: f64) -> PyResult<Order> {
    Order::new(alpha).map_err(err)
}

fn dist(w: Vec<f64>) -> PyResult<FiniteDist> {
    FiniteDist::new(w).map_err(err)
}

/// Rows must sum to one, as in channel files.
fn channel(w: Vec<Vec<f64>>, cost: Option<Vec<Vec<f64>>>) -> PyResult<Channel> {
    let file = ChannelFile {
        input_labels: None,
        output_labels: None,
        w,
        cost,
    };
    Channel::try_from(file).map_err(err)
}

fn constraints(rho: Option<Vec<f64>>) -> ConstraintSet {
    rho.map_or(ConstraintSet::Simplex, ConstraintSet::cost)
}

/// Rényi divergence `D_α(w‖q)`; `inf` when infinite.
#[pyfunction]
fn renyi_divergence(alpha: f64, w: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    Ok(
        augustin::renyi_divergence(order(alpha)?, &dist(w)?, &dist(q)?)
            .map_err(err)?
            .to_f64(),
    )
}

/// `(mean, information)` for the prior `p`.
#[pyfunction]
fn augustin_mean(alpha: f64, w: Vec<Vec<f64>>, p: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
    let r =
        augustin::solve_augustin_mean(order(alpha)?, &channel(w, None)?, &dist(p)?).map_err(err)?;
    Ok((r.mean.weights().to_vec(), r.information))
}

/// Capacity under an optional cost constraint `rho`.
#[pyfunction]
#[pyo3(signature = (alpha, w, cost=None, rho=None))]
fn capacity<'py>(
    py: Python<'py>,
    alpha: f64,
    w: Vec<Vec<f64>>,
    cost: Option<Vec<Vec<f64>>>,
    rho: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let (a, ch, cons) = (order(alpha)?, channel(w, cost)?, constraints(rho));
    let r = py
        .detach(|| augustin::capacity(a, &ch, &cons, &CapacityConfig::default()))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("value", r.value.to_f64())?;
    d.set_item("prior", r.prior.weights().to_vec())?;
    d.set_item("center", r.center.weights().to_vec())?;
    d.set_item("kkt_gap", r.kkt_gap)?;
    d.set_item("converged", r.converged)?;
    Ok(d)
}

/// Minimizes the Augustin-Legendre dual at cost level `rho`.
#[pyfunction]
fn solve_dual<'py>(
    py: Python<'py>,
    alpha: f64,
    w: Vec<Vec<f64>>,
    cost: Vec<Vec<f64>>,
    rho: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let (a, ch) = (order(alpha)?, channel(w, Some(cost))?);
    let r = py
        .detach(|| augustin::solve_dual(a, &ch, &rho, &CapacityConfig::default()))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lambda_star", r.lambda_star.values().to_vec())?;
    d.set_item("dual_value", r.dual_value)?;
    d.set_item("primal_value", r.primal_value)?;
    d.set_item("gap", r.gap)?;
    d.set_item("interior", r.interior)?;
    d.set_item("center_tv", r.center_tv)?;
    Ok(d)
}

/// `(exponent, maximizing order)` at `rate` nats.
#[pyfunction]
#[pyo3(signature = (w, rate, cost=None, rho=None))]
fn sphere_packing_exponent(
    py: Python<'_>,
    w: Vec<Vec<f64>>,
    rate: f64,
    cost: Option<Vec<Vec<f64>>>,
    rho: Option<Vec<f64>>,
) -> PyResult<(f64, f64)> {
    let (ch, cons) = (channel(w, cost)?, constraints(rho));
    let e = py
        .detach(|| {
            let curve = ConstrainedCapacity::new(&ch, &cons)?;
            augustin::sphere_packing_exponent(&curve, rate)
        })
        .map_err(err)?;
    Ok((e.exponent.to_f64(), e.argmax_alpha.value()))
}

/// `(events, violations)` over every event of the product of `(w, q)` pairs.
#[pyfunction]
fn ht_exhaustive(
    alpha: f64,
    components: Vec<(Vec<f64>, Vec<f64>)>,
    k: u32,
) -> PyResult<(u64, u64)> {
    let comps = components
        .into_iter()
        .map(|(w, q)| Ok((dist(w)?, dist(q)?)))
        .collect::<PyResult<Vec<_>>>()?;
    let s = augustin::ht_exhaustive(order(alpha)?, &comps, k).map_err(err)?;
    Ok((s.events, s.violations))
}

#[pymodule]
fn _augustin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(renyi_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(augustin_mean, m)?)?;
    m.add_function(wrap_pyfunction!(capacity, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dual, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_packing_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(ht_exhaustive, m)?)?;
    Ok(())
}
