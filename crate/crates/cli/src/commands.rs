use std::path::PathBuf;

use anyhow::{bail, ensure, Context};
use augustin::fw::FwConfig;
use augustin::*;
use clap::Args;
use rand::Rng;
use serde::Serialize;

use crate::output::{emit, json, num, Table};
use crate::{ChannelArgs, Cli, Command, Format, Status};

/// Evenly spaced points `start, start+step, …` up to `stop`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err("expected start:stop:step".into());
    };
    if !(step > 0.0 && start.is_finite() && stop >= start) {
        return Err("need a positive step and start <= stop".into());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(format!("{count} points is too many"));
    }
    Ok(Grid((0..count).map(|i| start + i as f64 * step).collect()))
}

#[derive(Args, Debug)]
pub struct SpbArgs {
    /// Component channel files; several give a product channel.
    #[arg(long, short, required = true)]
    pub channel: Vec<PathBuf>,
    /// Joint cost level for the product, or per-letter level with `--n`.
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
    /// Composition constraint for the `--n` form.
    #[arg(long, conflicts_with = "rho")]
    pub constraints: Option<PathBuf>,
    /// Block length of a memoryless extension of a single channel.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of messages.
    #[arg(long)]
    pub m: f64,
    /// List size.
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    #[arg(long, default_value_t = 3)]
    pub k: u32,
    #[arg(long, default_value_t = 0.5)]
    pub alpha0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps2: f64,
    /// Search a fixed grid of (k, alpha0, eps1, eps2) for the strongest bound.
    #[arg(long)]
    pub search: bool,
}

fn format_for(cli: &Cli, default: Format) -> Format {
    cli.global.format.unwrap_or(default)
}

fn dist(w: &[f64]) -> anyhow::Result<FiniteDist> {
    Ok(FiniteDist::new(w.to_vec())?)
}

fn constraints(c: &ChannelArgs) -> anyhow::Result<ConstraintSet> {
    Ok(match (&c.constraints, &c.rho) {
        (Some(p), _) => read_json(p)?,
        (None, Some(rho)) => ConstraintSet::cost(rho.clone()),
        (None, None) => ConstraintSet::Simplex,
    })
}

fn only(format: Format, allowed: &[Format], what: &str) -> anyhow::Result<()> {
    ensure!(
        allowed.contains(&format),
        "{what} does not support {format:?} output"
    );
    Ok(())
}

pub fn run(cli: &Cli) -> anyhow::Result<Status> {
    let out = cli.global.output.as_deref();
    match &cli.command {
        Command::Divergence { w, q, alpha } => {
            only(format_for(cli, Format::Json), &[Format::Json], "divergence")?;
            let d = renyi_divergence(Order::new(*alpha)?, &dist(w)?, &dist(q)?)?;
            #[derive(Serialize)]
            struct Report {
                alpha: f64,
                divergence: ExtReal,
            }
            emit(
                out,
                &json(&Report {
                    alpha: *alpha,
                    divergence: d,
                })?,
            )?;
            Ok(Status::Ok)
        }
        Command::Mean {
            channel,
            prior,
            alpha,
            fixed_point,
            tol,
            max_iter,
        } => {
            only(format_for(cli, Format::Json), &[Format::Json], "mean")?;
            let ch = read_channel(channel)?;
            let p = dist(prior)?;
            let a = Order::new(*alpha)?;
            let r = if *fixed_point {
                augustin_mean(a, &ch, &p, *tol, *max_iter)?
            } else {
                solve_augustin_mean(a, &ch, &p)?
            };
            emit(out, &json(&r)?)?;
            Ok(Status::Ok)
        }
        Command::Capacity {
            ch,
            alpha,
            tol,
            max_iter,
        } => capacity_cmd(cli, ch, alpha, *tol, *max_iter),
        Command::Dual {
            channel,
            rho,
            alpha,
        } => {
            only(format_for(cli, Format::Json), &[Format::Json], "dual")?;
            let ch = read_channel(channel)?;
            let r = solve_dual(Order::new(*alpha)?, &ch, rho, &CapacityConfig::default())?;
            emit(out, &json(&r)?)?;
            Ok(Status::Ok)
        }
        Command::Exponent { ch, rate_grid } => exponent_cmd(cli, ch, rate_grid, None),
        Command::AvgExponent { ch, rate_grid, eps } => exponent_cmd(cli, ch, rate_grid, Some(*eps)),
        Command::SpbBound(args) => spb_cmd(cli, args),
        Command::HtCheck {
            w,
            q,
            n,
            alpha,
            k,
            exhaustive,
            samples,
        } => ht_cmd(cli, w, q, *n, *alpha, *k, *exhaustive, *samples),
        Command::Verify { cases } => {
            let format = format_for(cli, Format::Text);
            only(format, &[Format::Text, Format::Json], "verify")?;
            let rows = crate::verify::run(cli.global.seed, *cases);
            let text = match format {
                Format::Json => json(&rows)?,
                _ => crate::verify::render(&rows),
            };
            emit(out, &text)?;
            Ok(if rows.iter().all(|r| r.passed) {
                Status::Ok
            } else {
                Status::InvariantFailed
            })
        }
    }
}

fn capacity_cmd(
    cli: &Cli,
    c: &ChannelArgs,
    alphas: &[f64],
    tol: f64,
    max_iter: usize,
) -> anyhow::Result<Status> {
    let format = format_for(cli, Format::Json);
    only(format, &[Format::Json, Format::Csv], "capacity")?;
    let ch = read_channel(&c.channel)?;
    let cons = constraints(c)?;
    let cfg = CapacityConfig {
        fw: FwConfig {
            tol,
            max_iter,
            ..FwConfig::default()
        },
    };
    let mut solver = CapacitySolver::new(&ch, &cons, cfg)?;
    let results: Vec<CapacityResult> = alphas
        .iter()
        .map(|&a| solver.solve(Order::new(a)?))
        .collect::<augustin::Result<_>>()?;
    let text = match format {
        Format::Csv => {
            let mut t = Table::new(&["alpha", "capacity", "kkt_gap", "iterations", "converged"]);
            for r in &results {
                t.push(vec![
                    num(r.order.value()),
                    num(r.value.to_f64()),
                    num(r.kkt_gap),
                    r.iterations.to_string(),
                    r.converged.to_string(),
                ]);
            }
            t.render()
        }
        _ if results.len() == 1 => json(&results[0])?,
        _ => json(&results)?,
    };
    emit(cli.global.output.as_deref(), &text)?;
    Ok(if results.iter().all(|r| r.converged) {
        Status::Ok
    } else {
        eprintln!("warning: capacity did not converge at every order");
        Status::NonConvergence
    })
}

fn exponent_cmd(
    cli: &Cli,
    c: &ChannelArgs,
    grid: &Grid,
    eps: Option<f64>,
) -> anyhow::Result<Status> {
    let format = format_for(cli, Format::Json);
    only(format, &[Format::Json, Format::Csv], "exponent")?;
    let ch = read_channel(&c.channel)?;
    let curve = ConstrainedCapacity::new(&ch, &constraints(c)?)?;
    let points: Vec<ExponentPoint> = grid
        .0
        .iter()
        .map(|&r| match eps {
            None => sphere_packing_exponent(&curve, r),
            Some(e) => averaged_exponent(&curve, r, e, augustin::sphere::QUAD_TOL),
        })
        .collect::<augustin::Result<_>>()?;
    let text = match format {
        Format::Csv => {
            let mut t = Table::new(&["rate", "exponent", "argmax_alpha"]);
            for p in &points {
                t.push(vec![
                    num(p.rate),
                    num(p.exponent.to_f64()),
                    num(p.argmax_alpha.value()),
                ]);
            }
            t.render()
        }
        _ => json(&points)?,
    };
    emit(cli.global.output.as_deref(), &text)?;
    Ok(Status::Ok)
}

type BoundFn = Box<dyn Fn(&BoundParams) -> augustin::Result<BoundReport>>;

/// The grid scanned by `--search`.
const SEARCH_K: [u32; 4] = [3, 4, 6, 8];
const SEARCH_ALPHA0: [f64; 4] = [0.5, 0.7, 0.8, 0.9];
const SEARCH_EPS1: [f64; 3] = [0.01, 0.03, 0.1];
const SEARCH_EPS2: [f64; 3] = [0.1, 0.5, 0.9];

/// Larger is a stronger bound: applicable reports first, then the smaller
/// `−ln` of the bound expression.
fn strength(r: &BoundReport) -> (bool, f64) {
    (
        r.verdict == BoundVerdict::Applicable,
        -r.neg_ln_bound.to_f64(),
    )
}

fn spb_cmd(cli: &Cli, a: &SpbArgs) -> anyhow::Result<Status> {
    only(format_for(cli, Format::Json), &[Format::Json], "spb-bound")?;
    let channels: Vec<Channel> = a
        .channel
        .iter()
        .map(read_channel)
        .collect::<augustin::Result<_>>()?;
    let base = BoundParams {
        m: a.m,
        l: a.l,
        k: a.k,
        alpha0: a.alpha0,
        eps1: a.eps1,
        eps2: a.eps2,
    };
    let candidates: Vec<BoundParams> = if a.search {
        let mut v = Vec::new();
        for k in SEARCH_K {
            for alpha0 in SEARCH_ALPHA0 {
                for eps1 in SEARCH_EPS1 {
                    for eps2 in SEARCH_EPS2 {
                        v.push(BoundParams {
                            k,
                            alpha0,
                            eps1,
                            eps2,
                            ..base
                        });
                    }
                }
            }
        }
        v
    } else {
        vec![base]
    };
    let eval: BoundFn = match a.n {
        Some(n) => {
            ensure!(channels.len() == 1, "--n takes exactly one channel");
            let cons = match (&a.constraints, &a.rho) {
                (Some(p), _) => read_json(p)?,
                (None, Some(rho)) => ConstraintSet::cost(rho.clone()),
                (None, None) => ConstraintSet::Simplex,
            };
            let ch = channels[0].clone();
            let curve = ConstrainedCapacity::new(&ch, &cons)?;
            Box::new(move |p| stationary_bound_with(&ch, &cons, &curve, n, p))
        }
        None => {
            ensure!(a.constraints.is_none(), "--constraints needs --n");
            let Some(rho) = &a.rho else {
                bail!("a product bound needs the joint cost level --rho");
            };
            let curve = ProductCostCapacity::new(&channels, rho)?;
            Box::new(move |p| cc_augustin_bound_with(&curve, p))
        }
    };
    let mut best: Option<BoundReport> = None;
    for p in &candidates {
        let r = eval(p).with_context(|| format!("bound at {p:?}"))?;
        if best.as_ref().is_none_or(|b| strength(&r) > strength(b)) {
            best = Some(r);
        }
    }
    let r = best.expect("at least one candidate");
    emit(cli.global.output.as_deref(), &json(&r)?)?;
    Ok(match r.verdict {
        BoundVerdict::Applicable => Status::Ok,
        BoundVerdict::Inapplicable => Status::Inapplicable,
    })
}

#[allow(clippy::too_many_arguments)]
fn ht_cmd(
    cli: &Cli,
    w: &[f64],
    q: &[f64],
    n: usize,
    alpha: f64,
    k: u32,
    exhaustive: bool,
    samples: usize,
) -> anyhow::Result<Status> {
    let format = format_for(cli, Format::Text);
    only(format, &[Format::Text, Format::Json], "ht-check")?;
    ensure!(n >= 1, "--n must be positive");
    let pair = (dist(w)?, dist(q)?);
    let comps = vec![pair; n];
    let a = Order::new(alpha)?;
    let summary = if exhaustive {
        ht_exhaustive(a, &comps, k)?
    } else {
        let outcomes = w
            .len()
            .checked_pow(n as u32)
            .filter(|&m| m <= 1 << 24)
            .context("too many product outcomes")?;
        let mut rng = augustin::random::rng(cli.global.seed);
        let mut s = HtSummary {
            events: 0,
            hypothesis_fails: 0,
            holds: 0,
            violations: 0,
        };
        for _ in 0..samples {
            let event: Vec<bool> = (0..outcomes).map(|_| rng.random::<bool>()).collect();
            let r = ht_bound_check(a, &comps, k, &event)?;
            s.events += 1;
            match r.verdict {
                HtVerdict::HypothesisFails => s.hypothesis_fails += 1,
                HtVerdict::Holds => s.holds += 1,
                HtVerdict::Violation => s.violations += 1,
            }
        }
        s
    };
    let text = match format {
        Format::Json => json(&summary)?,
        _ => format!(
            "events: {}\nhypothesis fails: {}\nholds: {}\nviolations: {}\n",
            summary.events, summary.hypothesis_fails, summary.holds, summary.violations
        ),
    };
    emit(cli.global.output.as_deref(), &text)?;
    Ok(if summary.violations == 0 {
        Status::Ok
    } else {
        Status::InvariantFailed
    })
}
