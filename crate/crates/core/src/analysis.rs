//! Error measurement, convergence orders and epsilon sweeps.
//!
//! Orders are reported three ways: the raw `log2(e_N / e_2N)`, and the
//! order of `e_N / (ln N)^3` and `e_N / (ln N)^2`, so that a logarithmic
//! factor in the error does not hide the underlying `N^-2` rate.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{build_mesh, compute_transitions};
use crate::problem::{validate_problem, Condition, Problem};
use crate::scalar::Scalar;
use crate::solver::{solve_on_mesh, solve_problem, DiscreteSolution, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    /// Compare against the closed-form solution at the mesh nodes.
    Exact,
    /// Compare with the solution on the nested mesh with doubled counts.
    TwoMesh,
}

impl fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorMode::Exact => "exact",
            ErrorMode::TwoMesh => "two_mesh",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord<T> {
    pub n_intervals: usize,
    pub error: T,
    /// `log2(e_N / e_2N)`; absent for the last N or when undefined.
    pub order: Option<T>,
    /// Order of `e_N / (ln N)^3`.
    pub effective_order: Option<T>,
    /// Order of `e_N / (ln N)^2`.
    pub effective_order_sq: Option<T>,
    /// `e_N N^2 / (ln N)^3`.
    pub bound_constant: T,
}

/// `e N^2 / (ln N)^3`.
pub fn bound_constant<T: Scalar>(error: T, n_intervals: usize) -> T {
    let n = T::from_count(n_intervals);
    error * n * n / n.ln().powi(3)
}

/// Max over nodes and components of `|U(x_j) - u(x_j)|`.
pub fn exact_error<T: Scalar>(sol: &DiscreteSolution<T>, exact: impl Fn(T) -> Vec<T>) -> T {
    sol.mesh
        .points
        .iter()
        .zip(sol.values.rows())
        .flat_map(|(&x, u)| {
            let e = exact(x);
            u.iter()
                .zip(e)
                .map(|(&a, b)| (a - b).abs())
                .collect::<Vec<_>>()
        })
        .fold(T::zero(), T::max)
}

/// `max |U^N - U^2N|` over the N-mesh nodes, where the 2N mesh keeps the
/// transition points of the N mesh and doubles every interval count.
pub fn two_mesh_error<T: Scalar>(
    p: &Problem<T>,
    n_intervals: usize,
    opts: SolveOptions,
) -> Result<T> {
    validate_problem(p, opts.samples).require_admissible(opts.allow_large_epsilon)?;
    let params = compute_transitions(&p.epsilon, p.alpha, n_intervals)?;
    let coarse_mesh = build_mesh(&params);
    let fine_mesh = coarse_mesh.nested_refinement();
    let coarse = solve_on_mesh(p, &coarse_mesh)?;
    let fine = solve_on_mesh(p, &fine_mesh)?;
    Ok((0..=n_intervals)
        .flat_map(|j| {
            coarse
                .values
                .row(j)
                .iter()
                .zip(fine.values.row(2 * j))
                .map(|(&a, &b)| (a - b).abs())
                .collect::<Vec<_>>()
        })
        .fold(T::zero(), T::max))
}

fn log2_ratio<T: Scalar>(a: T, b: T) -> Option<T> {
    let r = (a / b).log2();
    r.is_finite().then_some(r)
}

/// Builds records from `(N, e_N)` pairs with each N double the previous.
pub fn records_from_errors<T: Scalar>(errors: &[(usize, T)]) -> Result<Vec<ErrorRecord<T>>> {
    check_ns(&errors.iter().map(|e| e.0).collect::<Vec<_>>())?;
    Ok(errors
        .iter()
        .enumerate()
        .map(|(k, &(n, e))| {
            let next = errors.get(k + 1);
            let order = next.and_then(|&(_, e2)| log2_ratio(e, e2));
            let log_growth =
                next.map(|&(n2, _)| (T::from_count(n2).ln() / T::from_count(n).ln()).log2());
            let shifted = |power: f64| match (order, log_growth) {
                (Some(o), Some(g)) => Some(o + T::lit(power) * g),
                _ => None,
            };
            ErrorRecord {
                n_intervals: n,
                error: e,
                order,
                effective_order: shifted(3.0),
                effective_order_sq: shifted(2.0),
                bound_constant: bound_constant(e, n),
            }
        })
        .collect())
}

fn check_ns(ns: &[usize]) -> Result<()> {
    if ns.len() < 2 {
        return Err(Error::BadSeries(format!("{ns:?}")));
    }
    if ns.windows(2).any(|w| w[1] != 2 * w[0]) || ns[0] < 2 {
        return Err(Error::BadSeries(format!("{ns:?}")));
    }
    Ok(())
}

/// Error of a single run at `N` in the given mode.
pub fn error_at<T: Scalar>(
    p: &Problem<T>,
    n_intervals: usize,
    mode: ErrorMode,
    opts: SolveOptions,
) -> Result<T> {
    match mode {
        ErrorMode::Exact => {
            let exact = p
                .exact
                .clone()
                .ok_or_else(|| Error::NoExactSolution(p.name.clone()))?;
            let sol = solve_problem(p, n_intervals, opts)?;
            Ok(exact_error(&sol, |x| exact.eval(&p.epsilon, x)))
        }
        ErrorMode::TwoMesh => two_mesh_error(p, n_intervals, opts),
    }
}

/// Errors and orders of `p` over `ns`.
pub fn convergence_series<T: Scalar>(
    p: &Problem<T>,
    ns: &[usize],
    mode: ErrorMode,
    opts: SolveOptions,
) -> Result<Vec<ErrorRecord<T>>> {
    check_ns(ns)?;
    if mode == ErrorMode::Exact && p.exact.is_none() {
        return Err(Error::NoExactSolution(p.name.clone()));
    }
    let errors = ns
        .iter()
        .map(|&n| error_at(p, n, mode, opts).map(|e| (n, e)))
        .collect::<Result<Vec<_>>>()?;
    records_from_errors(&errors)
}

/// `max / first` of the bound constants in a series.
pub fn bound_growth<T: Scalar>(records: &[ErrorRecord<T>]) -> T {
    let first = records.first().map_or(T::zero(), |r| r.bound_constant);
    let max = records
        .iter()
        .fold(T::zero(), |m, r| m.max(r.bound_constant));
    max / first
}

/// `max / min` of the bound constants in a series.
pub fn bound_spread<T: Scalar>(records: &[ErrorRecord<T>]) -> T {
    let max = records
        .iter()
        .fold(T::zero(), |m, r| m.max(r.bound_constant));
    let min = records
        .iter()
        .fold(T::infinity(), |m, r| m.min(r.bound_constant));
    max / min
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSeries<T> {
    pub eps_id: usize,
    pub epsilon: Vec<T>,
    pub records: Vec<ErrorRecord<T>>,
    pub bound_growth: T,
    /// Bound constant grew by more than the configured factor.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedEpsilon<T> {
    pub epsilon: Vec<T>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<T> {
    pub problem: String,
    pub mode: ErrorMode,
    pub grid_description: String,
    pub series: Vec<EpsilonSeries<T>>,
    pub skipped: Vec<SkippedEpsilon<T>>,
    /// Max over the epsilon grid at each N.
    pub uniform: Vec<ErrorRecord<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub solve: SolveOptions,
    /// A series is flagged when its bound constant exceeds this multiple of
    /// its first value.
    pub growth_factor: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            growth_factor: 1.5,
        }
    }
}

fn describe_grid<T: Scalar>(grid: &[Vec<T>]) -> String {
    let parts: Vec<String> = grid
        .iter()
        .map(|e| {
            let v: Vec<String> = e.iter().map(|x| format!("{:e}", x.as_f64())).collect();
            format!("({})", v.join(","))
        })
        .collect();
    format!("{} vectors: {}", grid.len(), parts.join(" "))
}

/// Runs [`convergence_series`] for every admissible epsilon vector of the
/// grid (in parallel) and forms the max-over-epsilon series. Vectors that
/// are unordered, out of range or (without the override) violate the
/// smallness condition are skipped with a reason.
pub fn epsilon_sweep<T: Scalar>(
    template: &Problem<T>,
    eps_grid: &[Vec<T>],
    ns: &[usize],
    mode: ErrorMode,
    opts: SweepOptions,
) -> Result<ConvergenceReport<T>> {
    check_ns(ns)?;
    let base = validate_problem(template, opts.solve.samples);
    for c in [
        Condition::DiagonalDominance,
        Condition::OffDiagonalSign,
        Condition::RowSumBound,
    ] {
        if let Some(ch) = base.get(c).filter(|ch| !ch.passed) {
            return Err(Error::ConditionViolated {
                condition: c.label().into(),
                detail: ch.detail.clone(),
            });
        }
    }

    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    for eps in eps_grid {
        let p = match template.with_epsilon(eps.clone()) {
            Ok(p) => p,
            Err(e) => {
                skipped.push(SkippedEpsilon {
                    epsilon: eps.clone(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let report = validate_problem(&p, 2);
        let blocking: Vec<String> = [
            Condition::EpsilonOrdering,
            Condition::EpsilonRange,
            Condition::EpsilonBound,
        ]
        .into_iter()
        .filter_map(|c| report.get(c))
        .filter(|ch| !ch.passed && ch.condition.is_blocking(opts.solve.allow_large_epsilon))
        .map(|ch| format!("{}: {}", ch.condition, ch.detail))
        .collect();
        if blocking.is_empty() {
            jobs.push(p);
        } else {
            skipped.push(SkippedEpsilon {
                epsilon: eps.clone(),
                reason: blocking.join("; "),
            });
        }
    }

    let results: Vec<Vec<ErrorRecord<T>>> = jobs
        .par_iter()
        .map(|p| convergence_series(p, ns, mode, opts.solve))
        .collect::<Result<_>>()?;

    let growth_limit = T::lit(opts.growth_factor);
    let series: Vec<EpsilonSeries<T>> = jobs
        .iter()
        .zip(results)
        .enumerate()
        .map(|(id, (p, records))| {
            let growth = bound_growth(&records);
            EpsilonSeries {
                eps_id: id,
                epsilon: p.epsilon.clone(),
                flagged: growth > growth_limit,
                bound_growth: growth,
                records,
            }
        })
        .collect();

    let uniform = if series.is_empty() {
        Vec::new()
    } else {
        let errs: Vec<(usize, T)> = ns
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let e = series
                    .iter()
                    .fold(T::zero(), |m, s| m.max(s.records[k].error));
                (n, e)
            })
            .collect();
        records_from_errors(&errs)?
    };

    Ok(ConvergenceReport {
        problem: template.name.clone(),
        mode,
        grid_description: describe_grid(eps_grid),
        series,
        skipped,
        uniform,
    })
}

/// `N, 2N, 4N, ...` with `count` entries.
pub fn doubling_sequence(start: usize, count: usize) -> Vec<usize> {
    (0..count).map(|k| start << k).collect()
}
