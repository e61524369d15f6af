use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shishkin_rd::analysis::{bound_growth, EpsilonSeries};
use shishkin_rd::io::{
    write_gnuplot, write_mesh_csv, write_series_csv, write_solution_csv, write_system_csv,
    write_uniform_csv,
};
use shishkin_rd::mesh::{intersection_violations, mesh_violations, min_intervals};
use shishkin_rd::{
    assemble, build_mesh, builtin_problems, check_discrete_max_principle, check_discrete_stability,
    compute_transitions, convergence_series, epsilon_sweep, exact_error, mesh_report,
    records_from_errors, suggest_alpha, validate_problem, ConvergenceReport, ErrorMode,
    ErrorRecord, Problem, SolveOptions, SweepOptions, TransitionParams,
};

use crate::config::RunConfig;
use crate::format::{csv_to_gnuplot, order, sig6, vector};
use crate::{CliError, Format};

type CmdResult = Result<(), CliError>;

fn solve_opts(cfg: &RunConfig) -> SolveOptions {
    SolveOptions {
        samples: cfg.samples,
        allow_large_epsilon: cfg.allow_large_epsilon,
    }
}

fn header(p: &Problem<f64>) -> String {
    format!(
        "problem {}  n = {}  alpha = {}\nepsilon = {}\n",
        p.name,
        p.n(),
        sig6(p.alpha),
        vector(&p.epsilon)
    )
}

fn out_dir(cfg: &RunConfig) -> Result<Option<&Path>, CliError> {
    match &cfg.out {
        Some(d) => {
            fs::create_dir_all(d)?;
            Ok(Some(d.as_path()))
        }
        None if cfg.debug_dump => Err(CliError::Usage("--debug-dump needs --out".into())),
        None => Ok(None),
    }
}

fn write_file(dir: &Path, name: &str, body: &[u8]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, body)?;
    eprintln!("wrote {}", path.display());
    Ok(path)
}

fn csv<F>(f: F) -> Result<String, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("writers emit ASCII"))
}

pub fn validate(cfg: &RunConfig) -> CmdResult {
    let p = &cfg.problem;
    let report = validate_problem(p, cfg.samples);
    let mut s = header(p);
    let _ = writeln!(s, "samples = {}", report.samples);
    if let Some(note) = &cfg.alpha_note {
        let _ = writeln!(s, "alpha = \"auto\" failed: {note}");
    }
    for c in &report.checks {
        let status = match (c.passed, c.condition.is_blocking(cfg.allow_large_epsilon)) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        };
        let _ = writeln!(s, "{:<14} {}  {}", c.condition.label(), status, c.detail);
    }
    if let Ok(a) = suggest_alpha(p, cfg.samples) {
        let _ = writeln!(s, "suggested alpha = {}", sig6(a));
    }
    let failures = report.blocking_failures(cfg.allow_large_epsilon);
    if failures.is_empty() {
        let _ = writeln!(s, "result: admissible");
        print!("{s}");
        Ok(())
    } else {
        let names: Vec<&str> = failures.iter().map(|c| c.condition.label()).collect();
        let _ = writeln!(s, "result: not admissible ({})", names.join(", "));
        print!("{s}");
        Err(CliError::Failed(format!(
            "validation failed: {}",
            names.join(", ")
        )))
    }
}

pub fn mesh(cfg: &RunConfig, fmt: Format) -> CmdResult {
    let p = &cfg.problem;
    let params = compute_transitions(&p.epsilon, p.alpha, cfg.n_intervals)?;
    let m = build_mesh(&params);
    let dir = out_dir(cfg)?;
    let body = csv(|w| write_mesh_csv(w, &m))?;
    if let Some(d) = dir {
        write_file(d, "mesh.csv", body.as_bytes())?;
    }
    match fmt {
        Format::Csv => print!("{body}"),
        Format::Gnuplot => print!("{}", csv_to_gnuplot(&body)),
        Format::Table => print!("{}", mesh_table(p, &params, &m)),
    }
    Ok(())
}

fn mesh_table(p: &Problem<f64>, params: &TransitionParams<f64>, m: &shishkin_rd::Mesh64) -> String {
    let r = mesh_report(m);
    let mut s = header(p);
    let _ = writeln!(s, "N = {}", params.n_intervals);
    for (k, (&tau, &b)) in params.tau.iter().zip(&params.b).enumerate() {
        let _ = writeln!(
            s,
            "tau_{} = {}  b_{} = {}",
            k + 1,
            sig6(tau),
            k + 1,
            u8::from(b)
        );
    }
    let bits: Vec<String> = params.b.iter().map(|&b| u8::from(b).to_string()).collect();
    let _ = writeln!(s, "b = ({})", bits.join(", "));
    if params.is_uniform_class() {
        let _ = writeln!(s, "mesh: uniform, spacing {}", sig6(r.max_spacing));
    } else {
        let _ = writeln!(s, "mesh: layer-adapted");
    }
    let counts: Vec<String> = m.interval_counts.iter().map(|c| c.to_string()).collect();
    let total: usize = m.interval_counts.iter().sum();
    let _ = writeln!(s, "counts = {} (sum {})", counts.join(" "), total);
    if r.jump_points.is_empty() {
        let _ = writeln!(s, "J_b = none");
    } else {
        let jumps: Vec<String> = r
            .jump_points
            .iter()
            .map(|(j, x)| format!("{j}:{}", sig6(*x)))
            .collect();
        let _ = writeln!(s, "J_b = {}", jumps.join(" "));
    }
    for t in &r.transitions {
        let _ = writeln!(
            s,
            "transition {}: h = {}  H = {}  closed-form residual {:.2e}",
            t.k + 1,
            sig6(t.h),
            sig6(t.big_h),
            t.max_relative_residual()
        );
    }
    let _ = writeln!(
        s,
        "spacing in [{}, {}]",
        sig6(r.min_spacing),
        sig6(r.max_spacing)
    );
    s
}

pub fn solve(cfg: &RunConfig, fmt: Format) -> CmdResult {
    let p = &cfg.problem;
    let dir = out_dir(cfg)?;
    if let Some(note) = &cfg.alpha_note {
        return Err(CliError::Failed(format!("alpha = \"auto\" failed: {note}")));
    }
    let sol = shishkin_rd::solve_problem(p, cfg.n_intervals, solve_opts(cfg))?;
    let body = csv(|w| write_solution_csv(w, &sol))?;
    if let Some(d) = dir {
        write_file(d, "solution.csv", body.as_bytes())?;
        if cfg.debug_dump {
            let sys = assemble(p, &sol.mesh)?;
            write_file(
                d,
                "system.csv",
                csv(|w| write_system_csv(w, &sys))?.as_bytes(),
            )?;
        }
    }
    match fmt {
        Format::Csv => print!("{body}"),
        Format::Gnuplot => print!("{}", csv_to_gnuplot(&body)),
        Format::Table => {
            let mut s = header(p);
            let _ = writeln!(s, "N = {}", cfg.n_intervals);
            let _ = writeln!(s, "residual max|L^N U - f| = {:.3e}", sol.residual_norm);
            let _ = writeln!(s, "max|U| = {}", sig6(sol.values.max_norm()));
            if let Some(exact) = &p.exact {
                let e = exact_error(&sol, |x| exact.eval(&p.epsilon, x));
                let _ = writeln!(s, "max error vs closed form = {e:.3e}");
            }
            print!("{s}");
        }
    }
    Ok(())
}

fn series_table(mode_label: &str, records: &[ErrorRecord<f64>]) -> String {
    let mut s = format!(
        "{:>6}  {:>12}  {:>7}  {:>9}  {:>12}  {:>12}\n",
        "N", mode_label, "order", "eff_order", "eff_order_sq", "bound_const"
    );
    for r in records {
        let _ = writeln!(
            s,
            "{:>6}  {:>12.6e}  {:>7}  {:>9}  {:>12}  {:>12.6e}",
            r.n_intervals,
            r.error,
            order(r.order),
            order(r.effective_order),
            order(r.effective_order_sq),
            r.bound_constant
        );
    }
    s
}

fn error_label(mode: ErrorMode) -> &'static str {
    match mode {
        ErrorMode::Exact => "error",
        ErrorMode::TwoMesh => "diff_2N",
    }
}

fn emit_report(
    cfg: &RunConfig,
    fmt: Format,
    report: &ConvergenceReport<f64>,
    table: String,
    dat: &str,
) -> CmdResult {
    let series = csv(|w| write_series_csv(w, report))?;
    let uniform = csv(|w| write_uniform_csv(w, report))?;
    let gnuplot = csv(|w| write_gnuplot(w, report))?;
    if let Some(d) = out_dir(cfg)? {
        write_file(d, "series.csv", series.as_bytes())?;
        write_file(d, "uniform.csv", uniform.as_bytes())?;
        write_file(d, dat, gnuplot.as_bytes())?;
    }
    match fmt {
        Format::Csv => print!("{series}"),
        Format::Gnuplot => print!("{gnuplot}"),
        Format::Table => print!("{table}"),
    }
    Ok(())
}

pub fn converge(cfg: &RunConfig, fmt: Format, synthetic: bool) -> CmdResult {
    let p = &cfg.problem;
    if let Some(note) = &cfg.alpha_note {
        return Err(CliError::Failed(format!("alpha = \"auto\" failed: {note}")));
    }
    let (name, mode, records) = if synthetic {
        let errs: Vec<(usize, f64)> = cfg.ns.iter().map(|&n| (n, (n as f64).powi(-2))).collect();
        (
            "synthetic N^-2".to_string(),
            ErrorMode::Exact,
            records_from_errors(&errs)?,
        )
    } else {
        let mode = cfg.mode.unwrap_or(if p.exact.is_some() {
            ErrorMode::Exact
        } else {
            ErrorMode::TwoMesh
        });
        let records = convergence_series(p, &cfg.ns, mode, solve_opts(cfg))?;
        (p.name.clone(), mode, records)
    };
    let growth = bound_growth(&records);
    let report = ConvergenceReport {
        problem: name.clone(),
        mode,
        grid_description: vector(&p.epsilon),
        series: vec![EpsilonSeries {
            eps_id: 0,
            epsilon: p.epsilon.clone(),
            flagged: growth > cfg.growth_factor,
            bound_growth: growth,
            records: records.clone(),
        }],
        skipped: Vec::new(),
        uniform: records.clone(),
    };
    let mut table = if synthetic {
        format!("problem {name}\n")
    } else {
        header(p)
    };
    let _ = writeln!(table, "mode = {mode}");
    table.push_str(&series_table(error_label(mode), &records));
    let _ = writeln!(table, "bound constant growth = {growth:.4}");
    emit_report(cfg, fmt, &report, table, "convergence.dat")
}

fn default_grid(p: &Problem<f64>) -> Vec<Vec<f64>> {
    match p.n() {
        1 => (1..=6).map(|k| vec![10f64.powi(-2 * k)]).collect(),
        2 => [1e-8, 1e-6]
            .iter()
            .flat_map(|&e1| [1e-4, 1e-2].map(|e2| vec![e1, e2]))
            .collect(),
        _ => vec![p.epsilon.clone()],
    }
}

pub fn sweep(cfg: &RunConfig, fmt: Format) -> CmdResult {
    let p = &cfg.problem;
    if let Some(note) = &cfg.alpha_note {
        return Err(CliError::Failed(format!("alpha = \"auto\" failed: {note}")));
    }
    let grid = cfg.epsilon_grid.clone().unwrap_or_else(|| default_grid(p));
    let mode = cfg.mode.unwrap_or(if p.exact.is_some() {
        ErrorMode::Exact
    } else {
        ErrorMode::TwoMesh
    });
    let opts = SweepOptions {
        solve: solve_opts(cfg),
        growth_factor: cfg.growth_factor,
    };
    let report = epsilon_sweep(p, &grid, &cfg.ns, mode, opts)?;
    let mut t = format!(
        "problem {}  n = {}  alpha = {}\nmode = {mode}\n",
        p.name,
        p.n(),
        sig6(p.alpha)
    );
    for s in &report.series {
        let _ = writeln!(
            t,
            "eps_id {}  epsilon = {}  bound growth {:.4}{}",
            s.eps_id,
            vector(&s.epsilon),
            s.bound_growth,
            if s.flagged { "  FLAGGED" } else { "" }
        );
    }
    for s in &report.skipped {
        let _ = writeln!(t, "skipped epsilon = {}: {}", vector(&s.epsilon), s.reason);
    }
    let _ = writeln!(t, "uniform series (max over epsilon):");
    t.push_str(&series_table(error_label(mode), &report.uniform));
    if report.series.is_empty() {
        print!("{t}");
        return Err(CliError::Failed(
            "no admissible epsilon vector in the grid".into(),
        ));
    }
    emit_report(cfg, fmt, &report, t, "sweep.dat")
}

/// Sorted, log-uniform epsilon in `[lo, hi]` with consecutive ratios of
/// at least 1.01.
fn random_epsilon(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let mut e: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.random_range(lo.log10()..hi.log10())))
            .collect();
        e.sort_by(f64::total_cmp);
        if e.windows(2).all(|w| w[1] >= 1.01 * w[0]) {
            return e;
        }
    }
}

struct Suite {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn first(v: &[String]) -> String {
    v.first().map(|s| format!(": {s}")).unwrap_or_default()
}

fn mesh_suite(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Suite {
    let mut meshes = 0;
    let mut bad = Vec::new();
    for n in 1..=4usize {
        for p in 1..=5usize {
            let big_n = 1usize << (n + p + 1);
            for trial in 0..cfg.mesh_trials {
                let alpha = rng.random_range(0.1..2.0);
                let cap = alpha / 36.0;
                // every tenth trial sits at the cap, where b = 0
                let eps = if trial % 10 == 0 {
                    (0..n)
                        .map(|i| cap * 0.9f64.powi((n - 1 - i) as i32))
                        .collect()
                } else {
                    random_epsilon(rng, n, 1e-14, cap)
                };
                meshes += 1;
                match compute_transitions(&eps, alpha, big_n) {
                    Ok(t) => {
                        for v in mesh_violations(&build_mesh(&t)) {
                            bad.push(format!("n={n} N={big_n}: {v}"));
                        }
                    }
                    Err(e) => bad.push(format!("n={n} N={big_n}: {e}")),
                }
            }
        }
    }
    Suite {
        name: "mesh invariants",
        passed: bad.is_empty(),
        detail: format!(
            "{meshes} meshes (n <= 4, p <= 5), {} violations{}",
            bad.len(),
            first(&bad)
        ),
    }
}

fn lemma_suite(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Suite, CliError> {
    let mut checks = 0;
    let mut bad = Vec::new();
    for _ in 0..cfg.lemma_trials {
        let n = rng.random_range(2..=5usize);
        let alpha = rng.random_range(0.1..2.0);
        let eps = random_epsilon(rng, n, 1e-14, alpha / 36.0);
        for s in [1.0, 1.5] {
            let (c, v) = intersection_violations(&eps, alpha, s)?;
            checks += c;
            bad.extend(v);
        }
    }
    Ok(Suite {
        name: "intersection lemma",
        passed: bad.is_empty(),
        detail: format!(
            "{} tuples, {checks} points, {} violations{}",
            cfg.lemma_trials,
            bad.len(),
            first(&bad)
        ),
    })
}

fn check_mesh_n(cfg: &RunConfig, p: &Problem<f64>) -> usize {
    cfg.check_n.max(min_intervals(p.n()))
}

fn max_principle_suite(cfg: &RunConfig) -> Result<Suite, CliError> {
    let mut problems = builtin_problems::<f64>();
    if cfg.configured {
        let mut p = cfg.problem.clone();
        p.name = format!("config:{}", p.name);
        problems.push(p);
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for p in &problems {
        let big_n = check_mesh_n(cfg, p);
        let params = compute_transitions(&p.epsilon, p.alpha, big_n)?;
        let sys = assemble(p, &build_mesh(&params))?;
        let r = check_discrete_max_principle(&sys)?;
        ok &= r.passed;
        parts.push(format!(
            "{} N={} {}",
            p.name,
            big_n,
            if r.passed { "ok" } else { "FAIL" }
        ));
        if !r.passed {
            parts.push(format!("({}, {} negative entries)", r.detail, r.violations));
        }
    }
    Ok(Suite {
        name: "max principle",
        passed: ok,
        detail: parts.join(", "),
    })
}

fn stability_suite(cfg: &RunConfig) -> Result<Suite, CliError> {
    let p = &cfg.problem;
    let big_n = check_mesh_n(cfg, p);
    let params = compute_transitions(&p.epsilon, p.alpha, big_n)?;
    let sys = assemble(p, &build_mesh(&params))?;
    let r = check_discrete_stability(&sys, cfg.stability_trials, p.alpha, cfg.seed)?;
    Ok(Suite {
        name: "stability",
        passed: r.passed,
        detail: format!(
            "{} N={big_n}, {} trials, {} violations, {}",
            p.name, r.trials, r.violations, r.detail
        ),
    })
}

pub fn check(cfg: &RunConfig) -> CmdResult {
    let dir = out_dir(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let suites = [
        mesh_suite(cfg, &mut rng),
        max_principle_suite(cfg)?,
        stability_suite(cfg)?,
        lemma_suite(cfg, &mut rng)?,
    ];
    let mut s = format!("seed = {}\n", cfg.seed);
    for suite in &suites {
        let tag = if suite.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "[{tag}] {}: {}", suite.name, suite.detail);
    }
    let failed: Vec<&str> = suites
        .iter()
        .filter(|x| !x.passed)
        .map(|x| x.name)
        .collect();
    if failed.is_empty() {
        let _ = writeln!(s, "result: all suites passed");
    } else {
        let _ = writeln!(s, "result: failed ({})", failed.join(", "));
    }
    if let Some(d) = dir {
        write_file(d, "check.txt", s.as_bytes())?;
    }
    print!("{s}");
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "check failed: {}",
            failed.join(", ")
        )))
    }
}
