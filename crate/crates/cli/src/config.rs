//! Run configuration: a flat TOML file whose keys are checked strictly.
//!
//! ```toml
//! problem = "P2"                 # builtin preset, or any label for a custom problem
//! epsilon = [1e-6, 1e-4]
//! alpha = "auto"                 # or a number
//! N = 128
//! Ns = [64, 128, 256, 512]
//! a.1.2 = "-1 + 0.5*x"           # overrides one entry of A (one-based)
//! f.1 = "exp(1*x)"
//! ```
//!
//! Coefficient entries use the term grammar of [`shishkin_rd::Expr`]. A
//! problem name that is not a builtin starts from the zero problem of size
//! `len(epsilon)`, with `alpha = "auto"`.

use std::path::PathBuf;

use shishkin_rd::analysis::doubling_sequence;
use shishkin_rd::problem::{BUILTIN_NAMES, DEFAULT_SAMPLES};
use shishkin_rd::solver::DEFAULT_SEED;
use shishkin_rd::{builtin_problem, suggest_alpha, CoefficientSpec, ErrorMode, Expr, Problem};
use toml::{Table, Value};

use crate::CliError;

const KEYS: &[&str] = &[
    "problem",
    "epsilon",
    "epsilon_grid",
    "alpha",
    "N",
    "Ns",
    "mode",
    "samples",
    "seed",
    "allow_large_epsilon",
    "debug_dump",
    "growth_factor",
    "check_N",
    "mesh_trials",
    "stability_trials",
    "lemma_trials",
    "a",
    "f",
    "u_left",
    "u_right",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSetting {
    Preset,
    Auto,
    Value(f64),
}

/// Fully resolved settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Problem<f64>,
    /// Set when `alpha = "auto"` found no admissible value; the problem then
    /// keeps a placeholder alpha and fails (a2).
    pub alpha_note: Option<String>,
    /// Problem came from a config file or `--problem` rather than the default.
    pub configured: bool,
    pub epsilon_grid: Option<Vec<Vec<f64>>>,
    pub n_intervals: usize,
    pub ns: Vec<usize>,
    pub mode: Option<ErrorMode>,
    pub samples: usize,
    pub seed: u64,
    pub allow_large_epsilon: bool,
    pub debug_dump: bool,
    pub growth_factor: f64,
    pub check_n: usize,
    pub mesh_trials: usize,
    pub stability_trials: usize,
    pub lemma_trials: usize,
    pub out: Option<PathBuf>,
}

/// Values given on the command line; they win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub problem: Option<String>,
    pub n_intervals: Option<usize>,
    pub ns: Option<Vec<usize>>,
    pub mode: Option<ErrorMode>,
    pub seed: Option<u64>,
    pub allow_large_epsilon: bool,
    pub debug_dump: bool,
    pub out: Option<PathBuf>,
}

fn line_of(text: &str, key: &str) -> Option<usize> {
    let want = format!("{key}=");
    text.lines()
        .position(|l| {
            let flat: String = l
                .chars()
                .filter(|c| !c.is_whitespace() && *c != '"')
                .collect();
            flat.starts_with(&want)
        })
        .map(|i| i + 1)
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        match line_of(self.text, key) {
            Some(l) => CliError::Usage(format!("config line {l}, key '{key}': {msg}")),
            None => CliError::Usage(format!("config key '{key}': {msg}")),
        }
    }

    fn float(&self, key: &str, v: &Value) -> Result<f64, CliError> {
        match v {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(self.err(key, "expected a number")),
        }
    }

    fn count(&self, key: &str, v: &Value) -> Result<usize, CliError> {
        match v {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            _ => Err(self.err(key, "expected a nonnegative integer")),
        }
    }

    fn floats(&self, key: &str, v: &Value) -> Result<Vec<f64>, CliError> {
        match v {
            Value::Array(a) => a.iter().map(|x| self.float(key, x)).collect(),
            other => Ok(vec![self.float(key, other)?]),
        }
    }

    fn bool(&self, key: &str, v: &Value) -> Result<bool, CliError> {
        v.as_bool()
            .ok_or_else(|| self.err(key, "expected true or false"))
    }

    fn string<'v>(&self, key: &str, v: &'v Value) -> Result<&'v str, CliError> {
        v.as_str().ok_or_else(|| self.err(key, "expected a string"))
    }

    fn expr(&self, key: &str, v: &Value) -> Result<Expr<f64>, CliError> {
        match v {
            Value::String(s) => Expr::parse(s).map_err(|e| self.err(key, e)),
            Value::Float(_) | Value::Integer(_) => Ok(Expr::constant(self.float(key, v)?)),
            _ => Err(self.err(key, "expected an expression string or a number")),
        }
    }

    fn index(&self, key: &str, s: &str, n: usize) -> Result<usize, CliError> {
        match s.parse::<usize>() {
            Ok(i) if (1..=n).contains(&i) => Ok(i - 1),
            _ => Err(self.err(key, format!("index must be in 1..={n}"))),
        }
    }
}

pub fn parse_mode(s: &str) -> Option<ErrorMode> {
    match s {
        "exact" => Some(ErrorMode::Exact),
        "two_mesh" | "two-mesh" => Some(ErrorMode::TwoMesh),
        _ => None,
    }
}

fn is_builtin(name: &str) -> bool {
    BUILTIN_NAMES.iter().any(|b| b.eq_ignore_ascii_case(name))
}

impl RunConfig {
    /// Reads the file (if any) and applies the command-line overrides.
    pub fn load(path: Option<&PathBuf>, ov: &Overrides) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::parse(&text, path.is_some(), ov)
    }

    pub fn parse(text: &str, from_file: bool, ov: &Overrides) -> Result<Self, CliError> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("config syntax error: {e}")))?;
        let cx = Ctx { text };
        for key in table.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(cx.err(key, "unknown key"));
            }
        }
        let get = |k: &str| table.get(k);

        let name = match (&ov.problem, get("problem")) {
            (Some(p), _) => p.clone(),
            (None, Some(v)) => cx.string("problem", v)?.to_string(),
            (None, None) => "P2".to_string(),
        };
        let epsilon = get("epsilon")
            .map(|v| cx.floats("epsilon", v))
            .transpose()?;

        let mut problem = if is_builtin(&name) {
            builtin_problem::<f64>(&name)?
        } else {
            let eps = epsilon.clone().ok_or_else(|| {
                cx.err(
                    "problem",
                    format!("'{name}' is not a builtin, so epsilon is required"),
                )
            })?;
            let n = eps.len();
            Problem::new(
                name.clone(),
                eps,
                CoefficientSpec::zeros(n, n),
                CoefficientSpec::zeros(n, 1),
                vec![0.0; n],
                vec![0.0; n],
                1.0,
            )?
        };
        let n = match &epsilon {
            Some(e) => e.len(),
            None => problem.n(),
        };
        if n != problem.n() {
            return Err(cx.err(
                "epsilon",
                format!("{} has n = {}", problem.name, problem.n()),
            ));
        }
        let mut modified = false;
        if let Some(e) = epsilon {
            problem = problem.with_epsilon(e)?;
        }

        if let Some(v) = get("a") {
            let rows = v
                .as_table()
                .ok_or_else(|| cx.err("a", "expected keys a.i.j"))?;
            for (i, row) in rows {
                let key = format!("a.{i}");
                let ii = cx.index(&key, i, n)?;
                let cols = row
                    .as_table()
                    .ok_or_else(|| cx.err(&key, "expected keys a.i.j"))?;
                for (j, entry) in cols {
                    let key = format!("a.{i}.{j}");
                    let jj = cx.index(&key, j, n)?;
                    problem.a.set(ii, jj, cx.expr(&key, entry)?);
                }
            }
            modified = true;
        }
        if let Some(v) = get("f") {
            let rows = v
                .as_table()
                .ok_or_else(|| cx.err("f", "expected keys f.i"))?;
            for (i, entry) in rows {
                let key = format!("f.{i}");
                let ii = cx.index(&key, i, n)?;
                problem.f.set(ii, 0, cx.expr(&key, entry)?);
            }
            modified = true;
        }
        for (key, target) in [
            ("u_left", &mut problem.u_left),
            ("u_right", &mut problem.u_right),
        ] {
            if let Some(v) = get(key) {
                let vals = cx.floats(key, v)?;
                if vals.len() != n {
                    return Err(cx.err(key, format!("expected {n} values")));
                }
                *target = vals;
                modified = true;
            }
        }
        if modified {
            // the closed form belongs to the unmodified preset
            problem.exact = None;
        }

        let samples = match get("samples") {
            Some(v) => cx.count("samples", v)?.max(2),
            None => DEFAULT_SAMPLES,
        };
        let alpha = match get("alpha") {
            None if is_builtin(&name) && !modified => AlphaSetting::Preset,
            None => AlphaSetting::Auto,
            Some(Value::String(s)) if s == "auto" => AlphaSetting::Auto,
            Some(v @ (Value::Float(_) | Value::Integer(_))) => {
                let a = cx.float("alpha", v)?;
                if !(a > 0.0 && a.is_finite()) {
                    return Err(cx.err("alpha", "must be positive"));
                }
                AlphaSetting::Value(a)
            }
            Some(_) => return Err(cx.err("alpha", "expected \"auto\" or a positive number")),
        };
        let mut alpha_note = None;
        match alpha {
            AlphaSetting::Preset => {}
            AlphaSetting::Value(a) => problem = problem.with_alpha(a),
            AlphaSetting::Auto => match suggest_alpha(&problem, samples) {
                Ok(a) => problem = problem.with_alpha(a),
                Err(e) => alpha_note = Some(e.to_string()),
            },
        }

        let epsilon_grid = match get("epsilon_grid") {
            None => None,
            Some(Value::Array(rows)) => {
                let grid = rows
                    .iter()
                    .map(|r| cx.floats("epsilon_grid", r))
                    .collect::<Result<Vec<_>, _>>()?;
                if grid.is_empty() || grid.iter().any(|e| e.len() != n) {
                    return Err(cx.err("epsilon_grid", format!("expected a list of {n}-vectors")));
                }
                Some(grid)
            }
            Some(_) => return Err(cx.err("epsilon_grid", "expected a list of vectors")),
        };

        let n_intervals = match (ov.n_intervals, get("N")) {
            (Some(v), _) => v,
            (None, Some(v)) => cx.count("N", v)?,
            (None, None) => 64,
        };
        let ns = match (&ov.ns, get("Ns")) {
            (Some(v), _) => v.clone(),
            (None, Some(Value::Array(a))) => a
                .iter()
                .map(|v| cx.count("Ns", v))
                .collect::<Result<_, _>>()?,
            (None, Some(_)) => return Err(cx.err("Ns", "expected a list of integers")),
            (None, None) => doubling_sequence(64, 5),
        };
        let mode = match (ov.mode, get("mode")) {
            (Some(m), _) => Some(m),
            (None, Some(v)) => Some(
                parse_mode(cx.string("mode", v)?)
                    .ok_or_else(|| cx.err("mode", "expected \"exact\" or \"two_mesh\""))?,
            ),
            (None, None) => None,
        };
        let seed = match (ov.seed, get("seed")) {
            (Some(s), _) => s,
            (None, Some(v)) => cx.count("seed", v)? as u64,
            (None, None) => DEFAULT_SEED,
        };
        let flag = |k: &str| get(k).map(|v| cx.bool(k, v)).transpose();
        let allow_large_epsilon =
            ov.allow_large_epsilon || flag("allow_large_epsilon")?.unwrap_or(false);
        let debug_dump = ov.debug_dump || flag("debug_dump")?.unwrap_or(false);
        let growth_factor = match get("growth_factor") {
            Some(v) => cx.float("growth_factor", v)?,
            None => 1.5,
        };
        let count_or = |k: &str, d: usize| {
            get(k)
                .map(|v| cx.count(k, v))
                .transpose()
                .map(|o| o.unwrap_or(d))
        };
        let out = match (&ov.out, get("out")) {
            (Some(o), _) => Some(o.clone()),
            (None, Some(v)) => Some(PathBuf::from(cx.string("out", v)?)),
            (None, None) => None,
        };

        Ok(RunConfig {
            problem,
            alpha_note,
            configured: from_file || ov.problem.is_some(),
            epsilon_grid,
            n_intervals,
            ns,
            mode,
            samples,
            seed,
            allow_large_epsilon,
            debug_dump,
            growth_factor,
            check_n: count_or("check_N", 16)?,
            mesh_trials: count_or("mesh_trials", 200)?,
            stability_trials: count_or("stability_trials", 1000)?,
            lemma_trials: count_or("lemma_trials", 1000)?,
            out,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(text, true, &Overrides::default())
    }

    #[test]
    fn defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.problem.name, "P2");
        assert_eq!(c.n_intervals, 64);
        assert_eq!(c.ns, vec![64, 128, 256, 512, 1024]);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.problem.alpha, 0.95);
    }

    #[test]
    fn unknown_key_names_line() {
        let err = parse("problem = \"P1\"\n\nbogus = 3\n").unwrap_err();
        assert!(matches!(&err, CliError::Usage(m) if m.contains("line 3") && m.contains("bogus")));
    }

    #[test]
    fn entry_override_drops_closed_form() {
        let c = parse("problem = \"P1\"\na.1.1 = \"2 + x\"\nalpha = 1.5").unwrap();
        assert!(c.problem.exact.is_none());
        assert_eq!(c.problem.a_at(0.5)[(0, 0)], 2.5);
        assert_eq!(c.problem.alpha, 1.5);
    }

    #[test]
    fn custom_problem_with_auto_alpha() {
        let c = parse(
            "problem = \"mine\"\nepsilon = [1e-6, 1e-3]\na.1.1 = 3\na.1.2 = -1\na.2.1 = -1\na.2.2 = 3\nf.1 = 1\nf.2 = \"x^2\"",
        )
        .unwrap();
        assert_eq!(c.problem.n(), 2);
        assert!((c.problem.alpha - 1.9).abs() < 1e-12);
    }

    #[test]
    fn bad_index_and_expression() {
        assert!(parse("problem = \"P1\"\na.2.1 = 1").is_err());
        assert!(parse("problem = \"P1\"\nf.1 = \"tan(x)\"").is_err());
        assert!(parse("mode = \"fast\"").is_err());
        assert!(parse("N = ").is_err());
    }

    #[test]
    fn overrides_win() {
        let ov = Overrides {
            n_intervals: Some(256),
            problem: Some("P1".into()),
            ..Overrides::default()
        };
        let c = RunConfig::parse("N = 32\nproblem = \"P3\"", true, &ov).unwrap();
        assert_eq!((c.n_intervals, c.problem.name.as_str()), (256, "P1"));
    }
}
