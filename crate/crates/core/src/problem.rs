//! The continuous problem `-E u'' + A(x) u = f` on `(0, 1)` with Dirichlet
//! data, its structural assumptions, and a registry of built-in presets.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{Basis, Expr};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Default number of sample points for checking the coefficient conditions.
pub const DEFAULT_SAMPLES: usize = 1001;

/// Safety factor applied by [`suggest_alpha`].
pub const ALPHA_SAFETY: f64 = 0.95;

/// Matrix (or column vector) of term-list entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec<T> {
    rows: usize,
    cols: usize,
    entries: Vec<Expr<T>>,
}

impl<T: Scalar> CoefficientSpec<T> {
    pub fn new(rows: usize, cols: usize, entries: Vec<Expr<T>>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} coefficient",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// n×n spec filled with zeros.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Expr::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Expr<T>>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged coefficient rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Column vector spec.
    pub fn column(entries: Vec<Expr<T>>) -> Self {
        Self {
            rows: entries.len(),
            cols: 1,
            entries,
        }
    }

    /// Spec whose entries are the given constants.
    pub fn constant(rows: &[Vec<f64>]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Expr::constant(T::lit(v))).collect())
                .collect(),
        )
        .expect("rectangular constant spec")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr<T> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr<T>) {
        self.entries[i * self.cols + j] = e;
    }

    pub fn eval(&self, x: T) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self.entry(i, j).eval(x);
            }
        }
        m
    }

    /// Evaluates a column spec as a plain vector.
    pub fn eval_column(&self, x: T) -> Vec<T> {
        (0..self.rows).map(|i| self.entry(i, 0).eval(x)).collect()
    }
}

/// Evaluates `A(x)` entrywise.
pub fn evaluate_matrix<T: Scalar>(spec: &CoefficientSpec<T>, x: T) -> DenseMatrix<T> {
    spec.eval(x)
}

/// Closed-form solutions attached to some presets.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactSolution<T> {
    /// `u(x) = c` for every x.
    Constant(Vec<T>),
    /// Scalar `-eps u'' + a u = f` with constant `a`, `f` and `u(0) = u(1) = 0`.
    ScalarReaction { a: T, f: T },
}

impl<T: Scalar> ExactSolution<T> {
    pub fn eval(&self, epsilon: &[T], x: T) -> Vec<T> {
        match self {
            ExactSolution::Constant(c) => c.clone(),
            ExactSolution::ScalarReaction { a, f } => {
                let m = (*a / epsilon[0]).sqrt();
                let one = T::one();
                let layers = ((-m * x).exp() + (-m * (one - x)).exp()) / (one + (-m).exp());
                vec![*f / *a * (one - layers)]
            }
        }
    }
}

/// The boundary value problem together with its stability constant alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem<T> {
    pub name: String,
    pub epsilon: Vec<T>,
    pub a: CoefficientSpec<T>,
    pub f: CoefficientSpec<T>,
    pub u_left: Vec<T>,
    pub u_right: Vec<T>,
    pub alpha: T,
    pub exact: Option<ExactSolution<T>>,
}

impl<T: Scalar> Problem<T> {
    /// Checks shapes and that alpha is a positive finite number; the
    /// structural conditions are left to [`validate_problem`].
    pub fn new(
        name: impl Into<String>,
        epsilon: Vec<T>,
        a: CoefficientSpec<T>,
        f: CoefficientSpec<T>,
        u_left: Vec<T>,
        u_right: Vec<T>,
        alpha: T,
    ) -> Result<Self> {
        let n = epsilon.len();
        if n == 0 {
            return Err(Error::InvalidProblem(
                "system size n must be positive".into(),
            ));
        }
        if a.rows() != n || a.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{} but n = {n}",
                a.rows(),
                a.cols()
            )));
        }
        if f.rows() != n || f.cols() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "f has {} components but n = {n}",
                f.rows()
            )));
        }
        if u_left.len() != n || u_right.len() != n {
            return Err(Error::DimensionMismatch(
                "boundary vectors must have n components".into(),
            ));
        }
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self {
            name: name.into(),
            epsilon,
            a,
            f,
            u_left,
            u_right,
            alpha,
            exact: None,
        })
    }

    pub fn with_exact(mut self, exact: ExactSolution<T>) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_epsilon(&self, epsilon: Vec<T>) -> Result<Self> {
        if epsilon.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "epsilon has {} entries but n = {}",
                epsilon.len(),
                self.n()
            )));
        }
        let mut p = self.clone();
        p.epsilon = epsilon;
        Ok(p)
    }

    pub fn with_alpha(&self, alpha: T) -> Self {
        let mut p = self.clone();
        p.alpha = alpha;
        p
    }

    pub fn n(&self) -> usize {
        self.epsilon.len()
    }

    pub fn a_at(&self, x: T) -> DenseMatrix<T> {
        self.a.eval(x)
    }

    pub fn f_at(&self, x: T) -> Vec<T> {
        self.f.eval_column(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    /// (a1) strict diagonal dominance of each row.
    DiagonalDominance,
    /// (a1) nonpositive off-diagonal entries.
    OffDiagonalSign,
    /// (a2) alpha strictly below the minimum row sum.
    RowSumBound,
    /// (a3) max sqrt(eps_i) <= sqrt(alpha) / 6.
    EpsilonBound,
    /// eps_1 < ... < eps_n.
    EpsilonOrdering,
    /// every eps_i in (0, 1].
    EpsilonRange,
}

impl Condition {
    pub fn label(&self) -> &'static str {
        match self {
            Condition::DiagonalDominance => "a1-dominance",
            Condition::OffDiagonalSign => "a1-sign",
            Condition::RowSumBound => "a2-alpha",
            Condition::EpsilonBound => "a3-epsilon",
            Condition::EpsilonOrdering => "epsilon-order",
            Condition::EpsilonRange => "epsilon-range",
        }
    }

    /// Whether the solver refuses to run when this condition fails.
    /// (a3) can be overridden by the caller.
    pub fn is_blocking(&self, allow_large_epsilon: bool) -> bool {
        !(allow_large_epsilon && *self == Condition::EpsilonBound)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Outcome of one condition: `margin > 0` (or `>= 0` for the non-strict
/// ones) means it holds; `worst_x` is the sample point with the smallest
/// margin when the condition depends on x.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck<T> {
    pub condition: Condition,
    pub passed: bool,
    pub margin: T,
    pub worst_x: Option<T>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport<T> {
    pub samples: usize,
    pub checks: Vec<ConditionCheck<T>>,
}

impl<T: Scalar> ValidationReport<T> {
    pub fn get(&self, c: Condition) -> Option<&ConditionCheck<T>> {
        self.checks.iter().find(|ch| ch.condition == c)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn blocking_failures(&self, allow_large_epsilon: bool) -> Vec<&ConditionCheck<T>> {
        self.checks
            .iter()
            .filter(|c| !c.passed && c.condition.is_blocking(allow_large_epsilon))
            .collect()
    }

    pub fn is_admissible(&self, allow_large_epsilon: bool) -> bool {
        self.blocking_failures(allow_large_epsilon).is_empty()
    }

    /// Converts the first blocking failure into an error.
    pub fn require_admissible(&self, allow_large_epsilon: bool) -> Result<()> {
        match self.blocking_failures(allow_large_epsilon).first() {
            None => Ok(()),
            Some(c) => Err(Error::ConditionViolated {
                condition: c.condition.label().to_string(),
                detail: c.detail.clone(),
            }),
        }
    }
}

/// Uniform grid of `samples` points on `[0, 1]`.
pub fn sample_grid<T: Scalar>(samples: usize) -> impl Iterator<Item = T> {
    let last = samples.saturating_sub(1).max(1);
    (0..samples).map(move |k| T::from_count(k) / T::from_count(last))
}

/// Checks (a1), (a2), (a3) and the epsilon ordering on a uniform sample
/// grid. Failures are reported, never raised.
pub fn validate_problem<T: Scalar>(p: &Problem<T>, samples: usize) -> ValidationReport<T> {
    let n = p.n();
    let samples = samples.max(2);

    let mut dom = (T::infinity(), T::zero(), 0usize);
    let mut sign = (T::neg_infinity(), T::zero(), (0usize, 0usize));
    let mut rowsum = (T::infinity(), T::zero(), 0usize);
    for x in sample_grid::<T>(samples) {
        let a = p.a_at(x);
        for i in 0..n {
            let mut off = T::zero();
            let mut sum = T::zero();
            for j in 0..n {
                let v = a[(i, j)];
                sum = sum + v;
                if j != i {
                    off = off + v.abs();
                    if v > sign.0 || sign.0 == T::neg_infinity() {
                        sign = (v, x, (i, j));
                    }
                }
            }
            let d = a[(i, i)] - off;
            if d < dom.0 {
                dom = (d, x, i);
            }
            if sum < rowsum.0 {
                rowsum = (sum, x, i);
            }
        }
    }

    let mut checks = Vec::with_capacity(6);
    checks.push(ConditionCheck {
        condition: Condition::DiagonalDominance,
        passed: dom.0 > T::zero(),
        margin: dom.0,
        worst_x: Some(dom.1),
        detail: format!(
            "min a_ii - sum|a_ij| = {:.6e} (row {}, x = {:.6})",
            dom.0.as_f64(),
            dom.2 + 1,
            dom.1.as_f64()
        ),
    });
    if n > 1 {
        checks.push(ConditionCheck {
            condition: Condition::OffDiagonalSign,
            passed: sign.0 <= T::zero(),
            margin: -sign.0,
            worst_x: Some(sign.1),
            detail: format!(
                "max off-diagonal a_{}{} = {:.6e} at x = {:.6}",
                (sign.2).0 + 1,
                (sign.2).1 + 1,
                sign.0.as_f64(),
                sign.1.as_f64()
            ),
        });
    } else {
        checks.push(ConditionCheck {
            condition: Condition::OffDiagonalSign,
            passed: true,
            margin: T::zero(),
            worst_x: None,
            detail: "no off-diagonal entries".into(),
        });
    }
    checks.push(ConditionCheck {
        condition: Condition::RowSumBound,
        passed: p.alpha > T::zero() && rowsum.0 - p.alpha > T::zero(),
        margin: rowsum.0 - p.alpha,
        worst_x: Some(rowsum.1),
        detail: format!(
            "alpha = {:.6e}, min row sum = {:.6e} (row {}, x = {:.6})",
            p.alpha.as_f64(),
            rowsum.0.as_f64(),
            rowsum.2 + 1,
            rowsum.1.as_f64()
        ),
    });

    let max_sqrt_eps = p
        .epsilon
        .iter()
        .fold(T::zero(), |m, &e| m.max(e.abs().sqrt()));
    let cap = p.alpha.sqrt() / T::lit(6.0);
    checks.push(ConditionCheck {
        condition: Condition::EpsilonBound,
        passed: max_sqrt_eps <= cap,
        margin: cap - max_sqrt_eps,
        worst_x: None,
        detail: format!(
            "max sqrt(eps) = {:.6e}, sqrt(alpha)/6 = {:.6e}",
            max_sqrt_eps.as_f64(),
            cap.as_f64()
        ),
    });

    let gap = p
        .epsilon
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(T::infinity(), T::min);
    let ordered = n == 1 || gap > T::zero();
    checks.push(ConditionCheck {
        condition: Condition::EpsilonOrdering,
        passed: ordered,
        margin: if n == 1 { T::zero() } else { gap },
        worst_x: None,
        detail: if ordered {
            "epsilon strictly increasing".into()
        } else {
            format!("epsilon not strictly increasing: {}", fmt_vec(&p.epsilon))
        },
    });

    let in_range = p
        .epsilon
        .iter()
        .all(|&e| e > T::zero() && e <= T::one() && e.is_finite());
    checks.push(ConditionCheck {
        condition: Condition::EpsilonRange,
        passed: in_range,
        margin: T::zero(),
        worst_x: None,
        detail: if in_range {
            "all eps in (0, 1]".into()
        } else {
            format!("eps outside (0, 1]: {}", fmt_vec(&p.epsilon))
        },
    });

    ValidationReport { samples, checks }
}

fn fmt_vec<T: Scalar>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(|e| format!("{:e}", e.as_f64())).collect();
    format!("({})", parts.join(", "))
}

/// 0.95 times the minimum sampled row sum of `A`.
pub fn suggest_alpha<T: Scalar>(p: &Problem<T>, samples: usize) -> Result<T> {
    let n = p.n();
    let mut min_sum = T::infinity();
    for x in sample_grid::<T>(samples.max(2)) {
        let a = p.a_at(x);
        for i in 0..n {
            let s = a.row(i).iter().copied().sum::<T>();
            min_sum = min_sum.min(s);
        }
    }
    if !(min_sum > T::zero()) {
        return Err(Error::NoValidAlpha(min_sum.as_f64()));
    }
    Ok(T::lit(ALPHA_SAFETY) * min_sum)
}

/// Names of the built-in presets, in registry order.
pub const BUILTIN_NAMES: [&str; 4] = ["PCONST", "P1", "P2", "P3"];

/// Built-in presets:
///
/// * `PCONST`: scalar, `A = 1`, `f = 1`, `u(0) = u(1) = 1`; exact solution `u = 1`.
/// * `P1`: scalar, `A = 1`, `f = 1`, zero boundary values; closed form known.
/// * `P2`: `A = [[2, -1], [-1, 2]]`, `f = (1, 1)`, zero boundary values.
/// * `P3`: `A = [[2 + x, -1], [-1, 2 + x^2]]`, `f = (e^x, 1 + x)`, zero boundary values.
pub fn builtin_problems<T: Scalar>() -> Vec<Problem<T>> {
    let alpha = T::lit(ALPHA_SAFETY);
    let zero1 = vec![T::zero()];
    let zero2 = vec![T::zero(); 2];

    let pconst = Problem::new(
        "PCONST",
        vec![T::lit(1e-4)],
        CoefficientSpec::constant(&[vec![1.0]]),
        CoefficientSpec::constant(&[vec![1.0]]),
        vec![T::one()],
        vec![T::one()],
        alpha,
    )
    .expect("valid preset")
    .with_exact(ExactSolution::Constant(vec![T::one()]));

    let p1 = Problem::new(
        "P1",
        vec![T::lit(1e-6)],
        CoefficientSpec::constant(&[vec![1.0]]),
        CoefficientSpec::constant(&[vec![1.0]]),
        zero1.clone(),
        zero1,
        alpha,
    )
    .expect("valid preset")
    .with_exact(ExactSolution::ScalarReaction {
        a: T::one(),
        f: T::one(),
    });

    let p2 = Problem::new(
        "P2",
        vec![T::lit(1e-6), T::lit(1e-4)],
        CoefficientSpec::constant(&[vec![2.0, -1.0], vec![-1.0, 2.0]]),
        CoefficientSpec::constant(&[vec![1.0], vec![1.0]]),
        zero2.clone(),
        zero2.clone(),
        alpha,
    )
    .expect("valid preset");

    let c = |v: f64| T::lit(v);
    let a3 = CoefficientSpec::from_rows(vec![
        vec![
            Expr::constant(c(2.0)).plus(T::one(), Basis::Power(1)),
            Expr::constant(c(-1.0)),
        ],
        vec![
            Expr::constant(c(-1.0)),
            Expr::constant(c(2.0)).plus(T::one(), Basis::Power(2)),
        ],
    ])
    .expect("square");
    let f3 = CoefficientSpec::column(vec![
        Expr::zero().plus(T::one(), Basis::Exp(1.0)),
        Expr::constant(T::one()).plus(T::one(), Basis::Power(1)),
    ]);
    let p3 = Problem::new(
        "P3",
        vec![T::lit(1e-6), T::lit(1e-4)],
        a3,
        f3,
        zero2.clone(),
        zero2,
        alpha,
    )
    .expect("valid preset");

    vec![pconst, p1, p2, p3]
}

pub fn builtin_problem<T: Scalar>(name: &str) -> Result<Problem<T>> {
    builtin_problems()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))
}
