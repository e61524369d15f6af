//! Finite difference solver for singularly perturbed linear
//! reaction-diffusion systems
//!
//! ```text
//! -E u''(x) + A(x) u(x) = f(x),  0 < x < 1,   u(0), u(1) given,
//! ```
//!
//! with `E = diag(eps_1, ..., eps_n)` and distinct `eps_1 < ... < eps_n`,
//! discretised by the classical three-point scheme on piecewise-uniform
//! Shishkin meshes. The method converges in the discrete maximum norm at
//! a rate of `N^-2 (ln N)^3` uniformly in all the `eps_i`; the
//! [`analysis`] module measures this empirically.
//!
//! Everything is generic over the scalar type ([`Scalar`], implemented for
//! `f32` and `f64`). The aliases at the crate root fix `f64`, which is
//! what the CLI and the verification suite use.
//!
//! ```
//! use shishkin_rd::{builtin_problem, solve_problem, SolveOptions};
//!
//! let p = builtin_problem::<f64>("P2").unwrap();
//! let sol = solve_problem(&p, 64, SolveOptions::default()).unwrap();
//! assert_eq!(sol.values.nodes(), 65);
//! assert!(sol.residual_norm < 1e-9);
//! ```

// negated comparisons below are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod discretization;
pub mod error;
pub mod expr;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod scalar;
pub mod solver;

pub use analysis::{
    bound_constant, convergence_series, epsilon_sweep, exact_error, records_from_errors,
    two_mesh_error, ConvergenceReport, ErrorMode, ErrorRecord, SweepOptions,
};
pub use discretization::{apply_operator, assemble, BlockTridiagonalSystem, MeshFunction};
pub use error::{Error, Result};
pub use expr::{Basis, Expr, Term};
pub use linalg::DenseMatrix;
pub use mesh::{
    build_mesh, compute_transitions, intersection_point, intersection_violations, layer_value,
    mesh_report, mesh_violations, LayerFunctions, MeshReport, ShishkinMesh, Side, TransitionParams,
};
pub use problem::{
    builtin_problem, builtin_problems, evaluate_matrix, suggest_alpha, validate_problem,
    CoefficientSpec, Condition, ExactSolution, Problem, ValidationReport,
};
pub use scalar::Scalar;
pub use solver::{
    check_discrete_max_principle, check_discrete_stability, solve_block_tridiagonal, solve_problem,
    CheckReport, DiscreteSolution, SolveOptions,
};

pub type Problem64 = Problem<f64>;
pub type Mesh64 = ShishkinMesh<f64>;
pub type System64 = BlockTridiagonalSystem<f64>;
pub type Solution64 = DiscreteSolution<f64>;
pub type Report64 = ConvergenceReport<f64>;
pub type Problem32 = Problem<f32>;
pub type Mesh32 = ShishkinMesh<f32>;
