//! Block Thomas elimination for the assembled system, the end-to-end solve,
//! and runtime checks of the discrete maximum principle and stability bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::{apply_operator, assemble, BlockTridiagonalSystem, MeshFunction};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::mesh::{build_mesh, compute_transitions, ShishkinMesh};
use crate::problem::{validate_problem, Problem, DEFAULT_SAMPLES};
use crate::scalar::Scalar;

/// Largest number of unknowns the dense checks will form.
pub const DENSE_LIMIT: usize = 4096;

/// Default seed for randomized checks.
pub const DEFAULT_SEED: u64 = 0x5_15_41_4B;

/// Pivot blocks with a larger infinity-norm condition number are rejected.
fn max_condition<T: Scalar>() -> T {
    T::lit(1e12).min(T::epsilon().recip())
}

fn inverse_guarded<T: Scalar>(m: &DenseMatrix<T>, row: usize) -> Result<DenseMatrix<T>> {
    let inv = m.inverse().map_err(|_| Error::SingularPivot {
        row,
        condition: f64::INFINITY,
    })?;
    let cond = m.norm_inf() * inv.norm_inf();
    if !cond.is_finite() || cond > max_condition::<T>() {
        return Err(Error::SingularPivot {
            row,
            condition: cond.as_f64(),
        });
    }
    Ok(inv)
}

/// Solves the eliminated system by block forward elimination and back
/// substitution, without pivoting across blocks. Returns the interior
/// values `U_1 .. U_{N-1}`.
pub fn solve_block_tridiagonal<T: Scalar>(sys: &BlockTridiagonalSystem<T>) -> Result<Vec<Vec<T>>> {
    let m = sys.interior_rows();
    if m == 0 {
        return Ok(Vec::new());
    }
    let rhs = sys.eliminated_rhs();
    let mut c_prime: Vec<DenseMatrix<T>> = Vec::with_capacity(m);
    let mut d_prime: Vec<Vec<T>> = Vec::with_capacity(m);
    for r in 0..m {
        let (pivot, d) = if r == 0 {
            (sys.diag[0].clone(), rhs[0].clone())
        } else {
            let piv = sys.diag[r].sub(&sys.sub[r].mul_mat(&c_prime[r - 1]));
            let carry = sys.sub[r].mul_vec(&d_prime[r - 1]);
            let d = rhs[r].iter().zip(carry).map(|(&a, b)| a - b).collect();
            (piv, d)
        };
        let inv = inverse_guarded(&pivot, r + 1)?;
        c_prime.push(inv.mul_mat(&sys.sup[r]));
        d_prime.push(inv.mul_vec(&d));
    }
    let mut u = vec![Vec::new(); m];
    u[m - 1] = d_prime[m - 1].clone();
    for r in (0..m - 1).rev() {
        let corr = c_prime[r].mul_vec(&u[r + 1]);
        u[r] = d_prime[r].iter().zip(corr).map(|(&a, b)| a - b).collect();
    }
    Ok(u)
}

/// Computed values at every node of the mesh, boundary included.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution<T> {
    pub mesh: ShishkinMesh<T>,
    pub values: MeshFunction<T>,
    /// Max over interior nodes and components of `|L^N U - f|`.
    pub residual_norm: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub samples: usize,
    pub allow_large_epsilon: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            allow_large_epsilon: false,
        }
    }
}

/// Solves on a given mesh without validating the problem.
pub fn solve_on_mesh<T: Scalar>(
    p: &Problem<T>,
    mesh: &ShishkinMesh<T>,
) -> Result<DiscreteSolution<T>> {
    let sys = assemble(p, mesh)?;
    let interior = solve_block_tridiagonal(&sys)?;
    let n = p.n();
    let mut values = MeshFunction::zeros(mesh.n_intervals() + 1, n);
    values.row_mut(0).copy_from_slice(&p.u_left);
    values
        .row_mut(mesh.n_intervals())
        .copy_from_slice(&p.u_right);
    for (r, u) in interior.iter().enumerate() {
        values.row_mut(r + 1).copy_from_slice(u);
    }
    let lu = apply_operator(&sys, &values)?;
    let residual_norm = lu
        .iter()
        .zip(&sys.rhs)
        .flat_map(|(l, f)| l.iter().zip(f).map(|(&a, &b)| (a - b).abs()))
        .fold(T::zero(), T::max);
    Ok(DiscreteSolution {
        mesh: mesh.clone(),
        values,
        residual_norm,
    })
}

/// Validates `p`, builds the Shishkin mesh for `N` intervals and solves.
pub fn solve_problem<T: Scalar>(
    p: &Problem<T>,
    n_intervals: usize,
    opts: SolveOptions,
) -> Result<DiscreteSolution<T>> {
    validate_problem(p, opts.samples).require_admissible(opts.allow_large_epsilon)?;
    let params = compute_transitions(&p.epsilon, p.alpha, n_intervals)?;
    solve_on_mesh(p, &build_mesh(&params))
}

/// Outcome of a runtime check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub trials: usize,
    pub violations: usize,
    pub detail: String,
}

fn guard_size<T: Scalar>(sys: &BlockTridiagonalSystem<T>) -> Result<()> {
    let size = sys.interior_rows() * sys.n;
    if size > DENSE_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

/// Discrete maximum principle as inverse-nonnegativity of the system
/// matrix: passes iff `min(inv) >= -1e-10 * max(inv)`.
pub fn check_discrete_max_principle<T: Scalar>(
    sys: &BlockTridiagonalSystem<T>,
) -> Result<CheckReport> {
    guard_size(sys)?;
    let dense = sys.to_dense();
    let inv = match dense.inverse() {
        Ok(inv) => inv,
        Err(_) => {
            return Ok(CheckReport {
                name: "max-principle".into(),
                passed: false,
                trials: 1,
                violations: 1,
                detail: "system matrix is singular".into(),
            })
        }
    };
    let (lo, hi) = (inv.min_entry(), inv.max_entry());
    let passed = lo >= -T::lit(1e-10) * hi;
    let negatives = inv
        .as_slice()
        .iter()
        .filter(|&&v| v < -T::lit(1e-10) * hi)
        .count();
    Ok(CheckReport {
        name: "max-principle".into(),
        passed,
        trials: 1,
        violations: negatives,
        detail: format!(
            "inverse entries in [{:.6e}, {:.6e}] over {} unknowns",
            lo.as_f64(),
            hi.as_f64(),
            dense.rows()
        ),
    })
}

/// Largest ratio `||Psi(x_j)|| / max{||Psi(0)||, ||Psi(1)||, ||L^N Psi|| / alpha}`
/// over all nodes, or zero for the zero function.
pub fn stability_ratio<T: Scalar>(
    sys: &BlockTridiagonalSystem<T>,
    psi: &MeshFunction<T>,
    alpha: T,
) -> Result<T> {
    let lpsi = apply_operator(sys, psi)?;
    let inf = |v: &[T]| v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let op = lpsi.iter().fold(T::zero(), |m, r| m.max(inf(r)));
    let bound = inf(psi.row(0))
        .max(inf(psi.row(sys.n_intervals)))
        .max(op / alpha);
    let lhs = psi.max_norm();
    if lhs == T::zero() {
        return Ok(T::zero());
    }
    Ok(lhs / bound)
}

/// Random-trial check of `||Psi(x_j)|| <= max{||Psi(0)||, ||Psi(1)||, ||L^N Psi|| / alpha}`.
///
/// Even trials draw `Psi` directly; odd trials draw boundary values and a
/// right-hand side `g` and take `Psi` as the discrete solution of
/// `L^N Psi = g`, which is where the bound is nearly tight.
pub fn check_discrete_stability<T: Scalar>(
    sys: &BlockTridiagonalSystem<T>,
    trials: usize,
    alpha: T,
    seed: u64,
) -> Result<CheckReport> {
    guard_size(sys)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.n;
    let nodes = sys.n_intervals + 1;
    let tol = T::one() + T::lit(1e-10);
    let mut worst = T::zero();
    let mut violations = 0;
    for t in 0..trials {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<T> {
            let scale: f64 = 10f64.powf(rng.random_range(-2.0..2.0));
            (0..n)
                .map(|_| T::lit(scale * rng.random_range(-1.0..1.0)))
                .collect()
        };
        let psi = if t % 2 == 0 {
            let rows: Vec<Vec<T>> = (0..nodes).map(|_| draw(&mut rng)).collect();
            MeshFunction::from_rows(&rows)?
        } else {
            let left = draw(&mut rng);
            let right = draw(&mut rng);
            let g: Vec<Vec<T>> = (1..nodes - 1).map(|_| draw(&mut rng)).collect();
            let mut s = sys.clone();
            s.left_bc = left.clone();
            s.right_bc = right.clone();
            s.rhs = g;
            let interior = solve_block_tridiagonal(&s)?;
            let mut rows = Vec::with_capacity(nodes);
            rows.push(left);
            rows.extend(interior);
            rows.push(right);
            MeshFunction::from_rows(&rows)?
        };
        let ratio = stability_ratio(sys, &psi, alpha)?;
        worst = worst.max(ratio);
        if ratio > tol {
            violations += 1;
        }
    }
    Ok(CheckReport {
        name: "stability".into(),
        passed: violations == 0,
        trials,
        violations,
        detail: format!("worst ratio ||Psi|| / bound = {:.6}", worst.as_f64()),
    })
}
