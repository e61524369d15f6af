//! Assembly of `L^N = -E delta^2 + A(x)` on a mesh as a block-tridiagonal
//! system, and application of `L^N` to arbitrary mesh functions.
//!
//! Row `j` (interior node `x_j`, `1 <= j <= N-1`) reads
//!
//! ```text
//! sub_j U_{j-1} + diag_j U_j + sup_j U_{j+1} = f(x_j)
//! ```
//!
//! with `sub_j = -2E / (h_j (h_j + h_{j+1}))`,
//! `sup_j = -2E / (h_{j+1} (h_j + h_{j+1}))` and
//! `diag_j = A(x_j) + 2E / (h_j h_{j+1})`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::mesh::ShishkinMesh;
use crate::problem::Problem;
use crate::scalar::Scalar;

/// Values of an n-vector function at the nodes `x_0 .. x_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFunction<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> MeshFunction<T> {
    pub fn zeros(nodes: usize, n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); nodes * n],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("ragged mesh function".into()));
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Samples `g` at every node.
    pub fn sample(points: &[T], n: usize, g: impl Fn(T) -> Vec<T>) -> Self {
        let mut out = Self::zeros(points.len(), n);
        for (j, &x) in points.iter().enumerate() {
            out.row_mut(j).copy_from_slice(&g(x));
        }
        out
    }

    pub fn nodes(&self) -> usize {
        self.data.len().checked_div(self.n).unwrap_or(0)
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.n.max(1))
    }

    /// Max over nodes and components of `|v|`.
    pub fn max_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// The assembled discrete operator. Block vectors are indexed by the
/// interior node: element `j - 1` belongs to `x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonalSystem<T> {
    pub n: usize,
    pub n_intervals: usize,
    pub points: Vec<T>,
    pub sub: Vec<DenseMatrix<T>>,
    pub diag: Vec<DenseMatrix<T>>,
    pub sup: Vec<DenseMatrix<T>>,
    /// `f(x_j)` before boundary elimination.
    pub rhs: Vec<Vec<T>>,
    pub left_bc: Vec<T>,
    pub right_bc: Vec<T>,
}

impl<T: Scalar> BlockTridiagonalSystem<T> {
    pub fn interior_rows(&self) -> usize {
        self.diag.len()
    }

    /// Right-hand side with `u(0)` and `u(1)` moved out of rows `1` and
    /// `N - 1`.
    pub fn eliminated_rhs(&self) -> Vec<Vec<T>> {
        let mut rhs = self.rhs.clone();
        let last = rhs.len() - 1;
        let left = self.sub[0].mul_vec(&self.left_bc);
        for (r, l) in rhs[0].iter_mut().zip(left) {
            *r = *r - l;
        }
        let right = self.sup[last].mul_vec(&self.right_bc);
        for (r, l) in rhs[last].iter_mut().zip(right) {
            *r = *r - l;
        }
        rhs
    }

    /// The full `(N-1) n` square matrix of the eliminated system.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.n;
        let m = self.interior_rows();
        let mut out = DenseMatrix::zeros(m * n, m * n);
        let mut put = |bi: usize, bj: usize, blk: &DenseMatrix<T>| {
            for i in 0..n {
                for j in 0..n {
                    out[(bi * n + i, bj * n + j)] = blk[(i, j)];
                }
            }
        };
        for r in 0..m {
            put(r, r, &self.diag[r]);
            if r > 0 {
                put(r, r - 1, &self.sub[r]);
            }
            if r + 1 < m {
                put(r, r + 1, &self.sup[r]);
            }
        }
        out
    }
}

/// Builds the block-tridiagonal system for `p` on `mesh`.
pub fn assemble<T: Scalar>(
    p: &Problem<T>,
    mesh: &ShishkinMesh<T>,
) -> Result<BlockTridiagonalSystem<T>> {
    let n = p.n();
    if mesh.params.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "mesh built for n = {} but problem has n = {n}",
            mesh.params.n()
        )));
    }
    let big_n = mesh.n_intervals();
    let two = T::lit(2.0);

    let rows: Vec<_> = (1..big_n)
        .into_par_iter()
        .map(|j| {
            let h_left = mesh.spacing(j);
            let h_right = mesh.spacing(j + 1);
            let span = h_left + h_right;
            let w_sub = two / (h_left * span);
            let w_sup = two / (h_right * span);
            let w_diag = two / (h_left * h_right);
            let x = mesh.points[j];
            let scaled = |w: T| -> Vec<T> { p.epsilon.iter().map(|&e| e * w).collect() };
            let sub = DenseMatrix::from_diagonal(&scaled(-w_sub));
            let sup = DenseMatrix::from_diagonal(&scaled(-w_sup));
            let diag = p.a_at(x).add(&DenseMatrix::from_diagonal(&scaled(w_diag)));
            (sub, diag, sup, p.f_at(x))
        })
        .collect();

    let mut sub = Vec::with_capacity(rows.len());
    let mut diag = Vec::with_capacity(rows.len());
    let mut sup = Vec::with_capacity(rows.len());
    let mut rhs = Vec::with_capacity(rows.len());
    for (l, d, u, f) in rows {
        sub.push(l);
        diag.push(d);
        sup.push(u);
        rhs.push(f);
    }
    Ok(BlockTridiagonalSystem {
        n,
        n_intervals: big_n,
        points: mesh.points.clone(),
        sub,
        diag,
        sup,
        rhs,
        left_bc: p.u_left.clone(),
        right_bc: p.u_right.clone(),
    })
}

/// `(L^N psi)(x_j)` for `j = 1 .. N-1`, using the boundary entries of `psi`.
pub fn apply_operator<T: Scalar>(
    sys: &BlockTridiagonalSystem<T>,
    psi: &MeshFunction<T>,
) -> Result<Vec<Vec<T>>> {
    if psi.nodes() != sys.n_intervals + 1 || psi.components() != sys.n {
        return Err(Error::DimensionMismatch(format!(
            "mesh function is {}x{}, system expects {}x{}",
            psi.nodes(),
            psi.components(),
            sys.n_intervals + 1,
            sys.n
        )));
    }
    Ok((1..sys.n_intervals)
        .map(|j| {
            let r = j - 1;
            let a = sys.sub[r].mul_vec(psi.row(j - 1));
            let b = sys.diag[r].mul_vec(psi.row(j));
            let c = sys.sup[r].mul_vec(psi.row(j + 1));
            a.iter()
                .zip(&b)
                .zip(&c)
                .map(|((&a, &b), &c)| a + b + c)
                .collect()
        })
        .collect())
}

/// `L^N` applied to samples of `exact`, minus `f`: the local truncation
/// error at each interior node.
pub fn truncation_residual<T: Scalar>(
    sys: &BlockTridiagonalSystem<T>,
    exact: impl Fn(T) -> Vec<T>,
) -> Result<Vec<Vec<T>>> {
    let psi = MeshFunction::sample(&sys.points, sys.n, exact);
    let lu = apply_operator(sys, &psi)?;
    Ok(lu
        .into_iter()
        .zip(&sys.rhs)
        .map(|(l, f)| l.iter().zip(f).map(|(&a, &b)| a - b).collect())
        .collect())
}
