//! Piecewise-uniform Shishkin meshes for `n` distinct perturbation
//! parameters, and the layer functions that motivate them.
//!
//! The unit interval is split into `2n + 1` pieces by the transition points
//! `tau_1 < ... < tau_n <= 1/4` and their mirrors `1 - tau_k`. Each piece
//! carries a uniform sub-mesh; the middle piece holds `N/2` intervals and
//! every step outwards halves the count, except that the two outermost
//! pieces share the remainder equally.
//!
//! Indices in this module are zero-based: component `i` refers to
//! `epsilon[i]`, transition `k` to `tau[k]`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Transition points `tau_k` and the mesh class vector `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionParams<T> {
    pub n_intervals: usize,
    pub alpha: T,
    pub epsilon: Vec<T>,
    pub tau: Vec<T>,
    /// `b[k]` is true when `tau[k]` came from the `sqrt(eps)` ln N branch.
    pub b: Vec<bool>,
}

impl<T: Scalar> TransitionParams<T> {
    pub fn n(&self) -> usize {
        self.tau.len()
    }

    /// All transitions took the halving/cap branch: the mesh is uniform.
    pub fn is_uniform_class(&self) -> bool {
        self.b.iter().all(|&b| !b)
    }

    /// Same transition points with every interval count doubled. Every node
    /// of the original mesh is a node of the refined one.
    pub fn nested_refinement(&self) -> Self {
        Self {
            n_intervals: self.n_intervals * 2,
            ..self.clone()
        }
    }

    /// Interval counts of the `2n + 1` pieces, left to right.
    pub fn interval_counts(&self) -> Vec<usize> {
        interval_counts(self.n(), self.n_intervals)
    }

    /// Piece endpoints `0, tau_1, ..., tau_n, 1 - tau_n, ..., 1 - tau_1, 1`.
    pub fn breakpoints(&self) -> Vec<T> {
        let one = T::one();
        let mut out = Vec::with_capacity(2 * self.n() + 2);
        out.push(T::zero());
        out.extend(self.tau.iter().copied());
        out.extend(self.tau.iter().rev().map(|&t| one - t));
        out.push(one);
        out
    }
}

/// `p` in `N = 2^(n + p + 1)` when `N` is admissible (`p >= 1`).
pub fn refinement_level(n: usize, n_intervals: usize) -> Option<u32> {
    if n == 0 || !n_intervals.is_power_of_two() {
        return None;
    }
    let log = n_intervals.trailing_zeros() as usize;
    if log >= n + 2 {
        Some((log - n - 1) as u32)
    } else {
        None
    }
}

/// Smallest admissible `N` for a system of size `n`.
pub fn min_intervals(n: usize) -> usize {
    1usize << (n + 2)
}

pub fn interval_counts(n: usize, n_intervals: usize) -> Vec<usize> {
    let mut left = Vec::with_capacity(n);
    left.push(n_intervals >> (n + 1));
    for k in 1..n {
        // piece (tau_k, tau_{k+1}] with one-based k
        left.push(n_intervals >> (n - k + 2));
    }
    let mut counts = left.clone();
    counts.push(n_intervals / 2);
    counts.extend(left.into_iter().rev());
    counts
}

fn check_epsilon<T: Scalar>(epsilon: &[T]) -> Result<()> {
    if epsilon.is_empty() {
        return Err(Error::BadEpsilon("empty".into()));
    }
    if epsilon
        .iter()
        .any(|&e| !(e > T::zero()) || e > T::one() || !e.is_finite())
    {
        return Err(Error::BadEpsilon(format!("{epsilon:?}")));
    }
    if epsilon.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::BadEpsilon(format!("{epsilon:?}")));
    }
    Ok(())
}

/// Transition points for `N` intervals:
/// `tau_n = min{1/4, 2 sqrt(eps_n/alpha) ln N}` and, going down,
/// `tau_k = min{tau_{k+1}/2, 2 sqrt(eps_k/alpha) ln N}`. A tie takes the
/// first branch.
pub fn compute_transitions<T: Scalar>(
    epsilon: &[T],
    alpha: T,
    n_intervals: usize,
) -> Result<TransitionParams<T>> {
    check_epsilon(epsilon)?;
    let n = epsilon.len();
    if refinement_level(n, n_intervals).is_none() {
        return Err(Error::InadmissibleN { n_intervals, n });
    }
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::OutOfRange(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let ln_n = T::from_count(n_intervals).ln();
    let two = T::lit(2.0);
    let mut tau = vec![T::zero(); n];
    let mut b = vec![false; n];
    let mut cap = T::lit(0.25);
    for k in (0..n).rev() {
        let layer = two * (epsilon[k] / alpha).sqrt() * ln_n;
        if cap <= layer {
            tau[k] = cap;
        } else {
            tau[k] = layer;
            b[k] = true;
        }
        cap = tau[k] / two;
    }
    Ok(TransitionParams {
        n_intervals,
        alpha,
        epsilon: epsilon.to_vec(),
        tau,
        b,
    })
}

/// Mesh points `x_0 = 0 < ... < x_N = 1` with their construction data.
#[derive(Debug, Clone, PartialEq)]
pub struct ShishkinMesh<T> {
    pub points: Vec<T>,
    pub params: TransitionParams<T>,
    pub interval_counts: Vec<usize>,
}

impl<T: Scalar> ShishkinMesh<T> {
    pub fn n_intervals(&self) -> usize {
        self.points.len() - 1
    }

    /// `h_j = x_j - x_{j-1}` for `1 <= j <= N`.
    pub fn spacing(&self, j: usize) -> T {
        self.points[j] - self.points[j - 1]
    }

    /// Node index of each piece endpoint (see [`TransitionParams::breakpoints`]).
    pub fn breakpoint_indices(&self) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.interval_counts.len() + 1);
        let mut acc = 0;
        idx.push(0);
        for &c in &self.interval_counts {
            acc += c;
            idx.push(acc);
        }
        idx
    }

    /// Same transition points, doubled interval counts.
    pub fn nested_refinement(&self) -> Self {
        build_mesh(&self.params.nested_refinement())
    }
}

/// Places the uniform sub-meshes. Each piece starts at its left endpoint,
/// steps uniformly, and its last node is pinned to the right endpoint.
pub fn build_mesh<T: Scalar>(params: &TransitionParams<T>) -> ShishkinMesh<T> {
    let counts = params.interval_counts();
    let ends = params.breakpoints();
    let mut points = Vec::with_capacity(params.n_intervals + 1);
    points.push(T::zero());
    for (piece, &count) in counts.iter().enumerate() {
        let (a, b) = (ends[piece], ends[piece + 1]);
        let step = (b - a) / T::from_count(count);
        for i in 1..count {
            points.push(a + T::from_count(i) * step);
        }
        points.push(b);
    }
    debug_assert_eq!(points.len(), params.n_intervals + 1);
    ShishkinMesh {
        points,
        params: params.clone(),
        interval_counts: counts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Both,
}

/// `B^l_i(x) = exp(-x sqrt(alpha/eps_i))`, `B^r_i(x) = B^l_i(1 - x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerFunctions<T> {
    pub alpha: T,
    pub epsilon: Vec<T>,
}

impl<T: Scalar> LayerFunctions<T> {
    pub fn new(alpha: T, epsilon: Vec<T>) -> Self {
        Self { alpha, epsilon }
    }

    pub fn left(&self, i: usize, x: T) -> T {
        (-x * (self.alpha / self.epsilon[i]).sqrt()).exp()
    }

    pub fn right(&self, i: usize, x: T) -> T {
        self.left(i, T::one() - x)
    }

    pub fn value(&self, side: Side, i: usize, x: T) -> T {
        match side {
            Side::Left => self.left(i, x),
            Side::Right => self.right(i, x),
            Side::Both => self.left(i, x) + self.right(i, x),
        }
    }
}

pub fn layer_value<T: Scalar>(lf: &LayerFunctions<T>, side: Side, i: usize, x: T) -> T {
    lf.value(side, i, x)
}

/// The unique `x` where `B^l_i(x) / eps_i^s = B^l_j(x) / eps_j^s`:
/// `2s ln(sqrt(eps_j)/sqrt(eps_i)) / (sqrt(alpha) (1/sqrt(eps_i) - 1/sqrt(eps_j)))`.
pub fn intersection_point<T: Scalar>(eps_i: T, eps_j: T, alpha: T, s: T) -> Result<T> {
    if !(eps_i > T::zero() && eps_i < eps_j) {
        return Err(Error::OutOfRange(format!(
            "intersection point needs 0 < eps_i < eps_j, got {eps_i} and {eps_j}"
        )));
    }
    if !(s > T::zero() && s <= T::lit(1.5)) {
        return Err(Error::OutOfRange(format!(
            "s must lie in (0, 3/2], got {s}"
        )));
    }
    if !(alpha > T::zero()) {
        return Err(Error::OutOfRange(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let half = T::lit(0.5);
    let log_ratio = half * (eps_j.ln() - eps_i.ln());
    let denom = alpha.sqrt() * (eps_i.sqrt().recip() - eps_j.sqrt().recip());
    Ok(T::lit(2.0) * s * log_ratio / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece<T> {
    pub left: T,
    pub right: T,
    pub count: usize,
    pub spacing: T,
}

/// Spacings on either side of `tau_k` with the closed forms they should
/// match.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSpacing<T> {
    pub k: usize,
    pub tau: T,
    pub node: usize,
    /// Spacing just left of `tau_k`.
    pub h: T,
    /// Spacing just right of `tau_k`.
    pub big_h: T,
    pub h_formula: T,
    pub big_h_formula: T,
}

impl<T: Scalar> TransitionSpacing<T> {
    /// Largest relative deviation of the measured spacings from the formulas.
    pub fn max_relative_residual(&self) -> T {
        let rel = |a: T, b: T| (a - b).abs() / b.abs();
        rel(self.h, self.h_formula).max(rel(self.big_h, self.big_h_formula))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshReport<T> {
    pub pieces: Vec<Piece<T>>,
    /// Nodes where the spacing changes, as `(j, x_j)`.
    pub jump_points: Vec<(usize, T)>,
    pub transitions: Vec<TransitionSpacing<T>>,
    pub min_spacing: T,
    pub max_spacing: T,
}

impl<T: Scalar> MeshReport<T> {
    pub fn is_uniform(&self) -> bool {
        self.jump_points.is_empty()
    }
}

const JUMP_RTOL: f64 = 1e-12;

/// Per-piece spacings, the set of nodes where the spacing changes, and the
/// spacings around each `tau_k` checked against
/// `H_k = 2^(n-k+2) (tau_{k+1} - tau_k) / N` (with `tau_{n+1} = 1/2`) and
/// `h_k = 2^(n-k+3) (tau_k - tau_{k-1}) / N` for `k >= 2`,
/// `h_1 = 2^(n+1) tau_1 / N` (one-based `k`).
pub fn mesh_report<T: Scalar>(mesh: &ShishkinMesh<T>) -> MeshReport<T> {
    let params = &mesh.params;
    let n = params.n();
    let big_n = T::from_count(mesh.n_intervals());
    let ends = params.breakpoints();
    let idx = mesh.breakpoint_indices();

    let pieces: Vec<Piece<T>> = mesh
        .interval_counts
        .iter()
        .enumerate()
        .map(|(p, &count)| Piece {
            left: ends[p],
            right: ends[p + 1],
            count,
            spacing: mesh.spacing(idx[p] + 1),
        })
        .collect();

    let mut jump_points = Vec::new();
    let mut min_spacing = T::infinity();
    let mut max_spacing = T::zero();
    for j in 1..=mesh.n_intervals() {
        let h = mesh.spacing(j);
        min_spacing = min_spacing.min(h);
        max_spacing = max_spacing.max(h);
        if j < mesh.n_intervals() {
            let big_h = mesh.spacing(j + 1);
            // spacings inherit rounding of order ulp(x_j) from the subtraction
            let tol =
                T::lit(JUMP_RTOL) * big_h.max(h) + T::lit(4.0) * T::epsilon() * mesh.points[j];
            if (big_h - h).abs() > tol {
                jump_points.push((j, mesh.points[j]));
            }
        }
    }

    let half = T::lit(0.5);
    let transitions = (0..n)
        .map(|k| {
            let node = idx[k + 1];
            let next = if k + 1 < n { params.tau[k + 1] } else { half };
            let prev = if k == 0 { T::zero() } else { params.tau[k - 1] };
            // one-based index kk = k + 1
            let h_factor = if k == 0 {
                T::from_count(1usize << (n + 1))
            } else {
                T::from_count(1usize << (n - k + 2))
            };
            let big_h_factor = T::from_count(1usize << (n - k + 1));
            TransitionSpacing {
                k,
                tau: params.tau[k],
                node,
                h: mesh.spacing(node),
                big_h: mesh.spacing(node + 1),
                h_formula: h_factor * (params.tau[k] - prev) / big_n,
                big_h_formula: big_h_factor * (next - params.tau[k]) / big_n,
            }
        })
        .collect();

    MeshReport {
        pieces,
        jump_points,
        transitions,
        min_spacing,
        max_spacing,
    }
}

/// Structural invariants of a built mesh, as a list of human-readable
/// violations (empty when all hold): counts sum to `N`, the `tau` chain is
/// increasing and capped at 1/4, the points are strictly increasing from
/// 0 to 1, `b = 0` gives a uniform mesh, `N^2 B_k(tau_k) = 1` whenever
/// `b_k = 1`, the mesh is symmetric about 1/2, and the spacings around each
/// transition match their closed forms.
pub fn mesh_violations<T: Scalar>(mesh: &ShishkinMesh<T>) -> Vec<String> {
    let params = &mesh.params;
    let n = params.n();
    let big_n = mesh.n_intervals();
    let mut out = Vec::new();

    let total: usize = mesh.interval_counts.iter().sum();
    if total != big_n {
        out.push(format!("interval counts sum to {total}, expected {big_n}"));
    }
    let chain = params.tau[0] > T::zero()
        && params.tau.windows(2).all(|w| w[0] < w[1])
        && params.tau[n - 1] <= T::lit(0.25);
    if !chain {
        out.push("tau chain is not increasing in (0, 1/4]".into());
    }
    if !mesh.points.windows(2).all(|w| w[0] < w[1])
        || mesh.points[0] != T::zero()
        || mesh.points[big_n] != T::one()
    {
        out.push("points are not strictly increasing from 0 to 1".into());
    }

    let report = mesh_report(mesh);
    if params.is_uniform_class()
        && report.max_spacing - report.min_spacing > T::lit(2.0) * T::epsilon()
    {
        out.push("b = 0 but spacing is not uniform".into());
    }
    let lf = LayerFunctions::new(params.alpha, params.epsilon.clone());
    let n2 = T::from_count(big_n * big_n);
    for k in 0..n {
        if params.b[k] {
            let g = lf.left(k, params.tau[k]) * n2;
            if (g - T::one()).abs() >= T::lit(1e-10) {
                out.push(format!(
                    "N^2 B_{}(tau_{}) = {:e}, expected 1",
                    k + 1,
                    k + 1,
                    g
                ));
            }
        }
    }
    let sym = (0..=big_n)
        .map(|j| (mesh.points[j] + mesh.points[big_n - j] - T::one()).abs())
        .fold(T::zero(), T::max);
    if sym >= T::lit(1e-14) {
        out.push(format!("asymmetry {sym:e}"));
    }
    for t in &report.transitions {
        let r = t.max_relative_residual();
        if r >= T::lit(1e-10) {
            out.push(format!(
                "spacing at tau_{} off its closed form by {:e}",
                t.k + 1,
                r
            ));
        }
    }
    out
}

/// Checks the intersection points of the left layer functions for one
/// epsilon tuple: each `x_ij` solves `B_i(x)/eps_i^s = B_j(x)/eps_j^s` to
/// 1e-12 relative, increases in `i` and in `j`, stays below
/// `2s sqrt(eps_j/alpha)` and, when `eps_n <= alpha/36`, below 1/2.
/// Returns the number of points checked and the violations.
pub fn intersection_violations<T: Scalar>(
    epsilon: &[T],
    alpha: T,
    s: T,
) -> Result<(usize, Vec<String>)> {
    let n = epsilon.len();
    let lf = LayerFunctions::new(alpha, epsilon.to_vec());
    let mut x = vec![vec![T::zero(); n]; n];
    for j in 1..n {
        for i in 0..j {
            x[i][j] = intersection_point(epsilon[i], epsilon[j], alpha, s)?;
        }
    }
    let small = epsilon[n - 1] <= alpha / T::lit(36.0);
    let mut checks = 0;
    let mut out = Vec::new();
    for j in 1..n {
        for i in 0..j {
            let xij = x[i][j];
            checks += 1;
            let lhs = lf.left(i, xij) / epsilon[i].powf(s);
            let rhs = lf.left(j, xij) / epsilon[j].powf(s);
            let res = ((lhs - rhs) / rhs).abs();
            let tag = format!("x_({},{}) s={}", i + 1, j + 1, s);
            if !(res < T::lit(1e-12)) {
                out.push(format!("{tag}: residual {res:e}"));
            }
            if i + 1 < j && !(xij < x[i + 1][j]) {
                out.push(format!("{tag}: not increasing in i"));
            }
            if j + 1 < n && !(xij < x[i][j + 1]) {
                out.push(format!("{tag}: not increasing in j"));
            }
            if !(xij < T::lit(2.0) * s * (epsilon[j] / alpha).sqrt()) {
                out.push(format!("{tag}: exceeds 2s sqrt(eps_j/alpha)"));
            }
            if small && !(xij < T::lit(0.5)) {
                out.push(format!("{tag}: not below 1/2"));
            }
        }
    }
    Ok((checks, out))
}
