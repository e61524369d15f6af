//! Test-only oracles, independent of the crate's solver path.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shishkin_rd::BlockTridiagonalSystem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian elimination with partial pivoting on a dense row-major matrix.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let m = a[i][k] / a[k][k];
            if m == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= m * a[k][j];
            }
            b[i] -= m * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Dense matrix and boundary-eliminated right-hand side assembled directly
/// from the blocks of `sys`.
pub fn dense_from_blocks(sys: &BlockTridiagonalSystem<f64>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = sys.n;
    let m = sys.diag.len();
    let size = m * n;
    let mut a = vec![vec![0.0; size]; size];
    let mut b = vec![0.0; size];
    for r in 0..m {
        for i in 0..n {
            let row = r * n + i;
            b[row] = sys.rhs[r][i];
            for k in 0..n {
                a[row][r * n + k] = sys.diag[r][(i, k)];
                if r > 0 {
                    a[row][(r - 1) * n + k] = sys.sub[r][(i, k)];
                } else {
                    b[row] -= sys.sub[r][(i, k)] * sys.left_bc[k];
                }
                if r + 1 < m {
                    a[row][(r + 1) * n + k] = sys.sup[r][(i, k)];
                } else {
                    b[row] -= sys.sup[r][(i, k)] * sys.right_bc[k];
                }
            }
        }
    }
    (a, b)
}

/// Sorted, pairwise-distinct epsilon vector with entries log-uniform in
/// `[lo, hi]` and consecutive ratios at least 1.01.
pub fn random_epsilon(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.random_range(lo.log10()..hi.log10())))
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if v.windows(2).all(|w| w[1] > 1.01 * w[0]) {
            return v;
        }
    }
}
