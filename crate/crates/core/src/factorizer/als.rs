use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{residual_norm, FactorTables, SampleGrid};
use crate::error::{Error, Result};

/// Damping added to a singular normal-equations matrix.
pub const RIDGE: f64 = 1e-8;

/// Alternating least squares on the `3P × Q` matrix.
///
/// Each iteration solves for `U` with `B` fixed and then for `B` with `U`
/// fixed, then rebalances component norms (which leaves `U Bᵀ` unchanged).
pub fn fit_als(grid: &SampleGrid, d: usize, iters: usize, seed: u64) -> Result<FactorTables> {
    if d == 0 || iters == 0 {
        return Err(Error::InvalidArgument("fit_als needs D >= 1 and iters >= 1".into()));
    }
    let m = grid.matrix();
    let rows = 3 * grid.num_positions();
    let cols = grid.num_directions();
    let mt = transpose(&m, rows, cols);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b: Vec<f64> = (0..cols * d).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mut u = vec![0.0; rows * d];
    let mut history = Vec::with_capacity(iters);
    let mut deficient = false;

    for _ in 0..iters {
        deficient |= solve_factor(&m, rows, cols, &b, d, &mut u);
        deficient |= solve_factor(&mt, cols, rows, &u, d, &mut b);
        rebalance(&mut u, &mut b, d);
        history.push(residual_norm(&m, rows, cols, &u, &b, d));
    }
    let residual = *history.last().unwrap();
    let mut tables = FactorTables::from_matrices(d, &u, &b, residual);
    tables.history = history;
    tables.rank_deficient = deficient;
    Ok(tables)
}

fn transpose(m: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; m.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = m[r * cols + c];
        }
    }
    t
}

/// `out = A F (FᵀF)⁻¹` where `A` is `rows × inner` and `F` is `inner × d`.
/// Returns true when the Gram matrix had to be damped.
fn solve_factor(a: &[f64], rows: usize, inner: usize, f: &[f64], d: usize, out: &mut [f64]) -> bool {
    let mut gram = vec![0.0; d * d];
    for k in 0..inner {
        let fk = &f[k * d..(k + 1) * d];
        for i in 0..d {
            for j in 0..d {
                gram[i * d + j] += fk[i] * fk[j];
            }
        }
    }
    let (chol, damped) = match cholesky(&gram, d) {
        Some(l) => (l, false),
        None => {
            for i in 0..d {
                gram[i * d + i] += RIDGE;
            }
            (
                cholesky(&gram, d).expect("damped Gram matrix is positive definite"),
                true,
            )
        }
    };
    let mut rhs = vec![0.0; d];
    for r in 0..rows {
        rhs.fill(0.0);
        let ar = &a[r * inner..(r + 1) * inner];
        for (k, &x) in ar.iter().enumerate() {
            if x != 0.0 {
                for (acc, fv) in rhs.iter_mut().zip(&f[k * d..(k + 1) * d]) {
                    *acc += x * fv;
                }
            }
        }
        cholesky_solve(&chol, d, &mut rhs);
        out[r * d..(r + 1) * d].copy_from_slice(&rhs);
    }
    damped
}

/// Lower Cholesky factor, or `None` when a pivot is not safely positive.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i]).fold(0.0f64, f64::max);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 1e-13 * scale) || scale == 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, x: &mut [f64]) {
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}

fn rebalance(u: &mut [f64], b: &mut [f64], d: usize) {
    for i in 0..d {
        let nu: f64 = u.iter().skip(i).step_by(d).map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = b.iter().skip(i).step_by(d).map(|v| v * v).sum::<f64>().sqrt();
        if nu > 0.0 && nb > 0.0 {
            let s = (nb / nu).sqrt();
            u.iter_mut().skip(i).step_by(d).for_each(|v| *v *= s);
            b.iter_mut().skip(i).step_by(d).for_each(|v| *v /= s);
        }
    }
}
