use super::{residual_norm, FactorTables, SampleGrid};
use crate::error::{Error, Result};

/// Largest `3PQ` accepted by the dense oracle.
pub const SVD_SIZE_LIMIT: usize = 4_000_000;

/// Thin SVD by one-sided Jacobi rotations on the columns of a `rows × cols`
/// row-major matrix with `cols ≤ rows`. Returns `(W, V)` with `A V = W`,
/// columns of `W` mutually orthogonal, `V` orthogonal, both column-major,
/// ordered by decreasing column norm of `W`.
fn jacobi(a: &[f64], rows: usize, cols: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut w: Vec<Vec<f64>> = (0..cols)
        .map(|c| (0..rows).map(|r| a[r * cols + c]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|c| {
            let mut e = vec![0.0; cols];
            e[c] = 1.0;
            e
        })
        .collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                let gamma = dot(&w[i], &w[j]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (wi, wj) = pair_mut(&mut w, i, j);
                rotate(wi, wj, c, s);
                let (vi, vj) = pair_mut(&mut v, i, j);
                rotate(vi, vj, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));
    let w = order.iter().map(|&i| w[i].clone()).collect();
    let v = order.iter().map(|&i| v[i].clone()).collect();
    (w, v)
}

fn pair_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    let (lo, hi) = v.split_at_mut(j);
    (&mut lo[i], &mut hi[0])
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

fn guard(grid: &SampleGrid) -> Result<()> {
    let entries = 3 * grid.num_positions() * grid.num_directions();
    if entries > SVD_SIZE_LIMIT {
        return Err(Error::SizeGuardExceeded {
            entries,
            limit: SVD_SIZE_LIMIT,
        });
    }
    Ok(())
}

/// Left factor `L` (`rows × r`), right factor `R` (`cols × r`) with
/// `M = L Rᵀ` and `r = min(rows, cols)`, plus singular values.
fn decompose(grid: &SampleGrid) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let m = grid.matrix();
    let rows = 3 * grid.num_positions();
    let cols = grid.num_directions();
    if cols <= rows {
        // M V = W  =>  M = W Vᵀ.
        let (w, v) = jacobi(&m, rows, cols);
        let s = w.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
        (w, v, s)
    } else {
        let mut t = vec![0.0; m.len()];
        for r in 0..rows {
            for c in 0..cols {
                t[c * rows + r] = m[r * cols + c];
            }
        }
        // Mᵀ V = W  =>  M = V Wᵀ.
        let (w, v) = jacobi(&t, cols, rows);
        let s = w.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
        (v, w, s)
    }
}

/// Singular values of the grid matrix in decreasing order.
pub fn singular_values(grid: &SampleGrid) -> Result<Vec<f64>> {
    guard(grid)?;
    Ok(decompose(grid).2)
}

/// Number of singular values above `rel_tol · σ₁`.
pub fn numerical_rank(values: &[f64], rel_tol: f64) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    values.iter().filter(|s| **s > rel_tol * top).count()
}

/// Optimal rank-`D` approximation via dense SVD. The reported residual is
/// measured directly from the reconstruction.
pub fn fit_svd_oracle(grid: &SampleGrid, d: usize) -> Result<FactorTables> {
    if d == 0 {
        return Err(Error::InvalidArgument("D must be at least 1".into()));
    }
    guard(grid)?;
    let rows = 3 * grid.num_positions();
    let cols = grid.num_directions();
    let (left, right, s) = decompose(grid);
    let mut u = vec![0.0; rows * d];
    let mut b = vec![0.0; cols * d];
    for i in 0..d.min(s.len()) {
        // Balance the norms of the two sides; the product is unchanged.
        let (ln, rn) = (norm(&left[i]), norm(&right[i]));
        if ln == 0.0 || rn == 0.0 {
            continue;
        }
        let k = (rn / ln).sqrt();
        for r in 0..rows {
            u[r * d + i] = left[i][r] * k;
        }
        for q in 0..cols {
            b[q * d + i] = right[i][q] / k;
        }
    }
    let residual = residual_norm(&grid.matrix(), rows, cols, &u, &b, d);
    Ok(FactorTables::from_matrices(d, &u, &b, residual))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorizer::test_support::random_low_rank;

    #[test]
    fn identity_like_full_rank_retained() {
        let m = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let grid = SampleGrid::from_matrix(3, 3, &m).unwrap();
        assert!(fit_svd_oracle(&grid, 3).unwrap().residual < 1e-15);
    }

    #[test]
    fn diagonal_truncation_leaves_smallest_value() {
        let m = [3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0];
        let grid = SampleGrid::from_matrix(3, 3, &m).unwrap();
        let t = fit_svd_oracle(&grid, 2).unwrap();
        assert!((t.residual - 1.0).abs() < 1e-14);
        assert_eq!(singular_values(&grid).unwrap(), vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn residual_squared_is_discarded_energy() {
        for (rows, cols) in [(3 * 20, 12), (6, 30)] {
            let grid = random_low_rank(3, rows, cols, 6, 1e-2);
            let s = singular_values(&grid).unwrap();
            for d in 1..5 {
                let t = fit_svd_oracle(&grid, d).unwrap();
                let tail: f64 = s[d..].iter().map(|x| x * x).sum();
                assert!((t.residual.powi(2) - tail).abs() <= 1e-8 * tail, "{rows}x{cols} d={d}");
            }
        }
    }

    #[test]
    fn reconstruction_identity_with_full_rank() {
        let grid = random_low_rank(8, 3 * 5, 7, 7, 0.0);
        let t = fit_svd_oracle(&grid, 7).unwrap();
        assert!(t.residual < 1e-12);
    }

    #[test]
    fn size_guard() {
        let dims = [400, 400, 1];
        let dirs = crate::factorizer::fibonacci_sphere(9);
        let n = 160_000;
        let grid = SampleGrid::new(
            crate::geometry::Aabb::cube(1.0),
            dims,
            dirs,
            vec![[0.0; 3]; n * 9],
            vec![0.0; n],
        )
        .unwrap();
        assert!(matches!(fit_svd_oracle(&grid, 1), Err(Error::SizeGuardExceeded { .. })));
    }

    #[test]
    fn rank_counting() {
        assert_eq!(numerical_rank(&[5.0, 1.0, 1e-14], 1e-10), 2);
        assert_eq!(numerical_rank(&[], 1e-10), 0);
    }
}
