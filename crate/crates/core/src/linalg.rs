//! Dense kernels used by the Newton step: a row-major square matrix, LU with
//! partial pivoting, and a forward-difference Jacobian.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row slices. All rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_row_major(self) -> Vec<f64> {
        self.data
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    // Scaled to avoid overflow on large entries.
    let scale = norm_inf(v);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// A pivot whose magnitude does not exceed `n * eps * ||A||_inf` is treated
/// as zero and reported as [`Error::SingularMatrix`].
pub fn lu_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let pivot_tol = n as f64 * f64::EPSILON * a.norm_inf();

    let mut lu = a.clone();
    let mut x = b.to_vec();

    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        // NaN pivots fall through here as well.
        if !(pivot > pivot_tol) {
            return Err(Error::SingularMatrix {
                column: k,
                pivot: lu[(p, k)],
            });
        }
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / d;
            if factor == 0.0 {
                continue;
            }
            lu[(i, k)] = factor;
            for j in k + 1..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= factor * v;
            }
            x[i] -= factor * x[k];
        }
    }

    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| lu[(k, j)] * x[j]).sum();
        x[k] = (x[k] - s) / lu[(k, k)];
    }
    Ok(x)
}

/// Forward-difference Jacobian of `f` at `x`.
///
/// Column `j` uses the step `h_j = sqrt(eps) * max(1, |x_j|)`. When the
/// forward point fails `in_domain` or produces non-finite values, that column
/// falls back to a backward difference. `fx` may carry `f(x)` if the caller
/// already has it.
pub fn fd_jacobian<F, D>(f: F, x: &[f64], fx: Option<&[f64]>, in_domain: D) -> Result<Matrix>
where
    F: Fn(&[f64]) -> Vec<f64>,
    D: Fn(&[f64]) -> bool,
{
    let n = x.len();
    let owned;
    let f0 = match fx {
        Some(v) => v,
        None => {
            owned = f(x);
            &owned
        }
    };
    if !all_finite(f0) {
        return Err(Error::NonFinite);
    }
    let m = f0.len();
    let mut jac = Matrix::zeros(m, n);
    let mut xp = x.to_vec();
    let sqrt_eps = f64::EPSILON.sqrt();

    for j in 0..n {
        let h = sqrt_eps * x[j].abs().max(1.0);
        let mut column = None;
        for step in [h, -h] {
            xp[j] = x[j] + step;
            // Actual representable step.
            let dh = xp[j] - x[j];
            if in_domain(&xp) {
                let fp = f(&xp);
                if fp.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: fp.len(),
                    });
                }
                if all_finite(&fp) {
                    column = Some((fp, dh));
                    break;
                }
            }
        }
        xp[j] = x[j];
        let (fp, dh) = column.ok_or(Error::DomainViolation {
            coordinate: Some(j),
        })?;
        for i in 0..m {
            jac[(i, j)] = (fp[i] - f0[i]) / dh;
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_solve() {
        let x = lu_solve(&Matrix::identity(2), &[3.0, -1.0]).unwrap();
        assert_eq!(x, vec![3.0, -1.0]);
    }

    #[test]
    fn permutation_solve() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let x = lu_solve(&a, &[11.0, 7.0]).unwrap();
        assert_eq!(x, vec![7.0, 11.0]);
        assert_eq!(a.mul_vec(&x).unwrap(), vec![11.0, 7.0]);
    }

    #[test]
    fn rank_one_is_singular() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        for b in [[1.0, 0.0], [0.0, 0.0], [-3.0, 5.5]] {
            assert!(matches!(
                lu_solve(&a, &b),
                Err(Error::SingularMatrix { .. })
            ));
        }
    }

    #[test]
    fn zero_and_nan_matrices_are_singular() {
        assert!(matches!(
            lu_solve(&Matrix::zeros(3, 3), &[1.0, 2.0, 3.0]),
            Err(Error::SingularMatrix { column: 0, .. })
        ));
        let a = Matrix::from_rows(&[[f64::NAN, 1.0], [1.0, 1.0]]).unwrap();
        assert!(lu_solve(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn shape_errors() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(
            lu_solve(&a, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            lu_solve(&Matrix::identity(2), &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn fd_affine_is_exact() {
        let a = [[2.0, -1.0, 0.5], [0.0, 3.0, 1.0], [4.0, 0.0, -2.0]];
        let c = [1.0, -2.0, 0.25];
        let f = |x: &[f64]| -> Vec<f64> { (0..3).map(|i| dot(&a[i], x) + c[i]).collect() };
        for x in [[0.0, 0.0, 0.0], [10.0, -3.0, 1e3]] {
            let j = fd_jacobian(f, &x, None, |_| true).unwrap();
            for r in 0..3 {
                for s in 0..3 {
                    assert_abs_diff_eq!(j[(r, s)], a[r][s], epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn fd_himmelblau() {
        let f = |x: &[f64]| vec![x[0] * x[0] + x[1] - 11.0, x[0] + x[1] * x[1] - 7.0];
        let j = fd_jacobian(f, &[1.0, 1.0], None, |_| true).unwrap();
        let expected = [[2.0, 1.0], [1.0, 2.0]];
        for r in 0..2 {
            for s in 0..2 {
                assert_abs_diff_eq!(j[(r, s)], expected[r][s], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn fd_constant_is_zero() {
        let j = fd_jacobian(|_: &[f64]| vec![4.0, -1.0], &[0.3, 7.0], None, |_| true).unwrap();
        assert!(j.as_slice().iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn fd_backward_fallback_at_domain_edge() {
        // sqrt is undefined for x < 0; at the upper edge x = 1 of the domain
        // [0, 1] the forward point is rejected.
        let f = |x: &[f64]| vec![x[0].sqrt()];
        let dom = |x: &[f64]| (0.0..=1.0).contains(&x[0]);
        let j = fd_jacobian(f, &[1.0], None, dom).unwrap();
        assert_abs_diff_eq!(j[(0, 0)], 0.5, epsilon = 1e-6);
    }

    #[test]
    fn fd_domain_violation_when_both_sides_fail() {
        let dom = |x: &[f64]| x[0] == 0.0;
        let err = fd_jacobian(|x: &[f64]| vec![x[0]], &[0.0], None, dom).unwrap_err();
        assert_eq!(
            err,
            Error::DomainViolation {
                coordinate: Some(0)
            }
        );
    }

    #[test]
    fn norms() {
        assert_eq!(norm_inf(&[1.0, -3.0, 2.0]), 3.0);
        assert_abs_diff_eq!(norm2(&[3.0, -4.0]), 5.0, epsilon = 1e-15);
        assert_eq!(norm2(&[0.0, 0.0]), 0.0);
        assert_abs_diff_eq!(norm2(&[1e200, 1e200]), 2f64.sqrt() * 1e200, epsilon = 1e186);
    }
}
