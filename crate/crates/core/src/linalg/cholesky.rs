use super::Matrix;
use crate::error::{Error, Result};
use crate::Scalar;

/// Lower-triangular `L` with `B = L Lᵀ`.
///
/// A pivot at or below `1e-14 · trace(B) / n` is rejected as not positive
/// definite.
pub fn cholesky<T: Scalar>(b: &Matrix<T>) -> Result<Matrix<T>> {
    let n = b.rows();
    if !b.is_square() {
        return Err(Error::DimensionMismatch {
            field: "cholesky input columns",
            expected: n,
            found: b.cols(),
        });
    }
    let trace = b.trace();
    let floor = T::tol_floor(1e-14, 1.0) * trace.abs() / T::from_usize(n.max(1)).unwrap();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = b[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = b[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L x = rhs` for lower-triangular `L`.
pub fn solve_lower<T: Scalar>(l: &Matrix<T>, rhs: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut x = rhs.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `Lᵀ x = rhs` for lower-triangular `L`.
pub fn solve_lower_transpose<T: Scalar>(l: &Matrix<T>, rhs: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut x = rhs.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}
