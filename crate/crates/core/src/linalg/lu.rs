use super::Matrix;
use crate::error::{Error, Result};
use crate::Scalar;

/// Gaussian elimination with partial pivoting. Pivots below
/// `1e-12 · max|K|` are treated as singular.
pub fn lu_solve<T: Scalar>(k: &Matrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    let n = k.rows();
    if !k.is_square() || rhs.len() != n {
        return Err(Error::DimensionMismatch {
            field: "lu system",
            expected: n,
            found: rhs.len(),
        });
    }
    let mut a = k.clone();
    let mut b = rhs.to_vec();
    let tiny = T::tol_floor(1e-12, 64.0) * a.max_abs().max(T::min_positive_value());

    for col in 0..n {
        let (piv, piv_abs) =
            (col..n)
                .map(|r| (r, a[(r, col)].abs()))
                .fold(
                    (col, -T::one()),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if !(piv_abs > tiny) {
            return Err(Error::Singular { pivot: col });
        }
        if piv != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(piv, j)];
                a[(piv, j)] = tmp;
            }
            b.swap(col, piv);
        }
        for r in (col + 1)..n {
            let f = a[(r, col)] / a[(col, col)];
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = a[(col, j)];
                a[(r, j)] -= f * v;
            }
            let bc = b[col];
            b[r] -= f * bc;
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= a[(i, j)] * x[j];
        }
        x[i] = s / a[(i, i)];
    }
    Ok(x)
}
