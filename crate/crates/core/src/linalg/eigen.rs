use super::{cholesky, dot, norm2, solve_lower, solve_lower_transpose, Matrix};
use crate::error::{Error, Result};
use crate::Scalar;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub value: T,
    /// Unit 2-norm.
    pub vector: Vec<T>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix, values ascending.
///
/// An off-diagonal entry is left alone once `|a_pq| ≤ 8ε·√|a_pp a_qq|` (or it
/// is below `8ε·10⁻⁸·‖S‖_F`); sweeps stop when a full sweep rotates nothing.
/// The relative test keeps small eigenvalues accurate relative to their own
/// size rather than to `‖S‖`.
pub fn symmetric_eig<T: Scalar>(s: &Matrix<T>) -> Result<Vec<EigenPair<T>>> {
    let n = s.rows();
    if !s.is_square() {
        return Err(Error::DimensionMismatch {
            field: "eigensolver input columns",
            expected: n,
            found: s.cols(),
        });
    }
    let mut a = s.symmetrized();
    let mut v = Matrix::<T>::identity(n);
    let rel = T::tol_floor(0.0, 8.0);
    let abs = rel * T::lit(1e-8) * s.frobenius_norm();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)].abs();
                let scale = (a[(p, p)].abs() * a[(q, q)].abs()).sqrt();
                if apq > rel * scale && apq > abs {
                    rotate(&mut a, &mut v, p, q);
                    rotated = true;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut pairs: Vec<EigenPair<T>> = (0..n)
        .map(|j| {
            let mut vector = v.column(j);
            let nrm = norm2(&vector);
            vector.iter_mut().for_each(|x| *x /= nrm);
            EigenPair {
                value: a[(j, j)],
                vector,
            }
        })
        .collect();
    pairs.sort_by(|x, y| {
        x.value
            .partial_cmp(&y.value)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(pairs)
}

/// One Jacobi rotation zeroing `a[p][q]`; accumulates into the columns of `v`.
fn rotate<T: Scalar>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == T::zero() {
        return;
    }
    let n = a.rows();
    let two = T::lit(2.0);
    let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
    let t = {
        let denom = theta.abs() + (theta * theta + T::one()).sqrt();
        if theta >= T::zero() {
            T::one() / denom
        } else {
            -T::one() / denom
        }
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Solves the symmetric-definite pencil `S d = λ B d`.
///
/// Reduces through `B = L Lᵀ` to the standard problem for `L⁻¹ S L⁻ᵀ`, maps the
/// eigenvectors back with `d = L⁻ᵀ v` and normalizes to unit 2-norm. Vectors
/// whose eigenvalues agree to 1e-10 relative are re-orthogonalized in the `B`
/// inner product, so the result is conjugate with respect to both `S` and `B`.
pub fn generalized_eig<T: Scalar>(s: &Matrix<T>, b: &Matrix<T>) -> Result<Vec<EigenPair<T>>> {
    let n = s.rows();
    if b.rows() != n || b.cols() != n || s.cols() != n {
        return Err(Error::DimensionMismatch {
            field: "pencil",
            expected: n,
            found: b.rows(),
        });
    }
    let l = cholesky(b)?;

    // C = L⁻¹ S L⁻ᵀ, built column by column: first W = L⁻¹ S, then C = L⁻¹ Wᵀ.
    let mut w = Matrix::zeros(n, n);
    for j in 0..n {
        let col = solve_lower(&l, &s.column(j));
        for i in 0..n {
            w[(i, j)] = col[i];
        }
    }
    let wt = w.transpose();
    let mut c = Matrix::zeros(n, n);
    for j in 0..n {
        let col = solve_lower(&l, &wt.column(j));
        for i in 0..n {
            c[(i, j)] = col[i];
        }
    }
    let c = c.symmetrized();
    let pairs = symmetric_eig(&c)?;

    let values: Vec<T> = pairs.iter().map(|p| p.value).collect();
    let mut dirs: Vec<Vec<T>> = pairs
        .iter()
        .map(|p| solve_lower_transpose(&l, &p.vector))
        .collect();

    let cluster_tol = T::tol_floor(1e-10, 16.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n {
            let scale = values[start]
                .abs()
                .max(values[end].abs())
                .max(T::min_positive_value());
            if (values[end] - values[start]).abs() <= cluster_tol * scale {
                end += 1;
            } else {
                break;
            }
        }
        if end - start > 1 {
            b_orthogonalize(b, &mut dirs[start..end]);
        }
        start = end;
    }

    Ok(values
        .into_iter()
        .zip(dirs)
        .map(|(value, mut vector)| {
            let nrm = norm2(&vector);
            vector.iter_mut().for_each(|x| *x /= nrm);
            EigenPair { value, vector }
        })
        .collect())
}

/// Modified Gram-Schmidt in the `B` inner product.
fn b_orthogonalize<T: Scalar>(b: &Matrix<T>, dirs: &mut [Vec<T>]) {
    for i in 0..dirs.len() {
        for j in 0..i {
            let bj = b.matvec(&dirs[j]);
            let coeff = dot(&dirs[i], &bj) / dot(&dirs[j], &bj);
            let (head, tail) = dirs.split_at_mut(i);
            super::axpy(-coeff, &head[j], &mut tail[0]);
        }
        let bi = b.matvec(&dirs[i]);
        let nrm = dot(&dirs[i], &bi).sqrt();
        dirs[i].iter_mut().for_each(|x| *x /= nrm);
    }
}
