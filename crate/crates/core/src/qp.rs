//! Problem data for `minimize ½xᵀPx + qᵀx  subject to  l ≤ Ax ≤ u`, box
//! projection and ADMM residuals.

use crate::error::{Error, Result};
use crate::linalg::{norm2, norm_inf, symmetric_eig, Matrix};
use crate::Scalar;

/// A validated box-constrained convex QP.
///
/// Construction goes through [`QpProblem::new`], which symmetrizes `P` and
/// rejects dimension mismatches, inverted or malformed bounds and indefinite
/// `P`. Values are immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem<T> {
    p: Matrix<T>,
    q: Vec<T>,
    a: Matrix<T>,
    l: Vec<T>,
    u: Vec<T>,
}

impl<T: Scalar> QpProblem<T> {
    pub fn new(p: Matrix<T>, q: Vec<T>, a: Matrix<T>, l: Vec<T>, u: Vec<T>) -> Result<Self> {
        validate(p, q, a, l, u)
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn m(&self) -> usize {
        self.l.len()
    }

    pub fn p(&self) -> &Matrix<T> {
        &self.p
    }

    pub fn q(&self) -> &[T] {
        &self.q
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn l(&self) -> &[T] {
        &self.l
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    /// Constraint `i` is an equality (`l_i = u_i` exactly).
    pub fn is_equality(&self, i: usize) -> bool {
        self.l[i] == self.u[i]
    }

    pub fn objective(&self, x: &[T]) -> T {
        let px = self.p.matvec(x);
        let half = T::lit(0.5);
        x.iter()
            .zip(&px)
            .zip(&self.q)
            .map(|((&xi, &pxi), &qi)| half * xi * pxi + qi * xi)
            .sum()
    }

    pub fn project(&self, v: &[T]) -> Vec<T> {
        project_box(v, &self.l, &self.u)
    }
}

/// Checks every problem invariant and returns the problem with `P`
/// replaced by `(P + Pᵀ)/2`.
pub fn validate<T: Scalar>(
    p: Matrix<T>,
    q: Vec<T>,
    a: Matrix<T>,
    l: Vec<T>,
    u: Vec<T>,
) -> Result<QpProblem<T>> {
    let n = q.len();
    let m = l.len();
    if n == 0 || m == 0 {
        return Err(Error::EmptyProblem { n, m });
    }
    let dims: [(&'static str, usize, usize); 6] = [
        ("P rows", n, p.rows()),
        ("P columns", n, p.cols()),
        ("A columns", n, a.cols()),
        ("A rows", m, a.rows()),
        ("u", m, u.len()),
        ("q", n, q.len()),
    ];
    for (field, expected, found) in dims {
        if expected != found {
            return Err(Error::DimensionMismatch {
                field,
                expected,
                found,
            });
        }
    }
    check_finite("P", p.as_slice())?;
    check_finite("q", &q)?;
    check_finite("A", a.as_slice())?;

    for i in 0..m {
        if l[i].is_nan() || u[i].is_nan() {
            return Err(Error::NonFinite {
                field: "bounds",
                index: i,
            });
        }
        if l[i] == T::infinity() || u[i] == T::neg_infinity() {
            return Err(Error::InvalidBound { index: i });
        }
        if l[i] > u[i] {
            return Err(Error::BoundInversion { index: i });
        }
    }

    let sym_tol = T::tol_floor(1e-12, 4.0) * p.max_abs().max(T::one());
    for i in 0..n {
        for j in (i + 1)..n {
            if (p[(i, j)] - p[(j, i)]).abs() > sym_tol {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    let p = p.symmetrized();

    let pairs = symmetric_eig(&p)?;
    let radius = pairs.iter().fold(T::zero(), |r, e| r.max(e.value.abs()));
    let floor = -T::tol_floor(1e-10, 64.0) * (T::one() + radius);
    if let Some((index, e)) = pairs.iter().enumerate().find(|(_, e)| e.value < floor) {
        return Err(Error::IndefiniteP {
            index,
            value: e.value.to_f64_lossy(),
        });
    }

    Ok(QpProblem { p, q, a, l, u })
}

fn check_finite<T: Scalar>(field: &'static str, v: &[T]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { field, index }),
        None => Ok(()),
    }
}

/// Euclidean projection onto `{z : l ≤ z ≤ u}`.
pub fn project_box<T: Scalar>(v: &[T], l: &[T], u: &[T]) -> Vec<T> {
    v.iter()
        .zip(l.iter().zip(u))
        .map(|(&vi, (&li, &ui))| vi.max(li).min(ui))
        .collect()
}

/// ADMM state `(x, z, y)` after `k` completed iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate<T> {
    pub x: Vec<T>,
    pub z: Vec<T>,
    pub y: Vec<T>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals<T> {
    /// `A x − z`
    pub r_prim: Vec<T>,
    /// `P x + q + Aᵀ y`
    pub r_dual: Vec<T>,
    pub prim_norm_inf: T,
    pub dual_norm_inf: T,
    pub prim_norm_2: T,
    pub dual_norm_2: T,
}

impl<T: Scalar> Residuals<T> {
    pub fn from_vectors(r_prim: Vec<T>, r_dual: Vec<T>) -> Self {
        Self {
            prim_norm_inf: norm_inf(&r_prim),
            dual_norm_inf: norm_inf(&r_dual),
            prim_norm_2: norm2(&r_prim),
            dual_norm_2: norm2(&r_dual),
            r_prim,
            r_dual,
        }
    }
}

pub fn residuals<T: Scalar>(problem: &QpProblem<T>, it: &Iterate<T>) -> Residuals<T> {
    let ax = problem.a.matvec(&it.x);
    let r_prim: Vec<T> = ax.iter().zip(&it.z).map(|(&a, &z)| a - z).collect();
    let px = problem.p.matvec(&it.x);
    let aty = problem.a.matvec_t(&it.y);
    let r_dual: Vec<T> = px
        .iter()
        .zip(&problem.q)
        .zip(&aty)
        .map(|((&p, &q), &a)| p + q + a)
        .collect();
    Residuals::from_vectors(r_prim, r_dual)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn example_problem() -> QpProblem<f64> {
        QpProblem::new(
            Matrix::from_f64_rows(&[
                [3.0, 1.0, 3.0, 2.0],
                [1.0, 1.0, 2.0, 1.0],
                [3.0, 2.0, 8.0, 4.0],
                [2.0, 1.0, 4.0, 3.0],
            ]),
            vec![1.0; 4],
            Matrix::identity(4),
            vec![-2.0, -1.0, -3.0, -4.0],
            vec![10.0, 1.0, 3.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn accepts_example_problem() {
        let p = example_problem();
        assert_eq!((p.n(), p.m()), (4, 4));
        assert!(!(0..4).any(|i| p.is_equality(i)));
    }

    #[test]
    fn rejects_inverted_bounds() {
        let err = QpProblem::new(
            Matrix::identity(1),
            vec![0.0],
            Matrix::identity(1),
            vec![0.0],
            vec![-1.0],
        )
        .unwrap_err();
        assert_eq!(err, Error::BoundInversion { index: 0 });
    }

    #[test]
    fn rejects_negative_p() {
        let err = QpProblem::new(
            Matrix::from_f64_rows(&[[-1.0]]),
            vec![0.0],
            Matrix::identity(1),
            vec![-1.0],
            vec![1.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::IndefiniteP { index: 0, .. }));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err = QpProblem::new(
            Matrix::identity(2),
            vec![0.0, 0.0],
            Matrix::identity(3),
            vec![-1.0; 3],
            vec![1.0; 3],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                field: "A columns",
                ..
            }
        ));
    }

    #[test]
    fn rejects_malformed_infinite_bounds() {
        let err = QpProblem::new(
            Matrix::identity(1),
            vec![0.0],
            Matrix::identity(1),
            vec![f64::INFINITY],
            vec![f64::INFINITY],
        )
        .unwrap_err();
        assert_eq!(err, Error::InvalidBound { index: 0 });
    }

    #[test]
    fn symmetrizes_tiny_asymmetry_and_rejects_large() {
        let p = Matrix::from_f64_rows(&[[2.0, 1.0 + 1e-14], [1.0, 2.0]]);
        let prob = QpProblem::new(
            p,
            vec![0.0; 2],
            Matrix::identity(2),
            vec![-1.0; 2],
            vec![1.0; 2],
        )
        .unwrap();
        assert_eq!(prob.p()[(0, 1)], prob.p()[(1, 0)]);

        let p = Matrix::from_f64_rows(&[[2.0, 1.5], [1.0, 2.0]]);
        let err = QpProblem::new(
            p,
            vec![0.0; 2],
            Matrix::identity(2),
            vec![-1.0; 2],
            vec![1.0; 2],
        )
        .unwrap_err();
        assert_eq!(err, Error::NotSymmetric { row: 0, col: 1 });
    }

    #[test]
    fn projection_examples() {
        assert_eq!(
            project_box(&[5.0, -3.0], &[-2.0, -1.0], &[10.0, 1.0]),
            vec![5.0, -1.0]
        );
        let l = [-2.0, -1.0];
        assert_eq!(project_box(&l, &l, &[10.0, 1.0]), l.to_vec());
        assert_eq!(project_box(&[7.0], &[f64::NEG_INFINITY], &[3.0]), vec![3.0]);
    }

    #[test]
    fn residuals_at_origin_equal_q() {
        let p = example_problem();
        let it = Iterate {
            x: vec![0.0; 4],
            z: vec![0.0; 4],
            y: vec![0.0; 4],
            k: 0,
        };
        let r = residuals(&p, &it);
        assert_eq!(r.r_prim, vec![0.0; 4]);
        assert_eq!(r.r_dual, vec![1.0; 4]);
        assert_eq!(r.dual_norm_inf, 1.0);
        assert_eq!(r.dual_norm_2, 2.0);
    }

    #[test]
    fn residuals_vanish_at_kkt_point() {
        // min ½x² + x, 0 ≤ x ≤ 2: x = 0, y = -1
        let p = QpProblem::new(
            Matrix::identity(1),
            vec![1.0],
            Matrix::identity(1),
            vec![0.0],
            vec![2.0],
        )
        .unwrap();
        let it = Iterate {
            x: vec![0.0],
            z: vec![0.0],
            y: vec![-1.0],
            k: 3,
        };
        let r = residuals(&p, &it);
        assert_eq!(r.prim_norm_2, 0.0);
        assert_eq!(r.dual_norm_2, 0.0);
    }

    fn bounds() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        prop::collection::vec((-5.0f64..5.0, 0.0f64..4.0), 1..8)
            .prop_map(|v| v.into_iter().map(|(l, w)| (l, l + w)).unzip())
    }

    proptest! {
        #[test]
        fn projection_is_idempotent((l, u) in bounds(), seed in prop::collection::vec(-20.0f64..20.0, 8)) {
            let v = &seed[..l.len()];
            let once = project_box(v, &l, &u);
            let twice = project_box(&once, &l, &u);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn projection_is_non_expansive(
            (l, u) in bounds(),
            a in prop::collection::vec(-20.0f64..20.0, 8),
            b in prop::collection::vec(-20.0f64..20.0, 8),
        ) {
            let m = l.len();
            let pa = project_box(&a[..m], &l, &u);
            let pb = project_box(&b[..m], &l, &u);
            let d_proj = norm2(&crate::linalg::sub(&pa, &pb));
            let d = norm2(&crate::linalg::sub(&a[..m], &b[..m]));
            prop_assert!(d_proj <= d + 1e-12);
        }

        #[test]
        fn residual_norms_recompute_exactly(
            x in prop::collection::vec(-3.0f64..3.0, 4),
            z in prop::collection::vec(-3.0f64..3.0, 4),
            y in prop::collection::vec(-3.0f64..3.0, 4),
        ) {
            let p = example_problem();
            let it = Iterate { x, z, y, k: 0 };
            let r = residuals(&p, &it);
            prop_assert_eq!(r.prim_norm_2, norm2(&r.r_prim));
            prop_assert_eq!(r.dual_norm_2, norm2(&r.r_dual));
            prop_assert_eq!(r.prim_norm_inf, norm_inf(&r.r_prim));
            prop_assert_eq!(r.dual_norm_inf, norm_inf(&r.r_dual));
            prop_assert_eq!(r.clone(), residuals(&p, &it));
        }
    }
}
