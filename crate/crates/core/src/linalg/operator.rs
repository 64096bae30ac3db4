use super::Matrix;
use crate::Scalar;

/// Matrix-free `M = P + σI + s·Aᵀ diag(ϱ) A`.
///
/// Holds borrowed problem data; nothing is assembled unless [`to_dense`] is
/// called. Flops are returned to the caller rather than tallied internally so
/// the operator stays shareable across threads.
///
/// [`to_dense`]: SpdOperator::to_dense
#[derive(Debug, Clone, Copy)]
pub struct SpdOperator<'a, T> {
    p: &'a Matrix<T>,
    a: &'a Matrix<T>,
    sigma: T,
    rho_base: &'a [T],
    scale: T,
}

impl<'a, T: Scalar> SpdOperator<'a, T> {
    pub fn new(p: &'a Matrix<T>, a: &'a Matrix<T>, sigma: T, rho_base: &'a [T], scale: T) -> Self {
        assert_eq!(p.rows(), a.cols(), "P and A column counts differ");
        assert_eq!(rho_base.len(), a.rows(), "rho length differs from A rows");
        Self {
            p,
            a,
            sigma,
            rho_base,
            scale,
        }
    }

    pub fn n(&self) -> usize {
        self.p.rows()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn p(&self) -> &'a Matrix<T> {
        self.p
    }

    pub fn a(&self) -> &'a Matrix<T> {
        self.a
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn rho_base(&self) -> &'a [T] {
        self.rho_base
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    /// Flops charged per [`apply`](Self::apply): `Pv` (2n²), `Av` and `Aᵀw`
    /// (2nm each).
    pub fn apply_flops(&self) -> u64 {
        let (n, m) = (self.n() as u64, self.m() as u64);
        2 * n * n + 4 * n * m
    }

    /// `out = M v`; returns the flops spent.
    pub fn apply(&self, v: &[T], out: &mut [T]) -> u64 {
        let av = self.a.matvec(v);
        let w: Vec<T> = av
            .iter()
            .zip(self.rho_base)
            .map(|(&x, &r)| x * r * self.scale)
            .collect();
        let atw = self.a.matvec_t(&w);
        self.p.matvec_into(v, out);
        for ((o, &vi), &ai) in out.iter_mut().zip(v).zip(&atw) {
            *o += self.sigma * vi + ai;
        }
        self.apply_flops()
    }

    pub fn apply_vec(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n()];
        self.apply(v, &mut out);
        out
    }

    /// `P + σI`.
    pub fn objective_part(&self) -> Matrix<T> {
        self.p.add_diag(self.sigma)
    }

    /// `Aᵀ diag(ϱ_base) A`, without the scale factor.
    pub fn constraint_part(&self) -> Matrix<T> {
        self.a.gram_weighted(self.rho_base)
    }

    pub fn to_dense(&self) -> Matrix<T> {
        self.objective_part()
            .add(&self.constraint_part().scaled(self.scale))
    }

    /// Same data with a different scale factor.
    pub fn with_scale(&self, scale: T) -> Self {
        Self { scale, ..*self }
    }
}
