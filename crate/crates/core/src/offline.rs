//! Offline phase: pick the diagonal augmentation matrix and a full set of
//! directions that are conjugate with respect to `P + σI` and `Aᵀϱ_offA`
//! simultaneously.
//!
//! Conjugacy with respect to both parts separately is homogeneous in `ϱ`, so
//! the directions stay conjugate for `P + σI + s·Aᵀϱ_offA` at every scale
//! `s > 0`. The per-direction quadratic forms are cached as `t1_k` and `t2_k`,
//! which makes `d_kᵀM(s)d_k = t1_k + s·t2_k` an O(1) lookup after a rescale.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{generalized_eig, symmetric_eig};
use crate::qp::QpProblem;
use crate::Scalar;

/// Diagonal augmentation matrix `ϱ = s · diag(rho_base)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationMatrix<T> {
    rho_base: Vec<T>,
    scale: T,
}

impl<T: Scalar> AugmentationMatrix<T> {
    pub fn new(rho_base: Vec<T>, scale: T) -> Result<Self> {
        if let Some(i) = rho_base
            .iter()
            .position(|&r| !(r > T::zero() && r.is_finite()))
        {
            return Err(Error::InvalidSettings(format!(
                "augmentation entry {i} must be positive and finite"
            )));
        }
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(Error::InvalidSettings(
                "augmentation scale must be positive and finite".into(),
            ));
        }
        Ok(Self { rho_base, scale })
    }

    pub fn rho_base(&self) -> &[T] {
        &self.rho_base
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn m(&self) -> usize {
        self.rho_base.len()
    }

    /// `s · rho_base`, elementwise.
    pub fn effective(&self) -> Vec<T> {
        self.rho_base.iter().map(|&r| r * self.scale).collect()
    }

    /// Multiplies the scale by `factor`. Directions and their cached forms
    /// remain valid, so nothing else needs recomputing.
    pub fn rescale(&self, factor: T) -> Self {
        assert!(
            factor > T::zero() && factor.is_finite(),
            "rescale factor must be positive and finite"
        );
        Self {
            rho_base: self.rho_base.clone(),
            scale: self.scale * factor,
        }
    }

    pub(crate) fn with_scale(&self, scale: T) -> Self {
        Self {
            rho_base: self.rho_base.clone(),
            scale,
        }
    }
}

/// Standard OSQP initialization: `ρ̄` for inequality rows, `10³ρ̄` for
/// equality rows.
pub fn rho_init<T: Scalar>(problem: &QpProblem<T>, rho_bar: T) -> Result<AugmentationMatrix<T>> {
    if !(rho_bar > T::zero()) {
        return Err(Error::InvalidSettings("rho_bar must be positive".into()));
    }
    let thousand = T::lit(1000.0);
    let base = (0..problem.m())
        .map(|i| {
            if problem.is_equality(i) {
                thousand * rho_bar
            } else {
                rho_bar
            }
        })
        .collect();
    AugmentationMatrix::new(base, T::one())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionStrategy {
    /// Pencil eigenvectors: conjugate for both parts at every scale.
    Pencil,
    /// Eigenvectors of the combined matrix at scale 1 only. Used when
    /// `Aᵀϱ_offA` is singular; solves need CG polishing after a rescale.
    Fallback,
}

impl DirectionStrategy {
    pub fn is_scale_fragile(self) -> bool {
        matches!(self, DirectionStrategy::Fallback)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DirectionStrategy::Pencil => "pencil",
            DirectionStrategy::Fallback => "fallback",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pencil" => Some(DirectionStrategy::Pencil),
            "fallback" => Some(DirectionStrategy::Fallback),
            _ => None,
        }
    }
}

/// Cached directions with their split quadratic forms.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateDirectionSet<T> {
    directions: Vec<Vec<T>>,
    t1: Vec<T>,
    t2: Vec<T>,
    sigma: T,
    fingerprint: String,
    strategy: DirectionStrategy,
}

impl<T: Scalar> ConjugateDirectionSet<T> {
    /// Assembles a set from stored parts; only shapes are checked, so a
    /// corrupted cache is caught later as a stale-cache error.
    pub fn from_parts(
        directions: Vec<Vec<T>>,
        t1: Vec<T>,
        t2: Vec<T>,
        sigma: T,
        fingerprint: String,
        strategy: DirectionStrategy,
    ) -> Result<Self> {
        let n = directions.len();
        for (field, len) in [("t1", t1.len()), ("t2", t2.len())] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    field,
                    expected: n,
                    found: len,
                });
            }
        }
        if let Some(d) = directions.iter().find(|d| d.len() != n) {
            return Err(Error::DimensionMismatch {
                field: "direction length",
                expected: n,
                found: d.len(),
            });
        }
        Ok(Self {
            directions,
            t1,
            t2,
            sigma,
            fingerprint,
            strategy,
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec<T>] {
        &self.directions
    }

    pub fn t1(&self) -> &[T] {
        &self.t1
    }

    pub fn t2(&self) -> &[T] {
        &self.t2
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn strategy(&self) -> DirectionStrategy {
        self.strategy
    }

    /// `d_kᵀ (P + σI + s·Aᵀϱ_offA) d_k` from the cached split forms.
    pub fn quadratic_form(&self, k: usize, scale: T) -> T {
        self.t1[k] + scale * self.t2[k]
    }
}

/// Content hash of `(P, A, σ, rho_base)` with every value rounded to 12
/// significant digits.
pub fn fingerprint<T: Scalar>(problem: &QpProblem<T>, sigma: T, rho_base: &[T]) -> String {
    let mut text = String::new();
    let mut push = |tag: &str, vals: &[T]| {
        text.push_str(tag);
        for &v in vals {
            let v = v.to_f64_lossy();
            let v = if v == 0.0 { 0.0 } else { v };
            text.push_str(&format!(" {v:.11e}"));
        }
        text.push('\n');
    };
    push(
        &format!("P {}x{}", problem.n(), problem.n()),
        problem.p().as_slice(),
    );
    push(
        &format!("A {}x{}", problem.m(), problem.n()),
        problem.a().as_slice(),
    );
    push("sigma", &[sigma]);
    push("rho", rho_base);
    Sha256::digest(text.as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Builds the direction cache for `problem`, keeping `ϱ_off = seed_rho`.
///
/// When `Aᵀϱ_offA` is positive definite the directions are the eigenvectors of
/// the pencil `(P + σI, Aᵀϱ_offA)`, conjugate for both matrices. Otherwise the
/// eigenvectors of the combined matrix are used and the set is marked
/// [`DirectionStrategy::Fallback`]. Directions are unit 2-norm, ordered by
/// ascending eigenvalue.
pub fn compute_offline<T: Scalar>(
    problem: &QpProblem<T>,
    sigma: T,
    seed_rho: &AugmentationMatrix<T>,
) -> Result<(ConjugateDirectionSet<T>, AugmentationMatrix<T>)> {
    if !(sigma > T::zero()) {
        return Err(Error::InvalidSettings("sigma must be positive".into()));
    }
    if seed_rho.m() != problem.m() {
        return Err(Error::DimensionMismatch {
            field: "seed rho",
            expected: problem.m(),
            found: seed_rho.m(),
        });
    }
    let rho_off = seed_rho.with_scale(T::one());
    let s_mat = problem.p().add_diag(sigma);
    let b_mat = problem.a().gram_weighted(rho_off.rho_base());

    let (pairs, strategy) = match generalized_eig(&s_mat, &b_mat) {
        Ok(pairs) => (pairs, DirectionStrategy::Pencil),
        Err(Error::NotPositiveDefinite { .. }) => (
            symmetric_eig(&s_mat.add(&b_mat))?,
            DirectionStrategy::Fallback,
        ),
        Err(e) => return Err(e),
    };

    let directions: Vec<Vec<T>> = pairs.into_iter().map(|p| p.vector).collect();
    let t1 = directions.iter().map(|d| s_mat.bilinear(d, d)).collect();
    let t2 = directions.iter().map(|d| b_mat.bilinear(d, d)).collect();
    let set = ConjugateDirectionSet {
        directions,
        t1,
        t2,
        sigma,
        fingerprint: fingerprint(problem, sigma, rho_off.rho_base()),
        strategy,
    };
    Ok((set, rho_off))
}

/// Largest normalized off-diagonal conjugacy residuals of a direction set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugacyReport<T> {
    /// `max |d_pᵀ(P+σI)d_q| / √(t1_p t1_q)`
    pub objective_residual: T,
    /// `max |d_pᵀAᵀϱAd_q| / (1 + √(t2_p t2_q))`
    pub constraint_residual: T,
    /// `max |d_pᵀMd_q| / √(κ_p κ_q)` for the combined matrix.
    pub combined_residual: T,
    pub passed: bool,
}

/// Checks conjugacy of `dirs` for the given `σ` and augmentation matrix
/// (including its current scale). Diagonal forms are recomputed, not read
/// from the cache.
pub fn conjugacy_check<T: Scalar>(
    dirs: &ConjugateDirectionSet<T>,
    problem: &QpProblem<T>,
    sigma: T,
    rho: &AugmentationMatrix<T>,
    tol: T,
) -> ConjugacyReport<T> {
    let directions = dirs.directions();
    conjugacy_of(directions, problem, sigma, &rho.effective(), tol)
}

/// [`conjugacy_check`] for a bare list of directions with an explicit
/// effective diagonal.
pub fn conjugacy_of<T: Scalar>(
    directions: &[Vec<T>],
    problem: &QpProblem<T>,
    sigma: T,
    rho_effective: &[T],
    tol: T,
) -> ConjugacyReport<T> {
    let s_mat = problem.p().add_diag(sigma);
    let b_mat = problem.a().gram_weighted(rho_effective);
    let sd: Vec<Vec<T>> = directions.iter().map(|d| s_mat.matvec(d)).collect();
    let bd: Vec<Vec<T>> = directions.iter().map(|d| b_mat.matvec(d)).collect();
    let dot = crate::linalg::dot::<T>;
    let t1: Vec<T> = directions.iter().zip(&sd).map(|(d, s)| dot(d, s)).collect();
    let t2: Vec<T> = directions.iter().zip(&bd).map(|(d, b)| dot(d, b)).collect();

    let mut obj = T::zero();
    let mut con = T::zero();
    let mut comb = T::zero();
    for p in 0..directions.len() {
        for q in 0..directions.len() {
            if p == q {
                continue;
            }
            let sv = dot(&directions[p], &sd[q]);
            let bv = dot(&directions[p], &bd[q]);
            obj = obj.max(sv.abs() / (t1[p] * t1[q]).sqrt());
            con = con.max(bv.abs() / (T::one() + (t2[p] * t2[q]).sqrt()));
            let kp = t1[p] + t2[p];
            let kq = t1[q] + t2[q];
            comb = comb.max((sv + bv).abs() / (kp * kq).sqrt());
        }
    }
    ConjugacyReport {
        objective_residual: obj,
        constraint_residual: con,
        combined_residual: comb,
        passed: obj <= tol && con <= tol && comb <= tol,
    }
}
