use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Serialize, Serializer};

use super::FusionError;

/// Smallest eigenvalue a matrix must exceed to count as positive definite.
pub const SPD_TOL: f64 = 1e-10;
/// Relative symmetry tolerance for covariance inputs.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A mean and an SPD covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEstimator {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianEstimator {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, FusionError> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(FusionError::DimensionMismatch(mean.len(), cov.nrows()));
        }
        if mean.is_empty() {
            return Err(FusionError::Empty);
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(FusionError::NonFinite);
        }
        check_spd(&cov)?;
        Ok(Self { mean, cov })
    }

    pub fn scalar(mean: f64, var: f64) -> Result<Self, FusionError> {
        Self::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, var))
    }

    pub fn from_slices(mean: &[f64], cov_row_major: &[f64]) -> Result<Self, FusionError> {
        let d = mean.len();
        if cov_row_major.len() != d * d {
            return Err(FusionError::DimensionMismatch(d * d, cov_row_major.len()));
        }
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(d, d, cov_row_major),
        )
    }

    /// Skips validation; callers guarantee SPD by construction.
    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn precision(&self) -> DMatrix<f64> {
        spd_inverse(&self.cov).expect("estimator covariance is SPD")
    }

    /// Max absolute difference over mean and covariance entries.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let dm = (&self.mean - &other.mean).amax();
        let dc = (&self.cov - &other.cov).amax();
        dm.max(dc)
    }

    /// Relative difference: mean and covariance each scaled by the larger
    /// of the two operands' magnitudes (floored at the smallest positive).
    pub fn rel_diff(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let rel = |a: f64, b: f64, d: f64| d / a.max(b).max(f64::MIN_POSITIVE);
        let dm = (&self.mean - &other.mean).norm();
        let dc = (&self.cov - &other.cov).norm();
        let m = if dm == 0.0 { 0.0 } else { rel(self.mean.norm(), other.mean.norm(), dm) };
        let c = rel(self.cov.norm(), other.cov.norm(), dc);
        m.max(c)
    }

    pub fn norm(&self) -> f64 {
        (self.mean.norm_squared() + self.cov.norm_squared()).sqrt()
    }

    /// Log of the unnormalized density `exp(-0.5 (v - m)^T C^-1 (v - m))`.
    pub fn log_unnormalized_density(&self, v: &DVector<f64>) -> f64 {
        let d = v - &self.mean;
        -0.5 * (d.transpose() * self.precision() * &d)[(0, 0)]
    }
}

impl Serialize for GaussianEstimator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("GaussianEstimator", 2)?;
        st.serialize_field("mean", &self.mean.iter().copied().collect::<Vec<_>>())?;
        st.serialize_field("cov", &matrix_rows(&self.cov))?;
        st.end()
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

pub fn check_spd(m: &DMatrix<f64>) -> Result<(), FusionError> {
    if !m.is_square() {
        return Err(FusionError::DimensionMismatch(m.nrows(), m.ncols()));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(FusionError::NotSymmetric(asym));
    }
    let min = min_eigenvalue(m);
    if min <= SPD_TOL {
        return Err(FusionError::NotPositiveDefinite(min));
    }
    Ok(())
}

pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>, FusionError> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or(FusionError::NotPositiveDefinite(f64::NAN))?;
    Ok(symmetrize(chol.inverse()))
}

pub(crate) fn log_det_spd(m: &DMatrix<f64>) -> f64 {
    let chol = m.clone().cholesky().expect("SPD matrix");
    2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

pub(crate) fn check_weight(w: f64) -> Result<(), FusionError> {
    if w > 0.0 && w < 1.0 {
        Ok(())
    } else {
        Err(FusionError::WeightOutOfRange(w))
    }
}

fn check_dims(a: &GaussianEstimator, b: &GaussianEstimator) -> Result<(), FusionError> {
    if a.dim() != b.dim() {
        return Err(FusionError::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// Covariance intersection on the closed interval; the public entry point
/// restricts `w` to `(0, 1)`.
pub(crate) fn blend(e1: &GaussianEstimator, e2: &GaussianEstimator, w: f64) -> Result<GaussianEstimator, FusionError> {
    check_dims(e1, e2)?;
    let p1 = e1.precision();
    let p2 = e2.precision();
    let fused_precision = symmetrize(&p1 * (1.0 - w) + &p2 * w);
    let cov = spd_inverse(&fused_precision)?;
    let shift = (&p1 * &e1.mean) * (1.0 - w) + (&p2 * &e2.mean) * w;
    let mean = &cov * shift;
    Ok(GaussianEstimator::from_parts(mean, cov))
}

/// `C_a^-1 = (1 - w) C_1^-1 + w C_2^-1`,
/// `X_a = C_a ((1 - w) C_1^-1 X_1 + w C_2^-1 X_2)`.
pub fn ci_fuse(e1: &GaussianEstimator, e2: &GaussianEstimator, w: f64) -> Result<GaussianEstimator, FusionError> {
    check_weight(w)?;
    blend(e1, e2, w)
}

/// The unique `x` with `ci_fuse(x, y, w) == z`.
pub fn ci_unfuse(z: &GaussianEstimator, y: &GaussianEstimator, w: f64) -> Result<GaussianEstimator, FusionError> {
    check_weight(w)?;
    check_dims(z, y)?;
    let pz = z.precision();
    let py = y.precision();
    let px = symmetrize((&pz - &py * w) / (1.0 - w));
    let min = min_eigenvalue(&px);
    if min <= SPD_TOL {
        return Err(FusionError::RecoveredNotPositiveDefinite(min));
    }
    let cov = spd_inverse(&px)?;
    let shift = ((&pz * &z.mean) - (&py * &y.mean) * w) / (1.0 - w);
    let mean = &cov * shift;
    Ok(GaussianEstimator::from_parts(mean, cov))
}

/// `claimed - actual` is positive semi-definite up to `tol`.
pub fn is_consistent(claimed: &DMatrix<f64>, actual: &DMatrix<f64>, tol: f64) -> Result<bool, FusionError> {
    if claimed.shape() != actual.shape() || !claimed.is_square() {
        return Err(FusionError::DimensionMismatch(claimed.nrows(), actual.nrows()));
    }
    let diff = symmetrize(claimed - actual);
    Ok(min_eigenvalue(&diff) >= -tol)
}

/// `{v : (v - c)^T S^-1 (v - c) <= a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipseSpec {
    center: DVector<f64>,
    shape: DMatrix<f64>,
    level: f64,
    shape_inverse: DMatrix<f64>,
}

impl EllipseSpec {
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>, level: f64) -> Result<Self, FusionError> {
        if shape.nrows() != center.len() {
            return Err(FusionError::DimensionMismatch(center.len(), shape.nrows()));
        }
        check_spd(&shape)?;
        if !(level > 0.0) {
            return Err(FusionError::InvalidLevel(level));
        }
        let shape_inverse = spd_inverse(&shape)?;
        Ok(Self {
            center,
            shape,
            level,
            shape_inverse,
        })
    }

    /// Covariance ellipse of an estimator about its own mean.
    pub fn of_estimator(e: &GaussianEstimator, level: f64) -> Result<Self, FusionError> {
        Self::new(e.mean.clone(), e.cov.clone(), level)
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn quadratic_form(&self, v: &DVector<f64>) -> f64 {
        let d = v - &self.center;
        (d.transpose() * &self.shape_inverse * &d)[(0, 0)]
    }

    pub fn contains(&self, v: &DVector<f64>, slack: f64) -> bool {
        self.quadratic_form(v) <= self.level + slack
    }
}

/// Random SPD matrix `A A^T / d + 0.5 I` with standard normal `A`.
pub fn random_spd<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    symmetrize(&a * a.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.5)
}

pub fn random_estimator<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> GaussianEstimator {
    let mean = DVector::<f64>::from_fn(dim, |_, _| rng.sample(StandardNormal));
    GaussianEstimator::from_parts(mean, random_spd(dim, rng))
}
