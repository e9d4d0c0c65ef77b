//! Information-geometric reading of covariance intersection: the fused
//! estimator is the normalized weighted geometric mean of the two densities
//! and the minimizer of a weighted KL functional, so varying the weight
//! traces a curve between the inputs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::gaussian::{blend, check_weight, log_det_spd, matrix_rows, spd_inverse, symmetrize, GaussianEstimator};
use super::FusionError;

/// Natural parameters of `exp(-x^T L x / 2 + h^T x)`.
struct NaturalParams {
    precision: DMatrix<f64>,
    shift: DVector<f64>,
}

impl NaturalParams {
    fn of(e: &GaussianEstimator) -> Self {
        let precision = e.precision();
        let shift = &precision * e.mean();
        Self { precision, shift }
    }

    /// Raising the density to the power `k` scales both parameters.
    fn pow(self, k: f64) -> Self {
        Self {
            precision: self.precision * k,
            shift: self.shift * k,
        }
    }

    /// Multiplying densities adds natural parameters.
    fn mul(self, other: Self) -> Self {
        Self {
            precision: self.precision + other.precision,
            shift: self.shift + other.shift,
        }
    }

    fn into_moments(self) -> Result<GaussianEstimator, FusionError> {
        let cov = spd_inverse(&symmetrize(self.precision))?;
        let mean = &cov * self.shift;
        Ok(GaussianEstimator::from_parts(mean, cov))
    }
}

/// Moments of the Gaussian proportional to `p^(1-w) q^w`.
pub fn geometric_mean_density(p: &GaussianEstimator, q: &GaussianEstimator, w: f64) -> Result<GaussianEstimator, FusionError> {
    check_weight(w)?;
    geometric_mean_closed(p, q, w)
}

fn geometric_mean_closed(p: &GaussianEstimator, q: &GaussianEstimator, w: f64) -> Result<GaussianEstimator, FusionError> {
    if p.dim() != q.dim() {
        return Err(FusionError::DimensionMismatch(p.dim(), q.dim()));
    }
    NaturalParams::of(p)
        .pow(1.0 - w)
        .mul(NaturalParams::of(q).pow(w))
        .into_moments()
}

/// `KL(p || q)` for Gaussians.
pub fn kl_gauss(p: &GaussianEstimator, q: &GaussianEstimator) -> Result<f64, FusionError> {
    if p.dim() != q.dim() {
        return Err(FusionError::DimensionMismatch(p.dim(), q.dim()));
    }
    let d = p.dim() as f64;
    let q_precision = q.precision();
    let diff = q.mean() - p.mean();
    let trace = (&q_precision * p.cov()).trace();
    let mahalanobis = (diff.transpose() * &q_precision * &diff)[(0, 0)];
    let kl = 0.5 * (trace + mahalanobis - d + log_det_spd(q.cov()) - log_det_spd(p.cov()));
    Ok(kl.max(0.0))
}

/// `(1 - w) KL(g || p) + w KL(g || q)`.
pub fn j_functional(g: &GaussianEstimator, p: &GaussianEstimator, q: &GaussianEstimator, w: f64) -> Result<f64, FusionError> {
    Ok((1.0 - w) * kl_gauss(g, p)? + w * kl_gauss(g, q)?)
}

/// Random perturbation of an estimator: mean shifted by `delta * u` and
/// covariance congruence-transformed by `I + delta * B`, with standard normal
/// `u`, `B`. Returns the perturbed estimator and its Euclidean parameter
/// distance from the original.
pub fn perturb<R: Rng + ?Sized>(e: &GaussianEstimator, delta: f64, rng: &mut R) -> (GaussianEstimator, f64) {
    let d = e.dim();
    loop {
        let u = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        let b = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
        let t = DMatrix::<f64>::identity(d, d) + b * delta;
        let mean = e.mean() + u * delta;
        let cov = symmetrize(&t * e.cov() * t.transpose());
        if let Ok(g) = GaussianEstimator::new(mean, cov) {
            let dist = ((g.mean() - e.mean()).norm_squared() + (g.cov() - e.cov()).norm_squared()).sqrt();
            return (g, dist);
        }
    }
}

/// Perturbation radii checked by [`verify_geodesic`].
pub const PERTURBATION_DELTAS: [f64; 2] = [0.01, 0.1];
/// Samples per perturbation radius.
pub const CLOUD_SIZE: usize = 200;
/// Offset used to probe the endpoint limits.
pub const ENDPOINT_EPS: f64 = 1e-9;
/// Endpoint agreement tolerance.
pub const ENDPOINT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicRow {
    pub omega: f64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    /// Fused estimator equals the geometric-mean moments exactly.
    pub matches_density: bool,
    pub j_fused: f64,
    /// Smallest `J(g) - J(fused)` over the perturbation cloud.
    pub min_excess: f64,
    /// No perturbation has a smaller J.
    pub minimal: bool,
    /// Perturbations at distance >= delta/2 have strictly larger J.
    pub strict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicReport {
    pub dim: usize,
    pub grid: usize,
    pub start_error: f64,
    pub end_error: f64,
    pub endpoints_ok: bool,
    pub rows: Vec<GeodesicRow>,
    pub all_passed: bool,
}

/// Checks the fused curve between `p` and `q` on `grid` evenly spaced
/// weights in `[0, 1]`.
pub fn verify_geodesic(p: &GaussianEstimator, q: &GaussianEstimator, grid: usize, seed: u64) -> Result<GeodesicReport, FusionError> {
    if grid < 2 {
        return Err(FusionError::GridTooSmall(grid));
    }
    if p.dim() != q.dim() {
        return Err(FusionError::DimensionMismatch(p.dim(), q.dim()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let endpoint_error = |e: &GaussianEstimator, target: &GaussianEstimator| {
        e.max_abs_diff(target) / target.cov().amax().max(target.mean().amax()).max(1.0)
    };
    let start_error = endpoint_error(&blend(p, q, ENDPOINT_EPS)?, p);
    let end_error = endpoint_error(&blend(p, q, 1.0 - ENDPOINT_EPS)?, q);
    let endpoints_ok = start_error <= ENDPOINT_TOL && end_error <= ENDPOINT_TOL;

    let mut rows = Vec::with_capacity(grid);
    for i in 0..grid {
        let omega = i as f64 / (grid - 1) as f64;
        let fused = blend(p, q, omega)?;
        let density = geometric_mean_closed(p, q, omega)?;
        let matches_density = fused == density;
        let j_fused = j_functional(&fused, p, q, omega)?;
        let slack = 1e-12 * j_fused.abs().max(1.0);
        let mut min_excess = f64::INFINITY;
        let mut strict = true;
        for &delta in &PERTURBATION_DELTAS {
            for _ in 0..CLOUD_SIZE {
                let (g, dist) = perturb(&fused, delta, &mut rng);
                let excess = j_functional(&g, p, q, omega)? - j_fused;
                min_excess = min_excess.min(excess);
                if dist >= delta / 2.0 && excess <= 0.0 {
                    strict = false;
                }
            }
        }
        rows.push(GeodesicRow {
            omega,
            mean: fused.mean().iter().copied().collect(),
            cov: matrix_rows(fused.cov()),
            matches_density,
            j_fused,
            min_excess,
            minimal: min_excess >= -slack,
            strict,
        });
    }
    let all_passed = endpoints_ok && rows.iter().all(|r| r.matches_density && r.minimal && r.strict);
    Ok(GeodesicReport {
        dim: p.dim(),
        grid,
        start_error,
        end_error,
        endpoints_ok,
        rows,
        all_passed,
    })
}
