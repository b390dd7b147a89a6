//! Object-position beliefs as weighted particle sets.

mod bank;
mod compressed;
mod yaw;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{backproject, CameraModel, CameraPose, Frustum, GeometryError, Ray, Vec3};
use crate::perception::{distance_from_scale, Detection};

pub use bank::{histogram_kl, BeliefBank, CategoryBelief, CategoryUpdate};
pub use compressed::CompressedBelief;
pub use yaw::YawBelief;

/// Axis-aligned box the position beliefs live in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefBounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl Default for BeliefBounds {
    /// Table surface plus the height band object centers occupy.
    fn default() -> Self {
        Self {
            min: Vec3::new(-0.5, -0.5, 0.0),
            max: Vec3::new(0.5, 0.5, 0.2),
        }
    }
}

impl BeliefBounds {
    pub fn clamp(&self, p: &Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn volume(&self) -> f64 {
        (self.max - self.min).product()
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        Vec3::new(
            rng.random_range(self.min.x..=self.max.x),
            rng.random_range(self.min.y..=self.max.y),
            rng.random_range(self.min.z..=self.max.z),
        )
    }
}

/// Fixed histogram over the belief bounds, used for entropy estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramGrid {
    pub bounds: BeliefBounds,
    pub dims: [usize; 3],
}

impl Default for HistogramGrid {
    fn default() -> Self {
        Self {
            bounds: BeliefBounds::default(),
            dims: [20, 20, 10],
        }
    }
}

impl HistogramGrid {
    pub fn num_bins(&self) -> usize {
        self.dims.iter().product()
    }

    #[inline]
    pub fn bin_index(&self, p: &Vec3) -> usize {
        let mut idx = [0usize; 3];
        for axis in 0..3 {
            let span = self.bounds.max[axis] - self.bounds.min[axis];
            let t = (p[axis] - self.bounds.min[axis]) / span * self.dims[axis] as f64;
            idx[axis] = (t.floor().max(0.0) as usize).min(self.dims[axis] - 1);
        }
        (idx[2] * self.dims[1] + idx[1]) * self.dims[0] + idx[0]
    }

    /// Aggregates `weights` of `points` into per-bin mass.
    pub fn accumulate<'a>(&self, points: &[Vec3], weights: impl Iterator<Item = f64> + 'a) -> Vec<f64> {
        let mut bins = vec![0.0; self.num_bins()];
        for (p, w) in points.iter().zip(weights) {
            bins[self.bin_index(p)] += w;
        }
        bins
    }
}

/// Shannon entropy (nats) of a mass vector, normalized by its total.
pub fn entropy_of_masses(masses: &[f64]) -> f64 {
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -masses
        .iter()
        .filter(|m| **m > 0.0)
        .map(|m| {
            let p = m / total;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Result of a weight update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[must_use]
pub enum UpdateStatus {
    Updated,
    /// All weights vanished; the belief was reset to uniform weights.
    DegenerateFallback,
}

/// Which reading of the detection covariance values to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadInterpretation {
    Variance,
    StdDev,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeliefConfig {
    pub num_particles: usize,
    pub jitter_std: f64,
    pub depth_spread: f64,
    pub lateral_spread: f64,
    pub spread_interpretation: SpreadInterpretation,
    /// Absolute pre-normalization weight for in-view particles when the
    /// object is not detected.
    pub negative_evidence_weight: f64,
    /// Resample when ESS drops below this fraction of N.
    pub resample_ess_fraction: f64,
    pub kde_bandwidth: f64,
    pub grid: HistogramGrid,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        Self {
            num_particles: 10_000,
            jitter_std: 0.025,
            depth_spread: 0.1973 / 2.0,
            lateral_spread: 0.02,
            spread_interpretation: SpreadInterpretation::Variance,
            negative_evidence_weight: 1e-5,
            resample_ess_fraction: 0.5,
            kde_bandwidth: 0.05,
            grid: HistogramGrid::default(),
        }
    }
}

impl BeliefConfig {
    pub fn variance_depth(&self) -> f64 {
        match self.spread_interpretation {
            SpreadInterpretation::Variance => self.depth_spread,
            SpreadInterpretation::StdDev => self.depth_spread * self.depth_spread,
        }
    }

    pub fn variance_lateral(&self) -> f64 {
        match self.spread_interpretation {
            SpreadInterpretation::Variance => self.lateral_spread,
            SpreadInterpretation::StdDev => self.lateral_spread * self.lateral_spread,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.num_particles == 0 {
            return Err("num_particles must be at least 1".into());
        }
        if !(self.depth_spread > 0.0 && self.lateral_spread > 0.0) {
            return Err("detection spreads must be positive".into());
        }
        if !(self.jitter_std >= 0.0 && self.kde_bandwidth > 0.0) {
            return Err("jitter_std must be >= 0 and kde_bandwidth > 0".into());
        }
        if !(0.0..=1.0).contains(&self.resample_ess_fraction) {
            return Err("resample_ess_fraction must lie in [0, 1]".into());
        }
        if self.grid.dims.iter().any(|d| *d == 0) {
            return Err("histogram dims must be positive".into());
        }
        Ok(())
    }
}

/// Gaussian ellipsoid along a viewing ray: one variance along the ray and an
/// isotropic variance across it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayLikelihood {
    pub ray: Ray,
    pub depth_mean: f64,
    pub variance_depth: f64,
    pub variance_lateral: f64,
}

impl RayLikelihood {
    pub fn from_detection(
        d: &Detection,
        camera: &CameraPose,
        model: &CameraModel,
        cfg: &BeliefConfig,
    ) -> Result<Self, GeometryError> {
        let ray = backproject(camera, model, &d.pixel_center)?;
        let depth_mean = distance_from_scale(d.scale).map_err(|e| GeometryError::InvalidViewpoint(e.to_string()))?;
        Ok(Self {
            ray,
            depth_mean,
            variance_depth: cfg.variance_depth(),
            variance_lateral: cfg.variance_lateral(),
        })
    }

    pub fn mean(&self) -> Vec3 {
        self.ray.at(self.depth_mean)
    }

    fn norm_const(&self) -> f64 {
        (2.0 * PI).powf(-1.5) / (self.variance_depth * self.variance_lateral * self.variance_lateral).sqrt()
    }

    /// Mahalanobis term `-0.5 * d^T S^-1 d`.
    #[inline]
    fn exponent(&self, mean: &Vec3, p: &Vec3) -> f64 {
        let diff = p - mean;
        let along = diff.dot(&self.ray.direction);
        let perp2 = (diff.norm_squared() - along * along).max(0.0);
        -0.5 * (along * along / self.variance_depth + perp2 / self.variance_lateral)
    }

    pub fn density(&self, p: &Vec3) -> f64 {
        self.norm_const() * self.exponent(&self.mean(), p).exp()
    }

    pub fn log_density(&self, p: &Vec3) -> f64 {
        self.norm_const().ln() + self.exponent(&self.mean(), p)
    }
}

/// Weighted particle approximation of one object's position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleBelief {
    pub particles: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub bounds: BeliefBounds,
}

impl ParticleBelief {
    pub fn init_uniform<R: Rng + ?Sized>(bounds: BeliefBounds, n: usize, rng: &mut R) -> Self {
        let n = n.max(1);
        let particles = (0..n).map(|_| bounds.sample_uniform(rng)).collect();
        Self {
            particles,
            weights: vec![1.0 / n as f64; n],
            bounds,
        }
    }

    /// Builds a belief from explicit particles and unnormalized weights.
    pub fn from_weighted(particles: Vec<Vec3>, weights: Vec<f64>, bounds: BeliefBounds) -> Self {
        assert_eq!(particles.len(), weights.len());
        assert!(!particles.is_empty());
        let mut b = Self {
            particles,
            weights,
            bounds,
        };
        let _ = b.normalize();
        b
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    fn normalize(&mut self) -> UpdateStatus {
        let total: f64 = self.weights.iter().sum();
        if total > 0.0 && total.is_finite() {
            let inv = 1.0 / total;
            self.weights.iter_mut().for_each(|w| *w *= inv);
            UpdateStatus::Updated
        } else {
            let u = 1.0 / self.len() as f64;
            self.weights.iter_mut().for_each(|w| *w = u);
            UpdateStatus::DegenerateFallback
        }
    }

    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn mean(&self) -> Vec3 {
        self.particles
            .iter()
            .zip(&self.weights)
            .fold(Vec3::zeros(), |acc, (p, w)| acc + *w * p)
    }

    pub fn covariance(&self) -> nalgebra::Matrix3<f64> {
        let m = self.mean();
        self.particles
            .iter()
            .zip(&self.weights)
            .fold(nalgebra::Matrix3::zeros(), |acc, (p, w)| {
                let d = p - m;
                acc + *w * d * d.transpose()
            })
    }

    /// Multiplies weights by a per-particle likelihood and renormalizes.
    pub fn reweight(&mut self, likelihood: impl Fn(&Vec3) -> f64) -> UpdateStatus {
        for (p, w) in self.particles.iter().zip(self.weights.iter_mut()) {
            *w *= likelihood(p);
        }
        self.normalize()
    }

    pub fn update_with_ray(&mut self, rl: &RayLikelihood) -> UpdateStatus {
        let mean = rl.mean();
        let c = rl.norm_const();
        self.reweight(|p| c * rl.exponent(&mean, p).exp())
    }

    pub fn update_detection(
        &mut self,
        d: &Detection,
        camera: &CameraPose,
        model: &CameraModel,
        cfg: &BeliefConfig,
    ) -> Result<UpdateStatus, GeometryError> {
        let rl = RayLikelihood::from_detection(d, camera, model, cfg)?;
        Ok(self.update_with_ray(&rl))
    }

    /// Negative evidence: particles in view and closer than
    /// `nearest_estimated_depth` get their weight capped at `floor` before
    /// renormalizing.
    pub fn update_no_detection(
        &mut self,
        camera: &CameraPose,
        model: &CameraModel,
        nearest_estimated_depth: f64,
        floor: f64,
    ) -> UpdateStatus {
        let frustum = Frustum::new(camera, model);
        let limit2 = if nearest_estimated_depth.is_finite() {
            nearest_estimated_depth * nearest_estimated_depth
        } else {
            f64::INFINITY
        };
        let mut affected = 0usize;
        for (p, w) in self.particles.iter().zip(self.weights.iter_mut()) {
            if (p - camera.position).norm_squared() < limit2 && frustum.contains(p) {
                affected += 1;
                *w = w.min(floor);
            }
        }
        if affected == self.len() {
            let u = 1.0 / self.len() as f64;
            self.weights.iter_mut().for_each(|w| *w = u);
            return UpdateStatus::DegenerateFallback;
        }
        if affected == 0 {
            return UpdateStatus::Updated;
        }
        self.normalize()
    }

    /// Total weight of particles inside the camera frustum.
    pub fn mass_in_view(&self, camera: &CameraPose, model: &CameraModel) -> f64 {
        let frustum = Frustum::new(camera, model);
        self.particles
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| frustum.contains(p))
            .map(|(_, w)| w)
            .sum()
    }

    pub fn predict_jitter<R: Rng + ?Sized>(&mut self, std: f64, rng: &mut R) {
        if std <= 0.0 {
            return;
        }
        for p in self.particles.iter_mut() {
            let noise = Vec3::new(
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            );
            *p = self.bounds.clamp(&(*p + std * noise));
        }
    }

    /// Systematic resampling to N equally weighted particles.
    pub fn resample_systematic<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.len();
        let indices = systematic_indices(&self.weights, n, rng.random::<f64>());
        self.particles = indices.iter().map(|&i| self.particles[i]).collect();
        self.weights = vec![1.0 / n as f64; n];
    }

    /// Resamples when ESS falls below `fraction * N`; returns whether it did.
    pub fn maybe_resample<R: Rng + ?Sized>(&mut self, fraction: f64, rng: &mut R) -> bool {
        if self.effective_sample_size() < fraction * self.len() as f64 {
            self.resample_systematic(rng);
            true
        } else {
            false
        }
    }

    /// `m` positions drawn by systematic sampling on the weights.
    pub fn subsample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Vec<Vec3> {
        systematic_indices(&self.weights, m, rng.random::<f64>())
            .into_iter()
            .map(|i| self.particles[i])
            .collect()
    }

    pub fn histogram(&self, grid: &HistogramGrid) -> Vec<f64> {
        grid.accumulate(&self.particles, self.weights.iter().copied())
    }

    /// Entropy (nats) of the weights aggregated on the histogram grid.
    pub fn entropy(&self, grid: &HistogramGrid) -> f64 {
        entropy_of_masses(&self.histogram(grid))
    }

    /// Gaussian kernel density estimate at `p`.
    pub fn density_at(&self, p: &Vec3, bandwidth: f64) -> f64 {
        kde(&self.particles, &self.weights, p, bandwidth)
    }

    pub fn compress(&self, grid: &HistogramGrid) -> CompressedBelief {
        CompressedBelief::from_belief(self, grid)
    }
}

pub(crate) fn kde(points: &[Vec3], weights: &[f64], p: &Vec3, bandwidth: f64) -> f64 {
    let h2 = bandwidth * bandwidth;
    let norm = (2.0 * PI * h2).powf(-1.5);
    let inv = -0.5 / h2;
    // Kernel contributions beyond 8 bandwidths are below 1e-13 of the peak.
    let cutoff = 64.0 * h2;
    let s: f64 = points
        .iter()
        .zip(weights)
        .filter_map(|(x, w)| {
            let d2 = (x - p).norm_squared();
            (d2 < cutoff).then(|| w * (inv * d2).exp())
        })
        .sum();
    norm * s
}

/// Indices selected by systematic resampling with offset `u0 in [0, 1)`.
pub fn systematic_indices(weights: &[f64], m: usize, u0: f64) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let step = total / m as f64;
    let mut out = Vec::with_capacity(m);
    let mut cumulative = weights[0];
    let mut i = 0;
    for k in 0..m {
        let u = (u0 + k as f64) * step;
        while u >= cumulative && i + 1 < weights.len() {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pixel, Viewpoint};
    use crate::perception::PoseEstimate;
    use crate::rng_from;
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix3;

    fn flat_belief(points: Vec<Vec3>) -> ParticleBelief {
        let n = points.len();
        ParticleBelief::from_weighted(points, vec![1.0; n], BeliefBounds::default())
    }

    #[test]
    fn uniform_init() {
        let mut rng = rng_from(1, 0);
        let b = ParticleBelief::init_uniform(BeliefBounds::default(), 10_000, &mut rng);
        assert!(b.weights.iter().all(|w| *w == 1e-4));
        assert!(b.particles.iter().all(|p| b.bounds.contains(p)));
        let again = ParticleBelief::init_uniform(BeliefBounds::default(), 10_000, &mut rng_from(1, 0));
        assert_eq!(b, again);
    }

    #[test]
    fn uniform_entropy_close_to_log_occupied_bins() {
        let grid = HistogramGrid::default();
        let b = ParticleBelief::init_uniform(BeliefBounds::default(), 10_000, &mut rng_from(5, 0));
        let occupied = b.histogram(&grid).iter().filter(|m| **m > 0.0).count();
        let h = b.entropy(&grid);
        let reference = (occupied as f64).ln();
        assert!((h - reference).abs() / reference < 0.05, "h={h} ref={reference}");
    }

    fn mvn_density(mean: &Vec3, cov: &Matrix3<f64>, p: &Vec3) -> f64 {
        let d = p - mean;
        let inv = cov.try_inverse().unwrap();
        let q = (d.transpose() * inv * d)[(0, 0)];
        (2.0 * PI).powf(-1.5) / cov.determinant().sqrt() * (-0.5 * q).exp()
    }

    fn ray_cov(dir: &Vec3, vd: f64, vl: f64) -> Matrix3<f64> {
        let u = dir.normalize();
        vd * u * u.transpose() + vl * (Matrix3::identity() - u * u.transpose())
    }

    #[test]
    fn ray_likelihood_peak_value() {
        let rl = RayLikelihood {
            ray: Ray {
                origin: Vec3::new(0.4, 0.1, 0.5),
                direction: Vec3::new(-0.6, -0.1, -0.7).normalize(),
            },
            depth_mean: 0.55,
            variance_depth: 0.1973 / 2.0,
            variance_lateral: 0.02,
        };
        // Frozen from the direct multivariate-normal oracle below.
        assert_abs_diff_eq!(rl.density(&rl.mean()), 10.107_684_024_259_017, epsilon = 1e-9);
        let cov = ray_cov(&rl.ray.direction, rl.variance_depth, rl.variance_lateral);
        let mut rng = rng_from(9, 0);
        for _ in 0..200 {
            let p = rl.mean() + BeliefBounds::default().sample_uniform(&mut rng);
            let oracle = mvn_density(&rl.mean(), &cov, &p);
            assert_abs_diff_eq!(rl.density(&p), oracle, epsilon = 1e-9 * oracle.max(1.0));
            assert!(rl.density(&p) <= rl.density(&rl.mean()));
            assert_abs_diff_eq!(rl.log_density(&p), oracle.ln(), epsilon = 1e-9);
        }
    }

    #[test]
    fn ray_likelihood_lateral_isotropy() {
        let dir = Vec3::new(0.2, -0.3, -0.9).normalize();
        let rl = RayLikelihood {
            ray: Ray {
                origin: Vec3::zeros(),
                direction: dir,
            },
            depth_mean: 0.5,
            variance_depth: 0.09865,
            variance_lateral: 0.02,
        };
        let perp = dir.cross(&Vec3::x()).normalize();
        let m = rl.mean();
        assert_abs_diff_eq!(rl.density(&(m + 0.1 * perp)), rl.density(&(m - 0.1 * perp)), epsilon = 1e-12);
    }

    fn detection_at(px: Pixel, scale: f64) -> Detection {
        Detection {
            category: 0,
            presence_prob: 1.0,
            pixel_center: px,
            scale,
            pose_estimate: PoseEstimate {
                azimuth_rel: 0.0,
                elevation: 0.0,
                azimuth_std: 0.1,
                elevation_std: 0.1,
            },
        }
    }

    #[test]
    fn detection_update_is_bayes_with_uniform_prior() {
        let cfg = BeliefConfig::default();
        let model = CameraModel::default();
        let cam = Viewpoint::new(Vec3::zeros(), 0.65, 0.78, 0.0).unwrap().to_camera_pose();
        let mut b = ParticleBelief::init_uniform(BeliefBounds::default(), 500, &mut rng_from(2, 0));
        let d = detection_at(Pixel::new(200.0, 260.0), 0.7);
        let rl = RayLikelihood::from_detection(&d, &cam, &model, &cfg).unwrap();
        let lik: Vec<f64> = b.particles.iter().map(|p| rl.density(p)).collect();
        let total: f64 = lik.iter().sum();
        assert_eq!(b.update_detection(&d, &cam, &model, &cfg).unwrap(), UpdateStatus::Updated);
        for (w, l) in b.weights.iter().zip(&lik) {
            assert_abs_diff_eq!(*w, l / total, epsilon = 1e-15);
        }
    }

    #[test]
    fn repeated_detections_shrink_variance() {
        let cfg = BeliefConfig::default();
        let model = CameraModel::default();
        let cam = Viewpoint::new(Vec3::new(0.1, 0.0, 0.05), 0.5, 0.6, 0.3).unwrap().to_camera_pose();
        let mut b = ParticleBelief::init_uniform(BeliefBounds::default(), 5000, &mut rng_from(3, 0));
        let d = detection_at(Pixel::new(240.0, 240.0), 0.8);
        let mut last = b.covariance().trace();
        for _ in 0..5 {
            let _ = b.update_detection(&d, &cam, &model, &cfg).unwrap();
            let tr = b.covariance().trace();
            assert!(tr <= last + 1e-12);
            last = tr;
        }
    }

    #[test]
    fn degenerate_detection_falls_back_to_uniform() {
        let mut b = flat_belief(vec![Vec3::new(0.4, 0.4, 0.0), Vec3::new(0.3, 0.4, 0.0)]);
        let status = b.reweight(|_| 0.0);
        assert_eq!(status, UpdateStatus::DegenerateFallback);
        assert_eq!(b.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn negative_evidence_half_in_view() {
        let model = CameraModel::default();
        let cam = Viewpoint::new(Vec3::new(0.3, 0.0, 0.0), 0.3, 1.2, 0.0).unwrap().to_camera_pose();
        let inside = Vec3::new(0.3, 0.0, 0.0);
        let outside = Vec3::new(-0.45, 0.45, 0.1);
        assert!(crate::geometry::in_frustum(&cam, &model, &inside));
        assert!(!crate::geometry::in_frustum(&cam, &model, &outside));
        let mut pts = vec![inside; 5000];
        pts.extend(vec![outside; 5000]);
        let mut b = flat_belief(pts);
        let status = b.update_no_detection(&cam, &model, f64::INFINITY, 1e-5);
        assert_eq!(status, UpdateStatus::Updated);
        let out_mass: f64 = b.weights[5000..].iter().sum();
        // 0.5 / (0.5 + 5000 * 1e-5)
        assert_abs_diff_eq!(out_mass, 0.5 / 0.55, epsilon = 1e-9);
        assert_abs_diff_eq!(out_mass, 0.909_090_909_090_909, epsilon = 1e-9);
    }

    #[test]
    fn negative_evidence_edge_cases() {
        let model = CameraModel::default();
        let cam = Viewpoint::new(Vec3::new(0.3, 0.0, 0.0), 0.3, 1.2, 0.0).unwrap().to_camera_pose();
        let inside = Vec3::new(0.3, 0.0, 0.0);
        let outside = Vec3::new(-0.45, 0.45, 0.1);

        let mut all_in = ParticleBelief::from_weighted(vec![inside; 4], vec![0.1, 0.2, 0.3, 0.4], BeliefBounds::default());
        assert_eq!(
            all_in.update_no_detection(&cam, &model, f64::INFINITY, 1e-5),
            UpdateStatus::DegenerateFallback
        );
        assert!(all_in.weights.iter().all(|w| *w == 0.25));

        let mut none_in = ParticleBelief::from_weighted(vec![outside; 3], vec![1.0, 2.0, 3.0], BeliefBounds::default());
        let before = none_in.clone();
        assert_eq!(none_in.update_no_detection(&cam, &model, f64::INFINITY, 1e-5), UpdateStatus::Updated);
        assert_eq!(none_in, before);

        // Beyond the nearest estimated object: untouched.
        let mut far = flat_belief(vec![inside, outside]);
        let before = far.clone();
        let _ = far.update_no_detection(&cam, &model, 0.1, 1e-5);
        assert_eq!(far, before);
    }

    #[test]
    fn jitter() {
        let mut rng = rng_from(4, 0);
        let mut b = ParticleBelief::init_uniform(BeliefBounds::default(), 1000, &mut rng);
        let before = b.clone();
        b.predict_jitter(0.0, &mut rng);
        assert_eq!(b, before);
        b.predict_jitter(0.3, &mut rng);
        assert!(b.particles.iter().all(|p| b.bounds.contains(p)));
        assert_eq!(b.weights, before.weights);
    }

    #[test]
    fn resampling() {
        let mut rng = rng_from(6, 0);
        let pts: Vec<Vec3> = (0..100).map(|i| Vec3::new(i as f64 * 0.01 - 0.5, 0.0, 0.1)).collect();
        let mut w = vec![0.0; 100];
        w[37] = 1.0;
        let mut b = ParticleBelief::from_weighted(pts, w, BeliefBounds::default());
        b.resample_systematic(&mut rng);
        assert!(b.particles.iter().all(|p| *p == Vec3::new(-0.13, 0.0, 0.1)));
        assert_abs_diff_eq!(b.effective_sample_size(), 100.0, epsilon = 1e-9);

        // Replication counts are floor/ceil of N * w_i.
        let weights = vec![0.1, 0.25, 0.05, 0.6];
        for k in 0..50 {
            let idx = systematic_indices(&weights, 20, k as f64 / 50.0);
            for (i, w) in weights.iter().enumerate() {
                let count = idx.iter().filter(|j| **j == i).count() as f64;
                assert!((count - 20.0 * w).abs() < 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn entropy_simple_cases() {
        let grid = HistogramGrid::default();
        let one_bin = flat_belief(vec![Vec3::new(0.01, 0.01, 0.01), Vec3::new(0.02, 0.02, 0.015)]);
        assert_abs_diff_eq!(one_bin.entropy(&grid), 0.0);
        let spread: Vec<Vec3> = (0..7).map(|i| Vec3::new(-0.475 + 0.1 * i as f64, 0.0, 0.05)).collect();
        assert_abs_diff_eq!(flat_belief(spread).entropy(&grid), 7f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn config_interpretations() {
        let cfg = BeliefConfig {
            spread_interpretation: SpreadInterpretation::StdDev,
            ..BeliefConfig::default()
        };
        assert_abs_diff_eq!(cfg.variance_lateral(), 0.0004);
        assert_abs_diff_eq!(BeliefConfig::default().variance_depth(), 0.09865);
        assert!(BeliefConfig::default().validate().is_ok());
        let bad = BeliefConfig {
            num_particles: 0,
            ..BeliefConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
