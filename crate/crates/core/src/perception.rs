//! Synthetic object detector.
//!
//! Stands in for a learned per-category detector: for every category it
//! reports a presence probability, the object's pixel center, its apparent
//! scale and a view-angle pose estimate, corrupted by configurable noise.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{in_frustum, project, spherical_coords, wrap_angle, CameraModel, CameraPose, Pixel, Vec3};
use crate::scene::{Catalog, CategoryId, SceneSpec};

/// Camera distance at which an object appears with unit scale.
pub const REFERENCE_DISTANCE: f64 = 0.4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("value must be positive, got {0}")]
    NonPositive(f64),
    #[error("category {0} is not present in the scene")]
    UnknownCategory(CategoryId),
}

pub fn scale_from_distance(d: f64) -> Result<f64, PerceptionError> {
    if d > 0.0 {
        Ok(REFERENCE_DISTANCE / d)
    } else {
        Err(PerceptionError::NonPositive(d))
    }
}

pub fn distance_from_scale(scale: f64) -> Result<f64, PerceptionError> {
    if scale > 0.0 {
        Ok(REFERENCE_DISTANCE / scale)
    } else {
        Err(PerceptionError::NonPositive(scale))
    }
}

/// View angles of the camera in the object's frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub azimuth_rel: f64,
    pub elevation: f64,
    pub azimuth_std: f64,
    pub elevation_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub category: CategoryId,
    pub presence_prob: f64,
    pub pixel_center: Pixel,
    pub scale: f64,
    pub pose_estimate: PoseEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationBundle {
    /// Indexed by category id.
    pub detections: Vec<Option<Detection>>,
    pub camera: CameraPose,
}

impl ObservationBundle {
    pub fn get(&self, category: CategoryId) -> Option<&Detection> {
        self.detections.get(category).and_then(|d| d.as_ref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub pixel_noise_std: f64,
    pub scale_noise_rel_std: f64,
    pub pose_noise_std: f64,
    pub true_positive_rate: f64,
    pub false_positive_rate: f64,
    pub occlusion_enabled: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            pixel_noise_std: 4.0,
            scale_noise_rel_std: 0.05,
            pose_noise_std: 0.1,
            true_positive_rate: 0.95,
            false_positive_rate: 0.0,
            occlusion_enabled: true,
        }
    }
}

impl NoiseConfig {
    /// Perfect detector: no noise, every visible object detected.
    pub fn noiseless() -> Self {
        Self {
            pixel_noise_std: 0.0,
            scale_noise_rel_std: 0.0,
            pose_noise_std: 0.0,
            true_positive_rate: 1.0,
            false_positive_rate: 0.0,
            occlusion_enabled: true,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let nonneg = [self.pixel_noise_std, self.scale_noise_rel_std, self.pose_noise_std];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err("noise standard deviations must be finite and non-negative".into());
        }
        for (name, r) in [("true_positive_rate", self.true_positive_rate), ("false_positive_rate", self.false_positive_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(format!("{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visibility {
    pub visible: bool,
    pub occlusion_fraction: f64,
}

/// Fraction of a disc of angular radius `a` covered by a disc of radius `b`
/// whose center is `gamma` away (small-angle, planar approximation).
fn disc_overlap_fraction(a: f64, b: f64, gamma: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    if gamma >= a + b {
        return 0.0;
    }
    if gamma + a <= b {
        return 1.0;
    }
    if gamma + b <= a {
        return (b * b) / (a * a);
    }
    let a2 = a * a;
    let b2 = b * b;
    let g2 = gamma * gamma;
    let alpha = ((g2 + a2 - b2) / (2.0 * gamma * a)).clamp(-1.0, 1.0).acos();
    let beta = ((g2 + b2 - a2) / (2.0 * gamma * b)).clamp(-1.0, 1.0).acos();
    let kite = 0.5 * ((-gamma + a + b) * (gamma + a - b) * (gamma - a + b) * (gamma + a + b)).max(0.0).sqrt();
    let lens = a2 * alpha + b2 * beta - kite;
    (lens / (PI * a2)).clamp(0.0, 1.0)
}

/// Angular radius of a sphere of radius `r` seen from distance `d`.
fn angular_radius(r: f64, d: f64) -> f64 {
    if d <= r {
        PI / 2.0
    } else {
        (r / d).asin()
    }
}

/// Whether the category's object is in view, and how much of its proxy
/// sphere is hidden behind nearer objects.
pub fn visibility(
    scene: &SceneSpec,
    catalog: &Catalog,
    camera: &CameraPose,
    model: &CameraModel,
    category: CategoryId,
    occlusion_enabled: bool,
) -> Result<Visibility, PerceptionError> {
    let obj = scene.object(category).ok_or(PerceptionError::UnknownCategory(category))?;
    if !in_frustum(camera, model, &obj.position) {
        return Ok(Visibility {
            visible: false,
            occlusion_fraction: 0.0,
        });
    }
    if !occlusion_enabled {
        return Ok(Visibility {
            visible: true,
            occlusion_fraction: 0.0,
        });
    }
    let radius = |c: CategoryId| catalog.categories.get(c).map(|k| k.proxy_radius).unwrap_or(0.0);
    let to_target = obj.position - camera.position;
    let d_target = to_target.norm();
    let a = angular_radius(radius(category), d_target);
    let mut unoccluded = 1.0;
    for other in scene.objects.iter().filter(|o| o.category != category) {
        let to_other = other.position - camera.position;
        let d_other = to_other.norm();
        if d_other >= d_target {
            continue;
        }
        let b = angular_radius(radius(other.category), d_other);
        let gamma = to_target.angle(&to_other);
        unoccluded *= 1.0 - disc_overlap_fraction(a, b, gamma);
    }
    Ok(Visibility {
        visible: true,
        occlusion_fraction: (1.0 - unoccluded).clamp(0.0, 1.0),
    })
}

/// Noise-free pose angles of `camera` relative to an object at `position` with `yaw`.
pub fn true_pose_angles(camera: &CameraPose, position: &Vec3, yaw: f64) -> (f64, f64) {
    let (_, elevation, azimuth) = spherical_coords(&camera.position, position);
    (wrap_angle(azimuth - yaw), elevation)
}

fn gaussian(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("finite non-negative std")
}

const MIN_SCALE: f64 = 1e-3;
/// Standard deviation of a uniform angle on `[-pi, pi)`.
const UNIFORM_ANGLE_STD: f64 = PI / 1.732_050_807_568_877_2;

/// Runs the synthetic detector for every category of the catalog.
pub fn observe<R: Rng + ?Sized>(
    scene: &SceneSpec,
    catalog: &Catalog,
    camera: &CameraPose,
    model: &CameraModel,
    noise: &NoiseConfig,
    rng: &mut R,
) -> ObservationBundle {
    let pixel_noise = gaussian(noise.pixel_noise_std);
    let scale_noise = gaussian(noise.scale_noise_rel_std);
    let pose_noise = gaussian(noise.pose_noise_std);
    let width = model.image_width as f64;
    let height = model.image_height as f64;
    let clamp_px = |p: Pixel| Pixel::new(p.x.clamp(0.0, width - 1e-9), p.y.clamp(0.0, height - 1e-9));

    let mut detections = Vec::with_capacity(catalog.len());
    for category in catalog.ids() {
        let symmetry = catalog.categories[category].symmetry_order;
        let mut detection = None;
        if let Some(obj) = scene.object(category) {
            let vis = visibility(scene, catalog, camera, model, category, noise.occlusion_enabled)
                .expect("category present");
            if vis.visible {
                let p_detect = noise.true_positive_rate * (1.0 - vis.occlusion_fraction);
                if rng.random::<f64>() < p_detect {
                    let (px, _) = project(camera, model, &obj.position).expect("visible object is in front");
                    let px = clamp_px(px + Pixel::new(pixel_noise.sample(rng), pixel_noise.sample(rng)));
                    let distance = (obj.position - camera.position).norm();
                    let scale = (REFERENCE_DISTANCE / distance * (1.0 + scale_noise.sample(rng))).max(MIN_SCALE);
                    let (az, el) = true_pose_angles(camera, &obj.position, obj.yaw);
                    let el = wrap_angle(el + pose_noise.sample(rng));
                    let (azimuth_rel, azimuth_std) = if symmetry.is_continuous() {
                        (rng.random_range(-PI..PI), UNIFORM_ANGLE_STD)
                    } else {
                        (wrap_angle(az + pose_noise.sample(rng)), noise.pose_noise_std)
                    };
                    detection = Some(Detection {
                        category,
                        presence_prob: noise.true_positive_rate,
                        pixel_center: px,
                        scale,
                        pose_estimate: PoseEstimate {
                            azimuth_rel,
                            elevation: el,
                            azimuth_std,
                            elevation_std: noise.pose_noise_std,
                        },
                    });
                }
            }
        }
        if detection.is_none() && noise.false_positive_rate > 0.0 && rng.random::<f64>() < noise.false_positive_rate {
            detection = Some(Detection {
                category,
                presence_prob: noise.false_positive_rate,
                pixel_center: Pixel::new(rng.random_range(0.0..width), rng.random_range(0.0..height)),
                scale: rng.random_range(0.4..2.0),
                pose_estimate: PoseEstimate {
                    azimuth_rel: rng.random_range(-PI..PI),
                    elevation: rng.random_range(0.0..PI / 2.0),
                    azimuth_std: UNIFORM_ANGLE_STD,
                    elevation_std: UNIFORM_ANGLE_STD,
                },
            });
        }
        detections.push(detection);
    }
    ObservationBundle {
        detections,
        camera: *camera,
    }
}
