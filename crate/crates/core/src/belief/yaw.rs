use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{spherical_coords, wrap_angle, CameraPose, Vec3};
use crate::perception::Detection;
use crate::scene::Symmetry;

/// Running circular estimate of an object's yaw.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct YawBelief {
    sum_sin: f64,
    sum_cos: f64,
    pub count: u32,
}

impl YawBelief {
    pub const MAX_DISPERSION: f64 = PI;

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0 && self.resultant_length() > 1e-12).then(|| self.sum_sin.atan2(self.sum_cos))
    }

    /// Mean resultant length in [0, 1].
    pub fn resultant_length(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.sum_sin.hypot(self.sum_cos) / self.count as f64).min(1.0)
    }

    /// Circular standard deviation `sqrt(-2 ln R)`, capped at π.
    pub fn dispersion(&self) -> f64 {
        let r = self.resultant_length();
        if r <= 0.0 {
            return Self::MAX_DISPERSION;
        }
        (-2.0 * r.ln()).max(0.0).sqrt().min(Self::MAX_DISPERSION)
    }

    pub fn add_sample(&mut self, yaw: f64) {
        self.sum_sin += yaw.sin();
        self.sum_cos += yaw.cos();
        self.count += 1;
    }

    /// Folds in the yaw implied by a detection seen from `camera`, with the
    /// object assumed at `believed_position`.
    pub fn update(&mut self, d: &Detection, camera: &CameraPose, believed_position: &Vec3, symmetry: Symmetry) {
        if symmetry.is_continuous() {
            return;
        }
        let (_, _, azimuth) = spherical_coords(&camera.position, believed_position);
        self.add_sample(wrap_angle(azimuth - d.pose_estimate.azimuth_rel));
    }
}
