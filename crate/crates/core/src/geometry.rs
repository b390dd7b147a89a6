//! Pinhole camera and look-at viewpoint geometry.
//!
//! World frame is z-up with the origin at the table center. Camera frames
//! follow the OpenGL convention: the optical axis is the camera's `-z`, image
//! up is `+y` and image right is `+x`. Pixel rows grow downward.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Rotation3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Pixel = Vector2<f64>;

/// Minimum depth along the optical axis for a point to count as in front.
pub const MIN_DEPTH: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("camera position coincides with the look-at point")]
    ZeroRange,
    #[error("point is not in front of the camera (depth {0})")]
    NotInFront(f64),
    #[error("pixel ({0}, {1}) lies outside the image")]
    OutOfImage(f64, f64),
    #[error("invalid viewpoint: {0}")]
    InvalidViewpoint(String),
}

/// Wraps an angle to `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Unit direction for the given elevation and azimuth.
pub fn spherical_direction(elevation: f64, azimuth: f64) -> Vec3 {
    Vec3::new(
        elevation.cos() * azimuth.cos(),
        elevation.cos() * azimuth.sin(),
        elevation.sin(),
    )
}

/// Spherical coordinates `(range, elevation, azimuth)` of `p` about `center`.
///
/// Elevation is in `[-pi/2, pi/2]`. Directly above or below the center the
/// azimuth is reported as 0.
pub fn spherical_coords(p: &Vec3, center: &Vec3) -> (f64, f64, f64) {
    let d = p - center;
    let range = d.norm();
    if range == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let horizontal = d.x.hypot(d.y);
    let elevation = d.z.atan2(horizontal);
    let azimuth = if horizontal <= 1e-12 * range {
        0.0
    } else {
        wrap_angle(d.y.atan2(d.x))
    };
    (range, elevation, azimuth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub lookat: Vec3,
    pub range: f64,
    pub elevation: f64,
    pub azimuth: f64,
}

impl Viewpoint {
    pub fn new(lookat: Vec3, range: f64, elevation: f64, azimuth: f64) -> Result<Self, GeometryError> {
        let finite = lookat.iter().all(|c| c.is_finite())
            && range.is_finite()
            && elevation.is_finite()
            && azimuth.is_finite();
        if !finite {
            return Err(GeometryError::InvalidViewpoint("non-finite component".into()));
        }
        if range <= 0.0 {
            return Err(GeometryError::InvalidViewpoint(format!("range {range} must be positive")));
        }
        if !(0.0..=PI / 2.0).contains(&elevation) {
            return Err(GeometryError::InvalidViewpoint(format!(
                "elevation {elevation} outside [0, pi/2]"
            )));
        }
        Ok(Self {
            lookat,
            range,
            elevation,
            azimuth: wrap_angle(azimuth),
        })
    }

    pub fn camera_position(&self) -> Vec3 {
        self.lookat + self.range * spherical_direction(self.elevation, self.azimuth)
    }

    pub fn to_camera_pose(&self) -> CameraPose {
        viewpoint_to_camera_pose(self)
    }
}

/// Rigid camera pose. `orientation` maps camera-frame vectors to world frame,
/// so its columns are the camera axes expressed in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Vec3,
    pub orientation: Rotation3<f64>,
}

impl CameraPose {
    /// Camera looking from `position` toward `target`, with image up as close
    /// to world `+z` as possible. Looking straight down, image up is world `+x`.
    pub fn look_at(position: Vec3, target: Vec3) -> Result<Self, GeometryError> {
        let forward = target - position;
        let dist = forward.norm();
        if dist == 0.0 || !dist.is_finite() {
            return Err(GeometryError::ZeroRange);
        }
        let forward = forward / dist;
        let z_axis = -forward;
        let right = forward.cross(&Vec3::z());
        let (x_axis, y_axis) = if right.norm() < 1e-9 {
            // Degenerate: optical axis parallel to world z.
            let up = if forward.z < 0.0 { Vec3::x() } else { -Vec3::x() };
            (up.cross(&z_axis), up)
        } else {
            let x_axis = right.normalize();
            (x_axis, z_axis.cross(&x_axis))
        };
        let m = Matrix3::from_columns(&[x_axis, y_axis, z_axis]);
        Ok(Self {
            position,
            orientation: Rotation3::from_matrix_unchecked(m),
        })
    }

    /// Unit vector along the optical axis in world frame.
    pub fn forward(&self) -> Vec3 {
        -self.orientation.matrix().column(2).into_owned()
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        self.orientation.inverse_transform_vector(&(p - self.position))
    }
}

impl Serialize for CameraPose {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let m = self.orientation.matrix();
        let rows = [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ];
        PoseRepr {
            position: self.position,
            orientation: rows,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CameraPose {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(d)?;
        let r = repr.orientation;
        let m = Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        );
        let orthonormal = (m.transpose() * m - Matrix3::identity()).norm() < 1e-6 && m.determinant() > 0.0;
        if !orthonormal {
            return Err(serde::de::Error::custom("orientation is not a rotation matrix"));
        }
        Ok(Self {
            position: repr.position,
            orientation: Rotation3::from_matrix_unchecked(m),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    position: Vec3,
    /// Row-major rotation matrix.
    orientation: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub image_width: u32,
    pub image_height: u32,
    pub vertical_fov: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            image_width: 480,
            image_height: 480,
            vertical_fov: 60f64.to_radians(),
        }
    }
}

impl CameraModel {
    pub fn new(image_width: u32, image_height: u32, vertical_fov: f64) -> Result<Self, GeometryError> {
        if image_width == 0 || image_height == 0 {
            return Err(GeometryError::InvalidViewpoint("image size must be positive".into()));
        }
        if !(vertical_fov > 0.0 && vertical_fov < PI) {
            return Err(GeometryError::InvalidViewpoint(format!(
                "vertical fov {vertical_fov} outside (0, pi)"
            )));
        }
        Ok(Self {
            image_width,
            image_height,
            vertical_fov,
        })
    }

    /// Focal length in pixels (square pixels).
    pub fn focal(&self) -> f64 {
        0.5 * self.image_height as f64 / (0.5 * self.vertical_fov).tan()
    }

    pub fn principal_point(&self) -> Pixel {
        Pixel::new(0.5 * self.image_width as f64, 0.5 * self.image_height as f64)
    }

    pub fn contains(&self, px: &Pixel) -> bool {
        px.x >= 0.0 && px.x < self.image_width as f64 && px.y >= 0.0 && px.y < self.image_height as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + t * self.direction
    }
}

pub fn viewpoint_to_camera_pose(v: &Viewpoint) -> CameraPose {
    let position = v.camera_position();
    // range > 0 is a Viewpoint invariant, so look_at cannot fail.
    CameraPose::look_at(position, v.lookat).expect("viewpoint with positive range")
}

/// Recovers the viewpoint of `c` about `lookat` (the orientation is ignored).
pub fn camera_pose_to_viewpoint(c: &CameraPose, lookat: &Vec3) -> Result<Viewpoint, GeometryError> {
    let (range, elevation, azimuth) = spherical_coords(&c.position, lookat);
    if range == 0.0 {
        return Err(GeometryError::ZeroRange);
    }
    Viewpoint::new(*lookat, range, elevation, azimuth)
}

/// Projects `p` to pixel coordinates; returns the pixel and the depth along
/// the optical axis.
pub fn project(c: &CameraPose, m: &CameraModel, p: &Vec3) -> Result<(Pixel, f64), GeometryError> {
    let pc = c.world_to_camera(p);
    let depth = -pc.z;
    if depth <= MIN_DEPTH {
        return Err(GeometryError::NotInFront(depth));
    }
    let f = m.focal();
    let pp = m.principal_point();
    Ok((Pixel::new(pp.x + f * pc.x / depth, pp.y - f * pc.y / depth), depth))
}

pub fn backproject(c: &CameraPose, m: &CameraModel, pixel: &Pixel) -> Result<Ray, GeometryError> {
    if !m.contains(pixel) {
        return Err(GeometryError::OutOfImage(pixel.x, pixel.y));
    }
    let f = m.focal();
    let pp = m.principal_point();
    let dir_cam = Vec3::new((pixel.x - pp.x) / f, -(pixel.y - pp.y) / f, -1.0);
    Ok(Ray {
        origin: c.position,
        direction: (c.orientation * dir_cam).normalize(),
    })
}

pub fn in_frustum(c: &CameraPose, m: &CameraModel, p: &Vec3) -> bool {
    match project(c, m, p) {
        Ok((px, _)) => m.contains(&px),
        Err(_) => false,
    }
}

/// Precomputed frustum test for evaluating many points against one camera.
#[derive(Debug, Clone, Copy)]
pub struct Frustum {
    rot_t: Matrix3<f64>,
    position: Vec3,
    focal: f64,
    cx: f64,
    cy: f64,
    width: f64,
    height: f64,
}

impl Frustum {
    pub fn new(c: &CameraPose, m: &CameraModel) -> Self {
        let pp = m.principal_point();
        Self {
            rot_t: c.orientation.matrix().transpose(),
            position: c.position,
            focal: m.focal(),
            cx: pp.x,
            cy: pp.y,
            width: m.image_width as f64,
            height: m.image_height as f64,
        }
    }

    /// Same result as [`in_frustum`].
    #[inline]
    pub fn contains(&self, p: &Vec3) -> bool {
        let pc = self.rot_t * (p - self.position);
        let depth = -pc.z;
        if depth <= MIN_DEPTH {
            return false;
        }
        let u = self.cx + self.focal * pc.x / depth;
        let v = self.cy - self.focal * pc.y / depth;
        u >= 0.0 && u < self.width && v >= 0.0 && v < self.height
    }

    pub fn position(&self) -> &Vec3 {
        &self.position
    }
}

/// Geodesic angle between two orientations, in `[0, pi]`.
pub fn rotation_error(a: &CameraPose, b: &CameraPose) -> f64 {
    let rel = a.orientation.matrix().transpose() * b.orientation.matrix();
    let cos_part = rel.trace() - 1.0;
    let sin_part = Vec3::new(
        rel[(2, 1)] - rel[(1, 2)],
        rel[(0, 2)] - rel[(2, 0)],
        rel[(1, 0)] - rel[(0, 1)],
    )
    .norm();
    sin_part.atan2(cos_part)
}
