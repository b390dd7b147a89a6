//! The active-search environment: random tabletop scenes, a 6-DOF camera with
//! clipped actions, goal views and the success test.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::fmt;

use nalgebra::Rotation3;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rotation_error, spherical_coords, spherical_direction, wrap_angle, CameraPose, Vec3, Viewpoint};
use crate::rng_from;

pub type CategoryId = usize;

/// Rejection-sampling budget for scene placement and goal sampling.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("requested {requested} objects but only 1..={max} are allowed")]
    InvalidObjectCount { requested: usize, max: usize },
    #[error("unknown category id {0}")]
    UnknownCategory(CategoryId),
    #[error("category {0} appears more than once")]
    DuplicateCategory(CategoryId),
    #[error("placement failed after {0} attempts")]
    PlacementFailure(usize),
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("scene has no objects")]
    EmptyScene,
}

/// Rotational symmetry about the vertical axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Finite(u32),
    Continuous,
}

impl Symmetry {
    /// Angular width of one symmetry sector; zero for continuous symmetry.
    pub fn sector(&self) -> f64 {
        match self {
            Symmetry::Finite(n) => TAU / f64::from((*n).max(1)),
            Symmetry::Continuous => 0.0,
        }
    }

    /// Reduces an absolute angular difference modulo the symmetry sector.
    pub fn reduce(&self, delta: f64) -> f64 {
        let delta = wrap_angle(delta).abs();
        match self {
            Symmetry::Continuous => 0.0,
            Symmetry::Finite(_) => {
                let sector = self.sector();
                let d = delta.rem_euclid(sector);
                d.min(sector - d)
            }
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Symmetry::Continuous)
    }
}

impl Serialize for Symmetry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Symmetry::Finite(n) => s.serialize_u32(*n),
            Symmetry::Continuous => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Symmetry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            N(u32),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::N(0) => Err(serde::de::Error::custom("symmetry order must be positive")),
            Repr::N(n) => Ok(Symmetry::Finite(n)),
            Repr::S(s) if s == "inf" => Ok(Symmetry::Continuous),
            Repr::S(s) => Err(serde::de::Error::custom(format!("bad symmetry order {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectCategory {
    pub id: CategoryId,
    pub name: String,
    pub proxy_radius: f64,
    pub symmetry_order: Symmetry,
}

/// The set of object categories known to the environment and the agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub categories: Vec<ObjectCategory>,
}

impl Default for Catalog {
    /// The five household objects of the benchmark.
    fn default() -> Self {
        let spec = [
            ("master_chef_can", 0.07, Symmetry::Continuous),
            ("cracker_box", 0.10, Symmetry::Finite(2)),
            ("sugar_box", 0.08, Symmetry::Finite(2)),
            ("tomato_soup_can", 0.05, Symmetry::Continuous),
            ("mustard_bottle", 0.08, Symmetry::Finite(1)),
        ];
        Self {
            categories: spec
                .iter()
                .enumerate()
                .map(|(id, (name, r, s))| ObjectCategory {
                    id,
                    name: name.to_string(),
                    proxy_radius: *r,
                    symmetry_order: *s,
                })
                .collect(),
        }
    }
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn get(&self, id: CategoryId) -> Result<&ObjectCategory, SceneError> {
        self.categories.get(id).ok_or(SceneError::UnknownCategory(id))
    }

    pub fn ids(&self) -> impl Iterator<Item = CategoryId> + '_ {
        0..self.categories.len()
    }

    pub fn name(&self, id: CategoryId) -> &str {
        self.categories.get(id).map(|c| c.name.as_str()).unwrap_or("unknown")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub category: CategoryId,
    pub position: Vec3,
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub objects: Vec<ObjectInstance>,
    pub table_color: [u8; 3],
    pub seed: u64,
}

impl SceneSpec {
    pub fn object(&self, category: CategoryId) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.category == category)
    }

    pub fn contains(&self, category: CategoryId) -> bool {
        self.object(category).is_some()
    }
}

/// Camera action: world-frame displacement and Euler increments
/// (roll, pitch, yaw), each component clamped to `[-0.5, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub dpos: Vec3,
    pub drot: Vec3,
}

pub const ACTION_LIMIT: f64 = 0.5;

impl Action {
    pub fn new(dpos: Vec3, drot: Vec3) -> Self {
        let clamp = |v: Vec3| v.map(|c| if c.is_nan() { 0.0 } else { c.clamp(-ACTION_LIMIT, ACTION_LIMIT) });
        Self {
            dpos: clamp(dpos),
            drot: clamp(drot),
        }
    }

    pub fn zero() -> Self {
        Self {
            dpos: Vec3::zeros(),
            drot: Vec3::zeros(),
        }
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.drot.x, self.drot.y, self.drot.z)
    }

    pub fn within_bounds(&self) -> bool {
        self.dpos.iter().chain(self.drot.iter()).all(|c| c.abs() <= ACTION_LIMIT)
    }
}

/// Goal view expressed in the target object's frame: range, elevation and
/// azimuth relative to the object's yaw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub target_category: CategoryId,
    pub range: f64,
    pub elevation: f64,
    pub azimuth: f64,
}

impl GoalSpec {
    pub fn viewpoint(&self, scene: &SceneSpec) -> Result<Viewpoint, SceneError> {
        let obj = scene
            .object(self.target_category)
            .ok_or(SceneError::UnknownCategory(self.target_category))?;
        Viewpoint::new(obj.position, self.range, self.elevation, obj.yaw + self.azimuth)
            .map_err(|_| SceneError::PlacementFailure(0))
    }

    pub fn pose(&self, scene: &SceneSpec) -> Result<CameraPose, SceneError> {
        Ok(self.viewpoint(scene)?.to_camera_pose())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub table_half_size: f64,
    pub workspace_half_xy: f64,
    pub min_height: f64,
    pub max_height: f64,
    pub max_steps: u32,
    pub success_translation: f64,
    pub success_rotation: f64,
    pub min_separation: f64,
    pub goal_range: f64,
    pub goal_elevation_min: f64,
    pub goal_elevation_max: f64,
    pub start_range: f64,
    pub start_elevation: f64,
    pub start_azimuth: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            table_half_size: 0.5,
            workspace_half_xy: 0.5,
            min_height: 0.05,
            max_height: 0.6,
            max_steps: 350,
            success_translation: 0.075,
            success_rotation: 0.5,
            min_separation: 0.15,
            goal_range: 0.4,
            goal_elevation_min: 0.15,
            goal_elevation_max: 1.40,
            start_range: 0.65,
            start_elevation: FRAC_PI_4,
            start_azimuth: 0.0,
        }
    }
}

impl EnvConfig {
    pub fn in_workspace(&self, p: &Vec3) -> bool {
        p.x.abs() <= self.workspace_half_xy
            && p.y.abs() <= self.workspace_half_xy
            && p.z >= self.min_height
            && p.z <= self.max_height
    }

    pub fn clamp_to_workspace(&self, p: &Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(-self.workspace_half_xy, self.workspace_half_xy),
            p.y.clamp(-self.workspace_half_xy, self.workspace_half_xy),
            p.z.clamp(self.min_height, self.max_height),
        )
    }

    pub fn initial_viewpoint(&self) -> Viewpoint {
        Viewpoint::new(Vec3::zeros(), self.start_range, self.start_elevation, self.start_azimuth)
            .expect("valid start viewpoint")
    }
}

/// Start pose: looking at the table center from 0.65 m, pi/4 elevation, 0 azimuth.
pub fn initial_viewpoint() -> Viewpoint {
    EnvConfig::default().initial_viewpoint()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub scene: SceneSpec,
    pub camera: CameraPose,
    pub step_count: u32,
    pub done: bool,
}

/// Environment dynamics bound to a catalog and configuration.
#[derive(Debug, Clone)]
pub struct Env {
    pub catalog: Catalog,
    pub config: EnvConfig,
}

impl Default for Env {
    fn default() -> Self {
        Self {
            catalog: Catalog::default(),
            config: EnvConfig::default(),
        }
    }
}

impl Env {
    pub fn new(catalog: Catalog, config: EnvConfig) -> Self {
        Self { catalog, config }
    }

    pub fn reset(&self, scene: SceneSpec) -> EnvState {
        EnvState {
            scene,
            camera: self.config.initial_viewpoint().to_camera_pose(),
            step_count: 0,
            done: false,
        }
    }

    fn radius(&self, category: CategoryId) -> f64 {
        self.catalog.get(category).map(|c| c.proxy_radius).unwrap_or(0.0)
    }

    fn inside_object(&self, scene: &SceneSpec, p: &Vec3) -> bool {
        scene.objects.iter().any(|o| {
            let r = self.radius(o.category);
            (p - o.position).norm() < r * (1.0 - 1e-12)
        })
    }

    /// Clips a desired camera position to the workspace box and out of every
    /// object's proxy sphere. Falls back to `previous` when both constraints
    /// cannot be met at once.
    pub fn clip_position(&self, scene: &SceneSpec, desired: &Vec3, previous: &Vec3) -> Vec3 {
        let mut p = self.config.clamp_to_workspace(desired);
        for _ in 0..8 {
            let mut moved = false;
            for o in &scene.objects {
                let r = self.radius(o.category);
                let d = p - o.position;
                let n = d.norm();
                if n < r {
                    let dir = if n > 1e-12 { d / n } else { Vec3::z() };
                    p = o.position + r * dir;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
            p = self.config.clamp_to_workspace(&p);
        }
        if self.inside_object(scene, &p) || !self.config.in_workspace(&p) {
            *previous
        } else {
            p
        }
    }

    pub fn apply_action(&self, state: &mut EnvState, a: &Action) -> Result<(), SceneError> {
        if state.done {
            return Err(SceneError::EpisodeFinished);
        }
        let a = Action::new(a.dpos, a.drot);
        let desired = state.camera.position + a.dpos;
        state.camera.position = self.clip_position(&state.scene, &desired, &state.camera.position);
        state.camera.orientation = a.rotation() * state.camera.orientation;
        state.camera.orientation.renormalize();
        state.step_count += 1;
        if state.step_count >= self.config.max_steps {
            state.done = true;
        }
        Ok(())
    }

    pub fn generate_scene(&self, seed: u64, num_objects: usize, categories: &[CategoryId]) -> Result<SceneSpec, SceneError> {
        generate_scene(&self.catalog, &self.config, seed, num_objects, categories)
    }

    pub fn sample_goal(&self, scene: &SceneSpec, seed: u64) -> Result<GoalSpec, SceneError> {
        sample_goal(&self.catalog, &self.config, scene, seed)
    }

    pub fn check_success(&self, camera: &CameraPose, goal: &GoalSpec, scene: &SceneSpec) -> Result<bool, SceneError> {
        check_success(&self.config, camera, goal, scene)
    }

    pub fn object_centric_errors(
        &self,
        camera: &CameraPose,
        goal: &GoalSpec,
        scene: &SceneSpec,
    ) -> Result<ObjectCentricErrors, SceneError> {
        object_centric_errors(&self.catalog, camera, goal, scene)
    }
}

pub fn generate_scene(
    catalog: &Catalog,
    cfg: &EnvConfig,
    seed: u64,
    num_objects: usize,
    categories: &[CategoryId],
) -> Result<SceneSpec, SceneError> {
    let max = categories.len().min(5);
    if num_objects == 0 || num_objects > max {
        return Err(SceneError::InvalidObjectCount {
            requested: num_objects,
            max,
        });
    }
    for (i, c) in categories.iter().enumerate() {
        catalog.get(*c)?;
        if categories[..i].contains(c) {
            return Err(SceneError::DuplicateCategory(*c));
        }
    }
    let mut rng = rng_from(seed, 0);
    let mut chosen: Vec<CategoryId> = index::sample(&mut rng, categories.len(), num_objects)
        .into_iter()
        .map(|i| categories[i])
        .collect();
    chosen.sort_unstable();

    let mut objects: Vec<ObjectInstance> = Vec::with_capacity(num_objects);
    let mut attempts = 0;
    for &category in &chosen {
        let r = catalog.get(category)?.proxy_radius;
        let half = cfg.table_half_size - r;
        loop {
            attempts += 1;
            if attempts > MAX_PLACEMENT_ATTEMPTS {
                return Err(SceneError::PlacementFailure(MAX_PLACEMENT_ATTEMPTS));
            }
            let position = Vec3::new(rng.random_range(-half..=half), rng.random_range(-half..=half), r);
            let clear = objects.iter().all(|o| {
                let other = catalog.categories[o.category].proxy_radius;
                let sep = cfg.min_separation.max(r + other);
                (o.position.xy() - position.xy()).norm() >= sep
            });
            if clear {
                let yaw = rng.random_range(-PI..PI);
                objects.push(ObjectInstance { category, position, yaw });
                break;
            }
        }
    }
    let table_color = [rng.random(), rng.random(), rng.random()];
    Ok(SceneSpec {
        objects,
        table_color,
        seed,
    })
}

/// Samples a goal for a uniformly chosen object of the scene.
pub fn sample_goal(catalog: &Catalog, cfg: &EnvConfig, scene: &SceneSpec, seed: u64) -> Result<GoalSpec, SceneError> {
    if scene.objects.is_empty() {
        return Err(SceneError::EmptyScene);
    }
    let mut rng = rng_from(seed, 1);
    let target = scene.objects[rng.random_range(0..scene.objects.len())].category;
    sample_goal_for(catalog, cfg, scene, target, seed)
}

/// Samples a goal view of a specific target category.
pub fn sample_goal_for(
    catalog: &Catalog,
    cfg: &EnvConfig,
    scene: &SceneSpec,
    target: CategoryId,
    seed: u64,
) -> Result<GoalSpec, SceneError> {
    let obj = scene.object(target).ok_or(SceneError::UnknownCategory(target))?;
    let mut rng = rng_from(seed, 2);
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let elevation = rng.random_range(cfg.goal_elevation_min..=cfg.goal_elevation_max);
        let azimuth = rng.random_range(-PI..PI);
        let position = obj.position + cfg.goal_range * spherical_direction(elevation, obj.yaw + azimuth);
        let blocked = scene.objects.iter().any(|o| {
            let r = catalog.get(o.category).map(|c| c.proxy_radius).unwrap_or(0.0);
            (position - o.position).norm() < r
        });
        if cfg.in_workspace(&position) && !blocked {
            return Ok(GoalSpec {
                target_category: target,
                range: cfg.goal_range,
                elevation,
                azimuth,
            });
        }
    }
    Err(SceneError::PlacementFailure(MAX_PLACEMENT_ATTEMPTS))
}

/// Translation and rotation error of `camera` against the goal pose.
pub fn goal_pose_errors(camera: &CameraPose, goal: &GoalSpec, scene: &SceneSpec) -> Result<(f64, f64), SceneError> {
    let goal_pose = goal.pose(scene)?;
    Ok(((camera.position - goal_pose.position).norm(), rotation_error(camera, &goal_pose)))
}

pub fn check_success(cfg: &EnvConfig, camera: &CameraPose, goal: &GoalSpec, scene: &SceneSpec) -> Result<bool, SceneError> {
    let (dt, dr) = goal_pose_errors(camera, goal, scene)?;
    Ok(dt < cfg.success_translation && dr < cfg.success_rotation)
}

/// Spherical-coordinate errors of the camera about the true target center.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectCentricErrors {
    /// Azimuth error reduced modulo the category's symmetry sector.
    pub azimuth: f64,
    /// Azimuth error without symmetry reduction.
    pub azimuth_raw: f64,
    pub elevation: f64,
    pub range: f64,
}

impl fmt::Display for ObjectCentricErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "d_azimuth={:.4} (raw {:.4}) d_elevation={:.4} d_range={:.4}",
            self.azimuth, self.azimuth_raw, self.elevation, self.range
        )
    }
}

pub fn object_centric_errors(
    catalog: &Catalog,
    camera: &CameraPose,
    goal: &GoalSpec,
    scene: &SceneSpec,
) -> Result<ObjectCentricErrors, SceneError> {
    let obj = scene
        .object(goal.target_category)
        .ok_or(SceneError::UnknownCategory(goal.target_category))?;
    let symmetry = catalog.get(obj.category)?.symmetry_order;
    let (range, elevation, azimuth) = spherical_coords(&camera.position, &obj.position);
    let raw = wrap_angle(azimuth - goal.azimuth - obj.yaw).abs();
    Ok(ObjectCentricErrors {
        azimuth: symmetry.reduce(raw),
        azimuth_raw: raw,
        elevation: (elevation - goal.elevation).abs(),
        range: (range - goal.range).abs(),
    })
}
