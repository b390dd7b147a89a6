//! Next-viewpoint selection by expected free energy, camera stepping, and
//! the baseline policies.

mod agents;
mod trace;

use std::f64::consts::PI;

use nalgebra::{Rotation3, UnitQuaternion};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefBank, CompressedBelief, HistogramGrid, ParticleBelief};
use crate::exec::{first_argmin, Execution};
use crate::geometry::{spherical_coords, wrap_angle, CameraModel, CameraPose, Frustum, Vec3, Viewpoint};
use crate::perception::{distance_from_scale, scale_from_distance, NoiseConfig};
use crate::scene::{Catalog, CategoryId, EnvConfig, GoalSpec, Symmetry, ACTION_LIMIT};
use crate::SimRng;

pub use agents::{AgentKind, AgentSetup, AifAgent, GreedyAgent, GreedyVariant, OracleAgent, Policy, RandomAgent, StepDiagnostics};
pub use trace::{FreeEnergyStep, FreeEnergyTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanningError {
    #[error("could not sample {wanted} valid candidate viewpoints within {budget} draws")]
    PlacementFailure { wanted: usize, budget: usize },
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EfeWeights {
    pub position: f64,
    pub scale: f64,
    pub pose: f64,
    pub info_gain: f64,
}

impl Default for EfeWeights {
    fn default() -> Self {
        Self {
            position: 1.0,
            scale: 1.0,
            pose: 1.0,
            info_gain: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub num_candidates: usize,
    pub replan_interval: usize,
    pub step_size: f64,
    /// Probability that a candidate's look-at point comes from the belief
    /// rather than uniformly from the table.
    pub importance_mix: f64,
    pub weights: EfeWeights,
    /// False switches to pure exploration: utilities are dropped and
    /// information gain is summed over all categories.
    pub utility_enabled: bool,
    pub range_bounds: [f64; 2],
    pub elevation_bounds: [f64; 2],
    pub scale_samples: usize,
    pub scale_std: f64,
    pub pose_std: f64,
    pub epsilon: f64,
    pub execution: Execution,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            num_candidates: 5000,
            replan_interval: 10,
            step_size: 0.05,
            importance_mix: 0.7,
            weights: EfeWeights::default(),
            utility_enabled: true,
            range_bounds: [0.25, 0.65],
            elevation_bounds: [0.15, 1.40],
            scale_samples: 64,
            scale_std: 0.1,
            pose_std: 0.2,
            epsilon: 1e-12,
            execution: Execution::Parallel,
        }
    }
}

impl PlannerConfig {
    pub fn exploration() -> Self {
        Self {
            utility_enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PlanningError> {
        let bad = |m: &str| Err(PlanningError::InvalidConfig(m.to_string()));
        if self.num_candidates == 0 {
            return bad("num_candidates must be at least 1");
        }
        if self.replan_interval == 0 {
            return bad("replan_interval must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.importance_mix) {
            return bad("importance_mix must lie in [0, 1]");
        }
        if !(self.step_size > 0.0) {
            return bad("step_size must be positive");
        }
        let [r0, r1] = self.range_bounds;
        if !(r0 > 0.0 && r0 <= r1) {
            return bad("range_bounds must satisfy 0 < min <= max");
        }
        let [e0, e1] = self.elevation_bounds;
        if !(e0 >= 0.0 && e0 <= e1 && e1 <= PI / 2.0) {
            return bad("elevation_bounds must lie within [0, pi/2]");
        }
        if self.scale_samples == 0 || !(self.scale_std > 0.0 && self.pose_std > 0.0 && self.epsilon > 0.0) {
            return bad("scale_samples, scale_std, pose_std and epsilon must be positive");
        }
        Ok(())
    }
}

/// What the agent believes the goal view looks like.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalBeliefs {
    pub target: CategoryId,
    /// Apparent scale of the target in the goal view.
    pub scale: f64,
    /// Camera azimuth in the object frame.
    pub azimuth_rel: f64,
    pub elevation: f64,
}

impl GoalBeliefs {
    /// Noise-free goal beliefs read directly from the goal specification.
    pub fn exact(goal: &GoalSpec) -> Self {
        Self {
            target: goal.target_category,
            scale: scale_from_distance(goal.range).unwrap_or(1.0),
            azimuth_rel: wrap_angle(goal.azimuth),
            elevation: goal.elevation,
        }
    }

    pub fn range(&self) -> f64 {
        distance_from_scale(self.scale).unwrap_or(0.4)
    }

    /// Camera viewpoint matching the goal for an object at `position` with
    /// yaw `yaw`.
    pub fn viewpoint(&self, position: Vec3, yaw: f64) -> Viewpoint {
        let elevation = self.elevation.clamp(0.0, PI / 2.0);
        Viewpoint::new(position, self.range(), elevation, yaw + self.azimuth_rel).unwrap_or_else(|_| Viewpoint {
            lookat: position,
            range: 0.4,
            elevation,
            azimuth: wrap_angle(yaw + self.azimuth_rel),
        })
    }
}

/// The four terms of the expected free energy of one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfeBreakdown {
    pub position_utility: f64,
    pub scale_utility: f64,
    pub pose_utility: f64,
    pub info_gain: f64,
    pub total: f64,
}

impl EfeBreakdown {
    pub fn new(position_utility: f64, scale_utility: f64, pose_utility: f64, info_gain: f64, w: &EfeWeights) -> Self {
        let total =
            -(w.position * position_utility + w.scale * scale_utility + w.pose * pose_utility) - w.info_gain * info_gain;
        Self {
            position_utility,
            scale_utility,
            pose_utility,
            info_gain,
            total,
        }
    }
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Mutual information between the detection event and the object's
/// histogram cell, for a detector firing with `tpr` on objects in view and
/// `fpr` otherwise.
pub fn info_gain(b: &ParticleBelief, camera: &CameraPose, model: &CameraModel, noise: &NoiseConfig, grid: &HistogramGrid) -> f64 {
    let frustum = Frustum::new(camera, model);
    let tpr = noise.true_positive_rate;
    let fpr = noise.false_positive_rate;
    let n = grid.num_bins();
    let mut prior = vec![0.0; n];
    let mut hit = vec![0.0; n];
    let mut miss = vec![0.0; n];
    let mut p_det = 0.0;
    for (p, w) in b.particles.iter().zip(&b.weights) {
        let l = if frustum.contains(p) { tpr } else { fpr };
        let i = grid.bin_index(p);
        prior[i] += w;
        hit[i] += w * l;
        miss[i] += w * (1.0 - l);
        p_det += w * l;
    }
    use crate::belief::entropy_of_masses as h;
    let mut ig = h(&prior);
    if p_det > 0.0 {
        ig -= p_det * h(&hit);
    }
    if p_det < 1.0 {
        ig -= (1.0 - p_det) * h(&miss);
    }
    ig
}

/// Same quantity on a bin-merged belief, where each cell is wholly in or
/// out of view: `h(p_det) - W_in h(tpr) - W_out h(fpr)`.
pub fn info_gain_compressed(c: &CompressedBelief, frustum: &Frustum, tpr: f64, fpr: f64) -> f64 {
    let w_in = c.mass_in(frustum).clamp(0.0, 1.0);
    let p_det = tpr * w_in + fpr * (1.0 - w_in);
    binary_entropy(p_det) - w_in * binary_entropy(tpr) - (1.0 - w_in) * binary_entropy(fpr)
}

/// Wrapped-Gaussian log density of an angle difference.
fn wrapped_log_density(delta: f64, std: f64) -> f64 {
    let norm = -0.5 * (2.0 * PI * std * std).ln();
    let terms: f64 = (-2..=2)
        .map(|k| {
            let d = delta + 2.0 * PI * k as f64;
            (-0.5 * d * d / (std * std)).exp()
        })
        .sum();
    norm + terms.ln()
}

fn gaussian_log_density(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    -0.5 * z * z - (std * (2.0 * PI).sqrt()).ln()
}

/// Everything the scorer needs about the target.
#[derive(Debug, Clone)]
struct GoalTerms {
    goal: GoalBeliefs,
    belief: CompressedBelief,
    scale_points: Vec<Vec3>,
    yaw: Option<f64>,
    symmetry: Symmetry,
}

/// Immutable snapshot of the beliefs, scored against many candidates.
#[derive(Debug, Clone)]
pub struct Scorer {
    info_beliefs: Vec<CompressedBelief>,
    goal: Option<GoalTerms>,
    cfg: PlannerConfig,
    kde_bandwidth: f64,
    model: CameraModel,
    tpr: f64,
    fpr: f64,
}

impl Scorer {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        bank: &BeliefBank,
        goal: Option<&GoalBeliefs>,
        catalog: &Catalog,
        cfg: &PlannerConfig,
        model: &CameraModel,
        noise: &NoiseConfig,
        grid: &HistogramGrid,
        kde_bandwidth: f64,
    ) -> Self {
        let with_utility = cfg.utility_enabled && goal.is_some();
        let goal_terms = goal.filter(|_| with_utility).map(|g| {
            let entry = bank.get(g.target);
            let belief = entry.position.compress(grid);
            let scale_points = belief.representatives(cfg.scale_samples);
            GoalTerms {
                goal: *g,
                yaw: entry.yaw.mean(),
                symmetry: catalog.get(g.target).map(|c| c.symmetry_order).unwrap_or(Symmetry::Finite(1)),
                belief,
                scale_points,
            }
        });
        // With a goal only the target is searched for; without one, every
        // category is.
        let info_beliefs = match &goal_terms {
            Some(t) => vec![t.belief.clone()],
            None => bank.categories.iter().map(|c| c.position.compress(grid)).collect(),
        };
        Self {
            info_beliefs,
            goal: goal_terms,
            cfg: *cfg,
            kde_bandwidth,
            model: *model,
            tpr: noise.true_positive_rate,
            fpr: noise.false_positive_rate,
        }
    }

    /// Scores information gain alone, summed over `beliefs`.
    pub fn info_only(beliefs: Vec<CompressedBelief>, cfg: &PlannerConfig, model: &CameraModel, noise: &NoiseConfig) -> Self {
        Self {
            info_beliefs: beliefs,
            goal: None,
            cfg: *cfg,
            kde_bandwidth: 0.05,
            model: *model,
            tpr: noise.true_positive_rate,
            fpr: noise.false_positive_rate,
        }
    }

    pub fn score(&self, v: &Viewpoint) -> EfeBreakdown {
        let camera = v.to_camera_pose();
        let frustum = Frustum::new(&camera, &self.model);
        let info_gain: f64 = self
            .info_beliefs
            .iter()
            .map(|b| info_gain_compressed(b, &frustum, self.tpr, self.fpr))
            .sum();
        let (pos, scale, pose) = match &self.goal {
            Some(t) => self.utilities(t, v, &camera),
            None => (0.0, 0.0, 0.0),
        };
        EfeBreakdown::new(pos, scale, pose, info_gain, &self.cfg.weights)
    }

    fn utilities(&self, t: &GoalTerms, v: &Viewpoint, camera: &CameraPose) -> (f64, f64, f64) {
        let eps = self.cfg.epsilon;
        let position = (t.belief.density_at(&v.lookat, self.kde_bandwidth) + eps).ln();

        let scale = t
            .scale_points
            .iter()
            .map(|p| {
                let d = (camera.position - p).norm().max(1e-6);
                let predicted = scale_from_distance(d).unwrap_or(0.0);
                gaussian_log_density(predicted, t.goal.scale, self.cfg.scale_std)
            })
            .sum::<f64>()
            / t.scale_points.len().max(1) as f64;

        let (_, elevation, azimuth) = spherical_coords(&camera.position, &t.belief.mean);
        let mut pose = gaussian_log_density(elevation, t.goal.elevation, self.cfg.pose_std);
        if !t.symmetry.is_continuous() {
            pose += match t.yaw {
                Some(yaw) => {
                    let delta = wrap_angle(azimuth - yaw - t.goal.azimuth_rel);
                    wrapped_log_density(delta, self.cfg.pose_std)
                }
                // No yaw estimate yet: flat over the circle.
                None => -(2.0 * PI).ln(),
            };
        }
        (position, scale, pose)
    }
}

/// Draws candidate viewpoints. Look-at points come from `focus` (one
/// belief chosen uniformly per draw) with probability `importance_mix`,
/// otherwise uniformly from the belief bounds.
pub fn sample_candidates<R: Rng + ?Sized>(
    focus: &[&ParticleBelief],
    cfg: &PlannerConfig,
    env: &EnvConfig,
    bounds: &crate::belief::BeliefBounds,
    rng: &mut R,
) -> Result<Vec<Viewpoint>, PlanningError> {
    let cumulative: Vec<Vec<f64>> = focus
        .iter()
        .map(|b| {
            b.weights
                .iter()
                .scan(0.0, |acc, w| {
                    *acc += w;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let wanted = cfg.num_candidates;
    let budget = 10 * wanted;
    let mut out = Vec::with_capacity(wanted);
    for _ in 0..budget {
        let lookat = if !focus.is_empty() && rng.random::<f64>() < cfg.importance_mix {
            let k = rng.random_range(0..focus.len());
            let cum = &cumulative[k];
            let u = rng.random::<f64>() * cum[cum.len() - 1];
            let i = cum.partition_point(|c| *c <= u).min(cum.len() - 1);
            focus[k].particles[i]
        } else {
            bounds.sample_uniform(rng)
        };
        let range = rng.random_range(cfg.range_bounds[0]..=cfg.range_bounds[1]);
        let elevation = rng.random_range(cfg.elevation_bounds[0]..=cfg.elevation_bounds[1]);
        let azimuth = rng.random_range(-PI..PI);
        let Ok(v) = Viewpoint::new(lookat, range, elevation, azimuth) else {
            continue;
        };
        if env.in_workspace(&v.camera_position()) {
            out.push(v);
            if out.len() == wanted {
                return Ok(out);
            }
        }
    }
    Err(PlanningError::PlacementFailure { wanted, budget })
}

/// Chosen viewpoint and its score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub viewpoint: Viewpoint,
    pub breakdown: EfeBreakdown,
}

/// Scores every candidate and returns the first minimizer of G.
pub fn select_from(scorer: &Scorer, candidates: &[Viewpoint], execution: Execution) -> Option<Plan> {
    let scores = execution.map(candidates, |v| scorer.score(v));
    let totals: Vec<f64> = scores.iter().map(|s| s.total).collect();
    first_argmin(&totals).map(|i| Plan {
        viewpoint: candidates[i],
        breakdown: scores[i],
    })
}

/// Samples candidates around the current beliefs and picks the one with
/// the lowest expected free energy. `keep` is scored first, so a previous
/// target survives unless something strictly better turns up.
#[allow(clippy::too_many_arguments)]
pub fn select_target_viewpoint(
    bank: &BeliefBank,
    goal: Option<&GoalBeliefs>,
    catalog: &Catalog,
    cfg: &PlannerConfig,
    model: &CameraModel,
    noise: &NoiseConfig,
    env: &EnvConfig,
    belief_cfg: &crate::belief::BeliefConfig,
    keep: Option<Viewpoint>,
    rng: &mut SimRng,
) -> Result<Plan, PlanningError> {
    let focus: Vec<&ParticleBelief> = match goal {
        Some(g) if cfg.utility_enabled => vec![&bank.get(g.target).position],
        _ => bank.categories.iter().map(|c| &c.position).collect(),
    };
    let scorer = Scorer::new(bank, goal, catalog, cfg, model, noise, &belief_cfg.grid, belief_cfg.kde_bandwidth);
    plan_with(&scorer, &focus, keep, cfg, env, &belief_cfg.grid.bounds, rng)
}

/// Samples candidates for `focus`, prepends `keep`, and selects by `scorer`.
pub fn plan_with(
    scorer: &Scorer,
    focus: &[&ParticleBelief],
    keep: Option<Viewpoint>,
    cfg: &PlannerConfig,
    env: &EnvConfig,
    bounds: &crate::belief::BeliefBounds,
    rng: &mut SimRng,
) -> Result<Plan, PlanningError> {
    let mut candidates = Vec::with_capacity(cfg.num_candidates + 1);
    candidates.extend(keep);
    candidates.extend(sample_candidates(focus, cfg, env, bounds, rng)?);
    Ok(select_from(scorer, &candidates, cfg.execution).expect("candidate list is non-empty"))
}

fn max_abs_euler(r: &Rotation3<f64>) -> f64 {
    let (a, b, c) = r.euler_angles();
    a.abs().max(b.abs()).max(c.abs())
}

/// One bounded action toward `target`: a straight-line translation of at
/// most `step_size`, and a rotation toward the camera keeping the target's
/// look-at point centered from the new position. The rotation is the
/// largest slerp fraction whose Euler increments stay within the action
/// limits. Within one step of the target the action lands on its pose.
pub fn step_toward(current: &CameraPose, target: &Viewpoint, step_size: f64) -> crate::scene::Action {
    let goal = target.to_camera_pose();
    let delta = goal.position - current.position;
    let dist = delta.norm();
    let (dpos, desired) = if dist <= step_size {
        (delta, goal)
    } else {
        let dpos = delta * (step_size / dist);
        let next = current.position + dpos;
        (dpos, CameraPose::look_at(next, target.lookat).unwrap_or(goal))
    };

    let full = desired.orientation * current.orientation.inverse();
    let drot = if max_abs_euler(&full) <= ACTION_LIMIT {
        full
    } else {
        let axis_angle = UnitQuaternion::from_rotation_matrix(&full).scaled_axis();
        let partial = |s: f64| Rotation3::from_scaled_axis(axis_angle * s);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let r = partial(mid);
            if max_abs_euler(&r) <= ACTION_LIMIT {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        partial(lo)
    };
    let (roll, pitch, yaw) = drot.euler_angles();
    crate::scene::Action::new(dpos, Vec3::new(roll, pitch, yaw))
}

/// True when `camera` sits on `target` up to numerical noise.
pub fn reached(camera: &CameraPose, target: &CameraPose) -> bool {
    (camera.position - target.position).norm() < 1e-6 && crate::geometry::rotation_error(camera, target) < 1e-6
}
