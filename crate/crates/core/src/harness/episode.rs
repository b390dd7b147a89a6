use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SuiteRecord;
use crate::exec::{with_jobs, Execution};
use crate::geometry::{CameraPose, Vec3};
use crate::perception::observe;
use crate::planning::{AgentKind, AgentSetup, AifAgent, PlannerConfig, Policy};
use crate::scene::{check_success, object_centric_errors, Env, SceneSpec};
use crate::{rng_from, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scene_id: usize,
    pub category: String,
    pub target: usize,
    pub agent: AgentKind,
    pub success: bool,
    pub steps: u32,
    /// Azimuth error reduced by the target's symmetry.
    pub azimuth_error: f64,
    /// Azimuth error without symmetry reduction.
    pub azimuth_error_raw: f64,
    pub elevation_error: f64,
    pub range_error: f64,
    pub trajectory_length: f64,
    pub seed: u64,
}

/// Seed of an episode, a pure function of the master seed and scene id.
pub fn episode_seed(master: u64, scene_id: usize) -> u64 {
    rng_from(master, scene_id as u64).random()
}

/// Observation and agent streams of one episode.
fn episode_streams(seed: u64) -> (SimRng, SimRng) {
    (rng_from(seed, 0), rng_from(seed, 1))
}

/// Runs one episode with a per-step callback that sees the agent after it
/// acted and the camera it acted from.
pub(crate) fn run_episode_with(
    record: &SuiteRecord,
    kind: AgentKind,
    setup: &AgentSetup,
    master_seed: u64,
    mut on_step: impl FnMut(u32, &CameraPose, &dyn Policy, &crate::scene::Action),
) -> EpisodeResult {
    let env = Env::new(setup.catalog.clone(), setup.env);
    let seed = episode_seed(master_seed, record.id);
    let (mut obs_rng, agent_rng) = episode_streams(seed);
    let mut agent = kind.build(setup, &record.goal, &record.scene, agent_rng);
    let mut state = env.reset(record.scene.clone());
    let mut success = false;
    let mut length = 0.0;
    while !state.done {
        if check_success(&setup.env, &state.camera, &record.goal, &record.scene).unwrap_or(false) {
            success = true;
            break;
        }
        let obs = observe(&state.scene, &setup.catalog, &state.camera, &setup.model, &setup.noise, &mut obs_rng);
        let action = agent.act(&obs, &state.camera);
        on_step(state.step_count, &state.camera, agent.as_ref(), &action);
        let before = state.camera.position;
        if env.apply_action(&mut state, &action).is_err() {
            break;
        }
        length += (state.camera.position - before).norm();
    }
    let errors = object_centric_errors(&setup.catalog, &state.camera, &record.goal, &record.scene).unwrap_or_default();
    EpisodeResult {
        scene_id: record.id,
        category: setup.catalog.name(record.target).to_string(),
        target: record.target,
        agent: kind,
        success,
        steps: state.step_count,
        azimuth_error: errors.azimuth,
        azimuth_error_raw: errors.azimuth_raw,
        elevation_error: errors.elevation,
        range_error: errors.range,
        trajectory_length: length,
        seed,
    }
}

pub fn run_episode(record: &SuiteRecord, kind: AgentKind, setup: &AgentSetup, master_seed: u64) -> EpisodeResult {
    run_episode_with(record, kind, setup, master_seed, |_, _, _, _| {})
}

/// Runs every record, `jobs` episodes at a time (0 = all cores). Results
/// are in record order and do not depend on `jobs`.
pub fn run_suite(records: &[SuiteRecord], kind: AgentKind, setup: &AgentSetup, master_seed: u64, jobs: usize) -> Vec<EpisodeResult> {
    let execution = if jobs == 1 { Execution::Sequential } else { Execution::Parallel };
    with_jobs(jobs, || execution.map(records, |r| run_episode(r, kind, setup, master_seed)))
}

/// Goal-free exploration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationResult {
    /// Total entropy over the scene's categories before each step, plus the
    /// final value.
    pub entropy: Vec<f64>,
    /// Final belief mean and true position per object in the scene.
    pub final_means: Vec<(usize, Vec3, Vec3)>,
}

impl ExplorationResult {
    pub fn relative_drop(&self) -> f64 {
        let first = self.entropy[0];
        let last = *self.entropy.last().unwrap();
        (first - last) / first
    }

    pub fn max_position_error(&self) -> f64 {
        self.final_means.iter().map(|(_, m, t)| (m - t).norm()).fold(0.0, f64::max)
    }
}

/// Explores `scene` for `steps` steps with utilities switched off.
pub fn run_exploration(scene: &SceneSpec, setup: &AgentSetup, seed: u64, steps: usize) -> ExplorationResult {
    run_exploration_with(scene, setup, seed, steps, |_, _, _, _| {})
}

pub(crate) fn run_exploration_with(
    scene: &SceneSpec,
    setup: &AgentSetup,
    seed: u64,
    steps: usize,
    mut on_step: impl FnMut(u32, &CameraPose, &dyn Policy, &crate::scene::Action),
) -> ExplorationResult {
    let setup = AgentSetup {
        planner: PlannerConfig {
            utility_enabled: false,
            ..setup.planner
        },
        ..setup.clone()
    };
    let env = Env::new(setup.catalog.clone(), setup.env);
    let (mut obs_rng, agent_rng) = episode_streams(seed);
    let mut agent = AifAgent::new(setup.clone(), None, agent_rng);
    let mut state = env.reset(scene.clone());
    let present: Vec<usize> = scene.objects.iter().map(|o| o.category).collect();
    let total_entropy = |agent: &AifAgent| -> f64 {
        let bank = agent.bank().expect("aif agent keeps beliefs");
        present.iter().map(|c| bank.get(*c).position.entropy(&setup.belief.grid)).sum()
    };
    let mut entropy = vec![total_entropy(&agent)];
    for _ in 0..steps {
        if state.done {
            break;
        }
        let obs = observe(&state.scene, &setup.catalog, &state.camera, &setup.model, &setup.noise, &mut obs_rng);
        let action = agent.act(&obs, &state.camera);
        on_step(state.step_count, &state.camera, &agent, &action);
        entropy.push(total_entropy(&agent));
        if env.apply_action(&mut state, &action).is_err() {
            break;
        }
    }
    let bank = agent.bank().expect("aif agent keeps beliefs");
    let final_means = scene
        .objects
        .iter()
        .map(|o| (o.category, bank.get(o.category).position.mean(), o.position))
        .collect();
    ExplorationResult { entropy, final_means }
}
