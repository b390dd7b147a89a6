use serde::{Deserialize, Serialize};

use super::episode::{run_episode_with, run_exploration_with};
use super::{EpisodeResult, ExplorationResult, SuiteRecord};
use crate::belief::{systematic_indices, BeliefBank, HistogramGrid};
use crate::geometry::CameraPose;
use crate::planning::{AgentKind, AgentSetup, FreeEnergyTrace, Plan, Policy};
use crate::scene::{Action, Catalog, GoalSpec, SceneSpec};

/// Belief summary of one category at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSnapshot {
    pub category: usize,
    pub name: String,
    pub mean: [f64; 3],
    pub covariance: [[f64; 3]; 3],
    pub entropy: f64,
    /// Equally weighted subsample of the particle cloud.
    pub particles: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: u32,
    pub camera: CameraPose,
    pub action: Action,
    pub replanned: bool,
    pub plan: Option<Plan>,
    pub beliefs: Vec<BeliefSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub agent: AgentKind,
    pub scene: SceneSpec,
    pub goal: Option<GoalSpec>,
    pub result: Option<EpisodeResult>,
    pub exploration: Option<ExplorationResult>,
    pub entries: Vec<TraceEntry>,
    pub free_energy: FreeEnergyTrace,
}

fn snapshots(bank: &BeliefBank, catalog: &Catalog, grid: &HistogramGrid, keep: usize) -> Vec<BeliefSnapshot> {
    bank.categories
        .iter()
        .enumerate()
        .map(|(category, c)| {
            let b = &c.position;
            let m = b.mean();
            let cov = b.covariance();
            let particles = systematic_indices(&b.weights, keep.min(b.len()), 0.5)
                .into_iter()
                .map(|i| b.particles[i].into())
                .collect();
            BeliefSnapshot {
                category,
                name: catalog.name(category).to_string(),
                mean: m.into(),
                covariance: std::array::from_fn(|i| std::array::from_fn(|j| cov[(i, j)])),
                entropy: b.entropy(grid),
                particles,
            }
        })
        .collect()
}

struct Recorder<'a> {
    setup: &'a AgentSetup,
    keep: usize,
    entries: Vec<TraceEntry>,
    free_energy: FreeEnergyTrace,
}

impl Recorder<'_> {
    fn on_step(&mut self, step: u32, camera: &CameraPose, agent: &dyn Policy, action: &Action) {
        let beliefs = agent
            .bank()
            .map(|b| snapshots(b, &self.setup.catalog, &self.setup.belief.grid, self.keep))
            .unwrap_or_default();
        let diag = agent.diagnostics();
        if let Some(d) = diag.filter(|d| !d.updates.is_empty()) {
            self.free_energy.push(&d.updates, beliefs.iter().map(|b| b.entropy).collect());
        }
        self.entries.push(TraceEntry {
            step,
            camera: *camera,
            action: *action,
            replanned: diag.is_some_and(|d| d.replanned),
            plan: diag.and_then(|d| d.plan),
            beliefs,
        });
    }
}

/// Runs one suite episode with full per-step retention.
pub fn record_trace(record: &SuiteRecord, kind: AgentKind, setup: &AgentSetup, master_seed: u64, keep: usize) -> EpisodeTrace {
    let setup = AgentSetup {
        diagnostics: true,
        ..setup.clone()
    };
    let mut rec = Recorder {
        setup: &setup,
        keep,
        entries: Vec::new(),
        free_energy: FreeEnergyTrace::default(),
    };
    let result = run_episode_with(record, kind, &setup, master_seed, |s, c, a, act| rec.on_step(s, c, a, act));
    EpisodeTrace {
        agent: kind,
        scene: record.scene.clone(),
        goal: Some(record.goal),
        result: Some(result),
        exploration: None,
        entries: rec.entries,
        free_energy: rec.free_energy,
    }
}

/// Goal-free exploration of `scene` with full per-step retention.
pub fn record_exploration_trace(scene: &SceneSpec, setup: &AgentSetup, seed: u64, steps: usize, keep: usize) -> EpisodeTrace {
    let setup = AgentSetup {
        diagnostics: true,
        ..setup.clone()
    };
    let mut rec = Recorder {
        setup: &setup,
        keep,
        entries: Vec::new(),
        free_energy: FreeEnergyTrace::default(),
    };
    let result = run_exploration_with(scene, &setup, seed, steps, |s, c, a, act| rec.on_step(s, c, a, act));
    EpisodeTrace {
        agent: AgentKind::Aif,
        scene: scene.clone(),
        goal: None,
        result: None,
        exploration: Some(result),
        entries: rec.entries,
        free_energy: rec.free_energy,
    }
}
