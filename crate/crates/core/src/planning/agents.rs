use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{plan_with, reached, select_target_viewpoint, step_toward, GoalBeliefs, Plan, PlannerConfig, Scorer};
use crate::belief::{BeliefBank, BeliefConfig, CategoryUpdate};
use crate::geometry::{backproject, spherical_coords, CameraModel, CameraPose, Viewpoint};
use crate::perception::{distance_from_scale, Detection, NoiseConfig, ObservationBundle};
use crate::scene::{Action, Catalog, EnvConfig, GoalSpec, SceneSpec};
use crate::SimRng;

/// Configuration shared by every agent in a run.
#[derive(Debug, Clone)]
pub struct AgentSetup {
    pub catalog: Catalog,
    pub model: CameraModel,
    pub noise: NoiseConfig,
    pub env: EnvConfig,
    pub planner: PlannerConfig,
    pub belief: BeliefConfig,
    /// Compute KL / likelihood diagnostics on every belief update.
    pub diagnostics: bool,
}

impl AgentSetup {
    pub fn new(catalog: Catalog, noise: NoiseConfig, env: EnvConfig, planner: PlannerConfig, belief: BeliefConfig) -> Self {
        Self {
            catalog,
            model: CameraModel::default(),
            noise,
            env,
            planner,
            belief,
            diagnostics: false,
        }
    }
}

/// What an agent did on its last step, for traces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub plan: Option<Plan>,
    pub replanned: bool,
    pub updates: Vec<CategoryUpdate>,
}

pub trait Policy: Send {
    fn act(&mut self, obs: &ObservationBundle, camera: &CameraPose) -> Action;

    fn diagnostics(&self) -> Option<&StepDiagnostics> {
        None
    }

    fn bank(&self) -> Option<&BeliefBank> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Aif,
    Greedy,
    GreedyInfogain,
    Random,
    Oracle,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] = [
        AgentKind::Aif,
        AgentKind::GreedyInfogain,
        AgentKind::Greedy,
        AgentKind::Random,
        AgentKind::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::Aif => "aif",
            AgentKind::Greedy => "greedy",
            AgentKind::GreedyInfogain => "greedy-infogain",
            AgentKind::Random => "random",
            AgentKind::Oracle => "oracle",
        }
    }

    /// Builds the agent for one episode. Only the oracle sees the true
    /// goal pose; the others get the goal as view angles and scale but
    /// must locate the object themselves.
    pub fn build(&self, setup: &AgentSetup, goal: &GoalSpec, scene: &SceneSpec, rng: SimRng) -> Box<dyn Policy> {
        let g = GoalBeliefs::exact(goal);
        match self {
            AgentKind::Aif => Box::new(AifAgent::new(setup.clone(), Some(g), rng)),
            AgentKind::Greedy => Box::new(GreedyAgent::new(setup.clone(), g, GreedyVariant::Vanilla, rng)),
            AgentKind::GreedyInfogain => Box::new(GreedyAgent::new(setup.clone(), g, GreedyVariant::Infogain, rng)),
            AgentKind::Random => Box::new(RandomAgent::new(setup.clone(), rng)),
            AgentKind::Oracle => Box::new(OracleAgent::new(goal.viewpoint(scene).ok(), setup.planner.step_size)),
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown agent {s:?}; expected one of aif, greedy, greedy-infogain, random, oracle"))
    }
}

/// Expected-free-energy agent: particle beliefs over every category,
/// periodic viewpoint planning, bounded steps toward the planned view.
pub struct AifAgent {
    setup: AgentSetup,
    goal: Option<GoalBeliefs>,
    bank: BeliefBank,
    rng: SimRng,
    target: Option<Plan>,
    since_plan: usize,
    last: StepDiagnostics,
}

impl AifAgent {
    /// `goal = None` runs goal-free exploration.
    pub fn new(setup: AgentSetup, goal: Option<GoalBeliefs>, mut rng: SimRng) -> Self {
        let bank = BeliefBank::new(&setup.catalog, &setup.belief, &mut rng);
        Self {
            setup,
            goal,
            bank,
            rng,
            target: None,
            since_plan: 0,
            last: StepDiagnostics::default(),
        }
    }

    pub fn target(&self) -> Option<&Plan> {
        self.target.as_ref()
    }

    fn needs_plan(&self, camera: &CameraPose) -> bool {
        match &self.target {
            None => true,
            Some(t) => self.since_plan >= self.setup.planner.replan_interval || reached(camera, &t.viewpoint.to_camera_pose()),
        }
    }
}

impl Policy for AifAgent {
    fn act(&mut self, obs: &ObservationBundle, camera: &CameraPose) -> Action {
        let s = &self.setup;
        let updates = self
            .bank
            .update(obs, camera, &s.model, &s.catalog, &s.belief, s.diagnostics, &mut self.rng);
        let replanned = self.needs_plan(camera);
        if replanned {
            let keep = self.target.map(|t| t.viewpoint);
            if let Ok(plan) = select_target_viewpoint(
                &self.bank,
                self.goal.as_ref(),
                &s.catalog,
                &s.planner,
                &s.model,
                &s.noise,
                &s.env,
                &s.belief,
                keep,
                &mut self.rng,
            ) {
                self.target = Some(plan);
            }
            self.since_plan = 0;
        }
        self.since_plan += 1;
        self.last = StepDiagnostics {
            plan: self.target,
            replanned,
            updates,
        };
        match &self.target {
            Some(t) => step_toward(camera, &t.viewpoint, s.planner.step_size),
            None => Action::zero(),
        }
    }

    fn diagnostics(&self) -> Option<&StepDiagnostics> {
        Some(&self.last)
    }

    fn bank(&self) -> Option<&BeliefBank> {
        Some(&self.bank)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyVariant {
    /// Stops for good as soon as the target is not detected.
    Vanilla,
    /// Falls back to information-gain search while the target is unseen.
    Infogain,
}

/// Frame-by-frame pose estimation: each detection of the target is turned
/// directly into a goal camera pose, with no memory across frames.
pub struct GreedyAgent {
    setup: AgentSetup,
    goal: GoalBeliefs,
    variant: GreedyVariant,
    bank: Option<BeliefBank>,
    rng: SimRng,
    stopped: bool,
    search: Option<Plan>,
    since_plan: usize,
    last: StepDiagnostics,
}

impl GreedyAgent {
    pub fn new(setup: AgentSetup, goal: GoalBeliefs, variant: GreedyVariant, mut rng: SimRng) -> Self {
        let bank = (variant == GreedyVariant::Infogain).then(|| BeliefBank::new(&setup.catalog, &setup.belief, &mut rng));
        Self {
            setup,
            goal,
            variant,
            bank,
            rng,
            stopped: false,
            search: None,
            since_plan: 0,
            last: StepDiagnostics::default(),
        }
    }

    pub fn variant(&self) -> GreedyVariant {
        self.variant
    }

    /// Goal viewpoint implied by a single detection of the target.
    pub fn goal_from_detection(&self, d: &Detection, camera: &CameraPose) -> Option<Viewpoint> {
        let ray = backproject(camera, &self.setup.model, &d.pixel_center).ok()?;
        let position = ray.at(distance_from_scale(d.scale).ok()?);
        let (_, _, azimuth) = spherical_coords(&camera.position, &position);
        let yaw = azimuth - d.pose_estimate.azimuth_rel;
        Some(self.goal.viewpoint(position, yaw))
    }
}

impl Policy for GreedyAgent {
    fn act(&mut self, obs: &ObservationBundle, camera: &CameraPose) -> Action {
        let s = &self.setup;
        let updates = match self.bank.as_mut() {
            Some(bank) => bank.update(obs, camera, &s.model, &s.catalog, &s.belief, s.diagnostics, &mut self.rng),
            None => Vec::new(),
        };
        self.last = StepDiagnostics {
            plan: None,
            replanned: false,
            updates,
        };
        if self.stopped {
            return Action::zero();
        }
        if let Some(goal_view) = obs.get(self.goal.target).and_then(|d| self.goal_from_detection(d, camera)) {
            self.search = None;
            return step_toward(camera, &goal_view, self.setup.planner.step_size);
        }
        let Some(bank) = self.bank.as_ref() else {
            self.stopped = true;
            return Action::zero();
        };
        let s = &self.setup;
        let replan = match &self.search {
            None => true,
            Some(t) => self.since_plan >= s.planner.replan_interval || reached(camera, &t.viewpoint.to_camera_pose()),
        };
        if replan {
            let belief = &bank.get(self.goal.target).position;
            let scorer = Scorer::info_only(vec![belief.compress(&s.belief.grid)], &s.planner, &s.model, &s.noise);
            let keep = self.search.map(|t| t.viewpoint);
            if let Ok(plan) = plan_with(&scorer, &[belief], keep, &s.planner, &s.env, &s.belief.grid.bounds, &mut self.rng) {
                self.search = Some(plan);
            }
            self.since_plan = 0;
            self.last.replanned = true;
        }
        self.since_plan += 1;
        self.last.plan = self.search;
        match &self.search {
            Some(t) => step_toward(camera, &t.viewpoint, s.planner.step_size),
            None => Action::zero(),
        }
    }

    fn diagnostics(&self) -> Option<&StepDiagnostics> {
        Some(&self.last)
    }

    fn bank(&self) -> Option<&BeliefBank> {
        self.bank.as_ref()
    }
}

/// Wanders between uniformly drawn viewpoints.
pub struct RandomAgent {
    setup: AgentSetup,
    rng: SimRng,
    target: Option<Viewpoint>,
    since_plan: usize,
}

impl RandomAgent {
    pub fn new(setup: AgentSetup, rng: SimRng) -> Self {
        Self {
            setup,
            rng,
            target: None,
            since_plan: 0,
        }
    }

    fn draw(&mut self) -> Option<Viewpoint> {
        let p = &self.setup.planner;
        for _ in 0..1000 {
            let lookat = self.setup.belief.grid.bounds.sample_uniform(&mut self.rng);
            let range = self.rng.random_range(p.range_bounds[0]..=p.range_bounds[1]);
            let elevation = self.rng.random_range(p.elevation_bounds[0]..=p.elevation_bounds[1]);
            let azimuth = self.rng.random_range(-PI..PI);
            if let Ok(v) = Viewpoint::new(lookat, range, elevation, azimuth) {
                if self.setup.env.in_workspace(&v.camera_position()) {
                    return Some(v);
                }
            }
        }
        None
    }
}

impl Policy for RandomAgent {
    fn act(&mut self, _obs: &ObservationBundle, camera: &CameraPose) -> Action {
        let stale = match &self.target {
            None => true,
            Some(t) => self.since_plan >= self.setup.planner.replan_interval || reached(camera, &t.to_camera_pose()),
        };
        if stale {
            self.target = self.draw();
            self.since_plan = 0;
        }
        self.since_plan += 1;
        match &self.target {
            Some(t) => step_toward(camera, t, self.setup.planner.step_size),
            None => Action::zero(),
        }
    }
}

/// Walks the straight line to the true goal view; a harness upper bound.
pub struct OracleAgent {
    goal: Option<Viewpoint>,
    step_size: f64,
}

impl OracleAgent {
    pub fn new(goal: Option<Viewpoint>, step_size: f64) -> Self {
        Self { goal, step_size }
    }
}

impl Policy for OracleAgent {
    fn act(&mut self, _obs: &ObservationBundle, camera: &CameraPose) -> Action {
        match &self.goal {
            Some(g) => step_toward(camera, g, self.step_size),
            None => Action::zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::perception::observe;
    use crate::rng_from;
    use crate::scene::{Env, ObjectInstance};

    fn setup(noise: NoiseConfig) -> AgentSetup {
        AgentSetup::new(
            Catalog::default(),
            noise,
            EnvConfig::default(),
            PlannerConfig {
                num_candidates: 500,
                ..PlannerConfig::default()
            },
            BeliefConfig {
                num_particles: 2000,
                ..BeliefConfig::default()
            },
        )
    }

    #[test]
    fn agent_names_round_trip() {
        for k in AgentKind::ALL {
            assert_eq!(k.name().parse::<AgentKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
        assert!("lexa".parse::<AgentKind>().is_err());
    }

    #[test]
    fn aif_replans_every_interval() {
        let s = setup(NoiseConfig::default());
        let env = Env::new(s.catalog.clone(), s.env);
        let scene = env.generate_scene(3, 3, &[0, 1, 2, 3, 4]).unwrap();
        let goal = env.sample_goal(&scene, 3).unwrap();
        let mut agent = AifAgent::new(s.clone(), Some(GoalBeliefs::exact(&goal)), rng_from(3, 9));
        let mut state = env.reset(scene.clone());
        let mut rng = rng_from(3, 8);
        let mut replans = Vec::new();
        for step in 0..25 {
            let obs = observe(&scene, &s.catalog, &state.camera, &s.model, &s.noise, &mut rng);
            let a = agent.act(&obs, &state.camera);
            assert!(a.within_bounds());
            if agent.diagnostics().unwrap().replanned {
                replans.push(step);
            }
            env.apply_action(&mut state, &a).unwrap();
        }
        assert_eq!(replans[0], 0);
        for w in replans.windows(2) {
            assert!(w[1] - w[0] <= 10);
        }
    }

    #[test]
    fn greedy_detection_to_goal_pose_is_exact_when_noiseless() {
        let s = setup(NoiseConfig::noiseless());
        let obj = ObjectInstance {
            category: 4,
            position: Vec3::new(0.05, 0.1, 0.08),
            yaw: 0.7,
        };
        let scene = SceneSpec {
            objects: vec![obj],
            table_color: [0, 0, 0],
            seed: 0,
        };
        let goal = GoalSpec {
            target_category: 4,
            range: 0.4,
            elevation: 0.6,
            azimuth: -1.1,
        };
        let agent = GreedyAgent::new(s.clone(), GoalBeliefs::exact(&goal), GreedyVariant::Vanilla, rng_from(0, 0));
        let camera = crate::scene::initial_viewpoint().to_camera_pose();
        let obs = observe(&scene, &s.catalog, &camera, &s.model, &s.noise, &mut rng_from(0, 1));
        let pose = agent.goal_from_detection(obs.get(4).unwrap(), &camera).unwrap().to_camera_pose();
        let truth = goal.pose(&scene).unwrap();
        assert!((pose.position - truth.position).norm() < 1e-6);
        assert!(crate::geometry::rotation_error(&pose, &truth) < 1e-6);
    }

    #[test]
    fn vanilla_greedy_stops_without_target() {
        let s = setup(NoiseConfig::noiseless());
        let goal = GoalSpec {
            target_category: 2,
            range: 0.4,
            elevation: 0.6,
            azimuth: 0.0,
        };
        let mut agent = GreedyAgent::new(s.clone(), GoalBeliefs::exact(&goal), GreedyVariant::Vanilla, rng_from(0, 0));
        let camera = crate::scene::initial_viewpoint().to_camera_pose();
        let empty = ObservationBundle {
            detections: vec![None; 5],
            camera,
        };
        for _ in 0..5 {
            assert_eq!(agent.act(&empty, &camera), Action::zero());
        }
    }
}
