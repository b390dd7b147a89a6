use active_search::geometry::{in_frustum, CameraModel, Vec3};
use active_search::harness::{
    build_suite, record_exploration_trace, run_episode, run_exploration, run_suite, ExperimentConfig, SuiteRecord,
};
use active_search::perception::{observe, NoiseConfig};
use active_search::planning::{AgentKind, GoalBeliefs, GreedyAgent, GreedyVariant, Policy};
use active_search::rng_from;
use active_search::scene::{generate_scene, sample_goal_for, Catalog, Env, EnvConfig, SceneSpec};

fn noiseless_setup() -> active_search::planning::AgentSetup {
    let mut cfg = ExperimentConfig::default();
    cfg.noise = NoiseConfig::noiseless();
    cfg.agent_setup()
}

fn single_object_record(seed: u64, category: usize) -> SuiteRecord {
    let catalog = Catalog::default();
    let env = EnvConfig::default();
    let scene = generate_scene(&catalog, &env, seed, 1, &[category]).unwrap();
    let goal = sample_goal_for(&catalog, &env, &scene, category, seed).unwrap();
    SuiteRecord {
        id: seed as usize,
        target: category,
        scene,
        goal,
    }
}

/// One object moved to where the start view cannot see it.
fn hidden_target_record(seed: u64) -> SuiteRecord {
    let catalog = Catalog::default();
    let env = EnvConfig::default();
    let mut scene: SceneSpec = generate_scene(&catalog, &env, seed, 1, &[4]).unwrap();
    scene.objects[0].position.x = 0.35;
    scene.objects[0].position.y = 0.45;
    let start = env.initial_viewpoint().to_camera_pose();
    assert!(!in_frustum(&start, &CameraModel::default(), &scene.objects[0].position));
    let goal = sample_goal_for(&catalog, &env, &scene, 4, seed).unwrap();
    SuiteRecord {
        id: seed as usize,
        target: 4,
        scene,
        goal,
    }
}

#[test]
fn aif_solves_single_object_noiseless_scenes() {
    let setup = noiseless_setup();
    let successes = (0..20u64)
        .map(|seed| run_episode(&single_object_record(seed, (seed % 5) as usize), AgentKind::Aif, &setup, seed))
        .filter(|r| r.success && r.steps < 350)
        .count();
    assert!(successes >= 19, "{successes}/20");
}

#[test]
fn noiseless_greedy_walks_straight_to_the_goal() {
    let setup = noiseless_setup();
    let env = Env::new(setup.catalog.clone(), setup.env);
    let mut checked = 0;
    for seed in 0..30u64 {
        let record = single_object_record(seed, 4);
        let mut state = env.reset(record.scene.clone());
        if !in_frustum(&state.camera, &setup.model, &record.scene.objects[0].position) {
            continue;
        }
        let goal_pose = record.goal.pose(&record.scene).unwrap();
        let distance = (goal_pose.position - state.camera.position).norm();
        let expected = (distance / setup.planner.step_size).ceil() as u32;
        let mut agent = GreedyAgent::new(setup.clone(), GoalBeliefs::exact(&record.goal), GreedyVariant::Vanilla, rng_from(seed, 0));
        let mut rng = rng_from(seed, 1);
        while (state.camera.position - goal_pose.position).norm() > 1e-9 && state.step_count < 350 {
            let obs = observe(&state.scene, &setup.catalog, &state.camera, &setup.model, &setup.noise, &mut rng);
            let a = agent.act(&obs, &state.camera);
            env.apply_action(&mut state, &a).unwrap();
        }
        assert_eq!(state.step_count, expected, "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 5);
}

#[test]
fn vanilla_greedy_never_moves_without_the_target() {
    let setup = ExperimentConfig::default().agent_setup();
    let r = run_episode(&hidden_target_record(3), AgentKind::Greedy, &setup, 3);
    assert!(!r.success);
    assert_eq!(r.steps, 350);
    assert_eq!(r.trajectory_length, 0.0);
}

#[test]
fn infogain_greedy_explores_within_ten_steps() {
    let mut cfg = ExperimentConfig::default();
    cfg.planner.num_candidates = 1000;
    let setup = cfg.agent_setup();
    let env = Env::new(setup.catalog.clone(), setup.env);
    for seed in 0..3u64 {
        let record = hidden_target_record(seed);
        let mut agent = AgentKind::GreedyInfogain.build(&setup, &record.goal, &record.scene, rng_from(seed, 0));
        let mut state = env.reset(record.scene.clone());
        let start = state.camera;
        let mut rng = rng_from(seed, 1);
        for _ in 0..10 {
            let obs = observe(&state.scene, &setup.catalog, &state.camera, &setup.model, &setup.noise, &mut rng);
            let a = agent.act(&obs, &state.camera);
            env.apply_action(&mut state, &a).unwrap();
        }
        assert!((state.camera.position - start.position).norm() > 1e-3);
    }
}

#[test]
fn oracle_agent_always_succeeds() {
    let setup = ExperimentConfig::default().agent_setup();
    let records = build_suite(&Catalog::default(), &setup.env, 17, 4).unwrap();
    for r in run_suite(&records, AgentKind::Oracle, &setup, 1, 0) {
        assert!(r.success && r.steps < 350);
        assert!(r.range_error < 0.075);
    }
}

#[test]
fn results_do_not_depend_on_job_count() {
    let mut cfg = ExperimentConfig::default();
    cfg.planner.num_candidates = 500;
    cfg.belief.num_particles = 2000;
    let setup = cfg.agent_setup();
    let records = build_suite(&Catalog::default(), &setup.env, 8, 1).unwrap();
    for kind in [AgentKind::Aif, AgentKind::GreedyInfogain, AgentKind::Random] {
        let serial = run_suite(&records, kind, &setup, 11, 1);
        let parallel = run_suite(&records, kind, &setup, 11, 3);
        assert_eq!(serial, parallel);
        assert_eq!(serial.iter().map(|r| r.scene_id).collect::<Vec<_>>(), (0..records.len()).collect::<Vec<_>>());
    }
}

/// The entropy curve averaged over 50 episodes, as in the exploration plot.
#[test]
fn exploration_mean_entropy_mostly_non_increasing() {
    let setup = ExperimentConfig::default().agent_setup();
    let catalog = Catalog::default();
    let all: Vec<usize> = catalog.ids().collect();
    let episodes = 50;
    let mut mean = vec![0.0; 101];
    for seed in 0..episodes as u64 {
        let scene = generate_scene(&catalog, &setup.env, 5000 + seed, 5, &all).unwrap();
        let r = run_exploration(&scene, &setup, seed, 100);
        assert_eq!(r.entropy.len(), 101);
        for (m, h) in mean.iter_mut().zip(&r.entropy) {
            *m += h / episodes as f64;
        }
    }
    let non_increasing = mean.windows(2).filter(|w| w[1] <= w[0] + 1e-12).count();
    assert!(non_increasing >= 95, "{non_increasing}/100");
}

#[test]
fn noiseless_exploration_trace_localizes_objects() {
    let setup = noiseless_setup();
    let catalog = Catalog::default();
    let scene = generate_scene(&catalog, &setup.env, 77, 3, &[0, 2, 4]).unwrap();
    let trace = record_exploration_trace(&scene, &setup, 77, 100, 50);
    assert_eq!(trace.entries.len(), 100);
    let last = trace.entries.last().unwrap();
    for obj in &scene.objects {
        let snap = last.beliefs.iter().find(|b| b.category == obj.category).expect("belief for every scene object");
        assert!((Vec3::from(snap.mean) - obj.position).norm() <= 0.1, "{}: {:?} vs {:?}", snap.name, snap.mean, obj.position);
        assert!(snap.particles.len() <= 50);
    }
    let result = trace.exploration.expect("exploration summary");
    assert!(result.max_position_error() <= 0.1);
}
