use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use active_search::belief::{BeliefBank, BeliefConfig};
use active_search::exec::Execution;
use active_search::geometry::CameraModel;
use active_search::harness::{build_suite, run_episode, ExperimentConfig};
use active_search::perception::NoiseConfig;
use active_search::planning::{sample_candidates, select_from, AgentKind, GoalBeliefs, PlannerConfig, Scorer};
use active_search::rng_from;
use active_search::scene::{Catalog, EnvConfig};

fn candidate_scoring(c: &mut Criterion) {
    let catalog = Catalog::default();
    let env = EnvConfig::default();
    let belief_cfg = BeliefConfig::default();
    let planner = PlannerConfig::default();
    let model = CameraModel::default();
    let noise = NoiseConfig::default();
    let records = build_suite(&catalog, &env, 3, 1).unwrap();
    let goal = GoalBeliefs::exact(&records[1].goal);
    let mut rng = rng_from(3, 0);
    let bank = BeliefBank::new(&catalog, &belief_cfg, &mut rng);
    let scorer = Scorer::new(&bank, Some(&goal), &catalog, &planner, &model, &noise, &belief_cfg.grid, belief_cfg.kde_bandwidth);
    let focus = [&bank.get(goal.target).position];
    let candidates = sample_candidates(&focus, &planner, &env, &belief_cfg.grid.bounds, &mut rng).unwrap();

    let mut group = c.benchmark_group("score_candidates");
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &execution, |b, e| {
            b.iter(|| select_from(&scorer, &candidates, *e))
        });
    }
    group.finish();
}

fn episode_batch(c: &mut Criterion) {
    let catalog = Catalog::default();
    let env = EnvConfig::default();
    let records = build_suite(&catalog, &env, 5, 1).unwrap();
    let mut group = c.benchmark_group("episode_batch");
    group.sample_size(10);
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let mut cfg = ExperimentConfig::default();
        cfg.planner.execution = execution;
        let setup = cfg.agent_setup();
        group.bench_with_input(BenchmarkId::from_parameter(name), &execution, |b, e| {
            b.iter(|| e.map(&records, |r| run_episode(r, AgentKind::GreedyInfogain, &setup, 5)))
        });
    }
    group.finish();
}

criterion_group!(benches, candidate_scoring, episode_batch);
criterion_main!(benches);
