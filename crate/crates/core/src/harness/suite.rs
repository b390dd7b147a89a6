use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{read_json, write_text, HarnessError};
use crate::rng_from;
use crate::scene::{generate_scene, sample_goal_for, Catalog, CategoryId, EnvConfig, GoalSpec, SceneSpec};

/// One evaluation scene with its goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRecord {
    pub id: usize,
    pub target: CategoryId,
    pub scene: SceneSpec,
    pub goal: GoalSpec,
}

/// `per_category` scenes per catalog category, 1 to 5 objects each with the
/// target always present, one goal per scene.
pub fn build_suite(
    catalog: &Catalog,
    env: &EnvConfig,
    seed: u64,
    per_category: usize,
) -> Result<Vec<SuiteRecord>, HarnessError> {
    if per_category == 0 {
        return Err(HarnessError::Config("per_category must be at least 1".into()));
    }
    let max_objects = catalog.len().min(5);
    let mut rng = rng_from(seed, 100);
    let mut records = Vec::with_capacity(per_category * catalog.len());
    for target in catalog.ids() {
        for _ in 0..per_category {
            let id = records.len();
            let n = rng.random_range(1..=max_objects);
            let mut others: Vec<CategoryId> = catalog.ids().filter(|c| *c != target).collect();
            others.shuffle(&mut rng);
            let mut categories = vec![target];
            categories.extend_from_slice(&others[..n - 1]);
            let scene_seed: u64 = rng.random();
            let scene = generate_scene(catalog, env, scene_seed, n, &categories)
                .map_err(|e| HarnessError::Config(format!("scene {id}: {e}")))?;
            let goal = sample_goal_for(catalog, env, &scene, target, scene_seed)
                .map_err(|e| HarnessError::Config(format!("scene {id}: {e}")))?;
            records.push(SuiteRecord { id, target, scene, goal });
        }
    }
    Ok(records)
}

pub fn suite_json(records: &[SuiteRecord]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("suite records serialize");
    s.push('\n');
    s
}

pub fn write_suite(path: &Path, records: &[SuiteRecord]) -> Result<(), HarnessError> {
    write_text(path, &suite_json(records))
}

pub fn read_suite(path: &Path) -> Result<Vec<SuiteRecord>, HarnessError> {
    let records: Vec<SuiteRecord> = read_json(path)?;
    for (i, r) in records.iter().enumerate() {
        if !r.scene.contains(r.goal.target_category) || r.goal.target_category != r.target {
            return Err(HarnessError::Config(format!("suite record {i}: goal target not in scene")));
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_shape() {
        let catalog = Catalog::default();
        let records = build_suite(&catalog, &EnvConfig::default(), 7, 4).unwrap();
        assert_eq!(records.len(), 20);
        for (i, r) in records.iter().enumerate() {
            assert_eq!(r.id, i);
            assert_eq!(r.target, i / 4);
            assert!(r.scene.contains(r.target));
            assert!((1..=5).contains(&r.scene.objects.len()));
        }
        let again = build_suite(&catalog, &EnvConfig::default(), 7, 4).unwrap();
        assert_eq!(suite_json(&records), suite_json(&again));
        assert!(build_suite(&catalog, &EnvConfig::default(), 7, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("suite.json");
        let records = build_suite(&Catalog::default(), &EnvConfig::default(), 3, 1).unwrap();
        write_suite(&path, &records).unwrap();
        assert_eq!(read_suite(&path).unwrap(), records);
        let missing = read_suite(&dir.path().join("missing.json")).unwrap_err();
        assert_eq!(missing.exit_code(), 2);
    }
}
