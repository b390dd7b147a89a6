use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BeliefConfig, ParticleBelief, RayLikelihood, UpdateStatus, YawBelief};
use crate::geometry::{CameraModel, CameraPose};
use crate::perception::ObservationBundle;
use crate::scene::{Catalog, CategoryId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryBelief {
    pub position: ParticleBelief,
    pub yaw: YawBelief,
    pub detections: u32,
}

/// Per-category diagnostics of one bank update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryUpdate {
    pub category: CategoryId,
    pub detected: bool,
    pub status: UpdateStatus,
    pub resampled: bool,
    /// KL(posterior || prior) over histogram bins; only filled when requested.
    pub kl: Option<f64>,
    /// Negative log of the prior-predictive likelihood of the detection.
    pub detection_nll: Option<f64>,
}

/// One belief per catalog category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefBank {
    pub categories: Vec<CategoryBelief>,
}

impl BeliefBank {
    pub fn new<R: Rng + ?Sized>(catalog: &Catalog, cfg: &BeliefConfig, rng: &mut R) -> Self {
        let categories = catalog
            .ids()
            .map(|_| CategoryBelief {
                position: ParticleBelief::init_uniform(cfg.grid.bounds, cfg.num_particles, rng),
                yaw: YawBelief::default(),
                detections: 0,
            })
            .collect();
        Self { categories }
    }

    pub fn get(&self, category: CategoryId) -> &CategoryBelief {
        &self.categories[category]
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn total_entropy(&self, cfg: &BeliefConfig) -> f64 {
        self.categories.iter().map(|c| c.position.entropy(&cfg.grid)).sum()
    }

    /// Folds one observation bundle into every category belief, then
    /// resamples (with jitter) where the effective sample size collapsed.
    #[allow(clippy::too_many_arguments)]
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        obs: &ObservationBundle,
        camera: &CameraPose,
        model: &CameraModel,
        catalog: &Catalog,
        cfg: &BeliefConfig,
        diagnostics: bool,
        rng: &mut R,
    ) -> Vec<CategoryUpdate> {
        let mut reports = Vec::with_capacity(self.categories.len());
        for (category, entry) in self.categories.iter_mut().enumerate() {
            let prior_hist = diagnostics.then(|| entry.position.histogram(&cfg.grid));
            let mut nll = None;
            let detection = obs.get(category);
            let status = match detection {
                Some(d) => match RayLikelihood::from_detection(d, camera, model, cfg) {
                    Ok(rl) => {
                        if diagnostics {
                            let predictive: f64 = entry
                                .position
                                .particles
                                .iter()
                                .zip(&entry.position.weights)
                                .map(|(p, w)| w * rl.density(p))
                                .sum();
                            nll = Some(-(predictive + 1e-300).ln());
                        }
                        let status = entry.position.update_with_ray(&rl);
                        entry.detections += 1;
                        if let Ok(cat) = catalog.get(category) {
                            let mean = entry.position.mean();
                            entry.yaw.update(d, camera, &mean, cat.symmetry_order);
                        }
                        status
                    }
                    Err(_) => UpdateStatus::DegenerateFallback,
                },
                None => {
                    let nearest = if entry.detections > 0 {
                        (entry.position.mean() - camera.position).norm()
                    } else {
                        f64::INFINITY
                    };
                    entry
                        .position
                        .update_no_detection(camera, model, nearest, cfg.negative_evidence_weight)
                }
            };
            let kl = prior_hist.map(|prior| histogram_kl(&entry.position.histogram(&cfg.grid), &prior));
            let resampled = entry.position.maybe_resample(cfg.resample_ess_fraction, rng);
            if resampled {
                entry.position.predict_jitter(cfg.jitter_std, rng);
            }
            reports.push(CategoryUpdate {
                category,
                detected: detection.is_some(),
                status,
                resampled,
                kl,
                detection_nll: nll,
            });
        }
        reports
    }
}

/// KL(p || q) in nats between two mass vectors over the same bins.
pub fn histogram_kl(p: &[f64], q: &[f64]) -> f64 {
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    if sp <= 0.0 || sq <= 0.0 {
        return 0.0;
    }
    let kl: f64 = p
        .iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| {
            let pa = a / sp;
            let qb = (b / sq).max(1e-300);
            pa * (pa / qb).ln()
        })
        .sum();
    kl.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Viewpoint;
    use crate::perception::{observe, NoiseConfig};
    use crate::rng_from;
    use crate::scene::{generate_scene, EnvConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn kl_closed_forms() {
        assert_eq!(histogram_kl(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(histogram_kl(&[2.0, 2.0], &[1.0, 1.0]), 0.0);
        let expected = 0.9 * (0.9f64 / 0.5).ln() + 0.1 * (0.1f64 / 0.5).ln();
        assert_abs_diff_eq!(histogram_kl(&[0.9, 0.1], &[0.5, 0.5]), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.3680, epsilon = 1e-4);
    }

    #[test]
    fn bank_update_concentrates_on_seen_objects() {
        let catalog = Catalog::default();
        let env = EnvConfig::default();
        let cfg = BeliefConfig {
            num_particles: 3000,
            ..BeliefConfig::default()
        };
        let scene = generate_scene(&catalog, &env, 11, 1, &[0]).unwrap();
        let obj = scene.objects[0];
        let model = CameraModel::default();
        let mut rng = rng_from(11, 3);
        let mut bank = BeliefBank::new(&catalog, &cfg, &mut rng);
        assert_eq!(bank.len(), catalog.len());
        let h0 = bank.get(0).position.entropy(&cfg.grid);
        for k in 0..20 {
            let cam = Viewpoint::new(obj.position, 0.4, 0.6, 0.3 * k as f64).unwrap().to_camera_pose();
            let obs = observe(&scene, &catalog, &cam, &model, &NoiseConfig::noiseless(), &mut rng);
            let reports = bank.update(&obs, &cam, &model, &catalog, &cfg, true, &mut rng);
            assert!(reports[0].detected);
            assert!(reports.iter().all(|r| r.kl.unwrap() >= 0.0));
            for c in &bank.categories {
                assert_abs_diff_eq!(c.position.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            }
        }
        let b = bank.get(0);
        assert!((b.position.mean() - obj.position).norm() < 0.05);
        assert!(b.position.entropy(&cfg.grid) < 0.7 * h0);
        assert_eq!(b.detections, 20);
    }
}
