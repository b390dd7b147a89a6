use serde::{Deserialize, Serialize};

use super::{entropy_of_masses, kde, systematic_indices, HistogramGrid, ParticleBelief};
use crate::geometry::{Frustum, Vec3};

/// A particle belief merged to one representative per occupied histogram
/// bin (the bin's weighted mean). Histogram-based entropies are preserved
/// exactly, so it is a cheap stand-in for candidate scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedBelief {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub entropy: f64,
    pub mean: Vec3,
}

impl CompressedBelief {
    pub fn from_belief(b: &ParticleBelief, grid: &HistogramGrid) -> Self {
        let mut mass = vec![0.0; grid.num_bins()];
        let mut sums = vec![Vec3::zeros(); grid.num_bins()];
        for (p, w) in b.particles.iter().zip(&b.weights) {
            let i = grid.bin_index(p);
            mass[i] += w;
            sums[i] += *w * p;
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (m, s) in mass.iter().zip(&sums) {
            if *m > 0.0 {
                points.push(s / *m);
                weights.push(*m);
            }
        }
        let entropy = entropy_of_masses(&weights);
        Self {
            points,
            weights,
            entropy,
            mean: b.mean(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mass_in(&self, frustum: &Frustum) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| frustum.contains(p))
            .map(|(_, w)| w)
            .sum()
    }

    pub fn density_at(&self, p: &Vec3, bandwidth: f64) -> f64 {
        kde(&self.points, &self.weights, p, bandwidth)
    }

    /// `m` representative positions chosen deterministically by weight.
    pub fn representatives(&self, m: usize) -> Vec<Vec3> {
        systematic_indices(&self.weights, m, 0.5)
            .into_iter()
            .map(|i| self.points[i])
            .collect()
    }
}
