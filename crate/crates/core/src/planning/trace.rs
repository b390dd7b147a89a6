use serde::{Deserialize, Serialize};

use crate::belief::CategoryUpdate;

/// Free-energy diagnostics of one belief update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyStep {
    pub step: usize,
    /// KL(posterior || prior) per category, over histogram bins.
    pub kl: Vec<f64>,
    /// Negative log prior-predictive likelihood per detected category.
    pub detection_nll: Vec<Option<f64>>,
    pub entropy: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyTrace {
    pub steps: Vec<FreeEnergyStep>,
}

impl FreeEnergyTrace {
    pub fn push(&mut self, updates: &[CategoryUpdate], entropy: Vec<f64>) {
        let step = self.steps.len();
        self.steps.push(FreeEnergyStep {
            step,
            kl: updates.iter().map(|u| u.kl.unwrap_or(0.0)).collect(),
            detection_nll: updates.iter().map(|u| u.detection_nll).collect(),
            entropy,
        });
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = (&'a [CategoryUpdate], Vec<f64>)>) -> Self {
        let mut trace = Self::default();
        for (updates, entropy) in records {
            trace.push(updates, entropy);
        }
        trace
    }

    pub fn total_kl(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.kl.iter().sum()).collect()
    }
}
