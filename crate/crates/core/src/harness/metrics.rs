use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, write_text, EpisodeResult, HarnessError};

pub const TOTAL: &str = "total";

fn total_label() -> String {
    TOTAL.to_string()
}

/// One report line: success rate and mean ± standard error of the
/// azimuth (`dphi`), elevation (`dtheta`) and range (`dr`) errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub agent: String,
    #[serde(default = "total_label")]
    pub category: String,
    #[serde(default)]
    pub n: usize,
    pub success_pct: f64,
    pub dphi_mean: f64,
    pub dphi_se: f64,
    pub dtheta_mean: f64,
    pub dtheta_se: f64,
    pub dr_mean: f64,
    pub dr_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn row(&self, agent: &str, category: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.agent == agent && r.category == category)
    }
}

/// Sample mean and standard error (sample std / sqrt n).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn row_for(agent: &str, category: &str, group: &mut [&EpisodeResult]) -> MetricsRow {
    // Fixed order so the floating-point sums do not depend on input order.
    group.sort_by_key(|r| (r.scene_id, r.seed));
    let col = |f: fn(&EpisodeResult) -> f64| -> Vec<f64> { group.iter().map(|r| f(r)).collect() };
    let (dphi_mean, dphi_se) = mean_se(&col(|r| r.azimuth_error));
    let (dtheta_mean, dtheta_se) = mean_se(&col(|r| r.elevation_error));
    let (dr_mean, dr_se) = mean_se(&col(|r| r.range_error));
    let successes = group.iter().filter(|r| r.success).count();
    MetricsRow {
        agent: agent.to_string(),
        category: category.to_string(),
        n: group.len(),
        success_pct: 100.0 * successes as f64 / group.len() as f64,
        dphi_mean,
        dphi_se,
        dtheta_mean,
        dtheta_se,
        dr_mean,
        dr_se,
    }
}

/// Groups results per (agent, category) and adds one total row per agent.
pub fn aggregate(results: &[EpisodeResult]) -> Result<MetricsTable, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let mut by_agent: BTreeMap<_, BTreeMap<(usize, String), Vec<&EpisodeResult>>> = BTreeMap::new();
    for r in results {
        by_agent
            .entry(r.agent)
            .or_default()
            .entry((r.target, r.category.clone()))
            .or_default()
            .push(r);
    }
    let mut rows = Vec::new();
    for (agent, groups) in by_agent {
        let mut all = Vec::new();
        for ((_, category), mut group) in groups {
            all.extend(group.iter().copied());
            rows.push(row_for(agent.name(), &category, &mut group));
        }
        rows.push(row_for(agent.name(), TOTAL, &mut all));
    }
    Ok(MetricsTable { rows })
}

pub fn metrics_csv(table: &MetricsTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &table.rows {
        w.serialize(row).expect("metrics rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn write_metrics_csv(path: &Path, table: &MetricsTable) -> Result<(), HarnessError> {
    write_text(path, &metrics_csv(table))
}

/// Reads a metrics CSV. `category` and `n` may be absent, as in single
/// environment tables from other sources.
pub fn parse_metrics_csv(path: &Path) -> Result<MetricsTable, HarnessError> {
    let text = read_text(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<MetricsRow>, _>>()
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    Ok(MetricsTable { rows })
}

/// Aligned plain-text table, values as `mean ± se`.
pub fn render_table(table: &MetricsTable) -> String {
    let header = ["agent", "category", "n", "% s", "d_phi", "d_theta", "d_r"];
    let body: Vec<[String; 7]> = table
        .rows
        .iter()
        .map(|r| {
            [
                r.agent.clone(),
                r.category.clone(),
                if r.n == 0 { "-".into() } else { r.n.to_string() },
                format!("{:.1}", r.success_pct),
                format!("{:.3} ± {:.3}", r.dphi_mean, r.dphi_se),
                format!("{:.3} ± {:.3}", r.dtheta_mean, r.dtheta_se),
                format!("{:.3} ± {:.3}", r.dr_mean, r.dr_se),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for line in &body {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut emit = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    emit(header.to_vec());
    for line in &body {
        emit(line.iter().map(String::as_str).collect());
    }
    out
}
