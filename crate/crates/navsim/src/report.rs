//! CSV metric reports, the per-metric summary table and the training
//! curve CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use navsim_core::bench::EpisodeMetrics;
use navsim_core::ppo::TrainRecord;
use serde::{Deserialize, Serialize};

pub const METRICS_HEADER: [&str; 14] = [
    "scenario",
    "agents",
    "controller",
    "ablation",
    "noise",
    "seed",
    "trials",
    "robots",
    "success_rate",
    "collision_rate",
    "stuck_rate",
    "extra_time_s",
    "extra_time_ratio",
    "average_speed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub agents: usize,
    pub controller: String,
    pub ablation: String,
    pub noise: bool,
    pub seed: u64,
    pub trials: usize,
    pub robots: usize,
    pub success_rate: f64,
    pub collision_rate: f64,
    pub stuck_rate: f64,
    pub extra_time_s: f64,
    pub extra_time_ratio: f64,
    pub average_speed: f64,
}

/// Identifies one table cell: what ran where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLabel {
    pub scenario: String,
    pub agents: usize,
    pub controller: String,
    pub ablation: String,
    pub noise: bool,
}

impl MetricsRow {
    pub fn new(label: &RunLabel, seed: u64, trials: usize, m: &EpisodeMetrics) -> Self {
        Self {
            scenario: label.scenario.clone(),
            agents: label.agents,
            controller: label.controller.clone(),
            ablation: label.ablation.clone(),
            noise: label.noise,
            seed,
            trials,
            robots: m.robots,
            success_rate: m.success_rate,
            collision_rate: m.collision_rate,
            stuck_rate: m.stuck_rate,
            extra_time_s: m.extra_time,
            extra_time_ratio: m.extra_time_ratio,
            average_speed: m.average_speed,
        }
    }
}

/// Writes the header even when `rows` is empty.
pub fn write_metrics_csv<W: Write>(w: W, rows: &[MetricsRow]) -> csv::Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(METRICS_HEADER)?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(r: R) -> csv::Result<Vec<MetricsRow>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

/// One block per metric; rows are controller variants, columns are
/// scenario and agent count.
pub fn summary_table(rows: &[MetricsRow]) -> String {
    let mut cols: Vec<(String, usize)> = Vec::new();
    let mut variants: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(String, (String, usize)), &MetricsRow> = BTreeMap::new();
    for r in rows {
        let col = (r.scenario.clone(), r.agents);
        let var = if r.ablation == "none" { r.controller.clone() } else { format!("{} ({})", r.controller, r.ablation) };
        if !cols.contains(&col) {
            cols.push(col.clone());
        }
        if !variants.contains(&var) {
            variants.push(var.clone());
        }
        cells.insert((var, col), r);
    }
    let metrics: [(&str, fn(&MetricsRow) -> String); 5] = [
        ("Success rate (%)", |r| format!("{:.1}", 100.0 * r.success_rate)),
        ("Collision / stuck (%)", |r| format!("{:.1} / {:.1}", 100.0 * r.collision_rate, 100.0 * r.stuck_rate)),
        ("Extra time (s)", |r| format!("{:.2}", r.extra_time_s)),
        ("Extra time (ratio)", |r| format!("{:.3}", r.extra_time_ratio)),
        ("Average speed (m/s)", |r| format!("{:.3}", r.average_speed)),
    ];
    let name_w = variants.iter().map(|v| v.len()).max().unwrap_or(0).max(10);
    let col_w = 13;
    let mut out = String::new();
    for (title, fmt) in metrics {
        let _ = writeln!(out, "{title}");
        let _ = write!(out, "{:name_w$}", "");
        for (s, n) in &cols {
            let _ = write!(out, " {:>col_w$}", format!("{s} {n}"));
        }
        out.push('\n');
        for v in &variants {
            let _ = write!(out, "{v:name_w$}");
            for c in &cols {
                let cell = cells.get(&(v.clone(), c.clone())).map_or_else(|| "-".to_string(), |r| fmt(r));
                let _ = write!(out, " {cell:>col_w$}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CurveRow {
    iteration: u64,
    step: u64,
    episodes: usize,
    mean_reward: Option<f64>,
    success_rate: Option<f64>,
    eval_success_rate: Option<f64>,
    actor_loss: f64,
    critic_loss: f64,
    entropy: f64,
    kl: f64,
    clip_fraction: f64,
}

/// Appends training-curve rows; writes the header when `header` is set.
pub fn write_curve_rows<W: Write>(w: W, records: &[TrainRecord], header: bool) -> csv::Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(header).from_writer(w);
    for r in records {
        wr.serialize(CurveRow {
            iteration: r.iteration,
            step: r.env_steps,
            episodes: r.episodes,
            mean_reward: r.mean_reward,
            success_rate: r.train_success_rate,
            eval_success_rate: r.eval_success_rate,
            actor_loss: r.actor_loss,
            critic_loss: r.critic_loss,
            entropy: r.entropy,
            kl: r.approx_kl,
            clip_fraction: r.clip_fraction,
        })?;
    }
    wr.flush()?;
    Ok(())
}
