//! JSON-lines trajectory logs: one record per (step, robot).

use std::io::{BufRead, Write};

use navsim_core::env::{NavEnv, StepOutcome};
use navsim_core::reward::RewardBreakdown;
use navsim_core::sim::{Action, Status};
use serde::{Deserialize, Serialize};

/// Optional payloads; pose, action, `d_min`, status and the observation
/// summary are always written.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LogOptions {
    pub scans: bool,
    pub rewards: bool,
    pub paths: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub trial: u64,
    pub step: u64,
    pub time: f64,
    pub agent: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub w: f64,
    /// `None` when nothing is in range.
    pub d_min: Option<f64>,
    pub status: Status,
    pub goal: [f64; 2],
    /// Point the progress reward is measured against.
    pub reward_target: [f64; 2],
    pub node_count: usize,
    pub o_gp: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardBreakdown>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Vec<f64>>,
    /// Global path waypoints, on the first step only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<[f64; 2]>>,
}

/// Records for every robot after one environment step.
pub fn step_records(trial: u64, env: &NavEnv, actions: &[Action], out: &StepOutcome, opts: LogOptions) -> Vec<StepRecord> {
    let step = env.world.steps();
    (0..env.num_agents())
        .map(|i| {
            let r = &env.world.robots[i];
            let obs = env.observation(i);
            let t = env.reward_target(i);
            StepRecord {
                trial,
                step,
                time: out.report.sim_time,
                agent: i,
                x: r.position.x,
                y: r.position.y,
                heading: r.heading,
                v: actions[i].v,
                w: actions[i].w,
                d_min: Some(out.report.d_min[i]).filter(|d| d.is_finite()),
                status: r.status,
                goal: [r.goal.x, r.goal.y],
                reward_target: [t.x, t.y],
                node_count: obs.o_c.node_count(),
                o_gp: obs.o_gp,
                reward: if opts.rewards { out.rewards[i] } else { None },
                scan: opts.scans.then(|| env.scans(i).latest().ranges.clone()),
                path: (opts.paths && step == 1).then(|| env.paths[i].waypoints.iter().map(|p| [p.x, p.y]).collect()),
            }
        })
        .collect()
}

pub fn write_records<W: Write>(w: &mut W, records: &[StepRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<StepRecord>, serde_json::Error> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line.map_err(serde_json::Error::io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
