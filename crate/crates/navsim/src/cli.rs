//! Subcommands behind the `navsim` binary. Each takes an optional JSON
//! config file whose fields are overridden by command-line flags.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use navsim_core::bench::{aggregate, run_episode, BenchError, EpisodeMetrics, TrialResult};
use navsim_core::controller::{Controller, ControllerKind};
use navsim_core::env::{EnvConfig, NavEnv, Scene};
use navsim_core::exec::Executor;
use navsim_core::obs::{Ablation, NoiseConfig};
use navsim_core::orca::OrcaConfig;
use navsim_core::planner::rasterize;
use navsim_core::policy::{Policy, PolicyConfig, PolicyError};
use navsim_core::ppo::{TrainConfig, TrainError, TrainSetup, Trainer};
use navsim_core::scenarios::{eval_agent_counts, generate, ScenarioKind, ScenarioSpec, EVAL_SCALE};
use serde::{Deserialize, Serialize};

use crate::exec::Parallel;
use crate::grid::{write_pgm, GridMeta};
use crate::io::{load_policy, read_json, save_policy, write_json, IoError};
use crate::report::{summary_table, write_curve_rows, write_metrics_csv, MetricsRow, RunLabel};
use crate::svg::render;
use crate::trajectory::{read_records, step_records, write_records, LogOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            _ => 1,
        }
    }
}

fn other(e: impl std::fmt::Display) -> CliError {
    CliError::Other(e.to_string())
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Other(format!("{}: {e}", path.display()))
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Policy(PolicyError::NumericalDivergence) => CliError::Divergence(e.to_string()),
            TrainError::Config(_) | TrainError::Scenario(_) => CliError::Config(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "navsim", version, about = "Multi-robot navigation simulator, baselines, training and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run seeded trials of one scenario with one controller.
    Run(RunArgs),
    /// Train a policy with PPO.
    Train(TrainArgs),
    /// Render a trajectory log to SVG.
    Replay(ReplayArgs),
    /// Sweep controllers over the standard evaluation scenarios.
    Grid(GridArgs),
    /// Export a scenario's occupancy grid as PGM plus JSON metadata.
    Map(MapArgs),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub agents: usize,
    pub scale: f64,
    pub obstacles: Option<usize>,
    /// Fixed scene file used instead of the generator.
    pub scene: Option<PathBuf>,
    pub controller: ControllerKind,
    pub checkpoint: Option<PathBuf>,
    /// Use the policy mean instead of sampling.
    pub deterministic: bool,
    pub trials: usize,
    pub seed: u64,
    pub noise: bool,
    pub ablation: Ablation,
    pub orca: OrcaConfig,
    pub env: EnvConfig,
    pub output: PathBuf,
    pub threads: Option<usize>,
    pub log: bool,
    pub log_scans: bool,
    pub log_rewards: bool,
    pub log_paths: bool,
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::Circle,
            agents: 10,
            scale: EVAL_SCALE,
            obstacles: None,
            scene: None,
            controller: ControllerKind::Orca,
            checkpoint: None,
            deterministic: true,
            trials: 50,
            seed: 0,
            noise: false,
            ablation: Ablation::None,
            orca: OrcaConfig::default(),
            env: EnvConfig::default(),
            output: PathBuf::from("out"),
            threads: None,
            log: false,
            log_scans: false,
            log_rewards: false,
            log_paths: false,
            svg: false,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<ScenarioKind>,
    #[arg(long)]
    pub agents: Option<usize>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub obstacles: Option<usize>,
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub controller: Option<ControllerKind>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Sample actions from the policy instead of taking its mean.
    #[arg(long)]
    pub stochastic: bool,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sensor and state noise: on or off.
    #[arg(long, value_parser = parse_on_off)]
    pub noise: Option<bool>,
    #[arg(long)]
    pub ablation: Option<Ablation>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write a JSON-lines trajectory log.
    #[arg(long)]
    pub log: bool,
    #[arg(long)]
    pub log_scans: bool,
    #[arg(long)]
    pub log_rewards: bool,
    #[arg(long)]
    pub log_paths: bool,
    /// Write an SVG of the first trial.
    #[arg(long)]
    pub svg: bool,
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err("expected on or off".into()),
    }
}

fn load_or_default<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        Some(p) => read_json(p).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(T::default()),
    }
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c: RunConfig = load_or_default(self.config.as_deref())?;
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = self.$f.clone() { c.$f = v; } )*};
        }
        set!(scenario, agents, scale, controller, trials, seed, noise, ablation, output);
        if self.obstacles.is_some() {
            c.obstacles = self.obstacles;
        }
        if self.scene.is_some() {
            c.scene = self.scene.clone();
        }
        if self.checkpoint.is_some() {
            c.checkpoint = self.checkpoint.clone();
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        c.deterministic &= !self.stochastic;
        c.log |= self.log || self.log_scans || self.log_rewards || self.log_paths;
        c.log_scans |= self.log_scans;
        c.log_rewards |= self.log_rewards;
        c.log_paths |= self.log_paths;
        c.svg |= self.svg;
        c.validate()?;
        Ok(c)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be positive");
        }
        if self.scene.is_none() && self.agents == 0 {
            return bad("agents must be positive");
        }
        if !(self.scale > 0.0) {
            return bad("scale must be positive");
        }
        if self.controller == ControllerKind::Policy && self.checkpoint.is_none() {
            return bad("the policy controller needs --checkpoint");
        }
        if self.threads == Some(0) {
            return bad("threads must be positive");
        }
        Ok(())
    }

    pub fn spec(&self) -> ScenarioSpec {
        let mut s = ScenarioSpec::new(self.scenario, self.scale, self.agents, self.seed);
        if let Some(n) = self.obstacles {
            s.num_obstacles = n;
        }
        s
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            noise: if self.noise { NoiseConfig::evaluation() } else { NoiseConfig::off() },
            ablation: self.ablation,
            ..self.env.clone()
        }
    }

    pub fn log_options(&self) -> LogOptions {
        LogOptions { scans: self.log_scans, rewards: self.log_rewards, paths: self.log_paths }
    }

    pub fn label(&self) -> RunLabel {
        RunLabel {
            scenario: if self.scene.is_some() { "file".into() } else { self.scenario.as_str().into() },
            agents: self.agents,
            controller: self.controller.as_str().into(),
            ablation: self.ablation.as_str().into(),
            noise: self.noise,
        }
    }
}

fn executor(threads: Option<usize>) -> Result<Parallel, CliError> {
    Parallel::new(threads).map_err(other)
}

fn load_checkpoint(path: Option<&Path>) -> Result<Option<Policy>, CliError> {
    path.map(|p| load_policy(p).map_err(|e| CliError::Config(e.to_string()))).transpose()
}

fn make_controller<'a>(kind: ControllerKind, orca: OrcaConfig, policy: Option<&'a Policy>, deterministic: bool) -> Result<Controller<'a>, CliError> {
    Ok(match kind {
        ControllerKind::Straight => Controller::Straight(orca),
        ControllerKind::Orca => Controller::Orca(orca),
        ControllerKind::Policy => Controller::Policy {
            policy: policy.ok_or_else(|| CliError::Config("the policy controller needs a checkpoint".into()))?,
            deterministic,
        },
    })
}

pub struct TrialOutput {
    pub result: TrialResult,
    pub scene: Scene,
    pub log: Vec<u8>,
}

/// Runs one trial per seed in parallel; results come back in seed order.
pub fn run_seeds<E: Executor>(
    seeds: &[u64],
    scene_for: &(dyn Fn(u64) -> Result<Scene, CliError> + Sync),
    controller: &Controller<'_>,
    env: &EnvConfig,
    log: Option<LogOptions>,
    exec: &E,
) -> Result<Vec<TrialOutput>, CliError> {
    let cfg = EnvConfig { perception: controller.needs_perception() || log.is_some(), ..env.clone() };
    exec.map(seeds, &|&seed| {
        let scene = scene_for(seed)?;
        let mut buf = Vec::new();
        let mut io_err = None;
        let result = run_episode(scene.clone(), controller, cfg.clone(), seed, &mut |env: &NavEnv, acts, out| {
            if let (Some(opts), None) = (log, &io_err) {
                if let Err(e) = write_records(&mut buf, &step_records(seed, env, acts, out, opts)) {
                    io_err = Some(e);
                }
            }
        })?;
        if let Some(e) = io_err {
            return Err(other(e));
        }
        Ok(TrialOutput { result, scene, log: buf })
    })
    .into_iter()
    .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(write_err(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(write_err(path))
}

fn write_csv(path: &Path, rows: &[MetricsRow]) -> Result<(), CliError> {
    write_metrics_csv(create(path)?, rows).map_err(other)
}

pub fn run(cfg: &RunConfig) -> Result<EpisodeMetrics, CliError> {
    let exec = executor(cfg.threads)?;
    let policy = load_checkpoint(cfg.checkpoint.as_deref())?;
    let controller = make_controller(cfg.controller, cfg.orca, policy.as_ref(), cfg.deterministic)?;
    let fixed: Option<Scene> = cfg.scene.as_deref().map(read_json).transpose().map_err(|e| CliError::Config(e.to_string()))?;
    let spec = cfg.spec();
    let scene_for = |seed: u64| -> Result<Scene, CliError> {
        match &fixed {
            Some(s) => {
                let mut s = s.clone();
                s.config.rng_seed = seed;
                Ok(s)
            }
            None => generate(&spec.with_seed(seed)).map_err(|e| CliError::Config(e.to_string())),
        }
    };
    let seeds: Vec<u64> = (0..cfg.trials as u64).map(|k| cfg.seed.wrapping_add(k)).collect();
    let log = cfg.log.then(|| cfg.log_options());
    let outputs = run_seeds(&seeds, &scene_for, &controller, &cfg.env_config(), log, &exec)?;

    let mut label = cfg.label();
    if let Some(s) = &fixed {
        label.agents = s.robots.len();
    }
    let trials: Vec<TrialResult> = outputs.iter().map(|o| o.result.clone()).collect();
    let metrics = aggregate(&trials);
    let rows: Vec<MetricsRow> = trials.iter().map(|t| MetricsRow::new(&label, t.seed, 1, &aggregate(std::slice::from_ref(t)))).collect();
    let summary = MetricsRow::new(&label, cfg.seed, trials.len(), &metrics);
    let out = &cfg.output;
    write_csv(&out.join("trials.csv"), &rows)?;
    write_csv(&out.join("summary.csv"), std::slice::from_ref(&summary))?;
    let table = summary_table(std::slice::from_ref(&summary));
    std::fs::write(out.join("summary.txt"), &table).map_err(write_err(out))?;
    if cfg.log {
        let p = out.join("trajectory.jsonl");
        let mut w = create(&p)?;
        for o in &outputs {
            w.write_all(&o.log).map_err(write_err(&p))?;
            write_json(&out.join("scenes").join(format!("{}.json", o.result.seed)), &o.scene)?;
        }
        w.flush().map_err(write_err(&p))?;
    }
    if cfg.svg {
        let first = &outputs[0];
        let recs = if cfg.log {
            read_records(&first.log[..]).map_err(other)?
        } else {
            // Re-run the first trial with logging to draw it.
            let again = run_seeds(&seeds[..1], &scene_for, &controller, &cfg.env_config(), Some(LogOptions::default()), &exec)?;
            read_records(&again[0].log[..]).map_err(other)?
        };
        let p = out.join(format!("trial_{}.svg", first.result.seed));
        std::fs::write(&p, render(Some(&first.scene), &recs)).map_err(write_err(&p))?;
    }
    print!("{table}");
    Ok(metrics)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainFile {
    pub train: TrainConfig,
    pub scenarios: Vec<ScenarioSpec>,
    pub env: EnvConfig,
    pub policy: PolicyConfig,
    /// Defaults to the training scenarios.
    pub eval_scenarios: Option<Vec<ScenarioSpec>>,
    pub eval_episodes: usize,
    pub eval_every: usize,
    pub total_env_steps: u64,
    pub checkpoint_every: u64,
    /// Stop once a deterministic evaluation reaches this success rate.
    pub target_success: Option<f64>,
    pub init_checkpoint: Option<PathBuf>,
    pub output: PathBuf,
    pub threads: Option<usize>,
}

impl Default for TrainFile {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            scenarios: ScenarioSpec::training_set(0),
            env: EnvConfig::default(),
            policy: PolicyConfig::default(),
            eval_scenarios: None,
            eval_episodes: 10,
            eval_every: 5,
            total_env_steps: 300_000,
            checkpoint_every: 10,
            target_success: None,
            init_checkpoint: None,
            output: PathBuf::from("train_out"),
            threads: None,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON training configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Total world steps across all parallel environments.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

impl TrainArgs {
    pub fn resolve(&self) -> Result<TrainFile, CliError> {
        let mut f: TrainFile = load_or_default(self.config.as_deref())?;
        if let Some(s) = self.seed {
            f.train.seed = s;
        }
        if let Some(s) = self.steps {
            f.total_env_steps = s;
        }
        if let Some(o) = &self.output {
            f.output = o.clone();
        }
        if self.threads.is_some() {
            f.threads = self.threads;
        }
        f.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if f.scenarios.is_empty() {
            return Err(CliError::Config("at least one training scenario is required".into()));
        }
        Ok(f)
    }
}

/// Trains and writes `curve.csv`, periodic checkpoints and `final.json`.
/// On divergence the last good parameters are still saved.
pub fn train(f: &TrainFile) -> Result<Vec<navsim_core::ppo::TrainRecord>, CliError> {
    let exec = executor(f.threads)?;
    let setup = TrainSetup {
        scenarios: f.scenarios.clone(),
        env: f.env.clone(),
        policy: f.policy.clone(),
        eval_scenarios: f.eval_scenarios.clone().unwrap_or_else(|| f.scenarios.clone()),
        eval_episodes: f.eval_episodes,
        eval_every: f.eval_every,
    };
    let mut trainer = match load_checkpoint(f.init_checkpoint.as_deref())? {
        Some(p) => Trainer::with_policy(f.train.clone(), setup, p)?,
        None => Trainer::new(f.train.clone(), setup)?,
    };
    let out = &f.output;
    write_json(&out.join("config.json"), f)?;
    let curve = out.join("curve.csv");
    let mut w = create(&curve)?;
    let mut first = true;
    let mut failure = None;
    let records = trainer.train(f.total_env_steps, &exec, &mut |rec, policy| {
        let res = write_curve_rows(&mut w, std::slice::from_ref(rec), first)
            .map_err(other)
            .and_then(|_| w.flush().map_err(write_err(&curve)))
            .and_then(|_| {
                if f.checkpoint_every > 0 && rec.iteration % f.checkpoint_every == 0 {
                    save_policy(&out.join("checkpoints").join(format!("iter_{:05}.json", rec.iteration)), policy)?;
                }
                Ok(())
            });
        first = false;
        println!(
            "iter {:4} steps {:8} reward {:>9} success {:>6} eval {:>6} kl {:.5}",
            rec.iteration,
            rec.env_steps,
            rec.mean_reward.map_or("-".into(), |r| format!("{r:.2}")),
            rec.train_success_rate.map_or("-".into(), |r| format!("{r:.2}")),
            rec.eval_success_rate.map_or("-".into(), |r| format!("{r:.2}")),
            rec.approx_kl
        );
        if let Err(e) = res {
            failure = Some(e);
            return true;
        }
        matches!((f.target_success, rec.eval_success_rate), (Some(t), Some(s)) if s >= t)
    });
    save_policy(&out.join("final.json"), &trainer.policy)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(records?)
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Trajectory log written by `run --log`.
    #[arg(long)]
    pub log: PathBuf,
    /// Scene file for obstacles; defaults to the one saved next to the log.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Trial seed to draw; defaults to the first in the log.
    #[arg(long)]
    pub trial: Option<u64>,
    #[arg(long, default_value = "replay.svg")]
    pub output: PathBuf,
}

pub fn replay(a: &ReplayArgs) -> Result<(), CliError> {
    let f = File::open(&a.log).map_err(|e| CliError::Config(format!("{}: {e}", a.log.display())))?;
    let records = read_records(BufReader::new(f)).map_err(|e| CliError::Config(format!("{}: {e}", a.log.display())))?;
    let trial = match a.trial.or_else(|| records.first().map(|r| r.trial)) {
        Some(t) => t,
        None => return Err(CliError::Config("the log is empty".into())),
    };
    let recs: Vec<_> = records.into_iter().filter(|r| r.trial == trial).collect();
    let scene_path = a.scene.clone().or_else(|| {
        let p = a.log.parent()?.join("scenes").join(format!("{trial}.json"));
        p.exists().then_some(p)
    });
    let scene: Option<Scene> = scene_path.as_deref().map(read_json).transpose()?;
    std::fs::write(&a.output, render(scene.as_ref(), &recs)).map_err(write_err(&a.output))
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Cells as `scenario:agents`; defaults to the standard evaluation grid.
    #[arg(long, value_delimiter = ',')]
    pub cells: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "orca")]
    pub controllers: Vec<ControllerKind>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Observation variants for the policy controller.
    #[arg(long, value_delimiter = ',', default_value = "none")]
    pub ablations: Vec<Ablation>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_on_off, default_value = "off")]
    pub noise: bool,
    #[arg(long, default_value = "grid_out")]
    pub output: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
}

pub fn parse_cell(s: &str) -> Result<(ScenarioKind, usize), CliError> {
    let bad = || CliError::Config(format!("bad cell `{s}`, expected scenario:agents"));
    let (k, n) = s.split_once(':').ok_or_else(bad)?;
    Ok((k.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?))
}

pub fn default_cells() -> Vec<(ScenarioKind, usize)> {
    [ScenarioKind::Circle, ScenarioKind::Random, ScenarioKind::Doorway, ScenarioKind::Hallway]
        .iter()
        .flat_map(|k| eval_agent_counts(*k).iter().map(move |n| (*k, *n)))
        .collect()
}

pub fn grid(a: &GridArgs) -> Result<Vec<MetricsRow>, CliError> {
    if a.trials == 0 {
        return Err(CliError::Config("trials must be positive".into()));
    }
    let exec = executor(a.threads)?;
    let cells = if a.cells.is_empty() { default_cells() } else { a.cells.iter().map(|c| parse_cell(c)).collect::<Result<_, _>>()? };
    let policy = load_checkpoint(a.checkpoint.as_deref())?;
    let seeds: Vec<u64> = (0..a.trials as u64).map(|k| a.seed.wrapping_add(k)).collect();
    let mut rows = Vec::new();
    for &(kind, agents) in &cells {
        let spec = ScenarioSpec::new(kind, EVAL_SCALE, agents, a.seed);
        for &ck in &a.controllers {
            let ablations: &[Ablation] = if ck == ControllerKind::Policy { &a.ablations } else { &[Ablation::None] };
            for &ablation in ablations {
                let controller = make_controller(ck, OrcaConfig::default(), policy.as_ref(), true)?;
                let env = EnvConfig {
                    noise: if a.noise { NoiseConfig::evaluation() } else { NoiseConfig::off() },
                    ablation,
                    ..EnvConfig::default()
                };
                let scene_for = |seed| generate(&spec.with_seed(seed)).map_err(|e| CliError::Config(e.to_string()));
                let out = run_seeds(&seeds, &scene_for, &controller, &env, None, &exec)?;
                let trials: Vec<_> = out.into_iter().map(|o| o.result).collect();
                let label = RunLabel {
                    scenario: kind.as_str().into(),
                    agents,
                    controller: ck.as_str().into(),
                    ablation: ablation.as_str().into(),
                    noise: a.noise,
                };
                let row = MetricsRow::new(&label, a.seed, trials.len(), &aggregate(&trials));
                eprintln!("{} {} {} {}: success {:.3}", row.scenario, row.agents, row.controller, row.ablation, row.success_rate);
                rows.push(row);
            }
        }
    }
    write_csv(&a.output.join("grid.csv"), &rows)?;
    let table = summary_table(&rows);
    std::fs::write(a.output.join("table.txt"), &table).map_err(write_err(&a.output))?;
    print!("{table}");
    Ok(rows)
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long, default_value = "room")]
    pub scenario: ScenarioKind,
    #[arg(long, default_value_t = 10)]
    pub agents: usize,
    #[arg(long, default_value_t = EVAL_SCALE)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cell size (m).
    #[arg(long, default_value_t = navsim_core::planner::DEFAULT_RESOLUTION)]
    pub resolution: f64,
    #[arg(long, default_value = "map_out")]
    pub output: PathBuf,
}

pub fn map(a: &MapArgs) -> Result<GridMeta, CliError> {
    if !(a.resolution > 0.0) {
        return Err(CliError::Config("resolution must be positive".into()));
    }
    let scene = generate(&ScenarioSpec::new(a.scenario, a.scale, a.agents, a.seed)).map_err(|e| CliError::Config(e.to_string()))?;
    let grid = rasterize(&scene.config, a.resolution, scene.config.robot_radius);
    let meta = GridMeta::of(&grid);
    let p = a.output.join("grid.pgm");
    let mut w = create(&p)?;
    write_pgm(&mut w, &grid).and_then(|_| w.flush()).map_err(write_err(&p))?;
    write_json(&a.output.join("grid.json"), &meta)?;
    write_json(&a.output.join("scene.json"), &scene)?;
    Ok(meta)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => run(&a.resolve()?).map(|_| ()),
        Command::Train(a) => train(&a.resolve()?).map(|_| ()),
        Command::Replay(a) => replay(a),
        Command::Grid(a) => grid(a).map(|_| ()),
        Command::Map(a) => map(a).map(|_| ()),
    }
}
