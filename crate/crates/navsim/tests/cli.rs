use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use navsim::cli::{RunArgs, TrainFile};
use navsim::io::read_json;
use navsim::report::{read_metrics_csv, METRICS_HEADER};
use navsim::trajectory::read_records;
use navsim_core::scenarios::ScenarioKind;

fn navsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_navsim")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn run_writes_reports_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = navsim(&[
        "run", "--scenario", "circle", "--agents", "4", "--scale", "6", "--trials", "3", "--seed", "7",
        "--log", "--log-rewards", "--svg", "--threads", "2", "--output", path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Success rate"));
    let trials = read_metrics_csv(std::fs::File::open(out.join("trials.csv")).unwrap()).unwrap();
    assert_eq!(trials.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![7, 8, 9]);
    let summary = read_metrics_csv(std::fs::File::open(out.join("summary.csv")).unwrap()).unwrap();
    assert_eq!(summary.len(), 1);
    assert_eq!(summary[0].robots, 12);
    let header = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(header.starts_with(&METRICS_HEADER.join(",")));
    let log = read_records(std::io::BufReader::new(std::fs::File::open(out.join("trajectory.jsonl")).unwrap())).unwrap();
    assert!(log.iter().all(|r| r.reward.is_some() || r.status.is_terminal()));
    assert!(out.join("scenes/8.json").exists());
    assert!(std::fs::read_to_string(out.join("trial_7.svg")).unwrap().contains("<polyline"));

    let svg = dir.path().join("replay.svg");
    let o = navsim(&["replay", "--log", path(&out.join("trajectory.jsonl")), "--trial", "9", "--output", path(&svg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(svg).unwrap().matches("<polyline").count(), 4);
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    assert_eq!(navsim(&["run", "--trials", "0", "--output", out]).status.code(), Some(2));
    assert_eq!(navsim(&["run", "--controller", "policy", "--output", out]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    let o = navsim(&["run", "--controller", "policy", "--checkpoint", path(&missing), "--trials", "1", "--output", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"agentz": 3}"#).unwrap();
    assert_eq!(navsim(&["run", "--config", path(&bad), "--output", out]).status.code(), Some(2));
    assert_eq!(navsim(&["map", "--resolution", "0", "--output", out]).status.code(), Some(2));
}

#[test]
fn map_exports_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = navsim(&["map", "--scenario", "doorway", "--agents", "2", "--output", path(dir.path())]);
    assert!(o.status.success());
    let pgm = std::fs::read(dir.path().join("grid.pgm")).unwrap();
    let meta: navsim::grid::GridMeta = read_json(&dir.path().join("grid.json")).unwrap();
    let header = format!("P5\n{} {}\n255\n", meta.width, meta.height);
    assert!(pgm.starts_with(header.as_bytes()));
    assert_eq!(pgm.len(), header.len() + meta.width * meta.height);
    assert_eq!(pgm.iter().skip(header.len()).filter(|b| **b == 0).count(), meta.occupied_cells);
}

#[test]
fn grid_sweeps_cells_and_controllers() {
    let dir = tempfile::tempdir().unwrap();
    let o = navsim(&[
        "grid", "--cells", "circle:3,hallway:2", "--controllers", "orca,straight", "--trials", "2", "--output", path(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_metrics_csv(std::fs::File::open(dir.path().join("grid.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.trials == 2));
    assert_eq!(navsim(&["grid", "--cells", "circle", "--output", path(dir.path())]).status.code(), Some(2));
}

#[test]
fn train_then_run_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.json");
    std::fs::write(
        &cfg,
        r#"{
            "train": { "rollout_length": 16, "num_parallel_envs": 2, "minibatch_size": 16, "ppo_epochs": 2 },
            "scenarios": [{ "kind": "empty", "scale": 5.0, "num_agents": 1, "num_obstacles": 0, "rng_seed": 0 }],
            "policy": { "conv_channels": [2, 2], "node_hidden": 4, "heads": 1, "head_dim": 4, "trunk": [8] },
            "eval_episodes": 1,
            "eval_every": 2,
            "checkpoint_every": 1
        }"#,
    )
    .unwrap();
    let out = dir.path().join("t");
    let o = navsim(&["train", "--config", path(&cfg), "--steps", "64", "--seed", "3", "--output", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curve = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    assert!(curve.starts_with("iteration,step,episodes,mean_reward"));
    assert_eq!(curve.lines().count(), 1 + 2);
    assert!(out.join("checkpoints/iter_00002.json").exists());
    let saved: TrainFile = read_json(&out.join("config.json")).unwrap();
    assert_eq!(saved.train.seed, 3);

    let o = navsim(&[
        "run", "--scenario", "empty", "--agents", "1", "--scale", "5", "--controller", "policy",
        "--checkpoint", path(&out.join("final.json")), "--trials", "2", "--output", path(&dir.path().join("p")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn shipped_configs_parse() {
    let f: TrainFile = read_json(&repo_root().join("configs/desk_train.json")).unwrap();
    assert_eq!(f.train.lr_actor, 3e-4);
    assert_eq!(f.scenarios[0].kind, ScenarioKind::Empty);
    let args = RunArgs {
        config: Some(repo_root().join("configs/circle_orca.json")),
        scenario: None,
        agents: None,
        scale: None,
        obstacles: None,
        scene: None,
        controller: None,
        checkpoint: None,
        stochastic: false,
        trials: Some(5),
        seed: None,
        noise: None,
        ablation: None,
        output: None,
        threads: None,
        log: false,
        log_scans: false,
        log_rewards: false,
        log_paths: false,
        svg: false,
    };
    let c = args.resolve().unwrap();
    assert_eq!((c.agents, c.trials, c.noise), (20, 5, true));
}
