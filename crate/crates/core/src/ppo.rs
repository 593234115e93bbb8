//! Proximal policy optimisation with a clipped surrogate and generalised
//! advantage estimation, over vectorised multi-agent rollouts in which
//! every robot shares one set of parameters.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{aggregate, run_trials, BenchError, EpisodeMetrics};
use crate::controller::Controller;
use crate::env::{EnvConfig, EnvError, NavEnv};
use crate::exec::Executor;
use crate::obs::NormalizedObs;
use crate::policy::{log_prob_grads, to_action, HeadGrads, Policy, PolicyConfig, PolicyError};
use crate::scenarios::{generate, ScenarioError, ScenarioSpec};
use crate::sim::{Action, Status};

/// Samples per gradient work item. Fixed so that summation order does
/// not depend on the number of threads.
const GRAD_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr_critic: f64,
    pub lr_actor: f64,
    pub entropy_coef: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub ppo_epochs: usize,
    pub clip: f64,
    /// World steps per environment per iteration.
    pub rollout_length: usize,
    pub minibatch_size: usize,
    pub num_parallel_envs: usize,
    pub seed: u64,
    /// Per-group (actor, critic) gradient-norm cap; `None` disables it.
    pub max_grad_norm: Option<f64>,
    pub normalize_advantages: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_critic: 4e-4,
            lr_actor: 2e-5,
            entropy_coef: 0.0,
            gamma: 0.99,
            gae_lambda: 0.95,
            ppo_epochs: 10,
            clip: 0.2,
            rollout_length: 512,
            minibatch_size: 1024,
            num_parallel_envs: 8,
            seed: 0,
            max_grad_norm: Some(0.5),
            normalize_advantages: true,
        }
    }
}

impl TrainConfig {
    /// Short single-agent runs. The default actor rate is too small for the
    /// policy to pick up goal-bearing steering within a few hundred
    /// thousand steps.
    pub fn desk() -> Self {
        Self { lr_actor: 3e-4, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m| Err(TrainError::Config(m));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must be in [0, 1]");
        }
        if !(self.clip > 0.0) {
            return bad("clip must be positive");
        }
        if !(self.lr_actor >= 0.0 && self.lr_critic >= 0.0) {
            return bad("learning rates must be non-negative");
        }
        if self.rollout_length == 0 || self.minibatch_size == 0 || self.num_parallel_envs == 0 {
            return bad("rollout_length, minibatch_size and num_parallel_envs must be positive");
        }
        if matches!(self.max_grad_norm, Some(g) if !(g > 0.0)) {
            return bad("max_grad_norm must be positive");
        }
        Ok(())
    }
}

/// Advantages and returns for one stream. `values[t]` estimates the state
/// before step `t`; `bootstrap` estimates the state after the last step
/// and is ignored when that step is terminal.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && dones.len() == n, "streams must have equal length");
    let mut adv = alloc::vec![0.0; n];
    let mut next_value = bootstrap;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: NormalizedObs,
    /// Pre-clamp action sample.
    pub action: [f64; 2],
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

/// Consecutive transitions of one robot within one episode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stream {
    pub env: usize,
    pub agent: usize,
    pub transitions: Vec<Transition>,
    pub bootstrap: f64,
}

impl Stream {
    pub fn is_closed(&self) -> bool {
        self.transitions.last().is_some_and(|t| t.done)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBuffer {
    pub streams: Vec<Stream>,
    /// Flattened in stream order; empty until [`RolloutBuffer::finish`].
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.streams.iter().map(|s| s.transitions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finished(&self) -> bool {
        !self.is_empty() && self.advantages.len() == self.len()
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.streams.iter().flat_map(|s| s.transitions.iter())
    }

    /// Computes advantages per stream, then optionally normalises them
    /// over the whole batch.
    pub fn finish(&mut self, gamma: f64, lambda: f64, normalize: bool) {
        self.advantages.clear();
        self.returns.clear();
        for s in &self.streams {
            let r: Vec<f64> = s.transitions.iter().map(|t| t.reward).collect();
            let v: Vec<f64> = s.transitions.iter().map(|t| t.value).collect();
            let d: Vec<bool> = s.transitions.iter().map(|t| t.done).collect();
            let (a, ret) = compute_gae(&r, &v, &d, s.bootstrap, gamma, lambda);
            self.advantages.extend(a);
            self.returns.extend(ret);
        }
        if normalize && self.advantages.len() > 1 {
            let n = self.advantages.len() as f64;
            let mean = self.advantages.iter().sum::<f64>() / n;
            let var = self.advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
            let std = libm::sqrt(var).max(1e-8);
            for a in &mut self.advantages {
                *a = (*a - mean) / std;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AdamGroup {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl AdamGroup {
    fn new(lr: f64, n: usize) -> Self {
        Self { lr, m: alloc::vec![0.0; n], v: alloc::vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(BETA1, self.t as f64);
        let c2 = 1.0 - libm::pow(BETA2, self.t as f64);
        for i in 0..params.len() {
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * grad[i];
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * grad[i] * grad[i];
            if self.lr != 0.0 {
                params[i] -= self.lr * (self.m[i] / c1) / (libm::sqrt(self.v[i] / c2) + ADAM_EPS);
            }
        }
    }
}

/// Adam with separate learning rates for the actor and critic parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    split: usize,
    actor: AdamGroup,
    critic: AdamGroup,
}

impl Optimizer {
    pub fn new(policy: &Policy, cfg: &TrainConfig) -> Self {
        let split = policy.actor_len();
        let n = policy.parameter_count();
        Self { split, actor: AdamGroup::new(cfg.lr_actor, split), critic: AdamGroup::new(cfg.lr_critic, n - split) }
    }

    /// Clips each group's gradient norm, then takes one Adam step.
    pub fn step(&mut self, params: &mut [f64], grad: &mut [f64], max_norm: Option<f64>) {
        let (ga, gc) = grad.split_at_mut(self.split);
        if let Some(max) = max_norm {
            clip_norm(ga, max);
            clip_norm(gc, max);
        }
        let (pa, pc) = params.split_at_mut(self.split);
        self.actor.step(pa, ga);
        self.critic.step(pc, gc);
    }
}

fn clip_norm(g: &mut [f64], max: f64) {
    let norm = libm::sqrt(g.iter().map(|x| x * x).sum());
    if norm > max {
        let s = max / norm;
        g.iter_mut().for_each(|x| *x *= s);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateReport {
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    /// Mean of `(r - 1) - ln r` over all sampled ratios.
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub minibatches: usize,
}

/// Per-sample clipped surrogate `min(r·A, clip(r)·A)` and whether its
/// gradient flows through `r`.
pub fn clipped_objective(ratio: f64, advantage: f64, clip: f64) -> (f64, bool) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    if unclipped <= clipped {
        (unclipped, true)
    } else {
        (clipped, false)
    }
}

#[derive(Default)]
struct ChunkStats {
    actor: f64,
    critic: f64,
    entropy: f64,
    kl: f64,
    clipped: usize,
}

fn minibatch_gradient<E: Executor>(
    policy: &Policy,
    samples: &[(&Transition, f64, f64)],
    cfg: &TrainConfig,
    exec: &E,
) -> Result<(Vec<f64>, ChunkStats), PolicyError> {
    let n = samples.len() as f64;
    let chunks: Vec<&[(&Transition, f64, f64)]> = samples.chunks(GRAD_CHUNK).collect();
    let parts = exec.map(&chunks, &|chunk| {
        let mut grad = alloc::vec![0.0; policy.parameter_count()];
        let mut st = ChunkStats::default();
        for (tr, adv, ret) in chunk.iter() {
            policy.forward_backward(&tr.obs, &mut grad, |dist, v| {
                let lp = dist.log_prob(tr.action);
                let ratio = libm::exp(lp - tr.log_prob);
                let (obj, flows) = clipped_objective(ratio, *adv, cfg.clip);
                let h = dist.entropy();
                st.actor -= obj / n;
                st.critic += (v - ret) * (v - ret) / n;
                st.entropy += h / n;
                st.kl += ((ratio - 1.0) - (lp - tr.log_prob)) / n;
                if (ratio - 1.0).abs() > cfg.clip {
                    st.clipped += 1;
                }
                let mut g = HeadGrads { value: 2.0 * (v - ret) / n, ..HeadGrads::default() };
                if flows {
                    let (dm, ds) = log_prob_grads(dist, tr.action);
                    let k = -adv * ratio / n;
                    g.mean = [k * dm[0], k * dm[1]];
                    g.std = [k * ds[0], k * ds[1]];
                }
                if cfg.entropy_coef != 0.0 {
                    for i in 0..2 {
                        g.std[i] -= cfg.entropy_coef / (n * dist.std[i]);
                    }
                }
                g
            })?;
        }
        Ok((grad, st))
    });
    let mut grad = alloc::vec![0.0; policy.parameter_count()];
    let mut total = ChunkStats::default();
    for part in parts {
        let (g, st) = part?;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        total.actor += st.actor;
        total.critic += st.critic;
        total.entropy += st.entropy;
        total.kl += st.kl;
        total.clipped += st.clipped;
    }
    total.actor -= cfg.entropy_coef * total.entropy;
    Ok((grad, total))
}

/// Runs `ppo_epochs` passes of shuffled minibatch updates over a finished
/// buffer. On any non-finite loss, gradient or parameter the policy and
/// optimiser are restored and the update fails.
pub fn ppo_update<E: Executor, R: Rng + ?Sized>(
    buffer: &RolloutBuffer,
    policy: &mut Policy,
    opt: &mut Optimizer,
    cfg: &TrainConfig,
    rng: &mut R,
    exec: &E,
) -> Result<UpdateReport, PolicyError> {
    assert!(buffer.is_finished(), "advantages must be computed before updating");
    let saved = (policy.params.clone(), opt.clone());
    let samples: Vec<(&Transition, f64, f64)> = buffer
        .transitions()
        .zip(buffer.advantages.iter().zip(&buffer.returns))
        .map(|(t, (a, r))| (t, *a, *r))
        .collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut report = UpdateReport::default();
    let mut seen = 0usize;
    let result = (|| {
        for _ in 0..cfg.ppo_epochs {
            order.shuffle(rng);
            for idx in order.chunks(cfg.minibatch_size) {
                let batch: Vec<_> = idx.iter().map(|&i| samples[i]).collect();
                let (mut grad, st) = minibatch_gradient(policy, &batch, cfg, exec)?;
                let finite = st.actor.is_finite() && st.critic.is_finite() && grad.iter().all(|g| g.is_finite());
                if !finite {
                    return Err(PolicyError::NumericalDivergence);
                }
                opt.step(&mut policy.params.values, &mut grad, cfg.max_grad_norm);
                if !policy.params.is_finite() {
                    return Err(PolicyError::NumericalDivergence);
                }
                report.actor_loss += st.actor;
                report.critic_loss += st.critic;
                report.entropy += st.entropy;
                report.approx_kl += st.kl * batch.len() as f64;
                report.clip_fraction += st.clipped as f64;
                report.minibatches += 1;
                seen += batch.len();
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        policy.params = saved.0;
        *opt = saved.1;
        return Err(e);
    }
    if report.minibatches > 0 {
        let m = report.minibatches as f64;
        report.actor_loss /= m;
        report.critic_loss /= m;
        report.entropy /= m;
        report.approx_kl /= seen as f64;
        report.clip_fraction /= seen as f64;
    }
    Ok(report)
}

/// Everything besides the optimiser hyperparameters that defines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSetup {
    pub scenarios: Vec<ScenarioSpec>,
    pub env: EnvConfig,
    pub policy: PolicyConfig,
    pub eval_scenarios: Vec<ScenarioSpec>,
    pub eval_episodes: usize,
    /// Evaluate every this many iterations; 0 disables evaluation.
    pub eval_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    /// Sum of rewards per robot, averaged over robots.
    pub mean_reward: f64,
    pub success_rate: f64,
}

struct Worker {
    index: usize,
    rng: ChaCha8Rng,
    env: Option<NavEnv>,
    episode_reward: Vec<f64>,
    open: Vec<Option<usize>>,
}

struct WorkerRollout {
    streams: Vec<Stream>,
    episodes: Vec<EpisodeSummary>,
    steps: u64,
}

impl Worker {
    fn reset(&mut self, setup: &TrainSetup) -> Result<(), TrainError> {
        let k = self.rng.random_range(0..setup.scenarios.len());
        let seed = self.rng.random::<u64>();
        let scene = generate(&setup.scenarios[k].with_seed(seed))?;
        let env = NavEnv::new(scene, EnvConfig { perception: true, ..setup.env.clone() })?;
        self.episode_reward = alloc::vec![0.0; env.num_agents()];
        self.env = Some(env);
        Ok(())
    }

    fn rollout(&mut self, policy: &Policy, setup: &TrainSetup, steps: usize) -> Result<WorkerRollout, TrainError> {
        let norm = *policy.normalizer();
        let mut out = WorkerRollout { streams: Vec::new(), episodes: Vec::new(), steps: 0 };
        for _ in 0..steps {
            if self.env.as_ref().is_none_or(|e| e.is_done()) {
                self.reset(setup)?;
                self.open = alloc::vec![None; self.episode_reward.len()];
            }
            let env = self.env.as_mut().expect("reset above");
            let n = env.num_agents();
            let mut actions = alloc::vec![Action::STOP; n];
            let mut pending = Vec::with_capacity(n);
            for i in 0..n {
                if !env.world.robots[i].is_active() {
                    continue;
                }
                let obs = env.normalized(i, &norm);
                let (dist, value) = policy.forward(&obs)?;
                let (raw, log_prob) = dist.sample(&mut self.rng);
                actions[i] = to_action(raw);
                pending.push((i, Transition { obs, action: raw, log_prob, value, reward: 0.0, done: false }));
            }
            let outcome = env.step(&actions)?;
            out.steps += 1;
            for (i, mut tr) in pending {
                let r = outcome.rewards[i].map_or(0.0, |b| b.total);
                tr.reward = r;
                tr.done = outcome.done[i];
                self.episode_reward[i] += r;
                let s = *self.open[i].get_or_insert_with(|| {
                    out.streams.push(Stream { env: self.index, agent: i, ..Stream::default() });
                    out.streams.len() - 1
                });
                out.streams[s].transitions.push(tr);
                if outcome.done[i] {
                    self.open[i] = None;
                }
            }
            if env.is_done() {
                let succ = env.world.robots.iter().filter(|r| r.status == Status::ReachedGoal).count();
                out.episodes.push(EpisodeSummary {
                    mean_reward: self.episode_reward.iter().sum::<f64>() / n as f64,
                    success_rate: succ as f64 / n as f64,
                });
            }
        }
        // Streams still open at the cut are bootstrapped from the critic.
        if let Some(env) = self.env.as_ref() {
            for (i, slot) in self.open.iter_mut().enumerate() {
                if let Some(s) = slot.take() {
                    let (_, v) = policy.forward(&env.normalized(i, &norm))?;
                    out.streams[s].bootstrap = v;
                }
            }
        }
        Ok(out)
    }
}

/// One row of the training curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub iteration: u64,
    /// World steps summed over all parallel environments.
    pub env_steps: u64,
    pub episodes: usize,
    /// Mean over episodes finished this iteration of the per-robot
    /// reward sum.
    pub mean_reward: Option<f64>,
    pub train_success_rate: Option<f64>,
    pub eval_success_rate: Option<f64>,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

pub struct Trainer {
    pub cfg: TrainConfig,
    pub setup: TrainSetup,
    pub policy: Policy,
    opt: Optimizer,
    workers: Vec<Worker>,
    update_rng: ChaCha8Rng,
    iteration: u64,
    env_steps: u64,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, setup: TrainSetup) -> Result<Self, TrainError> {
        let policy = Policy::new(setup.policy.clone(), cfg.seed);
        Self::with_policy(cfg, setup, policy)
    }

    /// Resumes from existing parameters with a fresh optimiser.
    pub fn with_policy(cfg: TrainConfig, setup: TrainSetup, policy: Policy) -> Result<Self, TrainError> {
        cfg.validate()?;
        if setup.scenarios.is_empty() {
            return Err(TrainError::Config("at least one training scenario is required"));
        }
        let opt = Optimizer::new(&policy, &cfg);
        let workers = (0..cfg.num_parallel_envs)
            .map(|index| Worker {
                index,
                rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index as u64 + 1)),
                env: None,
                episode_reward: Vec::new(),
                open: Vec::new(),
            })
            .collect();
        let update_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa5a5_5a5a);
        Ok(Self { cfg, setup, policy, opt, workers, update_rng, iteration: 0, env_steps: 0 })
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Collects rollouts from every environment in parallel.
    pub fn collect<E: Executor>(&mut self, exec: &E) -> Result<(RolloutBuffer, Vec<EpisodeSummary>), TrainError> {
        let (policy, setup, len) = (&self.policy, &self.setup, self.cfg.rollout_length);
        let parts = exec.map_mut(&mut self.workers, &|w| w.rollout(policy, setup, len));
        let mut buffer = RolloutBuffer::default();
        let mut episodes = Vec::new();
        for p in parts {
            let p = p?;
            self.env_steps += p.steps;
            buffer.streams.extend(p.streams);
            episodes.extend(p.episodes);
        }
        buffer.finish(self.cfg.gamma, self.cfg.gae_lambda, self.cfg.normalize_advantages);
        Ok((buffer, episodes))
    }

    /// Deterministic-policy evaluation over the evaluation scenarios.
    pub fn evaluate<E: Executor>(&self, exec: &E) -> Result<EpisodeMetrics, TrainError> {
        let ctl = Controller::Policy { policy: &self.policy, deterministic: true };
        let seeds: Vec<u64> = (0..self.setup.eval_episodes as u64).map(|s| 1_000_000 + s).collect();
        let mut trials = Vec::new();
        for spec in &self.setup.eval_scenarios {
            trials.extend(run_trials(spec, &ctl, &self.setup.env, &seeds, exec)?);
        }
        Ok(aggregate(&trials))
    }

    /// One rollout plus one update.
    pub fn iterate<E: Executor>(&mut self, exec: &E) -> Result<TrainRecord, TrainError> {
        let (buffer, episodes) = self.collect(exec)?;
        let rep = ppo_update(&buffer, &mut self.policy, &mut self.opt, &self.cfg, &mut self.update_rng, exec)?;
        self.iteration += 1;
        let k = episodes.len() as f64;
        let eval = self.setup.eval_every > 0
            && !self.setup.eval_scenarios.is_empty()
            && self.iteration % self.setup.eval_every as u64 == 0;
        Ok(TrainRecord {
            iteration: self.iteration,
            env_steps: self.env_steps,
            episodes: episodes.len(),
            mean_reward: (k > 0.0).then(|| episodes.iter().map(|e| e.mean_reward).sum::<f64>() / k),
            train_success_rate: (k > 0.0).then(|| episodes.iter().map(|e| e.success_rate).sum::<f64>() / k),
            eval_success_rate: if eval { Some(self.evaluate(exec)?.success_rate) } else { None },
            actor_loss: rep.actor_loss,
            critic_loss: rep.critic_loss,
            entropy: rep.entropy,
            approx_kl: rep.approx_kl,
            clip_fraction: rep.clip_fraction,
        })
    }

    /// Iterates until `total_env_steps` world steps have been collected or
    /// `stop` returns true for a record.
    pub fn train<E: Executor>(
        &mut self,
        total_env_steps: u64,
        exec: &E,
        on_record: &mut dyn FnMut(&TrainRecord, &Policy) -> bool,
    ) -> Result<Vec<TrainRecord>, TrainError> {
        let mut records = Vec::new();
        while self.env_steps < total_env_steps {
            let rec = self.iterate(exec)?;
            records.push(rec);
            if on_record(&rec, &self.policy) {
                break;
            }
        }
        Ok(records)
    }
}
