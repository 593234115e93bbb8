//! Actor-critic network: static and temporal LiDAR encoders, an attentive
//! neighbor-graph encoder and a fully connected trunk. Actor and critic are
//! two networks of identical structure with separate weights, stored in one
//! flat parameter vector.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::lidar::NUM_BEAMS;
use crate::nn::{Activation, Conv1d, Dense, ParamAllocator, Tape, Tensor, Var};
use crate::obs::{NormalizedObs, Normalizer, NODE_FEATURES, NUM_SCALARS};
use crate::sim::{clamp_action, Action};

pub const CHECKPOINT_VERSION: u32 = 1;
/// Added to the softplus output so σ stays strictly positive.
pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("non-finite value in the network")]
    NumericalDivergence,
    #[error("parameter vector has {got} entries, the architecture needs {expected}")]
    ParamCount { expected: usize, got: usize },
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    /// Output channels of the two convolutions in each LiDAR encoder.
    pub conv_channels: [usize; 2],
    pub kernel: usize,
    pub stride: usize,
    pub node_hidden: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub trunk: Vec<usize>,
    pub activation: Activation,
    /// Initial action mean `(v, w)`.
    pub init_mean: [f64; 2],
    /// Initial action standard deviation.
    pub init_std: f64,
    pub normalizer: Normalizer,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            conv_channels: [16, 32],
            kernel: 5,
            stride: 2,
            node_hidden: 32,
            heads: 2,
            head_dim: 16,
            trunk: alloc::vec![256, 256],
            activation: Activation::Elu,
            init_mean: [0.5, 0.0],
            init_std: 0.5,
            normalizer: Normalizer::default(),
        }
    }
}

impl PolicyConfig {
    /// Narrow network for desk-scale training runs.
    pub fn reduced() -> Self {
        Self {
            conv_channels: [4, 8],
            node_hidden: 16,
            heads: 2,
            head_dim: 8,
            trunk: alloc::vec![64, 64],
            ..Self::default()
        }
    }

    /// Very small network for gradient checks.
    pub fn tiny() -> Self {
        Self {
            conv_channels: [2, 2],
            kernel: 3,
            stride: 4,
            node_hidden: 4,
            heads: 2,
            head_dim: 3,
            trunk: alloc::vec![6, 5],
            activation: Activation::Tanh,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LidarEncoder {
    conv: [Conv1d; 2],
}

impl LidarEncoder {
    fn new(a: &mut ParamAllocator, cfg: &PolicyConfig, in_channels: usize) -> Self {
        let c1 = Conv1d::new(a, in_channels, cfg.conv_channels[0], cfg.kernel, cfg.stride);
        let c2 = Conv1d::new(a, cfg.conv_channels[0], cfg.conv_channels[1], cfg.kernel, cfg.stride);
        Self { conv: [c1, c2] }
    }

    fn output_dim(&self) -> usize {
        let l = self.conv[1].output_len(self.conv[0].output_len(NUM_BEAMS));
        l * self.conv[1].out_channels
    }

    fn forward(&self, t: &mut Tape<'_>, x: Var, act: Activation) -> Var {
        let h = self.conv[0].forward(t, x);
        let h = t.act(h, act);
        let h = self.conv[1].forward(t, h);
        let h = t.act(h, act);
        let n = t.value(h).len();
        t.reshape(h, 1, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphEncoder {
    embed: Dense,
    /// Per head: query, key, value projections (`node_hidden × head_dim`).
    qkv: Vec<[usize; 3]>,
    head_dim: usize,
    out: Dense,
    score: Dense,
    null: usize,
    hidden: usize,
}

impl GraphEncoder {
    fn new(a: &mut ParamAllocator, cfg: &PolicyConfig) -> Self {
        let d = cfg.node_hidden;
        let embed = Dense::new(a, NODE_FEATURES, d);
        let qkv = (0..cfg.heads)
            .map(|_| [a.alloc(d * cfg.head_dim), a.alloc(d * cfg.head_dim), a.alloc(d * cfg.head_dim)])
            .collect();
        let out = Dense::new(a, cfg.heads * cfg.head_dim, d);
        let score = Dense::new(a, d, 1);
        let null = a.alloc(d);
        Self { embed, qkv, head_dim: cfg.head_dim, out, score, null, hidden: d }
    }

    fn forward(&self, t: &mut Tape<'_>, nodes: &[[f64; NODE_FEATURES]], act: Activation) -> Var {
        if nodes.is_empty() {
            return t.param(self.null, 1, self.hidden);
        }
        let n = nodes.len();
        let x = t.input(Tensor::from_vec(n, NODE_FEATURES, nodes.iter().flatten().copied().collect()));
        let h = self.embed.forward(t, x);
        let h = t.act(h, act);
        let scale = 1.0 / libm::sqrt(self.head_dim as f64);
        let mut heads = Vec::with_capacity(self.qkv.len());
        for &[wq, wk, wv] in &self.qkv {
            let wq = t.param(wq, self.hidden, self.head_dim);
            let wk = t.param(wk, self.hidden, self.head_dim);
            let wv = t.param(wv, self.hidden, self.head_dim);
            let q = t.matmul(h, wq);
            let k = t.matmul(h, wk);
            let v = t.matmul(h, wv);
            let kt = t.transpose(k);
            let s = t.matmul(q, kt);
            let s = t.scale(s, scale);
            let a = t.softmax_rows(s);
            heads.push(t.matmul(a, v));
        }
        let cat = t.concat_cols(&heads);
        let mixed = self.out.forward(t, cat);
        let h = t.add(h, mixed);
        let h = t.act(h, act);
        // attentive pooling averaged with mean pooling
        let s = self.score.forward(t, h);
        let s = t.transpose(s);
        let alpha = t.softmax_rows(s);
        let attn = t.matmul(alpha, h);
        let mean = t.mean_rows(h);
        let pooled = t.add(attn, mean);
        t.scale(pooled, 0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Network {
    static_enc: LidarEncoder,
    temporal_enc: LidarEncoder,
    graph_enc: GraphEncoder,
    trunk: Vec<Dense>,
    head: Dense,
}

impl Network {
    fn new(a: &mut ParamAllocator, cfg: &PolicyConfig, outputs: usize) -> Self {
        let static_enc = LidarEncoder::new(a, cfg, 1);
        let temporal_enc = LidarEncoder::new(a, cfg, 3);
        let graph_enc = GraphEncoder::new(a, cfg);
        let mut width = static_enc.output_dim() + temporal_enc.output_dim() + cfg.node_hidden + NUM_SCALARS;
        let mut trunk = Vec::new();
        for &w in &cfg.trunk {
            trunk.push(Dense::new(a, width, w));
            width = w;
        }
        let head = Dense::new(a, width, outputs);
        Self { static_enc, temporal_enc, graph_enc, trunk, head }
    }

    fn init<R: Rng + ?Sized>(&self, p: &mut [f64], rng: &mut R, head_gain: f64) {
        for enc in [&self.static_enc, &self.temporal_enc] {
            for c in &enc.conv {
                c.init(p, rng, 1.0);
            }
        }
        let g = &self.graph_enc;
        g.embed.init(p, rng, 1.0);
        let bound = libm::sqrt(3.0 / g.hidden as f64);
        for heads in &g.qkv {
            for &off in heads {
                for w in &mut p[off..off + g.hidden * g.head_dim] {
                    *w = rng.random_range(-bound..=bound);
                }
            }
        }
        g.out.init(p, rng, 1.0);
        g.score.init(p, rng, 1.0);
        for w in &mut p[g.null..g.null + g.hidden] {
            *w = 0.0;
        }
        for l in &self.trunk {
            l.init(p, rng, 1.0);
        }
        self.head.init(p, rng, head_gain);
    }

    fn encode_static(&self, t: &mut Tape<'_>, obs: &NormalizedObs, act: Activation) -> Var {
        let x = t.input(Tensor::from_vec(1, NUM_BEAMS, obs.current_scan().to_vec()));
        self.static_enc.forward(t, x, act)
    }

    fn encode_temporal(&self, t: &mut Tape<'_>, obs: &NormalizedObs, act: Activation) -> Var {
        let x = t.input(Tensor::from_vec(3, NUM_BEAMS, obs.scans.clone()));
        self.temporal_enc.forward(t, x, act)
    }

    fn forward(&self, t: &mut Tape<'_>, obs: &NormalizedObs, act: Activation) -> Var {
        let zs = self.encode_static(t, obs, act);
        let zt = self.encode_temporal(t, obs, act);
        let zg = self.graph_enc.forward(t, &obs.nodes, act);
        let sc = t.input(Tensor::row_vector(obs.scalars.to_vec()));
        let mut h = t.concat_cols(&[zs, zt, zg, sc]);
        for l in &self.trunk {
            let z = l.forward(t, h);
            h = t.act(z, act);
        }
        self.head.forward(t, h)
    }
}

/// Independent Gaussians over `(v, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    pub mean: [f64; 2],
    pub std: [f64; 2],
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

impl ActionDistribution {
    pub fn log_prob(&self, x: [f64; 2]) -> f64 {
        (0..2)
            .map(|i| {
                let z = (x[i] - self.mean[i]) / self.std[i];
                -0.5 * z * z - libm::log(self.std[i]) - LN_SQRT_2PI
            })
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        self.std.iter().map(|s| 0.5 + LN_SQRT_2PI + libm::log(*s)).sum()
    }

    /// Draws a raw sample and its log-probability. The raw sample is what
    /// the log-probability refers to; the executed action is its clamp.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ([f64; 2], f64) {
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        let raw = [self.mean[0] + self.std[0] * z0, self.mean[1] + self.std[1] * z1];
        (raw, self.log_prob(raw))
    }

    pub fn mean_action(&self) -> Action {
        to_action(self.mean)
    }
}

/// Clamps a raw network action into the robot's bounds.
pub fn to_action(raw: [f64; 2]) -> Action {
    clamp_action(Action { v: raw[0], w: raw[1] }).unwrap_or(Action { v: 0.0, w: 0.0 })
}

/// Draws an action from `dist`; returns the clamped action and the
/// log-probability of the pre-clamp sample.
pub fn sample_action<R: Rng + ?Sized>(dist: &ActionDistribution, rng: &mut R) -> (Action, f64) {
    let (raw, lp) = dist.sample(rng);
    (to_action(raw), lp)
}

/// Loss gradients with respect to the network heads.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeadGrads {
    pub mean: [f64; 2],
    pub std: [f64; 2],
    pub value: f64,
}

/// `∂ log N(x; μ, σ) / ∂(μ, σ)` for each action dimension.
pub fn log_prob_grads(dist: &ActionDistribution, x: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let mut dm = [0.0; 2];
    let mut ds = [0.0; 2];
    for i in 0..2 {
        let s = dist.std[i];
        let d = x[i] - dist.mean[i];
        dm[i] = d / (s * s);
        ds[i] = d * d / (s * s * s) - 1.0 / s;
    }
    (dm, ds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub values: Vec<f64>,
}

impl PolicyParams {
    pub fn parameter_count(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Versioned checkpoint: architecture header plus the flat parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: PolicyConfig,
    pub params: PolicyParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub config: PolicyConfig,
    actor: Network,
    critic: Network,
    actor_len: usize,
    pub params: PolicyParams,
}

impl Policy {
    fn layout(config: &PolicyConfig) -> (Network, Network, usize, usize) {
        let mut a = ParamAllocator::new();
        let actor = Network::new(&mut a, config, 4);
        let actor_len = a.len();
        let critic = Network::new(&mut a, config, 1);
        (actor, critic, actor_len, a.len())
    }

    pub fn new(config: PolicyConfig, seed: u64) -> Self {
        let (actor, critic, actor_len, total) = Self::layout(&config);
        let mut values = alloc::vec![0.0; total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        actor.init(&mut values, &mut rng, 0.01);
        critic.init(&mut values, &mut rng, 1.0);
        values[actor.head.bias] = config.init_mean[0];
        values[actor.head.bias + 1] = config.init_mean[1];
        // σ bias so the initial std equals `init_std`
        let sb = libm::log(libm::expm1(config.init_std - SIGMA_FLOOR));
        values[actor.head.bias + 2] = sb;
        values[actor.head.bias + 3] = sb;
        Self { config, actor, critic, actor_len, params: PolicyParams { values } }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self, PolicyError> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(PolicyError::Version(ck.version));
        }
        let (actor, critic, actor_len, total) = Self::layout(&ck.config);
        if ck.params.values.len() != total {
            return Err(PolicyError::ParamCount { expected: total, got: ck.params.values.len() });
        }
        if !ck.params.is_finite() {
            return Err(PolicyError::NumericalDivergence);
        }
        Ok(Self { config: ck.config, actor, critic, actor_len, params: ck.params })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint { version: CHECKPOINT_VERSION, config: self.config.clone(), params: self.params.clone() }
    }

    pub fn parameter_count(&self) -> usize {
        self.params.values.len()
    }

    /// Parameters `[0, actor_len)` belong to the actor, the rest to the critic.
    pub fn actor_len(&self) -> usize {
        self.actor_len
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.config.normalizer
    }

    pub fn encode_static(&self, obs: &NormalizedObs) -> Vec<f64> {
        let mut t = Tape::new(&self.params.values);
        let v = self.actor.encode_static(&mut t, obs, self.config.activation);
        t.value(v).data.clone()
    }

    pub fn encode_temporal(&self, obs: &NormalizedObs) -> Vec<f64> {
        let mut t = Tape::new(&self.params.values);
        let v = self.actor.encode_temporal(&mut t, obs, self.config.activation);
        t.value(v).data.clone()
    }

    pub fn encode_graph(&self, nodes: &[[f64; NODE_FEATURES]]) -> Vec<f64> {
        let mut t = Tape::new(&self.params.values);
        let v = self.actor.graph_enc.forward(&mut t, nodes, self.config.activation);
        t.value(v).data.clone()
    }

    fn heads(&self, t: &mut Tape<'_>, obs: &NormalizedObs) -> Result<(Var, Var, ActionDistribution, f64), PolicyError> {
        let act = self.config.activation;
        let a = self.actor.forward(t, obs, act);
        let mu = t.slice_cols(a, 0, 2);
        let pre = t.slice_cols(a, 2, 2);
        let sd = t.softplus(pre);
        let c = self.critic.forward(t, obs, act);
        let (m, s, v) = (t.value(mu), t.value(sd), t.value(c).data[0]);
        let dist = ActionDistribution {
            mean: [m.data[0], m.data[1]],
            std: [s.data[0] + SIGMA_FLOOR, s.data[1] + SIGMA_FLOOR],
        };
        if !(dist.mean.iter().chain(&dist.std).all(|x| x.is_finite()) && v.is_finite()) {
            return Err(PolicyError::NumericalDivergence);
        }
        // pack (μ, σ) into a single var for seeding
        let both = t.concat_cols(&[mu, sd]);
        Ok((both, c, dist, v))
    }

    pub fn forward(&self, obs: &NormalizedObs) -> Result<(ActionDistribution, f64), PolicyError> {
        let mut t = Tape::new(&self.params.values);
        let (_, _, dist, v) = self.heads(&mut t, obs)?;
        Ok((dist, v))
    }

    /// Runs forward, asks `loss` for head gradients, and accumulates the
    /// parameter gradient into `grad`.
    pub fn forward_backward(
        &self,
        obs: &NormalizedObs,
        grad: &mut [f64],
        loss: impl FnOnce(&ActionDistribution, f64) -> HeadGrads,
    ) -> Result<(ActionDistribution, f64), PolicyError> {
        let mut t = Tape::new(&self.params.values);
        let (both, c, dist, v) = self.heads(&mut t, obs)?;
        let g = loss(&dist, v);
        let seed = Tensor::row_vector(alloc::vec![g.mean[0], g.mean[1], g.std[0], g.std[1]]);
        t.backward(&[(both, seed), (c, Tensor::row_vector(alloc::vec![g.value]))], grad);
        Ok((dist, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lidar::MAX_RANGE;
    use core::f64::consts::PI;

    fn obs(seed: u64, nodes: usize) -> NormalizedObs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        NormalizedObs {
            scans: (0..3 * NUM_BEAMS).map(|_| rng.random_range(0.1..1.0)).collect(),
            scalars: core::array::from_fn(|_| rng.random_range(-1.0..1.0)),
            nodes: (0..nodes).map(|_| core::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect(),
        }
    }

    #[test]
    fn forward_is_deterministic_and_sigma_positive() {
        let p = Policy::new(PolicyConfig::reduced(), 7);
        let o = obs(1, 3);
        let a = p.forward(&o).unwrap();
        assert_eq!(a, p.forward(&o).unwrap());
        assert_eq!(a, Policy::new(PolicyConfig::reduced(), 7).forward(&o).unwrap());
        assert!(a.0.std.iter().all(|s| *s > 0.0));
        assert!((a.0.std[0] - 0.5).abs() < 0.05);
    }

    #[test]
    fn graph_encoder_edge_cases() {
        let p = Policy::new(PolicyConfig::tiny(), 2);
        let empty = p.encode_graph(&[]);
        assert!(empty.iter().all(|v| v.is_finite()));
        let nodes = obs(3, 5).nodes;
        let base = p.encode_graph(&nodes);
        let mut perm = nodes.clone();
        perm.reverse();
        perm.swap(0, 2);
        for (a, b) in base.iter().zip(p.encode_graph(&perm)) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut dup = nodes.clone();
        dup.push(nodes[0]);
        let d = p.encode_graph(&dup);
        assert!(base.iter().zip(&d).any(|(a, b)| (a - b).abs() > 1e-9));
    }

    #[test]
    fn temporal_encoder_sees_motion() {
        let p = Policy::new(PolicyConfig::reduced(), 4);
        let mut same = obs(5, 0);
        let frame = same.scans[2 * NUM_BEAMS..].to_vec();
        same.scans = frame.repeat(3);
        let mut moving = same.clone();
        moving.scans[..NUM_BEAMS].rotate_left(3);
        assert_ne!(p.encode_temporal(&same), p.encode_temporal(&moving));
        let zero = NormalizedObs { scans: alloc::vec![0.0; 3 * NUM_BEAMS], ..same };
        assert!(p.encode_temporal(&zero).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn all_max_range_is_finite() {
        let p = Policy::new(PolicyConfig::default(), 1);
        let o = NormalizedObs { scans: alloc::vec![MAX_RANGE / MAX_RANGE; 3 * NUM_BEAMS], scalars: [0.0; 7], nodes: Vec::new() };
        assert!(p.encode_static(&o).iter().all(|v| v.is_finite()));
        let (d, v) = p.forward(&o).unwrap();
        assert!(d.mean.iter().all(|m| m.is_finite()) && v.is_finite());
    }

    #[test]
    fn log_prob_of_mean() {
        let d = ActionDistribution { mean: [0.3, -0.2], std: [0.5, 0.25] };
        let want = -(libm::log(0.5 * libm::sqrt(2.0 * PI)) + libm::log(0.25 * libm::sqrt(2.0 * PI)));
        assert!((d.log_prob(d.mean) - want).abs() < 1e-14);
    }

    #[test]
    fn tiny_sigma_returns_clamped_mean() {
        let d = ActionDistribution { mean: [1.4, -0.3], std: [1e-12, 1e-12] };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, _) = sample_action(&d, &mut rng);
        assert!((a.v - 1.0).abs() < 1e-9 && (a.w + 0.3).abs() < 1e-9);
    }

    #[test]
    fn sample_statistics() {
        let d = ActionDistribution { mean: [0.4, -0.6], std: [0.3, 0.7] };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let xs: Vec<[f64; 2]> = (0..n).map(|_| d.sample(&mut rng).0).collect();
        for i in 0..2 {
            let m = xs.iter().map(|x| x[i]).sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| (x[i] - m) * (x[i] - m)).sum::<f64>() / (n - 1) as f64;
            assert!((m - d.mean[i]).abs() < 0.01 * d.mean[i].abs().max(1.0), "mean {m}");
            assert!((libm::sqrt(v) - d.std[i]).abs() < 0.01 * d.std[i], "std {}", libm::sqrt(v));
        }
    }

    #[test]
    fn checkpoint_round_trip_and_validation() {
        let p = Policy::new(PolicyConfig::tiny(), 9);
        let ck = p.checkpoint();
        let q = Policy::from_checkpoint(ck.clone()).unwrap();
        assert_eq!(p, q);
        let mut bad = ck.clone();
        bad.params.values.pop();
        assert!(matches!(Policy::from_checkpoint(bad), Err(PolicyError::ParamCount { .. })));
        let mut bad = ck;
        bad.version = 99;
        assert_eq!(Policy::from_checkpoint(bad), Err(PolicyError::Version(99)));
    }

    #[test]
    fn divergent_params_are_reported() {
        let mut p = Policy::new(PolicyConfig::tiny(), 9);
        let n = p.actor_len();
        p.params.values[n - 1] = f64::NAN;
        assert_eq!(p.forward(&obs(1, 0)), Err(PolicyError::NumericalDivergence));
    }
}
