use super::*;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scalar probe `Σ c_i y_i` with fixed random coefficients.
fn probe(y: &Tensor, seed: u64) -> (f64, Tensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..y.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v = y.data.iter().zip(&c).map(|(a, b)| a * b).sum();
    (v, Tensor::from_vec(y.rows, y.cols, c))
}

/// Compares backward against central differences for `build`, which maps
/// parameters to an output on a fresh tape.
fn check(params: &[f64], build: impl Fn(&mut Tape<'_>) -> Var) {
    let mut tape = Tape::new(params);
    let out = build(&mut tape);
    let (_, seed) = probe(tape.value(out), 99);
    let mut grad = alloc::vec![0.0; params.len()];
    tape.backward(&[(out, seed)], &mut grad);
    let h = 1e-6;
    for i in 0..params.len() {
        let mut p = params.to_vec();
        p[i] += h;
        let mut t = Tape::new(&p);
        let o = build(&mut t);
        let plus = probe(t.value(o), 99).0;
        p[i] -= 2.0 * h;
        let mut t = Tape::new(&p);
        let o = build(&mut t);
        let minus = probe(t.value(o), 99).0;
        let fd = (plus - minus) / (2.0 * h);
        let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-3);
        assert!(err < 1e-6, "param {i}: analytic {} numeric {fd}", grad[i]);
    }
}

fn random_params(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn dense_and_activations() {
    let mut a = ParamAllocator::new();
    let l1 = Dense::new(&mut a, 3, 4);
    let l2 = Dense::new(&mut a, 4, 2);
    let p = random_params(a.len(), 1);
    for act in [Activation::Tanh, Activation::Elu, Activation::Relu] {
        check(&p, |t| {
            let x = t.input(Tensor::from_vec(2, 3, alloc::vec![0.3, -0.2, 0.9, -1.1, 0.4, 0.05]));
            let h = l1.forward(t, x);
            let h = t.act(h, act);
            let y = l2.forward(t, h);
            t.softplus(y)
        });
    }
}

#[test]
fn circular_conv() {
    let mut a = ParamAllocator::new();
    let c1 = Conv1d::new(&mut a, 2, 3, 5, 2);
    let c2 = Conv1d::new(&mut a, 3, 2, 3, 1);
    let p = random_params(a.len(), 2);
    let x: Vec<f64> = (0..22).map(|k| libm::sin(k as f64 * 0.7)).collect();
    check(&p, |t| {
        let xi = t.input(Tensor::from_vec(2, 11, x.clone()));
        let h = c1.forward(t, xi);
        assert_eq!(t.value(h).cols, 6);
        let h = t.act(h, Activation::Elu);
        c2.forward(t, h)
    });
}

#[test]
fn attention_primitives() {
    let mut a = ParamAllocator::new();
    let q = a.alloc(3 * 2);
    let k = a.alloc(3 * 2);
    let p = random_params(a.len(), 3);
    check(&p, |t| {
        let x = t.input(Tensor::from_vec(4, 3, (0..12).map(|i| (i as f64 * 0.37).cos()).collect()));
        let wq = t.param(q, 3, 2);
        let wk = t.param(k, 3, 2);
        let qq = t.matmul(x, wq);
        let kk = t.matmul(x, wk);
        let kt = t.transpose(kk);
        let s = t.matmul(qq, kt);
        let s = t.scale(s, 0.7);
        let att = t.softmax_rows(s);
        let h = t.matmul(att, qq);
        let left = t.slice_cols(h, 0, 1);
        let both = t.concat_cols(&[left, h]);
        let m = t.mean_rows(both);
        let stacked = t.concat_rows(&[m, m]);
        let flat = t.reshape(stacked, 1, 6);
        t.add(flat, flat)
    });
}

#[test]
fn conv_wraps_without_edges() {
    // A shift of the input by one stride shifts the output by one cell.
    let mut a = ParamAllocator::new();
    let c = Conv1d::new(&mut a, 1, 1, 5, 2);
    let p = random_params(a.len(), 4);
    let x: Vec<f64> = (0..12).map(|k| (k as f64).sqrt()).collect();
    let mut shifted = x.clone();
    shifted.rotate_right(2);
    let mut t = Tape::new(&p);
    let i1 = t.input(Tensor::from_vec(1, 12, x));
    let i2 = t.input(Tensor::from_vec(1, 12, shifted));
    let y1 = c.forward(&mut t, i1);
    let y2 = c.forward(&mut t, i2);
    let mut rolled = t.value(y1).data.clone();
    rolled.rotate_right(1);
    for (u, v) in rolled.iter().zip(&t.value(y2).data) {
        assert!((u - v).abs() < 1e-12);
    }
}

#[test]
fn softmax_rows_sum_to_one() {
    let p: [f64; 0] = [];
    let mut t = Tape::new(&p);
    let x = t.input(Tensor::from_vec(2, 3, alloc::vec![1000.0, 1001.0, 999.0, -3.0, 0.0, 2.0]));
    let s = t.softmax_rows(x);
    for r in 0..2 {
        let sum: f64 = t.value(s).row(r).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
