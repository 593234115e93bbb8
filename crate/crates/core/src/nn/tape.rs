use alloc::vec::Vec;

use super::{Activation, Conv1d, Dense, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param { offset: usize },
    Dense { x: Var, layer: Dense },
    Conv1d { x: Var, layer: Conv1d },
    Act { x: Var, kind: Activation },
    MatMul(Var, Var),
    Transpose(Var),
    SliceCols { x: Var, start: usize },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Reshape(Var),
    Add(Var, Var),
    Scale(Var, f64),
    SoftmaxRows(Var),
    MeanRows(Var),
    Softplus(Var),
}

/// Records a forward evaluation over borrowed parameters.
pub struct Tape<'p> {
    params: &'p [f64],
    values: Vec<Tensor>,
    ops: Vec<Op>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [f64]) -> Self {
        Self { params, values: Vec::new(), ops: Vec::new() }
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.values[v.0]
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.values.push(value);
        self.ops.push(op);
        Var(self.values.len() - 1)
    }

    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    /// A `rows × cols` view of the parameters starting at `offset`.
    pub fn param(&mut self, offset: usize, rows: usize, cols: usize) -> Var {
        let data = self.params[offset..offset + rows * cols].to_vec();
        self.push(Tensor::from_vec(rows, cols, data), Op::Param { offset })
    }

    pub fn dense(&mut self, x: Var, layer: Dense) -> Var {
        let xv = &self.values[x.0];
        assert_eq!(xv.cols, layer.inputs, "dense input width");
        let w = &self.params[layer.weight..layer.weight + layer.inputs * layer.outputs];
        let b = &self.params[layer.bias..layer.bias + layer.outputs];
        let mut out = Tensor::zeros(xv.rows, layer.outputs);
        for r in 0..xv.rows {
            let xr = xv.row(r);
            for o in 0..layer.outputs {
                let wr = &w[o * layer.inputs..(o + 1) * layer.inputs];
                let mut acc = b[o];
                for (a, c) in wr.iter().zip(xr) {
                    acc += a * c;
                }
                out.data[r * layer.outputs + o] = acc;
            }
        }
        self.push(out, Op::Dense { x, layer })
    }

    pub fn conv1d(&mut self, x: Var, layer: Conv1d) -> Var {
        let xv = &self.values[x.0];
        assert_eq!(xv.rows, layer.in_channels, "conv input channels");
        let len = xv.cols;
        let lout = layer.output_len(len);
        let half = layer.kernel / 2;
        let k = layer.kernel;
        let w = &self.params[layer.weight..layer.weight + layer.out_channels * layer.in_channels * k];
        let b = &self.params[layer.bias..layer.bias + layer.out_channels];
        let mut out = Tensor::zeros(layer.out_channels, lout);
        for co in 0..layer.out_channels {
            for lo in 0..lout {
                let mut acc = b[co];
                let base = lo * layer.stride + len - half;
                for ci in 0..layer.in_channels {
                    let xr = xv.row(ci);
                    let wk = &w[(co * layer.in_channels + ci) * k..(co * layer.in_channels + ci + 1) * k];
                    for (j, wj) in wk.iter().enumerate() {
                        acc += wj * xr[(base + j) % len];
                    }
                }
                out.data[co * lout + lo] = acc;
            }
        }
        self.push(out, Op::Conv1d { x, layer })
    }

    pub fn act(&mut self, x: Var, kind: Activation) -> Var {
        if kind == Activation::Identity {
            return x;
        }
        let xv = &self.values[x.0];
        let data = xv.data.iter().map(|&v| kind.apply(v)).collect();
        let out = Tensor::from_vec(xv.rows, xv.cols, data);
        self.push(out, Op::Act { x, kind })
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (&self.values[a.0], &self.values[b.0]);
        assert_eq!(av.cols, bv.rows, "matmul inner dimension");
        let mut out = Tensor::zeros(av.rows, bv.cols);
        for i in 0..av.rows {
            for k in 0..av.cols {
                let aik = av.at(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..bv.cols {
                    out.data[i * bv.cols + j] += aik * bv.at(k, j);
                }
            }
        }
        self.push(out, Op::MatMul(a, b))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let xv = &self.values[x.0];
        let mut out = Tensor::zeros(xv.cols, xv.rows);
        for r in 0..xv.rows {
            for c in 0..xv.cols {
                out.data[c * xv.rows + r] = xv.at(r, c);
            }
        }
        self.push(out, Op::Transpose(x))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let xv = &self.values[x.0];
        assert!(start + len <= xv.cols, "column slice out of range");
        let mut data = Vec::with_capacity(xv.rows * len);
        for r in 0..xv.rows {
            data.extend_from_slice(&xv.row(r)[start..start + len]);
        }
        let out = Tensor::from_vec(xv.rows, len, data);
        self.push(out, Op::SliceCols { x, start })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.values[parts[0].0].rows;
        let cols: usize = parts.iter().map(|p| self.values[p.0].cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                let pv = &self.values[p.0];
                assert_eq!(pv.rows, rows, "concat_cols row mismatch");
                data.extend_from_slice(pv.row(r));
            }
        }
        let out = Tensor::from_vec(rows, cols, data);
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let cols = self.values[parts[0].0].cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            let pv = &self.values[p.0];
            assert_eq!(pv.cols, cols, "concat_rows column mismatch");
            data.extend_from_slice(&pv.data);
            rows += pv.rows;
        }
        let out = Tensor::from_vec(rows, cols, data);
        self.push(out, Op::ConcatRows(parts.to_vec()))
    }

    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Var {
        let xv = &self.values[x.0];
        let out = Tensor::from_vec(rows, cols, xv.data.clone());
        self.push(out, Op::Reshape(x))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (&self.values[a.0], &self.values[b.0]);
        assert_eq!((av.rows, av.cols), (bv.rows, bv.cols), "add shape mismatch");
        let data = av.data.iter().zip(&bv.data).map(|(x, y)| x + y).collect();
        let out = Tensor::from_vec(av.rows, av.cols, data);
        self.push(out, Op::Add(a, b))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let xv = &self.values[x.0];
        let out = Tensor::from_vec(xv.rows, xv.cols, xv.data.iter().map(|v| v * c).collect());
        self.push(out, Op::Scale(x, c))
    }

    pub fn softmax_rows(&mut self, x: Var) -> Var {
        let xv = &self.values[x.0];
        let mut out = Tensor::zeros(xv.rows, xv.cols);
        for r in 0..xv.rows {
            let row = xv.row(r);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for (c, v) in row.iter().enumerate() {
                let e = libm::exp(v - m);
                out.data[r * xv.cols + c] = e;
                z += e;
            }
            for v in &mut out.data[r * xv.cols..(r + 1) * xv.cols] {
                *v /= z;
            }
        }
        self.push(out, Op::SoftmaxRows(x))
    }

    pub fn mean_rows(&mut self, x: Var) -> Var {
        let xv = &self.values[x.0];
        let mut out = Tensor::zeros(1, xv.cols);
        for r in 0..xv.rows {
            for (o, v) in out.data.iter_mut().zip(xv.row(r)) {
                *o += v;
            }
        }
        let inv = 1.0 / xv.rows as f64;
        out.data.iter_mut().for_each(|v| *v *= inv);
        self.push(out, Op::MeanRows(x))
    }

    pub fn softplus(&mut self, x: Var) -> Var {
        let xv = &self.values[x.0];
        let out = Tensor::from_vec(xv.rows, xv.cols, xv.data.iter().map(|&v| crate::geom::softplus(v)).collect());
        self.push(out, Op::Softplus(x))
    }

    /// Back-propagates `seeds` (pairs of output and its gradient) and adds
    /// the parameter gradients into `grad`.
    pub fn backward(&self, seeds: &[(Var, Tensor)], grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len(), "gradient buffer length");
        let mut g: Vec<Option<Tensor>> = alloc::vec![None; self.values.len()];
        for (v, s) in seeds {
            let t = &self.values[v.0];
            assert_eq!((t.rows, t.cols), (s.rows, s.cols), "seed shape mismatch");
            accumulate(&mut g[v.0], s);
        }
        for i in (0..self.values.len()).rev() {
            let Some(gy) = g[i].take() else { continue };
            let y = &self.values[i];
            match &self.ops[i] {
                Op::Leaf => {}
                Op::Param { offset } => {
                    for (d, s) in grad[*offset..*offset + gy.len()].iter_mut().zip(&gy.data) {
                        *d += s;
                    }
                }
                Op::Dense { x, layer } => {
                    let xv = &self.values[x.0];
                    let (nin, nout) = (layer.inputs, layer.outputs);
                    let w = &self.params[layer.weight..layer.weight + nin * nout];
                    let mut gx = Tensor::zeros(xv.rows, nin);
                    for r in 0..xv.rows {
                        let xr = xv.row(r);
                        for o in 0..nout {
                            let go = gy.data[r * nout + o];
                            if go == 0.0 {
                                continue;
                            }
                            grad[layer.bias + o] += go;
                            let gw = &mut grad[layer.weight + o * nin..layer.weight + (o + 1) * nin];
                            for (gwi, xi) in gw.iter_mut().zip(xr) {
                                *gwi += go * xi;
                            }
                            let wr = &w[o * nin..(o + 1) * nin];
                            for (gxi, wi) in gx.data[r * nin..(r + 1) * nin].iter_mut().zip(wr) {
                                *gxi += go * wi;
                            }
                        }
                    }
                    accumulate(&mut g[x.0], &gx);
                }
                Op::Conv1d { x, layer } => {
                    let xv = &self.values[x.0];
                    let len = xv.cols;
                    let lout = y.cols;
                    let half = layer.kernel / 2;
                    let k = layer.kernel;
                    let cin = layer.in_channels;
                    let w = &self.params[layer.weight..layer.weight + layer.out_channels * cin * k];
                    let mut gx = Tensor::zeros(xv.rows, len);
                    for co in 0..layer.out_channels {
                        for lo in 0..lout {
                            let go = gy.data[co * lout + lo];
                            if go == 0.0 {
                                continue;
                            }
                            grad[layer.bias + co] += go;
                            let base = lo * layer.stride + len - half;
                            for ci in 0..cin {
                                let woff = (co * cin + ci) * k;
                                for j in 0..k {
                                    let idx = (base + j) % len;
                                    grad[layer.weight + woff + j] += go * xv.data[ci * len + idx];
                                    gx.data[ci * len + idx] += go * w[woff + j];
                                }
                            }
                        }
                    }
                    accumulate(&mut g[x.0], &gx);
                }
                Op::Act { x, kind } => {
                    let xv = &self.values[x.0];
                    let data = gy
                        .data
                        .iter()
                        .zip(&xv.data)
                        .zip(&y.data)
                        .map(|((gi, xi), yi)| gi * kind.derivative(*xi, *yi))
                        .collect();
                    accumulate(&mut g[x.0], &Tensor::from_vec(xv.rows, xv.cols, data));
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (&self.values[a.0], &self.values[b.0]);
                    let mut ga = Tensor::zeros(av.rows, av.cols);
                    let mut gb = Tensor::zeros(bv.rows, bv.cols);
                    for i2 in 0..av.rows {
                        for j in 0..bv.cols {
                            let gij = gy.at(i2, j);
                            if gij == 0.0 {
                                continue;
                            }
                            for k in 0..av.cols {
                                ga.data[i2 * av.cols + k] += gij * bv.at(k, j);
                                gb.data[k * bv.cols + j] += gij * av.at(i2, k);
                            }
                        }
                    }
                    accumulate(&mut g[a.0], &ga);
                    accumulate(&mut g[b.0], &gb);
                }
                Op::Transpose(x) => {
                    let mut gx = Tensor::zeros(gy.cols, gy.rows);
                    for r in 0..gy.rows {
                        for c in 0..gy.cols {
                            gx.data[c * gy.rows + r] = gy.at(r, c);
                        }
                    }
                    accumulate(&mut g[x.0], &gx);
                }
                Op::SliceCols { x, start } => {
                    let xv = &self.values[x.0];
                    let mut gx = Tensor::zeros(xv.rows, xv.cols);
                    for r in 0..gy.rows {
                        gx.data[r * xv.cols + start..r * xv.cols + start + gy.cols].copy_from_slice(gy.row(r));
                    }
                    accumulate(&mut g[x.0], &gx);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let pc = self.values[p.0].cols;
                        let mut gp = Tensor::zeros(gy.rows, pc);
                        for r in 0..gy.rows {
                            gp.data[r * pc..(r + 1) * pc].copy_from_slice(&gy.row(r)[off..off + pc]);
                        }
                        accumulate(&mut g[p.0], &gp);
                        off += pc;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let n = self.values[p.0].len();
                        let pv = &self.values[p.0];
                        let gp = Tensor::from_vec(pv.rows, pv.cols, gy.data[off..off + n].to_vec());
                        accumulate(&mut g[p.0], &gp);
                        off += n;
                    }
                }
                Op::Reshape(x) => {
                    let xv = &self.values[x.0];
                    accumulate(&mut g[x.0], &Tensor::from_vec(xv.rows, xv.cols, gy.data.clone()));
                }
                Op::Add(a, b) => {
                    accumulate(&mut g[a.0], &gy);
                    accumulate(&mut g[b.0], &gy);
                }
                Op::Scale(x, c) => {
                    let gx = Tensor::from_vec(gy.rows, gy.cols, gy.data.iter().map(|v| v * c).collect());
                    accumulate(&mut g[x.0], &gx);
                }
                Op::SoftmaxRows(x) => {
                    let mut gx = Tensor::zeros(y.rows, y.cols);
                    for r in 0..y.rows {
                        let (yr, gr) = (y.row(r), gy.row(r));
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for c in 0..y.cols {
                            gx.data[r * y.cols + c] = yr[c] * (gr[c] - dot);
                        }
                    }
                    accumulate(&mut g[x.0], &gx);
                }
                Op::MeanRows(x) => {
                    let xv = &self.values[x.0];
                    let inv = 1.0 / xv.rows as f64;
                    let mut gx = Tensor::zeros(xv.rows, xv.cols);
                    for r in 0..xv.rows {
                        for c in 0..xv.cols {
                            gx.data[r * xv.cols + c] = gy.data[c] * inv;
                        }
                    }
                    accumulate(&mut g[x.0], &gx);
                }
                Op::Softplus(x) => {
                    let xv = &self.values[x.0];
                    let data = gy.data.iter().zip(&xv.data).map(|(gi, xi)| gi * crate::geom::sigmoid(*xi)).collect();
                    accumulate(&mut g[x.0], &Tensor::from_vec(xv.rows, xv.cols, data));
                }
            }
        }
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: &Tensor) {
    match slot {
        Some(t) => {
            for (a, b) in t.data.iter_mut().zip(&g.data) {
                *a += b;
            }
        }
        None => *slot = Some(g.clone()),
    }
}
