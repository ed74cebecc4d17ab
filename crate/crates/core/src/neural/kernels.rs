//! Dense and LSTM kernels over slices of a flat parameter vector.
//!
//! Weight matrices are row-major `out x in`. LSTM cells keep one combined
//! matrix of shape `4H x (I + H)` acting on `[x; h_prev]`, with gate blocks
//! ordered input, forget, cell, output.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out[r] = bias[r] + W[r, :] . x`
pub(crate) fn gemv(w: &[f64], x: &[f64], bias: &[f64], out: &mut [f64]) {
    let cols = x.len();
    debug_assert_eq!(w.len(), out.len() * cols);
    for ((o, row), b) in out.iter_mut().zip(w.chunks_exact(cols.max(1))).zip(bias) {
        *o = b + dot(row, x);
    }
}

/// `out += W^T d`, four rows at a time.
pub(crate) fn gemv_t_acc(w: &[f64], d: &[f64], out: &mut [f64]) {
    let cols = out.len();
    let rows = d.len();
    debug_assert_eq!(w.len(), rows * cols);
    let full = rows / 4 * 4;
    for r in (0..full).step_by(4) {
        let (d0, d1, d2, d3) = (d[r], d[r + 1], d[r + 2], d[r + 3]);
        let blk = &w[r * cols..(r + 4) * cols];
        let (w0, rest) = blk.split_at(cols);
        let (w1, rest) = rest.split_at(cols);
        let (w2, w3) = rest.split_at(cols);
        for ((((o, a), b), c), e) in out.iter_mut().zip(w0).zip(w1).zip(w2).zip(w3) {
            *o += d0 * a + d1 * b + d2 * c + d3 * e;
        }
    }
    for r in full..rows {
        axpy(d[r], &w[r * cols..(r + 1) * cols], out);
    }
}

/// `G += sum_s ds[s] (x) xs[s]` for `steps` stacked rows of `ds` and `xs`.
pub(crate) fn ger_acc(g: &mut [f64], ds: &[f64], xs: &[f64], steps: usize) {
    if steps == 0 {
        return;
    }
    let rows = ds.len() / steps;
    let cols = xs.len() / steps;
    debug_assert_eq!(g.len(), rows * cols);
    for (r, grow) in g.chunks_exact_mut(cols).enumerate() {
        for s in 0..steps {
            let a = ds[s * rows + r];
            if a != 0.0 {
                axpy(a, &xs[s * cols..(s + 1) * cols], grow);
            }
        }
    }
}

/// `tanh` through a single `exp`; within a few ulp of `f64::tanh`.
#[inline]
pub(crate) fn tanh(x: f64) -> f64 {
    let t = (-2.0 * x.abs()).exp();
    ((1.0 - t) / (1.0 + t)).copysign(x)
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Dense {
    pub w: usize,
    pub b: usize,
    pub inp: usize,
    pub out: usize,
}

impl Dense {
    /// `out = W x + b`
    pub fn forward(&self, p: &[f64], x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.inp);
        gemv(&p[self.w..self.w + self.inp * self.out], x, &p[self.b..self.b + self.out], &mut out[..self.out]);
    }

    pub fn forward_tanh(&self, p: &[f64], x: &[f64], out: &mut [f64]) {
        self.forward(p, x, out);
        out.iter_mut().for_each(|v| *v = tanh(*v));
    }

    /// Accumulates parameter gradients for pre-activation gradient `dpre`
    /// and, when `dx` is given, adds `W^T dpre` to it.
    pub fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], dpre: &[f64], dx: Option<&mut [f64]>) {
        self.backward_many(p, g, x, dpre, 1);
        if let Some(dx) = dx {
            gemv_t_acc(&p[self.w..self.w + self.inp * self.out], dpre, dx);
        }
    }

    /// Parameter gradients for `n` stacked inputs and pre-activation gradients.
    pub fn backward_many(&self, _p: &[f64], g: &mut [f64], xs: &[f64], dpre: &[f64], n: usize) {
        if n == 0 {
            return;
        }
        ger_acc(&mut g[self.w..self.w + self.inp * self.out], dpre, xs, n);
        let gb = &mut g[self.b..self.b + self.out];
        for d in dpre.chunks_exact(self.out) {
            axpy(1.0, d, gb);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LstmCell {
    pub w: usize,
    pub b: usize,
    pub inp: usize,
    pub hid: usize,
}

/// Activations of an unrolled LSTM needed for backpropagation.
#[derive(Debug, Clone, Default)]
pub(crate) struct LstmTrace {
    pub steps: usize,
    /// `steps x (I + H)`: input concatenated with the previous hidden state.
    pub xh: Vec<f64>,
    /// `steps x 4H`: activated gates.
    pub gates: Vec<f64>,
    /// `steps x H`: cell states.
    pub c: Vec<f64>,
    /// `steps x H`: `tanh(c)`.
    pub tc: Vec<f64>,
    /// Final hidden state (zeros for an empty sequence).
    pub h: Vec<f64>,
}

impl LstmCell {
    fn width(&self) -> usize {
        self.inp + self.hid
    }

    /// Runs the cell over `inputs` (`steps x I`) from a zero state.
    pub fn forward_seq(&self, p: &[f64], inputs: &[f64]) -> LstmTrace {
        let (i_dim, h_dim, wd) = (self.inp, self.hid, self.width());
        let steps = inputs.len() / i_dim;
        debug_assert_eq!(steps * i_dim, inputs.len());
        let w = &p[self.w..self.w + 4 * h_dim * wd];
        let b = &p[self.b..self.b + 4 * h_dim];
        let mut tr = LstmTrace {
            steps,
            xh: vec![0.0; steps * wd],
            gates: vec![0.0; steps * 4 * h_dim],
            c: vec![0.0; steps * h_dim],
            tc: vec![0.0; steps * h_dim],
            h: vec![0.0; h_dim],
        };
        let mut c_prev = vec![0.0; h_dim];
        for s in 0..steps {
            let xh = &mut tr.xh[s * wd..(s + 1) * wd];
            xh[..i_dim].copy_from_slice(&inputs[s * i_dim..(s + 1) * i_dim]);
            xh[i_dim..].copy_from_slice(&tr.h);
            let gates = &mut tr.gates[s * 4 * h_dim..(s + 1) * 4 * h_dim];
            gemv(w, xh, b, gates);
            let (ifg, o) = gates.split_at_mut(3 * h_dim);
            let (i_g, fg) = ifg.split_at_mut(h_dim);
            let (f_g, g_g) = fg.split_at_mut(h_dim);
            let c = &mut tr.c[s * h_dim..(s + 1) * h_dim];
            let tc = &mut tr.tc[s * h_dim..(s + 1) * h_dim];
            for k in 0..h_dim {
                i_g[k] = sigmoid(i_g[k]);
                f_g[k] = sigmoid(f_g[k]);
                g_g[k] = tanh(g_g[k]);
                o[k] = sigmoid(o[k]);
                c[k] = f_g[k] * c_prev[k] + i_g[k] * g_g[k];
                tc[k] = tanh(c[k]);
                tr.h[k] = o[k] * tc[k];
            }
            c_prev.copy_from_slice(c);
        }
        tr
    }

    /// Backpropagates a gradient on the final hidden state. Parameter
    /// gradients are accumulated into `g`; input gradients (`steps x I`) are
    /// returned.
    pub fn backward_seq(&self, p: &[f64], g: &mut [f64], tr: &LstmTrace, dh_final: &[f64]) -> Vec<f64> {
        let (i_dim, h_dim, wd) = (self.inp, self.hid, self.width());
        let mut dinputs = vec![0.0; tr.steps * i_dim];
        if tr.steps == 0 {
            return dinputs;
        }
        let w = &p[self.w..self.w + 4 * h_dim * wd];
        let mut dh = dh_final.to_vec();
        let mut dc = vec![0.0; h_dim];
        let mut dpre_all = vec![0.0; tr.steps * 4 * h_dim];
        let mut dxh = vec![0.0; wd];
        let zeros = vec![0.0; h_dim];
        for s in (0..tr.steps).rev() {
            let gates = &tr.gates[s * 4 * h_dim..(s + 1) * 4 * h_dim];
            let tc = &tr.tc[s * h_dim..(s + 1) * h_dim];
            let c_prev = if s == 0 { &zeros[..] } else { &tr.c[(s - 1) * h_dim..s * h_dim] };
            let dpre = &mut dpre_all[s * 4 * h_dim..(s + 1) * 4 * h_dim];
            for k in 0..h_dim {
                let (ig, fg, gg, og) = (gates[k], gates[h_dim + k], gates[2 * h_dim + k], gates[3 * h_dim + k]);
                dc[k] += dh[k] * og * (1.0 - tc[k] * tc[k]);
                let d_o = dh[k] * tc[k];
                let d_i = dc[k] * gg;
                let d_g = dc[k] * ig;
                let d_f = dc[k] * c_prev[k];
                dpre[k] = d_i * ig * (1.0 - ig);
                dpre[h_dim + k] = d_f * fg * (1.0 - fg);
                dpre[2 * h_dim + k] = d_g * (1.0 - gg * gg);
                dpre[3 * h_dim + k] = d_o * og * (1.0 - og);
                dc[k] *= fg;
            }
            axpy(1.0, dpre, &mut g[self.b..self.b + 4 * h_dim]);
            dxh.iter_mut().for_each(|v| *v = 0.0);
            gemv_t_acc(w, dpre, &mut dxh);
            dinputs[s * i_dim..(s + 1) * i_dim].copy_from_slice(&dxh[..i_dim]);
            dh.copy_from_slice(&dxh[i_dim..]);
        }
        ger_acc(&mut g[self.w..self.w + 4 * h_dim * wd], &dpre_all, &tr.xh, tr.steps);
        dinputs
    }
}
