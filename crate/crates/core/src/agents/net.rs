//! Small fully-connected networks in `f64` with hand-written backprop.
//!
//! A layer computes `y = act(x W + b)` where `W` is stored row-major with
//! shape `inputs x outputs`. Hidden layers use `tanh`, the output layer is
//! linear.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("networks have different architectures")]
    ArchitectureMismatch,
    #[error("empty batch")]
    EmptyBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `inputs x outputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs], activation }
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (xi, row) in x.iter().zip(self.weights.chunks_exact(self.outputs)) {
            if *xi != 0.0 {
                for (o, w) in out.iter_mut().zip(row) {
                    *o += xi * w;
                }
            }
        }
        if self.activation == Activation::Tanh {
            out.iter_mut().for_each(|v| *v = v.tanh());
        }
    }
}

/// Multi-layer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Per-layer parameter gradients, same layout as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        self.weights.iter_mut().chain(self.bias.iter_mut()).for_each(|g| g.fill(0.0));
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

/// Activations of every layer from one forward pass.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    /// `acts[0]` is the input, `acts[i + 1]` the output of layer `i`.
    pub acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map_or(&[], Vec::as_slice)
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases; `tanh` everywhere but the last layer.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "a network needs input and output sizes");
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 1 == n { Activation::Identity } else { Activation::Tanh };
                let mut layer = Dense::zeros(w[0], w[1], act);
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                layer.weights.iter_mut().for_each(|v| *v = rng.random_range(-limit..=limit));
                layer
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Dense::zeros(w[0], w[1], if i + 1 == n { Activation::Identity } else { Activation::Tanh }))
            .collect();
        Self { layers }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_len()];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NetError> {
        if x.len() == self.input_len() {
            Ok(())
        } else {
            Err(NetError::ShapeMismatch { expected: self.input_len(), got: x.len() })
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Forward pass keeping every activation for a later backward pass.
    pub fn forward_trace(&self, x: &[f64], trace: &mut Trace) -> Result<(), NetError> {
        self.check_input(x)?;
        trace.acts.resize_with(self.layers.len() + 1, Vec::new);
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(x);
        for (i, layer) in self.layers.iter().enumerate() {
            let (done, rest) = trace.acts.split_at_mut(i + 1);
            layer.forward_into(&done[i], &mut rest[0]);
        }
        Ok(())
    }

    /// Adds the gradients of `output . upstream` to `grads` and returns the
    /// gradient with respect to the input.
    pub fn backward(&self, trace: &Trace, upstream: &[f64], grads: &mut Gradients) -> Result<Vec<f64>, NetError> {
        self.backprop(trace, upstream, Some(grads), true)
    }

    /// Parameter gradients only; skips the input gradient.
    pub fn accumulate(&self, trace: &Trace, upstream: &[f64], grads: &mut Gradients) -> Result<(), NetError> {
        self.backprop(trace, upstream, Some(grads), false).map(drop)
    }

    /// Input gradient only; parameters are left alone.
    pub fn input_gradient(&self, trace: &Trace, upstream: &[f64]) -> Result<Vec<f64>, NetError> {
        self.backprop(trace, upstream, None, true)
    }

    fn backprop(
        &self,
        trace: &Trace,
        upstream: &[f64],
        mut grads: Option<&mut Gradients>,
        want_input: bool,
    ) -> Result<Vec<f64>, NetError> {
        if upstream.len() != self.output_len() {
            return Err(NetError::ShapeMismatch { expected: self.output_len(), got: upstream.len() });
        }
        let mut delta = upstream.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if layer.activation == Activation::Tanh {
                for (d, y) in delta.iter_mut().zip(&trace.acts[i + 1]) {
                    *d *= 1.0 - y * y;
                }
            }
            let x = &trace.acts[i];
            if let Some(g) = grads.as_deref_mut() {
                for (b, d) in g.bias[i].iter_mut().zip(&delta) {
                    *b += d;
                }
                for (xi, gw_row) in x.iter().zip(g.weights[i].chunks_exact_mut(layer.outputs)) {
                    if *xi != 0.0 {
                        for (g, d) in gw_row.iter_mut().zip(&delta) {
                            *g += xi * d;
                        }
                    }
                }
            }
            if i == 0 && !want_input {
                return Ok(Vec::new());
            }
            delta = layer
                .weights
                .chunks_exact(layer.outputs)
                .map(|w_row| dot(w_row, &delta))
                .collect();
        }
        Ok(delta)
    }

    /// Gradients of `output . upstream` for a single input.
    pub fn gradients(&self, x: &[f64], upstream: &[f64]) -> Result<Gradients, NetError> {
        let mut trace = Trace::default();
        self.forward_trace(x, &mut trace)?;
        let mut grads = Gradients::zeros_like(self);
        self.backward(&trace, upstream, &mut grads)?;
        Ok(grads)
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), NetError> {
        if flat.len() != self.n_params() {
            return Err(NetError::ShapeMismatch { expected: self.n_params(), got: flat.len() });
        }
        let mut rest = flat;
        for l in &mut self.layers {
            let (w, r) = rest.split_at(l.weights.len());
            let (b, r) = r.split_at(l.bias.len());
            l.weights.copy_from_slice(w);
            l.bias.copy_from_slice(b);
            rest = r;
        }
        Ok(())
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs && a.activation == b.activation)
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

/// `target <- tau * source + (1 - tau) * target`, parameter-wise.
pub fn soft_update(target: &mut Mlp, source: &Mlp, tau: f64) -> Result<(), NetError> {
    if !target.same_shape(source) {
        return Err(NetError::ArchitectureMismatch);
    }
    for (t, s) in target.layers.iter_mut().zip(&source.layers) {
        for (tv, sv) in t.weights.iter_mut().zip(&s.weights).chain(t.bias.iter_mut().zip(&s.bias)) {
            *tv = tau * sv + (1.0 - tau) * *tv;
        }
    }
    Ok(())
}

/// Mean squared error `(1/m) sum (y - q)^2`.
pub fn mse(y: &[f64], q: &[f64]) -> Result<f64, NetError> {
    if y.is_empty() {
        return Err(NetError::EmptyBatch);
    }
    if y.len() != q.len() {
        return Err(NetError::ShapeMismatch { expected: y.len(), got: q.len() });
    }
    Ok(y.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Adam optimizer state for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Gradients,
    v: Gradients,
    t: i32,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
            t: 0,
        }
    }

    /// Descends along `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let step = self.lr * c2.sqrt() / c1;
        let eps = self.eps * c2.sqrt();
        let (b1, b2) = (self.beta1, self.beta2);
        for (i, layer) in net.layers.iter_mut().enumerate() {
            let pairs = [
                (&mut layer.weights, &grads.weights[i], &mut self.m.weights[i], &mut self.v.weights[i]),
                (&mut layer.bias, &grads.bias[i], &mut self.m.bias[i], &mut self.v.bias[i]),
            ];
            for (p, g, m, v) in pairs {
                for (((p, g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= step * *m / (v.sqrt() + eps);
                }
            }
        }
    }
}

/// Dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for l in &net.layers {
            let mut out = vec![0.0; l.outputs];
            for (j, o) in out.iter_mut().enumerate() {
                let mut s = l.bias[j];
                for (i, xi) in cur.iter().enumerate() {
                    s += xi * l.weights[i * l.outputs + j];
                }
                *o = if l.activation == Activation::Tanh { s.tanh() } else { s };
            }
            cur = out;
        }
        cur
    }

    #[test]
    fn zero_net_gives_zero() {
        let net = Mlp::zeros(&[3, 4, 2]);
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer() {
        let mut net = Mlp::zeros(&[3, 3]);
        for i in 0..3 {
            net.layers[0].weights[i * 3 + i] = 1.0;
        }
        assert_eq!(net.forward(&[0.25, -1.0, 7.0]).unwrap(), vec![0.25, -1.0, 7.0]);
    }

    #[test]
    fn matches_straight_line_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let net = Mlp::new(&[5, 7, 6, 3], &mut rng);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = net.forward(&x).unwrap();
            let b = reference_forward(&net, &x);
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let net = Mlp::zeros(&[3, 2]);
        assert_eq!(net.forward(&[1.0]), Err(NetError::ShapeMismatch { expected: 3, got: 1 }));
        assert!(net.gradients(&[1.0, 2.0, 3.0], &[1.0]).is_err());
        let mut other = Mlp::zeros(&[3, 4]);
        assert_eq!(soft_update(&mut other, &net, 0.5), Err(NetError::ArchitectureMismatch));
    }

    #[test]
    fn linear_layer_gradient_is_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::new(&[3, 2], &mut rng);
        let x = [0.5, -1.0, 2.0];
        let up = [3.0, -0.5];
        let g = net.gradients(&x, &up).unwrap();
        for (i, xi) in x.iter().enumerate() {
            for (j, uj) in up.iter().enumerate() {
                assert_eq!(g.weights[0][i * 2 + j], xi * uj);
            }
        }
        assert_eq!(g.bias[0], up.to_vec());
    }

    #[test]
    fn zero_upstream_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(&[4, 5, 2], &mut rng);
        let g = net.gradients(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert!(g.flat().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn input_gradient_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::new(&[4, 6, 1], &mut rng);
        let x = vec![0.3, -0.2, 0.9, 0.1];
        let mut trace = Trace::default();
        net.forward_trace(&x, &mut trace).unwrap();
        let mut g = Gradients::zeros_like(&net);
        let dx = net.backward(&trace, &[1.0], &mut g).unwrap();
        let h = 1e-5;
        for i in 0..4 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (net.forward(&xp).unwrap()[0] - net.forward(&xm).unwrap()[0]) / (2.0 * h);
            assert!((fd - dx[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn mse_by_substitution() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[3.0], &[1.0]).unwrap(), 4.0);
        assert_eq!(mse(&[1.0, -2.0], &[0.0, 0.0]).unwrap(), 2.5);
        assert_eq!(mse(&[], &[]), Err(NetError::EmptyBatch));
    }

    #[test]
    fn soft_update_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src = Mlp::new(&[3, 4, 2], &mut rng);
        let orig = Mlp::new(&[3, 4, 2], &mut rng);
        let mut t = orig.clone();
        soft_update(&mut t, &src, 0.0).unwrap();
        assert_eq!(t, orig);
        soft_update(&mut t, &src, 1.0).unwrap();
        assert_eq!(t, src);
    }

    #[test]
    fn adam_reduces_a_quadratic() {
        let mut net = Mlp::zeros(&[1, 1]);
        net.layers[0].weights[0] = 3.0;
        let mut opt = Adam::new(&net, 0.05);
        for _ in 0..500 {
            let w = net.layers[0].weights[0];
            let grads = Gradients { weights: vec![vec![2.0 * (w - 1.0)]], bias: vec![vec![0.0]] };
            opt.step(&mut net, &grads);
        }
        assert!((net.layers[0].weights[0] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn argmax_takes_first_of_ties() {
        assert_eq!(argmax(&[0.1, 0.9, 0.3]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 5.0]), 2);
        assert_eq!(argmax(&[4.0, 4.0]), 0);
        let p = softmax(&[1.0, 1.0]);
        assert_eq!(p, vec![0.5, 0.5]);
    }
}
