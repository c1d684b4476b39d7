//! Minimal dense feedforward network with exact backpropagation.
//!
//! Hidden layers use the swish activation `x·σ(x)`; the output layer is
//! linear. Weights are stored row-major as `outputs × inputs`.

use serde::{Deserialize, Serialize};

use crate::math::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.bias.iter().copied());
        for (o, row) in out.iter_mut().zip(self.weights.chunks_exact(self.inputs)) {
            *o += row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub fn swish(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn swish_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s + x * s * (1.0 - s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedforwardNet {
    layers: Vec<Dense>,
}

/// Intermediate values kept by [`FeedforwardNet::forward_cached`].
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
    /// Pre-activation values of each layer.
    pre: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("non-empty cache")
    }
}

/// Parameter-shaped gradient (or optimizer moment) storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &FeedforwardNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in &mut self.layers {
            w.iter_mut().chain(b.iter_mut()).for_each(|g| *g *= factor);
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            w.iter_mut().zip(ow).for_each(|(g, o)| *g += o);
            b.iter_mut().zip(ob).for_each(|(g, o)| *g += o);
        }
    }

    /// Flattened in the same order as [`FeedforwardNet::params`].
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

impl FeedforwardNet {
    /// `widths` lists input, hidden and output sizes. Weights are drawn from
    /// `N(0, 1/fan_in)`; with `zero_output` the final layer starts at zero.
    pub fn new(widths: &[usize], rng: &mut RngStream, zero_output: bool) -> Self {
        assert!(widths.len() >= 2, "network needs input and output widths");
        let n_layers = widths.len() - 1;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (inputs, outputs) = (w[0], w[1]);
                let is_output = i + 1 == n_layers;
                let std = if is_output { 0.1 } else { 1.0 } / (inputs as f64).sqrt();
                let weights = (0..inputs * outputs)
                    .map(|_| {
                        if is_output && zero_output {
                            0.0
                        } else {
                            std * rng.standard_normal()
                        }
                    })
                    .collect();
                Dense {
                    inputs,
                    outputs,
                    weights,
                    bias: vec![0.0; outputs],
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.outputs).unwrap_or(0)
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.input_dim());
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if i != last {
                next.iter_mut().for_each(|v| *v = swish(*v));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub fn forward_cached(&self, input: &[f64]) -> ForwardCache {
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        activations.push(input.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.apply(activations.last().unwrap(), &mut z);
            let a = if i != last {
                z.iter().map(|&v| swish(v)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
            activations.push(a);
        }
        ForwardCache { activations, pre }
    }

    /// Accumulates `∂L/∂θ` into `grads`, given `∂L/∂output` for one sample.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64], grads: &mut Gradients) {
        let last = self.layers.len() - 1;
        let mut delta = grad_output.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if l != last {
                for (d, z) in delta.iter_mut().zip(&cache.pre[l]) {
                    *d *= swish_grad(*z);
                }
            }
            let input = &cache.activations[l];
            let (gw, gb) = &mut grads.layers[l];
            for (o, d) in delta.iter().enumerate() {
                gb[o] += d;
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                delta = prev;
            }
        }
    }

    /// All parameters flattened layer by layer (weights, then bias).
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params());
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.weights
                .iter_mut()
                .chain(l.bias.iter_mut())
                .for_each(|p| *p = it.next().unwrap());
        }
    }
}

/// Adaptive-moment gradient descent.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Gradients,
    v: Gradients,
    t: i32,
}

impl Adam {
    pub fn new(net: &FeedforwardNet, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
            t: 0,
        }
    }

    pub fn step(&mut self, net: &mut FeedforwardNet, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[l];
            let (mw, mb) = &mut self.m.layers[l];
            let (vw, vb) = &mut self.v.layers[l];
            let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
            let g = gw.iter().chain(gb.iter());
            let m = mw.iter_mut().chain(mb.iter_mut());
            let v = vw.iter_mut().chain(vb.iter_mut());
            for (((p, g), m), v) in params.zip(g).zip(m).zip(v) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_net(seed: u64) -> FeedforwardNet {
        FeedforwardNet::new(&[3, 5, 4, 2], &mut RngStream::new(seed, 0), false)
    }

    #[test]
    fn shapes() {
        let net = small_net(1);
        assert_eq!(net.widths(), vec![3, 5, 4, 2]);
        assert_eq!(net.num_params(), 3 * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2);
        assert_eq!(net.forward(&[0.1, 0.2, 0.3]).len(), 2);
    }

    #[test]
    fn cached_forward_matches_plain_forward() {
        let net = small_net(2);
        let x = [0.4, -1.0, 2.0];
        assert_eq!(net.forward(&x), net.forward_cached(&x).output());
    }

    #[test]
    fn zero_output_layer_gives_zero() {
        let net = FeedforwardNet::new(&[4, 8, 1], &mut RngStream::new(3, 0), true);
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5]), vec![0.0]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut net = small_net(4);
        let x = [0.3, -0.7, 1.1];
        // L = Σ c_k y_k
        let c = [0.5, -1.5];
        let mut grads = Gradients::zeros_like(&net);
        net.backward(&net.forward_cached(&x), &c, &mut grads);
        let analytic = grads.flatten();
        let base = net.params();
        let h = 1e-6;
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += h;
            net.set_params(&p);
            let up: f64 = net.forward(&x).iter().zip(&c).map(|(y, c)| y * c).sum();
            p[i] -= 2.0 * h;
            net.set_params(&p);
            let down: f64 = net.forward(&x).iter().zip(&c).map(|(y, c)| y * c).sum();
            let numeric = (up - down) / (2.0 * h);
            assert!((numeric - analytic[i]).abs() < 1e-7, "param {i}");
        }
    }

    #[test]
    fn adam_fits_a_line() {
        let mut net = FeedforwardNet::new(&[1, 1], &mut RngStream::new(5, 0), false);
        let mut opt = Adam::new(&net, 0.05);
        for _ in 0..2000 {
            let mut g = Gradients::zeros_like(&net);
            for x in [-1.0, 0.0, 1.0, 2.0] {
                let cache = net.forward_cached(&[x]);
                let err = cache.output()[0] - (3.0 * x - 1.0);
                net.backward(&cache, &[2.0 * err], &mut g);
            }
            g.scale(0.25);
            opt.step(&mut net, &g);
        }
        let y = net.forward(&[0.5])[0];
        assert!((y - 0.5).abs() < 1e-3, "{y}");
    }
}
