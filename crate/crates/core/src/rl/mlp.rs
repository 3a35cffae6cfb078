//! Fully connected networks with hand-written backpropagation and Adam.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            // NaN passes through so a corrupted network stays detectable.
            Activation::Relu => z.mapv(|v| if v < 0.0 { 0.0 } else { v }),
            Activation::Tanh => z.mapv(f64::tanh),
            Activation::Identity => z.clone(),
        }
    }

    /// `g ⊙ f'(z)`, using the activation output `y` where convenient.
    fn backprop(self, z: &Array2<f64>, y: &Array2<f64>, g: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => {
                let mut out = g.clone();
                out.zip_mut_with(z, |o, &zv| {
                    if zv <= 0.0 {
                        *o = 0.0;
                    }
                });
                out
            }
            Activation::Tanh => {
                let mut out = g.clone();
                out.zip_mut_with(y, |o, &yv| *o *= 1.0 - yv * yv);
                out
            }
            Activation::Identity => g.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `inputs × outputs`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub hidden: Activation,
    pub output: Activation,
}

/// Intermediate values of a forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Cache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    out: Array2<f64>,
}

impl Cache {
    pub fn output(&self) -> &Array2<f64> {
        &self.out
    }
}

/// Gradients with the same layout as [`Mlp::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads(pub Vec<Dense>);

impl Mlp {
    /// Uniform fan-in initialization; the last layer is drawn from
    /// `±final_scale`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, output: Activation, final_scale: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|l| {
                let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
                let bound = if l + 1 == n { final_scale } else { 1.0 / (fan_in as f64).sqrt() };
                Dense {
                    w: Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..=bound)),
                    b: Array1::from_shape_fn(fan_out, |_| rng.random_range(-bound..=bound)),
                }
            })
            .collect();
        Self { layers, hidden, output }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").w.ncols()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() { self.output } else { self.hidden }
    }

    /// Row-wise forward pass of a batch.
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut h = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = h.dot(&layer.w) + &layer.b;
            h = self.activation(l).apply(&z);
        }
        h
    }

    pub fn forward_cached(&self, x: &Array2<f64>) -> Cache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = h.dot(&layer.w) + &layer.b;
            let next = self.activation(l).apply(&z);
            inputs.push(h);
            pre.push(z);
            h = next;
        }
        Cache { inputs, pre, out: h }
    }

    /// Parameter gradients and input gradient for `dL/d(output) = g`.
    pub fn backward(&self, cache: &Cache, g: &Array2<f64>) -> (Grads, Array2<f64>) {
        let n = self.layers.len();
        let mut grads = Vec::with_capacity(n);
        let mut delta = g.clone();
        let mut y = cache.out.clone();
        for l in (0..n).rev() {
            let dz = self.activation(l).backprop(&cache.pre[l], &y, &delta);
            grads.push(Dense { w: cache.inputs[l].t().dot(&dz), b: dz.sum_axis(Axis(0)) });
            delta = dz.dot(&self.layers[l].w.t());
            y = cache.inputs[l].clone();
        }
        grads.reverse();
        (Grads(grads), delta)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|d| d.w.len() + d.b.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for d in &self.layers {
            out.extend(d.w.iter());
            out.extend(d.b.iter());
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.num_params(), "parameter vector length");
        let mut k = 0;
        for d in &mut self.layers {
            for v in d.w.iter_mut().chain(d.b.iter_mut()) {
                *v = p[k];
                k += 1;
            }
        }
    }

    pub fn param_norm(&self) -> f64 {
        self.layers.iter().map(|d| d.w.iter().chain(d.b.iter()).map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt()
    }

    /// `self ← κ·source + (1 − κ)·self`.
    pub fn soft_update(&mut self, source: &Mlp, kappa: f64) {
        for (t, s) in self.layers.iter_mut().zip(&source.layers) {
            t.w.zip_mut_with(&s.w, |a, &b| *a = kappa * b + (1.0 - kappa) * *a);
            t.b.zip_mut_with(&s.b, |a, &b| *a = kappa * b + (1.0 - kappa) * *a);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|d| d.w.iter().chain(d.b.iter()).all(|v| v.is_finite()))
    }
}

impl Grads {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for d in &self.0 {
            out.extend(d.w.iter());
            out.extend(d.b.iter());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment estimates for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<Dense>,
    v: Vec<Dense>,
    t: u64,
}

impl Adam {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        let zeros = |net: &Mlp| {
            net.layers
                .iter()
                .map(|d| Dense { w: Array2::zeros(d.w.raw_dim()), b: Array1::zeros(d.b.len()) })
                .collect::<Vec<_>>()
        };
        Self { config, m: zeros(net), v: zeros(net), t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One descent step along `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Grads) {
        self.t += 1;
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= learning_rate * (*m / c1) / ((*v / c2).sqrt() + epsilon);
        };
        for (((layer, m), v), g) in net.layers.iter_mut().zip(&mut self.m).zip(&mut self.v).zip(&grads.0) {
            ndarray::Zip::from(&mut layer.w).and(&mut m.w).and(&mut v.w).and(&g.w).for_each(|p, m, v, &g| update(p, m, v, g));
            ndarray::Zip::from(&mut layer.b).and(&mut m.b).and(&mut v.b).and(&g.b).for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn loss(net: &Mlp, x: &Array2<f64>, target: &Array2<f64>) -> f64 {
        let y = net.forward(x);
        (&y - target).mapv(|v| v * v).sum() * 0.5
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (hidden, output) in [(Activation::Relu, Activation::Identity), (Activation::Tanh, Activation::Tanh)] {
            let net = Mlp::new(&[3, 7, 5, 2], hidden, output, 0.5, &mut rng);
            let x = Array2::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
            let target = Array2::from_shape_fn((4, 2), |_| rng.random_range(-1.0..1.0));
            let cache = net.forward_cached(&x);
            let (grads, dx) = net.backward(&cache, &(&cache.out - &target));
            let analytic = grads.flatten();
            let p0 = net.params();
            let h = 1e-6;
            for k in 0..p0.len() {
                let mut probe = net.clone();
                let mut p = p0.clone();
                p[k] += h;
                probe.set_params(&p);
                let up = loss(&probe, &x, &target);
                p[k] -= 2.0 * h;
                probe.set_params(&p);
                let down = loss(&probe, &x, &target);
                let fd = (up - down) / (2.0 * h);
                assert!((fd - analytic[k]).abs() <= 1e-6 + 1e-4 * fd.abs(), "param {k}: {fd} vs {}", analytic[k]);
            }
            for i in 0..4 {
                for j in 0..3 {
                    let mut xp = x.clone();
                    xp[(i, j)] += h;
                    let mut xm = x.clone();
                    xm[(i, j)] -= h;
                    let fd = (loss(&net, &xp, &target) - loss(&net, &xm, &target)) / (2.0 * h);
                    assert!((fd - dx[(i, j)]).abs() <= 1e-6 + 1e-4 * fd.abs());
                }
            }
        }
    }

    #[test]
    fn adam_fits_a_linear_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut net = Mlp::new(&[2, 1], Activation::Relu, Activation::Identity, 0.1, &mut rng);
        let mut adam = Adam::new(&net, AdamConfig { learning_rate: 1e-2, ..Default::default() });
        let x = Array2::from_shape_fn((32, 2), |_| rng.random_range(-1.0..1.0));
        let y = x.dot(&ndarray::arr2(&[[2.0], [-1.0]])) + 0.5;
        for _ in 0..3000 {
            let cache = net.forward_cached(&x);
            let (g, _) = net.backward(&cache, &((&cache.out - &y) / 32.0));
            adam.step(&mut net, &g);
        }
        assert!(loss(&net, &x, &y) < 1e-8);
    }

    #[test]
    fn soft_update_is_geometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let source = Mlp::new(&[3, 4, 1], Activation::Relu, Activation::Identity, 0.1, &mut rng);
        let mut target = Mlp::new(&[3, 4, 1], Activation::Relu, Activation::Identity, 0.1, &mut rng);
        let dist = |a: &Mlp, b: &Mlp| a.params().iter().zip(b.params()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let d0 = dist(&source, &target);
        let kappa = 0.002;
        for _ in 0..500 {
            target.soft_update(&source, kappa);
        }
        let expected = d0 * (1.0 - kappa).powi(500);
        assert!((dist(&source, &target) - expected).abs() < 1e-12 * d0.max(1.0));
    }
}
