//! Fully connected regression network trained with Adam.
//!
//! Inputs are z-scored with training statistics (zero-variance columns
//! keep scale 1). Hidden layers use ReLU and the output is linear. The
//! objective is mean squared error over each mini-batch. Weights start
//! from a seeded Glorot-uniform draw with zero biases, and the training
//! rows are reshuffled every epoch.
//!
//! All arithmetic is f64.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Fingerprint, N_BITS};
use crate::error::{Error, Result};
use crate::rng;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    pub standardize: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_sizes: vec![128, 16],
            activation: Activation::Relu,
            standardize: true,
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::domain(
                "mlp hidden sizes must be nonempty and positive",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain(format!(
                "mlp learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::domain("mlp epochs and batch_size must be positive"));
        }
        Ok(())
    }
}

/// Dense layer, weights stored input-major: `w[i * n_out + o]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub relu: bool,
}

impl Dense {
    fn forward(&self, input: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.b);
        for (i, &xi) in input.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.w[i * self.n_out..(i + 1) * self.n_out];
            for (o, &wv) in out.iter_mut().zip(row) {
                *o += xi * wv;
            }
        }
        if self.relu {
            for o in out.iter_mut() {
                *o = o.max(0.0);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    pub layers: Vec<Dense>,
}

impl Network {
    /// Glorot-uniform weights, zero biases. The last layer is linear.
    pub fn new(n_in: usize, hidden: &[usize], seed: u64) -> Self {
        let mut r = rng::rng_from_seed(seed);
        let mut sizes = vec![n_in];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, pair)| {
                let (n_in, n_out) = (pair[0], pair[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                Dense {
                    n_in,
                    n_out,
                    w: (0..n_in * n_out)
                        .map(|_| r.gen_range(-limit..limit))
                        .collect(),
                    b: vec![0.0; n_out],
                    relu: k + 2 < sizes.len(),
                }
            })
            .collect();
        Network { layers }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params());
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
    }

    fn buffers(&self) -> Vec<Vec<f64>> {
        self.layers.iter().map(|l| vec![0.0; l.n_out]).collect()
    }

    pub fn predict(&self, input: &[f64]) -> f64 {
        let mut acts = self.buffers();
        self.forward_into(input, &mut acts);
        acts.last().unwrap()[0]
    }

    fn forward_into(&self, input: &[f64], acts: &mut [Vec<f64>]) {
        for k in 0..self.layers.len() {
            let (before, after) = acts.split_at_mut(k);
            let src = if k == 0 { input } else { &before[k - 1] };
            self.layers[k].forward(src, &mut after[0]);
        }
    }

    /// Mean squared error over row-major `x` (one row per target).
    pub fn loss(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.layers[0].n_in;
        x.chunks_exact(d)
            .zip(y)
            .map(|(row, &t)| (self.predict(row) - t).powi(2))
            .sum::<f64>()
            / y.len() as f64
    }

    /// Loss and its gradient, flattened like [`Network::params`].
    pub fn loss_and_gradient(&self, x: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
        let mut grads = Gradients::zeros(self);
        let mut scratch = Scratch::new(self);
        let d = self.layers[0].n_in;
        let rows: Vec<&[f64]> = x.chunks_exact(d).collect();
        let loss = self.accumulate(&rows, y, &mut grads, &mut scratch);
        (loss, grads.flatten())
    }

    /// Adds the batch-mean gradient for `rows` into `grads`; returns the
    /// batch loss.
    fn accumulate(
        &self,
        rows: &[&[f64]],
        y: &[f64],
        grads: &mut Gradients,
        s: &mut Scratch,
    ) -> f64 {
        let scale = 1.0 / rows.len() as f64;
        let mut loss = 0.0;
        let last = self.layers.len() - 1;
        for (row, &target) in rows.iter().zip(y) {
            self.forward_into(row, &mut s.acts);
            let err = s.acts[last][0] - target;
            loss += err * err;
            s.delta[last][0] = 2.0 * err * scale;
            for k in (0..=last).rev() {
                let layer = &self.layers[k];
                if layer.relu {
                    for (dv, &a) in s.delta[k].iter_mut().zip(&s.acts[k]) {
                        if a <= 0.0 {
                            *dv = 0.0;
                        }
                    }
                }
                let input: &[f64] = if k == 0 { row } else { &s.acts[k - 1] };
                let delta = &s.delta[k];
                let (gw, gb) = &mut grads.layers[k];
                for (gbv, &dv) in gb.iter_mut().zip(delta) {
                    *gbv += dv;
                }
                for (i, &xi) in input.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    let grow = &mut gw[i * layer.n_out..(i + 1) * layer.n_out];
                    for (g, &dv) in grow.iter_mut().zip(delta) {
                        *g += xi * dv;
                    }
                }
                if k > 0 {
                    let (lower, upper) = s.delta.split_at_mut(k);
                    let prev = &mut lower[k - 1];
                    let delta = &upper[0];
                    for (i, p) in prev.iter_mut().enumerate() {
                        let wrow = &layer.w[i * layer.n_out..(i + 1) * layer.n_out];
                        *p = wrow.iter().zip(delta).map(|(w, d)| w * d).sum();
                    }
                }
            }
        }
        loss * scale
    }
}

struct Gradients {
    layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    fn zeros(net: &Network) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
                .collect(),
        }
    }

    fn clear(&mut self) {
        for (w, b) in &mut self.layers {
            w.iter_mut().for_each(|v| *v = 0.0);
            b.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

struct Scratch {
    acts: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(net: &Network) -> Self {
        Scratch {
            acts: net.buffers(),
            delta: net.buffers(),
        }
    }
}

struct Adam {
    m: Gradients,
    v: Gradients,
    step: i32,
}

impl Adam {
    fn new(net: &Network) -> Self {
        Adam {
            m: Gradients::zeros(net),
            v: Gradients::zeros(net),
            step: 0,
        }
    }

    fn update(&mut self, net: &mut Network, grads: &Gradients, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step);
        let step_size = lr * c2.sqrt() / c1;
        let eps = ADAM_EPS * c2.sqrt();
        for (k, layer) in net.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[k];
            let (mw, mb) = &mut self.m.layers[k];
            let (vw, vb) = &mut self.v.layers[k];
            let params = layer.w.iter_mut().chain(layer.b.iter_mut());
            let g = gw.iter().chain(gb.iter());
            let m = mw.iter_mut().chain(mb.iter_mut());
            let v = vw.iter_mut().chain(vb.iter_mut());
            for (((p, &g), m), v) in params.zip(g).zip(m).zip(v) {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *p -= step_size * *m / (v.sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlpModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub network: Network,
    pub epochs: usize,
    pub final_loss: f64,
}

impl MlpModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let z: Vec<f64> = row
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        self.network.predict(&z)
    }
}

/// Column means and standard deviations; zero-variance columns get scale 1.
pub fn standardization(x: &[Fingerprint]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let mut ones = [0usize; N_BITS];
    for f in x {
        for (j, c) in ones.iter_mut().enumerate() {
            if f.bit(j) {
                *c += 1;
            }
        }
    }
    let mean: Vec<f64> = ones.iter().map(|&c| c as f64 / n).collect();
    let scale = mean
        .iter()
        .map(|&p| {
            let sd = (p * (1.0 - p)).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

pub fn fit(params: &MlpParams, x: &[Fingerprint], y: &[f64]) -> Result<MlpModel> {
    let (mean, scale) = if params.standardize {
        standardization(x)
    } else {
        (vec![0.0; N_BITS], vec![1.0; N_BITS])
    };
    let inputs: Vec<Vec<f64>> = x
        .iter()
        .map(|f| {
            f.to_dense()
                .iter()
                .zip(mean.iter().zip(&scale))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();

    let mut net = Network::new(N_BITS, &params.hidden_sizes, params.seed);
    let mut adam = Adam::new(&net);
    let mut grads = Gradients::zeros(&net);
    let mut scratch = Scratch::new(&net);
    let mut shuffle_rng = rng::rng_from_seed(rng::combine(params.seed, 0x5eed));
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut final_loss = f64::NAN;

    for epoch in 0..params.epochs {
        rng::shuffle(&mut shuffle_rng, &mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(params.batch_size) {
            let rows: Vec<&[f64]> = batch.iter().map(|&i| inputs[i].as_slice()).collect();
            let targets: Vec<f64> = batch.iter().map(|&i| y[i]).collect();
            grads.clear();
            let loss = net.accumulate(&rows, &targets, &mut grads, &mut scratch);
            epoch_loss += loss * batch.len() as f64;
            adam.update(&mut net, &grads, params.learning_rate);
        }
        final_loss = epoch_loss / x.len() as f64;
        if !final_loss.is_finite() || net.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Training(format!(
                "mlp diverged to a non-finite value in epoch {epoch}"
            )));
        }
    }

    Ok(MlpModel {
        mean,
        scale,
        network: net,
        epochs: params.epochs,
        final_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n: usize, seed: u64) -> (Vec<Fingerprint>, Vec<f64>) {
        let mut r = rng::rng_from_seed(seed);
        let x: Vec<Fingerprint> = (0..n)
            .map(|_| Fingerprint::from_u128(r.gen::<u128>() & r.gen::<u128>()))
            .collect();
        let y = x
            .iter()
            .map(|f| 5.0 + f64::from(u8::from(f.bit(0))) - 0.5 * f64::from(u8::from(f.bit(9))))
            .collect();
        (x, y)
    }

    #[test]
    fn gradient_matches_finite_differences_small() {
        let mut net = Network::new(6, &[5, 3], 11);
        let mut r = rng::rng_from_seed(2);
        let x: Vec<f64> = (0..4 * 6).map(|_| r.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let (_, grad) = net.loss_and_gradient(&x, &y);
        let base = net.params();
        let h = 1e-6;
        for p in 0..base.len() {
            let mut plus = base.clone();
            plus[p] += h;
            net.set_params(&plus);
            let lp = net.loss(&x, &y);
            let mut minus = base.clone();
            minus[p] -= h;
            net.set_params(&minus);
            let lm = net.loss(&x, &y);
            let fd = (lp - lm) / (2.0 * h);
            let denom = fd.abs().max(grad[p].abs()).max(1e-7);
            assert!((fd - grad[p]).abs() / denom < 1e-3 || (fd - grad[p]).abs() < 1e-8);
        }
        net.set_params(&base);
    }

    #[test]
    fn training_is_deterministic_and_learns() {
        let (x, y) = data(64, 3);
        let params = MlpParams {
            epochs: 60,
            seed: 5,
            ..Default::default()
        };
        let a = fit(&params, &x, &y).unwrap();
        let b = fit(&params, &x, &y).unwrap();
        assert_eq!(a, b);
        let var = {
            let m = y.iter().sum::<f64>() / y.len() as f64;
            y.iter().map(|t| (t - m).powi(2)).sum::<f64>() / y.len() as f64
        };
        assert!(a.final_loss < 0.1 * var, "loss {} var {var}", a.final_loss);
    }

    #[test]
    fn zero_variance_column_keeps_unit_scale() {
        let (mut x, _) = data(10, 1);
        for f in x.iter_mut() {
            *f = f.with_bit(4, false).with_bit(5, true);
        }
        let (mean, scale) = standardization(&x);
        assert_eq!((mean[4], scale[4]), (0.0, 1.0));
        assert_eq!((mean[5], scale[5]), (1.0, 1.0));
    }

    #[test]
    fn divergence_reports_epoch() {
        let (x, mut y) = data(16, 2);
        y[0] = 1e300;
        let params = MlpParams {
            epochs: 5,
            learning_rate: 1e3,
            ..Default::default()
        };
        match fit(&params, &x, &y) {
            Err(Error::Training(msg)) => assert!(msg.contains("epoch"), "{msg}"),
            other => panic!("expected training error, got {other:?}"),
        }
    }
}
