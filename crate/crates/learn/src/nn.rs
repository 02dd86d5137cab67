// SPDX-License-Identifier: Apache-2.0

//! Skip-connection feed-forward regressor.
//!
//! ```text
//! e = relu(W2 relu(W1 x + b1) + b2)       extractor, d -> h1 -> d
//! z = x + e                               skip
//! p = sigmoid(w4 . relu(W3 z + b3) + b4)  regressor, d -> h2 -> 1
//! ```
//!
//! All parameters live in one flat vector so the optimizer and the
//! finite-difference checks can treat them uniformly.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::io::{ModelReader, ModelWriter};
use crate::seed::stream;
use crate::{check_rows, LearnError, Regressor};

#[derive(Clone, Debug, PartialEq)]
pub struct HybNNConfig {
    pub h1: usize,
    pub h2: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Epochs without a validation improvement before stopping; `None`
    /// trains for all epochs.
    pub patience: Option<usize>,
    /// Share of rows held out for early stopping. With fewer than 20 rows
    /// the training rows double as validation rows.
    pub val_fraction: f64,
}

impl Default for HybNNConfig {
    fn default() -> Self {
        HybNNConfig {
            h1: 32,
            h2: 16,
            epochs: 200,
            batch: 256,
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            patience: Some(20),
            val_fraction: 0.1,
        }
    }
}

#[derive(Copy, Clone, Debug)]
struct Layer {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

impl Layer {
    fn end(&self) -> usize {
        self.b + self.fan_out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybNN {
    dim: usize,
    h1: usize,
    h2: usize,
    theta: Vec<f64>,
}

/// Activations kept for the backward pass.
struct Trace {
    a1: Vec<f64>,
    e: Vec<f64>,
    z: Vec<f64>,
    h: Vec<f64>,
    p: f64,
}

#[derive(Clone, Debug, Default)]
pub struct EpochStats {
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl HybNN {
    /// All-zero parameters.
    pub fn zeros(dim: usize, h1: usize, h2: usize) -> Self {
        let mut m = HybNN {
            dim,
            h1,
            h2,
            theta: Vec::new(),
        };
        m.theta = vec![0.0; m.layers()[3].end()];
        m
    }

    /// Every weight and bias drawn from U(-sqrt(1/fan_in), sqrt(1/fan_in)).
    pub fn init<R: Rng>(dim: usize, h1: usize, h2: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(dim, h1, h2);
        for l in m.layers() {
            let bound = (1.0 / l.fan_in as f64).sqrt();
            for t in &mut m.theta[l.w..l.end()] {
                *t = rng.gen_range(-bound..bound);
            }
        }
        m
    }

    fn layers(&self) -> [Layer; 4] {
        let shapes = [
            (self.dim, self.h1),
            (self.h1, self.dim),
            (self.dim, self.h2),
            (self.h2, 1),
        ];
        let mut at = 0;
        shapes.map(|(fan_in, fan_out)| {
            let l = Layer {
                w: at,
                b: at + fan_in * fan_out,
                fan_in,
                fan_out,
            };
            at = l.end();
            l
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hidden(&self) -> (usize, usize) {
        (self.h1, self.h2)
    }

    pub fn params(&self) -> &[f64] {
        &self.theta
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// Range of the extractor parameters within `params`.
    pub fn extractor_range(&self) -> std::ops::Range<usize> {
        0..self.layers()[1].end()
    }

    fn affine(&self, l: Layer, x: &[f64]) -> Vec<f64> {
        let w = &self.theta[l.w..l.b];
        (0..l.fan_out)
            .map(|o| {
                let row = &w[o * l.fan_in..(o + 1) * l.fan_in];
                row.iter()
                    .zip(x)
                    .fold(self.theta[l.b + o], |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let [e1, e2, r1, out] = self.layers();
        let a1: Vec<f64> = self.affine(e1, x).into_iter().map(relu).collect();
        let e: Vec<f64> = self.affine(e2, &a1).into_iter().map(relu).collect();
        let z: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a + b).collect();
        let h: Vec<f64> = self.affine(r1, &z).into_iter().map(relu).collect();
        let p = sigmoid(self.affine(out, &h)[0]);
        Trace { a1, e, z, h, p }
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64, LearnError> {
        if x.len() != self.dim {
            return Err(LearnError::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.trace(x).p)
    }

    /// Mean squared error over the rows.
    pub fn mse(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        let sum: f64 = x
            .iter()
            .zip(y)
            .map(|(row, t)| (self.trace(row).p - t).powi(2))
            .sum();
        sum / x.len() as f64
    }

    /// Loss and its gradient with respect to `params`, for the mean squared
    /// error over `rows` of `x`.
    pub fn loss_gradient(&self, x: &[Vec<f64>], y: &[f64], rows: &[usize]) -> (f64, Vec<f64>) {
        let [e1, e2, r1, out] = self.layers();
        let mut grad = vec![0.0; self.theta.len()];
        let n = rows.len() as f64;
        let mut loss = 0.0;
        for &i in rows {
            let xi = &x[i];
            let t = self.trace(xi);
            let diff = t.p - y[i];
            loss += diff * diff / n;

            // output layer
            let ds = 2.0 * diff / n * t.p * (1.0 - t.p);
            for (k, hk) in t.h.iter().enumerate() {
                grad[out.w + k] += ds * hk;
            }
            grad[out.b] += ds;

            // regressor hidden layer
            let dh: Vec<f64> = (0..r1.fan_out)
                .map(|k| {
                    if t.h[k] > 0.0 {
                        ds * self.theta[out.w + k]
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut dz = vec![0.0; self.dim];
            for (o, &g) in dh.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grad[r1.b + o] += g;
                for j in 0..self.dim {
                    grad[r1.w + o * self.dim + j] += g * t.z[j];
                    dz[j] += g * self.theta[r1.w + o * self.dim + j];
                }
            }

            // extractor output layer; the skip path carries dz to x only
            let de: Vec<f64> = (0..self.dim)
                .map(|j| if t.e[j] > 0.0 { dz[j] } else { 0.0 })
                .collect();
            let mut da1 = vec![0.0; self.h1];
            for (o, &g) in de.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grad[e2.b + o] += g;
                for j in 0..self.h1 {
                    grad[e2.w + o * self.h1 + j] += g * t.a1[j];
                    da1[j] += g * self.theta[e2.w + o * self.h1 + j];
                }
            }

            // extractor hidden layer
            for o in 0..self.h1 {
                if t.a1[o] <= 0.0 || da1[o] == 0.0 {
                    continue;
                }
                let g = da1[o];
                grad[e1.b + o] += g;
                for j in 0..self.dim {
                    grad[e1.w + o * self.dim + j] += g * xi[j];
                }
            }
        }
        (loss, grad)
    }

    /// Adam on mean squared error with early stopping on a held-out split.
    /// The returned model carries the parameters of the best validation epoch.
    pub fn train(
        x: &[Vec<f64>],
        y: &[f64],
        config: &HybNNConfig,
        seed: u64,
    ) -> Result<(HybNN, TrainReport), LearnError> {
        let dim = x.first().map_or(0, Vec::len);
        check_rows(x, dim)?;
        if x.len() != y.len() {
            return Err(LearnError::Length {
                rows: x.len(),
                targets: y.len(),
            });
        }
        let mut model = HybNN::init(dim, config.h1, config.h2, &mut stream(seed, "hybnn.init"));

        let mut order: Vec<usize> = (0..x.len()).collect();
        order.shuffle(&mut stream(seed, "hybnn.split"));
        let n_val = if x.len() >= 20 {
            ((x.len() as f64 * config.val_fraction).round() as usize).min(x.len() - 1)
        } else {
            0
        };
        let (val, train) = order.split_at(n_val);
        let val = if val.is_empty() { train } else { val };
        let mut train = train.to_vec();
        let subset = |rows: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
            (
                rows.iter().map(|&i| x[i].clone()).collect(),
                rows.iter().map(|&i| y[i]).collect(),
            )
        };
        let (vx, vy) = subset(val);

        let mut shuffle = stream(seed, "hybnn.shuffle");
        let np = model.theta.len();
        let (mut m, mut v) = (vec![0.0; np], vec![0.0; np]);
        let mut step = 0i32;
        let mut best = (f64::INFINITY, model.theta.clone(), 0);
        let mut report = TrainReport::default();
        let mut stale = 0;
        for epoch in 1..=config.epochs {
            train.shuffle(&mut shuffle);
            let mut train_loss = 0.0;
            for chunk in train.chunks(config.batch.max(1)) {
                let (loss, grad) = model.loss_gradient(x, y, chunk);
                train_loss += loss * chunk.len() as f64;
                step += 1;
                let c1 = 1.0 - config.beta1.powi(step);
                let c2 = 1.0 - config.beta2.powi(step);
                for k in 0..np {
                    m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
                    v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
                    model.theta[k] -= config.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + config.eps);
                }
            }
            let val_mse = model.mse(&vx, &vy);
            let train_mse = train_loss / train.len() as f64;
            if !val_mse.is_finite() || !train_mse.is_finite() {
                return Err(LearnError::NonFinite { epoch });
            }
            report.epochs.push(EpochStats { train_mse, val_mse });
            if val_mse < best.0 {
                best = (val_mse, model.theta.clone(), epoch);
                stale = 0;
            } else {
                stale += 1;
                if config.patience.is_some_and(|p| stale >= p) {
                    log::debug!("early stop at epoch {epoch}, best {}", best.2);
                    break;
                }
            }
        }
        if best.2 > 0 {
            model.theta = best.1;
        }
        report.best_epoch = best.2;
        Ok((model, report))
    }

    pub fn to_text(&self) -> String {
        let mut w = ModelWriter::new("hybnn");
        w.field("dims", &[self.dim, self.h1, self.h2].map(|d| d.to_string()));
        for (l, name) in self.layers().into_iter().zip(["e1", "e2", "r1", "out"]) {
            w.block(
                &format!("{name}.w"),
                l.fan_out,
                l.fan_in,
                &self.theta[l.w..l.b],
            );
            w.block(
                &format!("{name}.b"),
                1,
                l.fan_out,
                &self.theta[l.b..l.end()],
            );
        }
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self, LearnError> {
        let mut r = ModelReader::new(text, "hybnn")?;
        let dims = r.field_usizes("dims")?;
        let [dim, h1, h2] = dims[..] else {
            return Err(r.error("`dims` takes three values"));
        };
        let mut m = HybNN::zeros(dim, h1, h2);
        for (l, name) in m.layers().into_iter().zip(["e1", "e2", "r1", "out"]) {
            let w = r.block(&format!("{name}.w"), l.fan_out, l.fan_in)?;
            m.theta[l.w..l.b].copy_from_slice(&w);
            let b = r.block(&format!("{name}.b"), 1, l.fan_out)?;
            m.theta[l.b..l.end()].copy_from_slice(&b);
        }
        r.finish()?;
        Ok(m)
    }
}

impl Regressor for HybNN {
    fn predict(&self, x: &[f64]) -> Result<f64, LearnError> {
        self.forward(x)
    }
}
