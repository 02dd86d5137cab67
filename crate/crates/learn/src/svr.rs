// SPDX-License-Identifier: Apache-2.0

//! Epsilon-insensitive support vector regression trained by sequential
//! minimal optimization with second-order working-set selection.
//!
//! The dual is solved in the standard doubled form: variables `a[t]` for
//! `t < n` carry `alpha+` (sign `+1`), those for `t >= n` carry `alpha-`
//! (sign `-1`), and the regression coefficients are `alpha+ - alpha-`.

use std::collections::HashMap;
use std::rc::Rc;

use rand::seq::index::sample;

use crate::io::{fmt_exact, ModelReader, ModelWriter};
use crate::seed::stream;
use crate::{check_rows, LearnError, Regressor};

const TAU: f64 = 1e-12;

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        }
    }
}

/// Kernel selection before the data is seen.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum KernelChoice {
    /// RBF; `None` picks `gamma = 1 / (dim * variance of all feature values)`.
    Rbf(Option<f64>),
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvrConfig {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: KernelChoice,
    /// Stopping tolerance on the maximal violating pair.
    pub tol: f64,
    /// Iteration cap; `None` uses `max(10^7, 100 * 2n)`.
    pub max_iter: Option<usize>,
    /// Kernel row cache budget in bytes.
    pub cache_bytes: usize,
    /// Train on a seeded random subset of at most this many rows.
    pub max_samples: Option<usize>,
}

impl Default for SvrConfig {
    fn default() -> Self {
        SvrConfig {
            c: 1.0,
            epsilon: 0.1,
            kernel: KernelChoice::Rbf(None),
            tol: 1e-3,
            max_iter: None,
            cache_bytes: 200 << 20,
            max_samples: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Svr {
    kernel: Kernel,
    c: f64,
    epsilon: f64,
    dim: usize,
    support: Vec<Vec<f64>>,
    dual: Vec<f64>,
    bias: f64,
}

/// Solver diagnostics returned with a trained model.
#[derive(Clone, Debug)]
pub struct SvrFit {
    pub iterations: usize,
    /// Maximal violating pair gap at exit.
    pub kkt_gap: f64,
    /// Rows actually used for training (indices into the input).
    pub rows: Vec<usize>,
}

/// Variance of every feature value pooled together.
pub fn pooled_variance(x: &[Vec<f64>]) -> f64 {
    let n: usize = x.iter().map(Vec::len).sum();
    if n == 0 {
        return 0.0;
    }
    let mean = x.iter().flatten().sum::<f64>() / n as f64;
    x.iter()
        .flatten()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n as f64
}

struct RowCache<'a> {
    x: &'a [Vec<f64>],
    kernel: Kernel,
    rows: HashMap<usize, (Rc<Vec<f64>>, u64)>,
    capacity: usize,
    clock: u64,
}

impl<'a> RowCache<'a> {
    fn new(x: &'a [Vec<f64>], kernel: Kernel, bytes: usize) -> Self {
        let capacity = (bytes / (8 * x.len().max(1))).max(2);
        RowCache {
            x,
            kernel,
            rows: HashMap::new(),
            capacity,
            clock: 0,
        }
    }

    fn row(&mut self, i: usize) -> Rc<Vec<f64>> {
        self.clock += 1;
        if let Some(entry) = self.rows.get_mut(&i) {
            entry.1 = self.clock;
            return entry.0.clone();
        }
        if self.rows.len() >= self.capacity {
            let oldest = *self
                .rows
                .iter()
                .min_by_key(|(_, (_, stamp))| *stamp)
                .map(|(k, _)| k)
                .expect("cache is non-empty");
            self.rows.remove(&oldest);
        }
        let xi = &self.x[i];
        let row = Rc::new(
            self.x
                .iter()
                .map(|xj| self.kernel.eval(xi, xj))
                .collect::<Vec<_>>(),
        );
        self.rows.insert(i, (row.clone(), self.clock));
        row
    }
}

impl Svr {
    pub fn from_parts(
        kernel: Kernel,
        c: f64,
        epsilon: f64,
        dim: usize,
        support: Vec<Vec<f64>>,
        dual: Vec<f64>,
        bias: f64,
    ) -> Self {
        Svr {
            kernel,
            c,
            epsilon,
            dim,
            support,
            dual,
            bias,
        }
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn dual(&self) -> &[f64] {
        &self.dual
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Kernel expansion before clamping.
    pub fn raw(&self, x: &[f64]) -> Result<f64, LearnError> {
        if x.len() != self.dim {
            return Err(LearnError::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self
            .support
            .iter()
            .zip(&self.dual)
            .fold(self.bias, |acc, (sv, d)| acc + d * self.kernel.eval(sv, x)))
    }

    pub fn train(
        x: &[Vec<f64>],
        z: &[f64],
        config: &SvrConfig,
        seed: u64,
    ) -> Result<(Svr, SvrFit), LearnError> {
        let dim = x.first().map_or(0, Vec::len);
        check_rows(x, dim)?;
        if x.len() != z.len() {
            return Err(LearnError::Length {
                rows: x.len(),
                targets: z.len(),
            });
        }
        let rows: Vec<usize> = match config.max_samples {
            Some(m) if m < x.len() => {
                let mut r = sample(&mut stream(seed, "svr.subsample"), x.len(), m).into_vec();
                r.sort_unstable();
                r
            }
            _ => (0..x.len()).collect(),
        };
        let xs: Vec<Vec<f64>> = rows.iter().map(|&i| x[i].clone()).collect();
        let zs: Vec<f64> = rows.iter().map(|&i| z[i]).collect();
        let kernel = match config.kernel {
            KernelChoice::Linear => Kernel::Linear,
            KernelChoice::Rbf(Some(gamma)) => Kernel::Rbf { gamma },
            KernelChoice::Rbf(None) => {
                let var = pooled_variance(&xs);
                Kernel::Rbf {
                    gamma: if var > 0.0 {
                        1.0 / (dim as f64 * var)
                    } else {
                        1.0
                    },
                }
            }
        };
        let (beta, bias, iterations, kkt_gap) = solve(&xs, &zs, kernel, config)?;
        let mut support = Vec::new();
        let mut dual = Vec::new();
        for (i, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                support.push(xs[i].clone());
                dual.push(b);
            }
        }
        let model = Svr {
            kernel,
            c: config.c,
            epsilon: config.epsilon,
            dim,
            support,
            dual,
            bias,
        };
        Ok((
            model,
            SvrFit {
                iterations,
                kkt_gap,
                rows,
            },
        ))
    }

    pub fn to_text(&self) -> String {
        let mut w = ModelWriter::new("svr");
        w.field(
            "dims",
            &[self.dim.to_string(), self.support.len().to_string()],
        );
        match self.kernel {
            Kernel::Rbf { gamma } => w.field("kernel", &["rbf".into(), fmt_exact(gamma)]),
            Kernel::Linear => w.field("kernel", &["linear".into()]),
        }
        w.field("c", &[fmt_exact(self.c)]);
        w.field("epsilon", &[fmt_exact(self.epsilon)]);
        w.field("bias", &[fmt_exact(self.bias)]);
        let flat: Vec<f64> = self.support.iter().flatten().copied().collect();
        w.block("support", self.support.len(), self.dim, &flat);
        w.block("dual", self.dual.len(), 1, &self.dual);
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self, LearnError> {
        let mut r = ModelReader::new(text, "svr")?;
        let dims = r.field_usizes("dims")?;
        let [dim, nsv] = dims[..] else {
            return Err(r.error("`dims` takes two values"));
        };
        let k = r.field("kernel")?;
        let kernel = match k[..] {
            ["rbf", g] => Kernel::Rbf { gamma: r.parse(g)? },
            ["linear"] => Kernel::Linear,
            _ => return Err(r.error("unknown kernel")),
        };
        let c = r.field_one("c")?;
        let epsilon = r.field_one("epsilon")?;
        let bias = r.field_one("bias")?;
        let flat = r.block("support", nsv, dim)?;
        let support = if dim == 0 {
            vec![Vec::new(); nsv]
        } else {
            flat.chunks(dim).map(<[f64]>::to_vec).collect()
        };
        let dual = r.block("dual", nsv, 1)?;
        r.finish()?;
        Ok(Svr {
            kernel,
            c,
            epsilon,
            dim,
            support,
            dual,
            bias,
        })
    }
}

impl Regressor for Svr {
    /// Clamped into `[0, 1]`.
    fn predict(&self, x: &[f64]) -> Result<f64, LearnError> {
        Ok(self.raw(x)?.clamp(0.0, 1.0))
    }
}

/// Returns `(beta, bias, iterations, gap)`.
fn solve(
    x: &[Vec<f64>],
    z: &[f64],
    kernel: Kernel,
    config: &SvrConfig,
) -> Result<(Vec<f64>, f64, usize, f64), LearnError> {
    let n = x.len();
    let l = 2 * n;
    let c = config.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let data = |t: usize| if t < n { t } else { t - n };
    let diag: Vec<f64> = x.iter().map(|xi| kernel.eval(xi, xi)).collect();
    let mut cache = RowCache::new(x, kernel, config.cache_bytes);

    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| {
            if t < n {
                config.epsilon - z[t]
            } else {
                config.epsilon + z[t - n]
            }
        })
        .collect();
    let max_iter = config.max_iter.unwrap_or((100 * l).max(10_000_000));
    let in_up = |t: usize, a: f64| if t < n { a < c } else { a > 0.0 };
    let in_low = |t: usize, a: f64| if t < n { a > 0.0 } else { a < c };

    let mut iter = 0;
    let gap = loop {
        // first index: maximal violation among the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..l {
            if in_up(t, alpha[t]) && -sign(t) * grad[t] >= gmax {
                gmax = -sign(t) * grad[t];
                i = t;
            }
        }
        // second index: largest objective decrease among the "low" set
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        let ki = (i != usize::MAX).then(|| cache.row(data(i)));
        for t in 0..l {
            if !in_low(t, alpha[t]) {
                continue;
            }
            let v = sign(t) * grad[t];
            gmax2 = gmax2.max(v);
            let Some(ki) = &ki else { continue };
            let diff = gmax + v;
            if diff > 0.0 {
                let quad = diag[data(i)] + diag[data(t)] - 2.0 * ki[data(t)];
                let obj = -diff * diff / if quad > 0.0 { quad } else { TAU };
                if obj <= best {
                    best = obj;
                    j = t;
                }
            }
        }
        let gap = gmax + gmax2;
        if gap < config.tol || j == usize::MAX {
            break gap.max(0.0);
        }
        if iter >= max_iter {
            return Err(LearnError::NonConvergence { iterations: iter });
        }
        iter += 1;

        let ki = ki.expect("first index exists");
        let kj = cache.row(data(j));
        let kij = ki[data(j)];
        let quad = {
            let q = diag[data(i)] + diag[data(j)] - 2.0 * kij;
            if q > 0.0 {
                q
            } else {
                TAU
            }
        };
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if sign(i) != sign(j) {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let (si, sj) = (sign(i), sign(j));
        for t in 0..l {
            let st = sign(t);
            let d = data(t);
            grad[t] += st * (si * ki[d] * di + sj * kj[d] * dj);
        }
    };

    // offset from free variables, else the midpoint of the feasible range
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if sign(t) > 0.0 {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if at_lower {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    let beta = (0..n).map(|i| alpha[i] - alpha[i + n]).collect();
    Ok((beta, -rho, iter, gap))
}
