// SPDX-License-Identifier: Apache-2.0

//! K-fold cross-validation over a hyperparameter grid.

use atpg_core::datagen::TrainingRow;

use crate::LearnError;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Objective {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvRow {
    /// Index into the grid.
    pub point: usize,
    pub fold: usize,
    pub score: f64,
    /// Held-out rows scored.
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    pub rows: Vec<CvRow>,
    /// Mean held-out score per grid point.
    pub means: Vec<f64>,
    /// Best grid point; the earliest wins ties.
    pub best: usize,
}

impl CvReport {
    pub fn best_score(&self) -> f64 {
        self.means[self.best]
    }
}

/// `(train, test)` row indices per fold.
pub fn fold_indices(
    folds: &[usize],
    k: usize,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>, LearnError> {
    if k < 2 {
        return Err(LearnError::BadGrid);
    }
    let mut split = vec![(Vec::new(), Vec::new()); k];
    for (i, &f) in folds.iter().enumerate() {
        for (g, (train, test)) in split.iter_mut().enumerate() {
            if g == f {
                test.push(i);
            } else {
                train.push(i);
            }
        }
    }
    if let Some(empty) = split.iter().position(|(_, test)| test.is_empty()) {
        return Err(LearnError::EmptyFold(empty));
    }
    Ok(split)
}

/// Scores every grid point on every fold with `eval(point, train, test)`,
/// which trains on `train` and returns the score on `test`.
pub fn cross_validate<P>(
    folds: &[usize],
    k: usize,
    grid: &[P],
    objective: Objective,
    mut eval: impl FnMut(&P, &[usize], &[usize]) -> Result<f64, LearnError>,
) -> Result<CvReport, LearnError> {
    if grid.is_empty() {
        return Err(LearnError::BadGrid);
    }
    let split = fold_indices(folds, k)?;
    let mut rows = Vec::with_capacity(grid.len() * k);
    let mut means = Vec::with_capacity(grid.len());
    for (point, p) in grid.iter().enumerate() {
        let mut sum = 0.0;
        for (fold, (train, test)) in split.iter().enumerate() {
            let score = eval(p, train, test)?;
            sum += score;
            rows.push(CvRow {
                point,
                fold,
                score,
                rows: test.len(),
            });
        }
        means.push(sum / k as f64);
    }
    let mut best = 0;
    for (i, &m) in means.iter().enumerate() {
        let better = match objective {
            Objective::Minimize => m < means[best],
            Objective::Maximize => m > means[best],
        };
        if better {
            best = i;
        }
    }
    Ok(CvReport { rows, means, best })
}

pub fn mse(pred: &[f64], target: &[f64]) -> f64 {
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    sum / pred.len() as f64
}

pub fn accuracy(pred: &[u8], target: &[u8]) -> f64 {
    let right = pred.iter().zip(target).filter(|(a, b)| a == b).count();
    right as f64 / pred.len() as f64
}

/// `n` points spaced evenly in log10 from `lo` to `hi`, both included.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

pub fn select<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

pub fn base_matrix(rows: &[TrainingRow]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.features.base.to_vec()).collect()
}

pub fn extended_matrix(rows: &[TrainingRow]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.features.extended.to_vec()).collect()
}

pub fn targets(rows: &[TrainingRow]) -> Vec<f64> {
    rows.iter().map(|r| r.p).collect()
}
