// SPDX-License-Identifier: Apache-2.0

//! Learned backtrace guidance: a skip-connection neural regressor, an
//! epsilon-SVR, and a random-forest meta-classifier that picks between them
//! per net.

pub mod cv;
pub mod forest;
pub mod heuristic;
pub mod io;
pub mod nn;
pub mod seed;
pub mod svr;

use thiserror::Error;

pub use forest::{ForestConfig, RandomForest};
pub use heuristic::{hybmt_heuristic, regressor_heuristic, Routing};
pub use nn::{HybNN, HybNNConfig};
pub use svr::{Kernel, Svr, SvrConfig};

/// A model mapping a base feature vector to a score.
pub trait Regressor: Sync {
    fn predict(&self, x: &[f64]) -> Result<f64, LearnError>;
}

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("no training data")]
    EmptyData,
    #[error("expected {expected} features, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("{rows} rows but {targets} targets")]
    Length { rows: usize, targets: usize },
    #[error("non-finite loss at epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("SMO did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("fold {0} has no rows")]
    EmptyFold(usize),
    #[error("cross-validation needs at least 2 folds and a non-empty grid")]
    BadGrid,
    #[error("no features for net {0}")]
    MissingFeatures(usize),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_rows(x: &[Vec<f64>], dim: usize) -> Result<(), LearnError> {
    if x.is_empty() {
        return Err(LearnError::EmptyData);
    }
    for row in x {
        if row.len() != dim {
            return Err(LearnError::Dimension {
                expected: dim,
                found: row.len(),
            });
        }
    }
    Ok(())
}
