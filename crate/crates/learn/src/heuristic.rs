// SPDX-License-Identifier: Apache-2.0

//! Per-net backtrace scores from trained models, computed once per circuit.

use atpg_core::podem::ScoreTable;
use atpg_core::FeatureVector;

use crate::forest::RandomForest;
use crate::{LearnError, Regressor};

/// Scores and the model each net was routed to (0 neural, 1 SVR).
#[derive(Clone, Debug, PartialEq)]
pub struct Routing {
    pub scores: ScoreTable,
    pub classes: Vec<u8>,
}

fn check(features: &[FeatureVector], num_nets: usize) -> Result<(), LearnError> {
    if features.len() < num_nets {
        return Err(LearnError::MissingFeatures(features.len()));
    }
    Ok(())
}

/// One regressor for every net.
pub fn regressor_heuristic(
    model: &dyn Regressor,
    features: &[FeatureVector],
    num_nets: usize,
) -> Result<ScoreTable, LearnError> {
    check(features, num_nets)?;
    let scores = features[..num_nets]
        .iter()
        .map(|f| model.predict(&f.base))
        .collect::<Result<_, _>>()?;
    Ok(ScoreTable::new(scores))
}

/// The meta-classifier picks, per net, which regressor supplies the score.
pub fn hybmt_heuristic(
    meta: &RandomForest,
    neural: &dyn Regressor,
    svr: &dyn Regressor,
    features: &[FeatureVector],
    num_nets: usize,
) -> Result<Routing, LearnError> {
    check(features, num_nets)?;
    let mut scores = Vec::with_capacity(num_nets);
    let mut classes = Vec::with_capacity(num_nets);
    for f in &features[..num_nets] {
        let class = meta.predict(&f.extended)?;
        let model = if class == 0 { neural } else { svr };
        scores.push(model.predict(&f.base)?);
        classes.push(class);
    }
    Ok(Routing {
        scores: ScoreTable::new(scores),
        classes,
    })
}
