// SPDX-License-Identifier: Apache-2.0

//! Training labels from instrumented PODEM runs.
//!
//! Every backtrace walk of a baseline campaign is replayed: if the input
//! decision it produced survived the rest of that fault's search, every net
//! on the walk scores a success; if the decision was flipped, every net on
//! it scores a failure. The no-backtrack probability of a net is its success
//! ratio.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::faults::{annotate, enumerate_faults, rank_hard_faults, FaultError};
use crate::netlist::{Circuit, NetId};
use crate::podem::{
    cop_baseline_heuristic, run_campaign, AtpgResult, CampaignReport, PodemConfig, PodemError,
};
use crate::testability::{
    feature_names, fmt_real, FeatureVector, Testability, BASE_FEATURES, EXTENDED_FEATURES,
};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("holdout circuit `{0}` not found")]
    HoldoutNotFound(String),
    #[error("{k} folds requested but only {rows} rows are available")]
    TooManyFolds { k: usize, rows: usize },
    #[error("need at least {0}")]
    TooFew(&'static str),
    #[error("circuit `{0}` is missing a model result")]
    MissingResult(String),
    #[error("training data line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Fault(#[from] FaultError),
    #[error(transparent)]
    Podem(#[from] PodemError),
}

/// Per-net walk occurrences and successes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NetLabelAccumulator {
    pub f_total: Vec<u64>,
    pub f_success: Vec<u64>,
}

impl NetLabelAccumulator {
    pub fn new(num_nets: usize) -> Self {
        NetLabelAccumulator {
            f_total: vec![0; num_nets],
            f_success: vec![0; num_nets],
        }
    }

    /// Adds the walks of one fault run.
    pub fn add_result(&mut self, result: &AtpgResult) {
        for walk in &result.walks {
            for n in &walk.nets {
                self.f_total[n.index()] += 1;
                if !walk.reversed {
                    self.f_success[n.index()] += 1;
                }
            }
        }
    }

    /// Sums another accumulator into this one.
    pub fn merge(&mut self, other: &NetLabelAccumulator) {
        for (a, b) in self.f_total.iter_mut().zip(&other.f_total) {
            *a += b;
        }
        for (a, b) in self.f_success.iter_mut().zip(&other.f_success) {
            *a += b;
        }
    }

    /// No-backtrack probability; `None` for nets never traversed.
    pub fn p(&self, net: NetId) -> Option<f64> {
        let t = self.f_total[net.index()];
        (t > 0).then(|| self.f_success[net.index()] as f64 / t as f64)
    }

    pub fn labeled(&self) -> impl Iterator<Item = NetId> + '_ {
        self.f_total
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0)
            .map(|(i, _)| NetId(i as u32))
    }
}

pub fn accumulate(num_nets: usize, results: &[AtpgResult]) -> NetLabelAccumulator {
    let mut acc = NetLabelAccumulator::new(num_nets);
    for r in results {
        acc.add_result(r);
    }
    acc
}

/// Per-net count of backtrace walks whose decision was later flipped. Used
/// by the net-level meta-labeling mode.
pub fn net_backtrack_counts(num_nets: usize, results: &[AtpgResult]) -> Vec<u64> {
    let mut counts = vec![0; num_nets];
    for walk in results.iter().flat_map(|r| &r.walks) {
        if walk.reversed {
            for n in &walk.nets {
                counts[n.index()] += 1;
            }
        }
    }
    counts
}

/// Labels from a COP-guided campaign over the `k_hard` hardest faults.
pub fn generate_labels(
    circuit: &Circuit,
    testability: &Testability,
    k_hard: usize,
    backtrack_limit: u64,
    jobs: usize,
) -> Result<(NetLabelAccumulator, CampaignReport), DatagenError> {
    let mut all = enumerate_faults(circuit);
    annotate(&mut all, testability);
    let hard = rank_hard_faults(&all, k_hard)?;
    let heuristic = cop_baseline_heuristic(&testability.cc);
    let config = PodemConfig {
        backtrack_limit,
        record_walks: true,
    };
    let report = run_campaign(circuit, &hard, &heuristic, &config, jobs)?;
    Ok((accumulate(circuit.num_nets(), &report.results), report))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingRow {
    pub circuit: String,
    pub net: String,
    pub features: FeatureVector,
    pub f_total: u64,
    pub f_success: u64,
    pub p: f64,
}

/// One row per traversed net; untraversed nets get no label.
pub fn label_rows(
    circuit: &Circuit,
    features: &[FeatureVector],
    labels: &NetLabelAccumulator,
) -> Vec<TrainingRow> {
    labels
        .labeled()
        .map(|n| TrainingRow {
            circuit: circuit.name().to_string(),
            net: circuit.net(n).name.clone(),
            features: features[n.index()].clone(),
            f_total: labels.f_total[n.index()],
            f_success: labels.f_success[n.index()],
            p: labels.p(n).unwrap(),
        })
        .collect()
}

/// Training CSV header: circuit and net, the feature dump columns, then
/// `f_total,f_success,p`.
pub fn training_header() -> String {
    format!(
        "circuit,net,{},f_total,f_success,p",
        feature_names().join(",")
    )
}

pub fn training_csv(rows: &[TrainingRow]) -> String {
    let mut out = training_header();
    out.push('\n');
    for r in rows {
        out.push_str(&r.circuit);
        out.push(',');
        out.push_str(&r.net);
        for v in &r.features.extended {
            out.push(',');
            out.push_str(&fmt_real(*v));
        }
        out.push_str(&format!(
            ",{},{},{}\n",
            r.f_total,
            r.f_success,
            fmt_real(r.p)
        ));
    }
    out
}

pub fn read_training_csv(text: &str) -> Result<Vec<TrainingRow>, DatagenError> {
    let mut rows = Vec::new();
    let width = 2 + EXTENDED_FEATURES + 3;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| DatagenError::Format {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if idx == 0 && fields.first() == Some(&"circuit") {
            if line != training_header() {
                return Err(err("unexpected header".into()));
            }
            continue;
        }
        if fields.len() != width {
            return Err(err(format!(
                "expected {width} fields, found {}",
                fields.len()
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| err(format!("bad number `{s}`")))
        };
        let mut extended = [0.0; EXTENDED_FEATURES];
        for (slot, field) in extended.iter_mut().zip(&fields[2..2 + EXTENDED_FEATURES]) {
            *slot = num(field)?;
        }
        let mut base = [0.0; BASE_FEATURES];
        base.copy_from_slice(&extended[..BASE_FEATURES]);
        let tail = &fields[2 + EXTENDED_FEATURES..];
        rows.push(TrainingRow {
            circuit: fields[0].to_string(),
            net: fields[1].to_string(),
            features: FeatureVector { base, extended },
            f_total: num(tail[0])? as u64,
            f_success: num(tail[1])? as u64,
            p: num(tail[2])?,
        });
    }
    Ok(rows)
}

/// Rows for one leave-one-out split, with k-fold assignments.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub rows: Vec<TrainingRow>,
    /// Fold index of each row.
    pub folds: Vec<usize>,
    pub k: usize,
    pub holdout: Option<String>,
}

impl TrainingSet {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn circuits(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.rows.iter().map(|r| r.circuit.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        names
    }
}

/// Drops the holdout circuit, if any, and deals the remaining rows into `k`
/// folds:
/// rows are grouped by circuit (sorted by name), shuffled within each circuit
/// by `seed`, and dealt round-robin.
pub fn assemble_training_set(
    rows: &[TrainingRow],
    holdout: Option<&str>,
    k: usize,
    seed: u64,
) -> Result<TrainingSet, DatagenError> {
    if k < 2 {
        return Err(DatagenError::TooFew("2 folds"));
    }
    let mut by_circuit: BTreeMap<&str, Vec<&TrainingRow>> = BTreeMap::new();
    for r in rows {
        by_circuit.entry(r.circuit.as_str()).or_default().push(r);
    }
    if let Some(holdout) = holdout {
        if by_circuit.len() < 2 {
            return Err(DatagenError::TooFew("2 circuits"));
        }
        if by_circuit.remove(holdout).is_none() {
            return Err(DatagenError::HoldoutNotFound(holdout.to_string()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::new();
    for (_, mut group) in by_circuit {
        group.shuffle(&mut rng);
        kept.extend(group.into_iter().cloned());
    }
    if k > kept.len() {
        return Err(DatagenError::TooManyFolds {
            k,
            rows: kept.len(),
        });
    }
    let folds = (0..kept.len()).map(|i| i % k).collect();
    Ok(TrainingSet {
        rows: kept,
        folds,
        k,
        holdout: holdout.map(str::to_string),
    })
}

/// Class of the lower-level model that won on a circuit.
pub const CLASS_NEURAL: u8 = 0;
pub const CLASS_SVR: u8 = 1;

/// Circuit-level meta labels from the work (backtraces + backtracks) of the
/// neural and SVR heuristics. Ties go to the neural model.
pub fn generate_meta_labels(
    work: &BTreeMap<String, (Option<u64>, Option<u64>)>,
) -> Result<BTreeMap<String, u8>, DatagenError> {
    work.iter()
        .map(|(name, pair)| match pair {
            (Some(nn), Some(svr)) => Ok((
                name.clone(),
                if svr < nn { CLASS_SVR } else { CLASS_NEURAL },
            )),
            _ => Err(DatagenError::MissingResult(name.clone())),
        })
        .collect()
}

/// Net-level meta labels: the model under which the net took part in fewer
/// reversed decisions. Ties go to the neural model.
pub fn net_meta_labels(neural: &[u64], svr: &[u64]) -> Vec<u8> {
    neural
        .iter()
        .zip(svr)
        .map(|(a, b)| if b < a { CLASS_SVR } else { CLASS_NEURAL })
        .collect()
}

pub fn meta_labels_csv(labels: &BTreeMap<String, u8>) -> String {
    let mut out = String::from("circuit,class\n");
    for (name, class) in labels {
        out.push_str(&format!("{name},{class}\n"));
    }
    out
}

pub fn read_meta_labels_csv(text: &str) -> Result<BTreeMap<String, u8>, DatagenError> {
    let mut labels = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "circuit,class" {
            continue;
        }
        let (name, class) = line.split_once(',').ok_or_else(|| DatagenError::Format {
            line: idx + 1,
            message: "expected circuit,class".into(),
        })?;
        let class = match class.trim() {
            "0" => CLASS_NEURAL,
            "1" => CLASS_SVR,
            other => {
                return Err(DatagenError::Format {
                    line: idx + 1,
                    message: format!("bad class `{other}`"),
                })
            }
        };
        labels.insert(name.trim().to_string(), class);
    }
    Ok(labels)
}
