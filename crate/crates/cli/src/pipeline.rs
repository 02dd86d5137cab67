// SPDX-License-Identifier: Apache-2.0

//! Library-level pipeline steps shared by the commands and the acceptance
//! suite: prepare a circuit, label it, train models, run campaigns.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use atpg_core::datagen::{generate_labels, generate_meta_labels, label_rows, TrainingRow};
use atpg_core::faults::{annotate, enumerate_faults, select_faults};
use atpg_core::netlist::parse_bench_named;
use atpg_core::podem::{cop_baseline_heuristic, run_campaign, CampaignReport, PodemConfig};
use atpg_core::testability::build_features;
use atpg_core::{BacktraceHeuristic, Circuit, Fault, FaultSpec, FeatureVector, Testability};
use atpg_learn::cv::{base_matrix, extended_matrix, targets};
use atpg_learn::forest::ForestFit;
use atpg_learn::io::Bundle;
use atpg_learn::seed::stream_seed;
use atpg_learn::{
    hybmt_heuristic, regressor_heuristic, ForestConfig, HybNN, HybNNConfig, RandomForest,
    Regressor, Routing, Svr, SvrConfig,
};

/// A parsed circuit with everything derived from its structure.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub circuit: Circuit,
    pub testability: Testability,
    pub features: Vec<FeatureVector>,
    /// Every stuck-at fault, with detection probabilities.
    pub faults: Vec<Fault>,
}

impl Prepared {
    pub fn new(circuit: Circuit) -> Result<Self> {
        let testability = Testability::analyze(&circuit)?;
        let features = build_features(&circuit, &testability)?;
        let mut faults = enumerate_faults(&circuit);
        annotate(&mut faults, &testability);
        Ok(Prepared {
            circuit,
            testability,
            features,
            faults,
        })
    }

    pub fn name(&self) -> &str {
        self.circuit.name()
    }

    pub fn select(&self, spec: &FaultSpec) -> Result<Vec<Fault>> {
        Ok(select_faults(&self.faults, spec)?)
    }
}

/// Parses a BENCH file; the circuit takes the file stem as its name.
pub fn load_circuit(path: &Path) -> Result<Circuit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "circuit".into());
    parse_bench_named(&text, &name).with_context(|| format!("{}", path.display()))
}

/// Labeled rows from a COP-guided campaign over the hardest faults.
pub fn training_rows(
    p: &Prepared,
    k_hard: usize,
    limit: u64,
    jobs: usize,
) -> Result<Vec<TrainingRow>> {
    let (labels, _) = generate_labels(&p.circuit, &p.testability, k_hard, limit, jobs)?;
    Ok(label_rows(&p.circuit, &p.features, &labels))
}

pub fn campaign(
    p: &Prepared,
    faults: &[Fault],
    heuristic: &dyn BacktraceHeuristic,
    limit: u64,
    jobs: usize,
) -> Result<CampaignReport> {
    Ok(run_campaign(
        &p.circuit,
        faults,
        heuristic,
        &PodemConfig::with_limit(limit),
        jobs,
    )?)
}

#[derive(Clone, Debug, Default)]
pub struct TrainConfig {
    pub hybnn: HybNNConfig,
    pub svr: SvrConfig,
    pub forest: ForestConfig,
}

pub fn train_hybnn(rows: &[TrainingRow], cfg: &HybNNConfig, seed: u64) -> Result<HybNN> {
    let (m, report) = HybNN::train(
        &base_matrix(rows),
        &targets(rows),
        cfg,
        stream_seed(seed, "hybnn"),
    )?;
    log::info!(
        "hybnn: {} epochs, best {}",
        report.epochs.len(),
        report.best_epoch
    );
    Ok(m)
}

pub fn train_svr(rows: &[TrainingRow], cfg: &SvrConfig, seed: u64) -> Result<Svr> {
    let (m, fit) = Svr::train(
        &base_matrix(rows),
        &targets(rows),
        cfg,
        stream_seed(seed, "svr"),
    )?;
    log::info!(
        "svr: {} iterations, gap {:e}, {} support vectors",
        fit.iterations,
        fit.kkt_gap,
        m.support().len()
    );
    Ok(m)
}

/// Work of each regressor on each circuit's hardest faults, turned into
/// circuit-level classes.
pub fn meta_labels(
    circuits: &[&Prepared],
    hybnn: &HybNN,
    svr: &Svr,
    k_hard: usize,
    limit: u64,
    jobs: usize,
) -> Result<BTreeMap<String, u8>> {
    let mut work = BTreeMap::new();
    for p in circuits {
        let hard = p.select(&FaultSpec::Hard(k_hard))?;
        let n = p.circuit.num_nets();
        let nn = regressor_heuristic(hybnn, &p.features, n)?;
        let sv = regressor_heuristic(svr, &p.features, n)?;
        let a = campaign(p, &hard, &nn, limit, jobs)?.summary().work();
        let b = campaign(p, &hard, &sv, limit, jobs)?.summary().work();
        log::info!("{}: hybnn work {a}, svr work {b}", p.name());
        work.insert(p.name().to_string(), (Some(a), Some(b)));
    }
    Ok(generate_meta_labels(&work)?)
}

/// Extended features of every row whose circuit has a class.
pub fn meta_data(
    rows: &[TrainingRow],
    labels: &BTreeMap<String, u8>,
) -> Result<(Vec<Vec<f64>>, Vec<u8>)> {
    let mut y = Vec::with_capacity(rows.len());
    for r in rows {
        match labels.get(&r.circuit) {
            Some(&c) => y.push(c),
            None => bail!("no meta label for circuit `{}`", r.circuit),
        }
    }
    Ok((extended_matrix(rows), y))
}

pub fn train_meta(
    rows: &[TrainingRow],
    labels: &BTreeMap<String, u8>,
    cfg: &ForestConfig,
    seed: u64,
) -> Result<(RandomForest, ForestFit)> {
    let (x, y) = meta_data(rows, labels)?;
    Ok(RandomForest::train(&x, &y, cfg, stream_seed(seed, "meta"))?)
}

/// Both regressors on `rows`, meta labels from their work on `circuits`,
/// then the meta-classifier.
pub fn train_bundle(
    rows: &[TrainingRow],
    circuits: &[&Prepared],
    cfg: &TrainConfig,
    k_hard: usize,
    limit: u64,
    jobs: usize,
    seed: u64,
) -> Result<(Bundle, BTreeMap<String, u8>)> {
    let hybnn = train_hybnn(rows, &cfg.hybnn, seed)?;
    let svr = train_svr(rows, &cfg.svr, seed)?;
    let labels = meta_labels(circuits, &hybnn, &svr, k_hard, limit, jobs)?;
    let (meta, _) = train_meta(rows, &labels, &cfg.forest, seed)?;
    Ok((Bundle { meta, hybnn, svr }, labels))
}

/// `cop`, `model:PATH` or `meta:PATH`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HeuristicSpec {
    Cop,
    Model(PathBuf),
    Meta(PathBuf),
}

impl FromStr for HeuristicSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "cop" => Ok(HeuristicSpec::Cop),
            Some(("model", p)) if !p.is_empty() => Ok(HeuristicSpec::Model(p.into())),
            Some(("meta", p)) if !p.is_empty() => Ok(HeuristicSpec::Meta(p.into())),
            _ => Err(format!("expected cop, model:PATH or meta:PATH, got `{s}`")),
        }
    }
}

/// A trained model ready to score circuits.
pub enum Guidance {
    Cop,
    Regressor(Box<dyn Regressor>),
    Meta(Bundle),
}

impl Guidance {
    pub fn load(spec: &HeuristicSpec) -> Result<Self> {
        Ok(match spec {
            HeuristicSpec::Cop => Guidance::Cop,
            HeuristicSpec::Model(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let kind = text.lines().nth(1).unwrap_or_default().trim();
                let model: Box<dyn Regressor> = match kind {
                    "kind hybnn" => Box::new(HybNN::from_text(&text)?),
                    "kind svr" => Box::new(Svr::from_text(&text)?),
                    other => bail!("{}: not a regressor model ({other})", path.display()),
                };
                Guidance::Regressor(model)
            }
            HeuristicSpec::Meta(path) => Guidance::Meta(
                Bundle::load(path).with_context(|| format!("loading bundle {}", path.display()))?,
            ),
        })
    }

    /// The heuristic for one circuit, with per-net routing for meta guidance.
    pub fn heuristic(
        &self,
        p: &Prepared,
    ) -> Result<(Box<dyn BacktraceHeuristic>, Option<Routing>)> {
        let n = p.circuit.num_nets();
        Ok(match self {
            Guidance::Cop => (Box::new(cop_baseline_heuristic(&p.testability.cc)), None),
            Guidance::Regressor(m) => (
                Box::new(regressor_heuristic(m.as_ref(), &p.features, n)?),
                None,
            ),
            Guidance::Meta(b) => {
                let r = hybmt_heuristic(&b.meta, &b.hybnn, &b.svr, &p.features, n)?;
                (
                    Box::new(r.scores.clone()) as Box<dyn BacktraceHeuristic>,
                    Some(r),
                )
            }
        })
    }
}

/// `net,class,score` for every net.
pub fn routing_csv(circuit: &Circuit, r: &Routing) -> String {
    let mut out = String::from("net,class,score\n");
    for (net, (c, s)) in circuit
        .nets()
        .iter()
        .zip(r.classes.iter().zip(r.scores.scores()))
    {
        out.push_str(&format!("{},{c},{s}\n", net.name));
    }
    out
}
