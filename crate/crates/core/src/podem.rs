// SPDX-License-Identifier: Apache-2.0

//! PODEM test generation with pluggable backtrace guidance.
//!
//! The engine only ever assigns circuit inputs. Each iteration picks an
//! objective, backtraces it to an unassigned input, implies the assignment
//! and checks for success or conflict. Conflicts flip the most recent
//! unflipped decision; exhausting the decision stack proves the fault
//! untestable.
//!
//! Work is measured in backtraces (one per objective-to-input walk) and
//! backtracks (one per flipped decision).

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::faults::{Fault, FaultStatus};
use crate::logic::{detects, LogicError, LogicValue, TestVector, ValueState};
use crate::netlist::{Circuit, GateType, NetId, NetSource};

/// Backtracks allowed per fault before giving up.
pub const DEFAULT_BACKTRACK_LIMIT: u64 = 10_000;

/// Guidance for choosing among X-valued gate inputs during backtrace.
/// Higher scores are preferred; only the order of scores matters.
pub trait BacktraceHeuristic: Sync {
    /// Score for driving `net` to `required`.
    fn score(&self, net: NetId, required: bool) -> f64;
}

impl<H: BacktraceHeuristic + ?Sized> BacktraceHeuristic for &H {
    fn score(&self, net: NetId, required: bool) -> f64 {
        (**self).score(net, required)
    }
}

/// Easiest-to-control guidance from COP controllability: `cc` when the input
/// must be 1, `1 - cc` when it must be 0.
#[derive(Clone, Debug)]
pub struct CopHeuristic {
    cc: Vec<f64>,
}

impl CopHeuristic {
    pub fn new(cc: Vec<f64>) -> Self {
        CopHeuristic { cc }
    }
}

/// The baseline heuristic for a circuit, from its COP controllabilities.
pub fn cop_baseline_heuristic(cc: &[f64]) -> CopHeuristic {
    CopHeuristic::new(cc.to_vec())
}

impl BacktraceHeuristic for CopHeuristic {
    fn score(&self, net: NetId, required: bool) -> f64 {
        let cc = self.cc[net.index()];
        if required {
            cc
        } else {
            1.0 - cc
        }
    }
}

/// Precomputed per-net scores that ignore the required value, e.g. learned
/// no-backtrack probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    scores: Vec<f64>,
}

impl ScoreTable {
    pub fn new(scores: Vec<f64>) -> Self {
        ScoreTable { scores }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Applies `f` to every score.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScoreTable::new(self.scores.iter().map(|&s| f(s)).collect())
    }
}

impl BacktraceHeuristic for ScoreTable {
    fn score(&self, net: NetId, _required: bool) -> f64 {
        self.scores[net.index()]
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PodemError {
    #[error("backtrace objective net `{0}` is already assigned")]
    ObjectiveAssigned(String),
    #[error("backtrace reached gate output `{0}` with no X input")]
    NoXInput(String),
    #[error("gate driving `{net}` has type {kind}, which ATPG cannot handle")]
    UnsupportedGate { net: String, kind: GateType },
    #[error("generated vector does not detect {net} s-a-{stuck_at}")]
    UnsoundVector { net: String, stuck_at: u8 },
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct PodemConfig {
    pub backtrack_limit: u64,
    /// Keep the nets of every backtrace walk (for label generation).
    pub record_walks: bool,
}

impl Default for PodemConfig {
    fn default() -> Self {
        PodemConfig {
            backtrack_limit: DEFAULT_BACKTRACK_LIMIT,
            record_walks: false,
        }
    }
}

impl PodemConfig {
    pub fn with_limit(backtrack_limit: u64) -> Self {
        PodemConfig {
            backtrack_limit,
            ..Default::default()
        }
    }
}

/// One backtrace walk and the fate of the decision it produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Walk {
    /// Nets visited from the objective down to the chosen input, inclusive.
    pub nets: Vec<NetId>,
    pub input: NetId,
    pub value: bool,
    /// The decision was later flipped by a backtrack.
    pub reversed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Detected; unassigned inputs are left as don't-cares.
    Detected(TestVector),
    Untestable,
    Aborted,
}

impl Outcome {
    pub fn status(&self) -> FaultStatus {
        match self {
            Outcome::Detected(_) => FaultStatus::Detected,
            Outcome::Untestable => FaultStatus::Untestable,
            Outcome::Aborted => FaultStatus::Aborted,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AtpgResult {
    pub fault: Fault,
    pub outcome: Outcome,
    pub backtraces: u64,
    pub backtracks: u64,
    pub decisions: u64,
    pub elapsed: Duration,
    /// Empty unless `PodemConfig::record_walks` is set.
    pub walks: Vec<Walk>,
}

impl AtpgResult {
    /// Backtraces plus backtracks.
    pub fn work(&self) -> u64 {
        self.backtraces + self.backtracks
    }

    /// True if everything except the elapsed time matches.
    pub fn same_search(&self, other: &AtpgResult) -> bool {
        self.fault == other.fault
            && self.outcome == other.outcome
            && self.backtraces == other.backtraces
            && self.backtracks == other.backtracks
            && self.decisions == other.decisions
            && self.walks == other.walks
    }
}

/// Walks `objective` back to an unassigned input, choosing among X inputs
/// by maximum score (ties to the lowest net id). Visited nets are appended
/// to `path` when given.
pub fn backtrace(
    circuit: &Circuit,
    state: &ValueState,
    objective: (NetId, bool),
    heuristic: &dyn BacktraceHeuristic,
    mut path: Option<&mut Vec<NetId>>,
) -> Result<(NetId, bool), PodemError> {
    let (mut net, mut value) = objective;
    if state.value(net) != LogicValue::X {
        return Err(PodemError::ObjectiveAssigned(circuit.net(net).name.clone()));
    }
    loop {
        if let Some(p) = path.as_deref_mut() {
            p.push(net);
        }
        let gate = match circuit.net(net).source {
            NetSource::Gate(g) => circuit.gate(g),
            _ => return Ok((net, value)),
        };
        let required = match gate.kind {
            GateType::Xor | GateType::Xnor => {
                // remaining X inputs are assumed to settle at 0
                let parity = gate
                    .inputs
                    .iter()
                    .filter_map(|i| state.value(*i).good())
                    .fold(false, |a, b| a ^ b);
                value ^ (gate.kind == GateType::Xnor) ^ parity
            }
            kind => value ^ kind.is_inverting(),
        };
        let mut best: Option<(f64, NetId)> = None;
        for &input in &gate.inputs {
            if state.value(input) != LogicValue::X {
                continue;
            }
            let s = heuristic.score(input, required);
            best = match best {
                Some((bs, bn)) if s < bs || (s == bs && bn <= input) => Some((bs, bn)),
                _ => Some((s, input)),
            };
        }
        match best {
            Some((_, chosen)) => {
                net = chosen;
                value = required;
            }
            None => return Err(PodemError::NoXInput(circuit.net(net).name.clone())),
        }
    }
}

struct Decision {
    input: NetId,
    value: bool,
    flipped: bool,
    walk: Option<usize>,
}

enum Step {
    Success,
    Conflict,
    Objective(NetId, bool),
}

fn next_step(circuit: &Circuit, state: &ValueState, fault: &Fault) -> Step {
    if state.detected(circuit) {
        return Step::Success;
    }
    let site = state.value(fault.net);
    if site == LogicValue::X {
        return Step::Objective(fault.net, !fault.stuck_at);
    }
    if !site.is_fault_effect() {
        return Step::Conflict;
    }
    match state.d_frontier().next() {
        None => Step::Conflict,
        Some(g) => {
            let gate = circuit.gate(g);
            let target = gate
                .inputs
                .iter()
                .copied()
                .filter(|&i| state.value(i) == LogicValue::X)
                .min()
                .expect("D-frontier gate has an X input");
            let value = gate.kind.controlling_value() == Some(false);
            Step::Objective(target, value)
        }
    }
}

fn check_supported(circuit: &Circuit) -> Result<(), PodemError> {
    match circuit.find_bad_gate() {
        Some(g) => Err(PodemError::UnsupportedGate {
            net: circuit.net(g.output).name.clone(),
            kind: g.kind,
        }),
        None => Ok(()),
    }
}

/// Runs PODEM for one fault.
pub fn generate_test(
    circuit: &Circuit,
    fault: &Fault,
    heuristic: &dyn BacktraceHeuristic,
    config: &PodemConfig,
) -> Result<AtpgResult, PodemError> {
    check_supported(circuit)?;
    let start = Instant::now();
    let mut state = ValueState::new(circuit, Some(fault.site()));
    let mut stack: Vec<Decision> = Vec::new();
    let mut walks: Vec<Walk> = Vec::new();
    let mut path = Vec::new();
    let (mut backtraces, mut backtracks, mut decisions) = (0u64, 0u64, 0u64);

    let outcome = loop {
        match next_step(circuit, &state, fault) {
            Step::Success => {
                let mut v = TestVector::unassigned(circuit.inputs().len());
                for (slot, &i) in circuit.inputs().iter().enumerate() {
                    v.0[slot] = state.value(i).good();
                }
                if !detects(circuit, fault.site(), &v.filled(false))? {
                    return Err(PodemError::UnsoundVector {
                        net: circuit.net(fault.net).name.clone(),
                        stuck_at: fault.stuck_at as u8,
                    });
                }
                break Outcome::Detected(v);
            }
            Step::Objective(net, value) => {
                path.clear();
                let record = config.record_walks.then_some(&mut path);
                let (input, v) = backtrace(circuit, &state, (net, value), heuristic, record)?;
                backtraces += 1;
                decisions += 1;
                let walk = config.record_walks.then(|| {
                    walks.push(Walk {
                        nets: path.clone(),
                        input,
                        value: v,
                        reversed: false,
                    });
                    walks.len() - 1
                });
                stack.push(Decision {
                    input,
                    value: v,
                    flipped: false,
                    walk,
                });
                state.imply(circuit, input, LogicValue::from_bool(v))?;
            }
            Step::Conflict => {
                while stack.last().is_some_and(|d| d.flipped) {
                    let d = stack.pop().unwrap();
                    state.imply(circuit, d.input, LogicValue::X)?;
                }
                let Some(top) = stack.last_mut() else {
                    break Outcome::Untestable;
                };
                backtracks += 1;
                top.flipped = true;
                top.value = !top.value;
                if let Some(w) = top.walk {
                    walks[w].reversed = true;
                }
                if backtracks > config.backtrack_limit {
                    break Outcome::Aborted;
                }
                let (input, value) = (top.input, top.value);
                state.imply(circuit, input, LogicValue::from_bool(value))?;
            }
        }
    };

    let mut fault = *fault;
    fault.status = FaultStatus::Untried;
    fault.resolve(outcome.status());
    Ok(AtpgResult {
        fault,
        outcome,
        backtraces,
        backtracks,
        decisions,
        elapsed: start.elapsed(),
        walks,
    })
}

/// Aggregated counts for one circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct CampaignSummary {
    pub circuit: String,
    pub faults: usize,
    pub detected: usize,
    pub untestable: usize,
    pub aborted: usize,
    pub backtraces: u64,
    pub backtracks: u64,
    pub coverage: f64,
    /// No faults were targeted; coverage is reported as 100.
    pub empty: bool,
    pub elapsed_us: u128,
}

impl CampaignSummary {
    /// Backtraces plus backtracks.
    pub fn work(&self) -> u64 {
        self.backtraces + self.backtracks
    }
}

#[derive(Clone, Debug)]
pub struct CampaignReport {
    pub circuit: String,
    pub results: Vec<AtpgResult>,
    pub elapsed: Duration,
}

impl CampaignReport {
    pub fn summary(&self) -> CampaignSummary {
        let count = |s: FaultStatus| self.results.iter().filter(|r| r.fault.status == s).count();
        let detected = count(FaultStatus::Detected);
        let faults = self.results.len();
        CampaignSummary {
            circuit: self.circuit.clone(),
            faults,
            detected,
            untestable: count(FaultStatus::Untestable),
            aborted: count(FaultStatus::Aborted),
            backtraces: self.results.iter().map(|r| r.backtraces).sum(),
            backtracks: self.results.iter().map(|r| r.backtracks).sum(),
            coverage: if faults == 0 {
                100.0
            } else {
                100.0 * detected as f64 / faults as f64
            },
            empty: faults == 0,
            elapsed_us: self.elapsed.as_micros(),
        }
    }

    /// Detected test vectors in fault order.
    pub fn vectors(&self) -> Vec<TestVector> {
        self.results
            .iter()
            .filter_map(|r| match &r.outcome {
                Outcome::Detected(v) => Some(v.clone()),
                _ => None,
            })
            .collect()
    }

    /// Per-fault rows followed by a `# key=value` summary block.
    pub fn to_csv(&self, circuit: &Circuit) -> String {
        let mut out = String::from("fault_net,stuck_at,outcome,backtraces,backtracks,elapsed_us\n");
        for r in &self.results {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                circuit.net(r.fault.net).name,
                r.fault.stuck_at as u8,
                r.fault.status,
                r.backtraces,
                r.backtracks,
                r.elapsed.as_micros()
            ));
        }
        let s = self.summary();
        out.push_str(&format!("# circuit={}\n", s.circuit));
        out.push_str(&format!("# faults={}\n", s.faults));
        out.push_str(&format!("# detected={}\n", s.detected));
        out.push_str(&format!("# untestable={}\n", s.untestable));
        out.push_str(&format!("# aborted={}\n", s.aborted));
        out.push_str(&format!("# backtraces={}\n", s.backtraces));
        out.push_str(&format!("# backtracks={}\n", s.backtracks));
        out.push_str(&format!("# work={}\n", s.work()));
        out.push_str(&format!("# coverage={:.4}\n", s.coverage));
        out.push_str(&format!("# empty={}\n", s.empty));
        out.push_str(&format!("# elapsed_us={}\n", s.elapsed_us));
        out
    }
}

/// Reads the summary block of a campaign CSV.
pub fn parse_campaign_summary(text: &str) -> Option<CampaignSummary> {
    let kv: BTreeMap<&str, &str> = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once('='))
        .collect();
    let num = |k: &str| kv.get(k).and_then(|v| v.parse::<u64>().ok());
    Some(CampaignSummary {
        circuit: kv.get("circuit")?.to_string(),
        faults: num("faults")? as usize,
        detected: num("detected")? as usize,
        untestable: num("untestable")? as usize,
        aborted: num("aborted")? as usize,
        backtraces: num("backtraces")?,
        backtracks: num("backtracks")?,
        coverage: kv.get("coverage")?.parse().ok()?,
        empty: kv.get("empty")?.parse().ok()?,
        elapsed_us: num("elapsed_us")? as u128,
    })
}

/// Runs PODEM over a fault list. With `jobs > 1` faults are spread over a
/// thread pool; results always come back in fault-list order.
pub fn run_campaign(
    circuit: &Circuit,
    faults: &[Fault],
    heuristic: &dyn BacktraceHeuristic,
    config: &PodemConfig,
    jobs: usize,
) -> Result<CampaignReport, PodemError> {
    check_supported(circuit)?;
    let start = Instant::now();
    let results: Result<Vec<AtpgResult>, PodemError> = if jobs <= 1 {
        faults
            .iter()
            .map(|f| generate_test(circuit, f, heuristic, config))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| {
            faults
                .par_iter()
                .map(|f| generate_test(circuit, f, heuristic, config))
                .collect()
        })
    };
    Ok(CampaignReport {
        circuit: circuit.name().to_string(),
        results: results?,
        elapsed: start.elapsed(),
    })
}
