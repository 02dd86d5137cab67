// SPDX-License-Identifier: Apache-2.0

//! Five-valued D-calculus, event-driven implication and serial fault
//! simulation.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;

use thiserror::Error;

use crate::netlist::{Circuit, GateId, GateType, NetId};

/// Composite good/faulty value. `D` is good 1 / faulty 0, `DBar` the
/// opposite.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum LogicValue {
    Zero,
    One,
    X,
    D,
    DBar,
}

impl LogicValue {
    pub const ALL: [LogicValue; 5] = [
        LogicValue::Zero,
        LogicValue::One,
        LogicValue::X,
        LogicValue::D,
        LogicValue::DBar,
    ];

    pub fn from_bool(b: bool) -> Self {
        if b {
            LogicValue::One
        } else {
            LogicValue::Zero
        }
    }

    /// Re-encodes a (good, faulty) pair; any unknown component gives `X`.
    pub fn from_pair(good: Option<bool>, faulty: Option<bool>) -> Self {
        match (good, faulty) {
            (Some(true), Some(true)) => LogicValue::One,
            (Some(false), Some(false)) => LogicValue::Zero,
            (Some(true), Some(false)) => LogicValue::D,
            (Some(false), Some(true)) => LogicValue::DBar,
            _ => LogicValue::X,
        }
    }

    pub fn good(self) -> Option<bool> {
        match self {
            LogicValue::One | LogicValue::D => Some(true),
            LogicValue::Zero | LogicValue::DBar => Some(false),
            LogicValue::X => None,
        }
    }

    pub fn faulty(self) -> Option<bool> {
        match self {
            LogicValue::One | LogicValue::DBar => Some(true),
            LogicValue::Zero | LogicValue::D => Some(false),
            LogicValue::X => None,
        }
    }

    pub fn is_fault_effect(self) -> bool {
        matches!(self, LogicValue::D | LogicValue::DBar)
    }

    pub fn is_binary(self) -> bool {
        matches!(self, LogicValue::Zero | LogicValue::One)
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            LogicValue::Zero => Some(false),
            LogicValue::One => Some(true),
            _ => None,
        }
    }

    pub fn invert(self) -> Self {
        match self {
            LogicValue::Zero => LogicValue::One,
            LogicValue::One => LogicValue::Zero,
            LogicValue::X => LogicValue::X,
            LogicValue::D => LogicValue::DBar,
            LogicValue::DBar => LogicValue::D,
        }
    }
}

impl fmt::Display for LogicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogicValue::Zero => "0",
            LogicValue::One => "1",
            LogicValue::X => "X",
            LogicValue::D => "D",
            LogicValue::DBar => "D'",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LogicError {
    #[error("gate type {0} has no combinational semantics")]
    UnsupportedGate(GateType),
    #[error("gate evaluated with no inputs")]
    NoInputs,
    #[error("vector {vector} leaves input `{net}` unassigned")]
    UnassignedInput { vector: usize, net: String },
    #[error("vector {vector} has {found} values, circuit has {expected} inputs")]
    VectorWidth {
        vector: usize,
        expected: usize,
        found: usize,
    },
    #[error("malformed vector file, line {line}: {message}")]
    VectorFormat { line: usize, message: String },
}

fn eval_component(
    kind: GateType,
    inputs: impl Iterator<Item = Option<bool>>,
) -> Result<Option<bool>, LogicError> {
    let base = match kind {
        GateType::And | GateType::Nand => {
            let mut unknown = false;
            let mut zero = false;
            for v in inputs {
                match v {
                    Some(false) => zero = true,
                    None => unknown = true,
                    _ => {}
                }
            }
            if zero {
                Some(false)
            } else if unknown {
                None
            } else {
                Some(true)
            }
        }
        GateType::Or | GateType::Nor => {
            let mut unknown = false;
            let mut one = false;
            for v in inputs {
                match v {
                    Some(true) => one = true,
                    None => unknown = true,
                    _ => {}
                }
            }
            if one {
                Some(true)
            } else if unknown {
                None
            } else {
                Some(false)
            }
        }
        GateType::Xor | GateType::Xnor => {
            let mut acc = Some(false);
            for v in inputs {
                acc = match (acc, v) {
                    (Some(a), Some(b)) => Some(a ^ b),
                    _ => None,
                };
            }
            acc
        }
        GateType::Not | GateType::Buf | GateType::Po | GateType::Ppo => {
            inputs.into_iter().next().flatten()
        }
        other => return Err(LogicError::UnsupportedGate(other)),
    };
    Ok(if kind.is_inverting() {
        base.map(|b| !b)
    } else {
        base
    })
}

/// Five-valued gate evaluation: good and faulty components are evaluated
/// independently through the Boolean function and re-encoded.
pub fn eval_gate(kind: GateType, inputs: &[LogicValue]) -> Result<LogicValue, LogicError> {
    if inputs.is_empty() {
        return Err(LogicError::NoInputs);
    }
    let good = eval_component(kind, inputs.iter().map(|v| v.good()))?;
    let faulty = eval_component(kind, inputs.iter().map(|v| v.faulty()))?;
    Ok(LogicValue::from_pair(good, faulty))
}

/// Two-valued evaluation; used by the Boolean simulators.
pub fn eval_bool(kind: GateType, inputs: &[bool]) -> Result<bool, LogicError> {
    if inputs.is_empty() {
        return Err(LogicError::NoInputs);
    }
    eval_component(kind, inputs.iter().map(|&b| Some(b)))
        .map(|v| v.expect("binary inputs give a binary output"))
}

/// A single stuck-at fault location.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaultSite {
    pub net: NetId,
    pub stuck_at: bool,
}

impl FaultSite {
    pub fn new(net: NetId, stuck_at: bool) -> Self {
        FaultSite { net, stuck_at }
    }

    /// Applies the fault to the value computed at its net.
    #[inline]
    pub fn apply(self, computed: LogicValue) -> LogicValue {
        LogicValue::from_pair(computed.good(), Some(self.stuck_at))
    }
}

/// Input assignment over `Circuit::inputs()` order; `None` is unassigned.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TestVector(pub Vec<Option<bool>>);

impl TestVector {
    pub fn unassigned(width: usize) -> Self {
        TestVector(vec![None; width])
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        TestVector(bits.iter().map(|&b| Some(b)).collect())
    }

    /// Replaces don't-cares with `fill`.
    pub fn filled(&self, fill: bool) -> Vec<bool> {
        self.0.iter().map(|v| v.unwrap_or(fill)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-net five-valued state for one fault, updated incrementally.
#[derive(Clone, Debug)]
pub struct ValueState {
    values: Vec<LogicValue>,
    fault: Option<FaultSite>,
    frontier: BTreeSet<(u32, GateId)>,
    in_frontier: Vec<bool>,
    queue: BinaryHeap<Reverse<(u32, GateId)>>,
    queued: Vec<bool>,
    scratch: Vec<LogicValue>,
}

impl ValueState {
    /// All nets X; the fault (if any) is applied on every update of its net.
    pub fn new(circuit: &Circuit, fault: Option<FaultSite>) -> Self {
        ValueState {
            values: vec![LogicValue::X; circuit.num_nets()],
            fault,
            frontier: BTreeSet::new(),
            in_frontier: vec![false; circuit.num_gates()],
            queue: BinaryHeap::new(),
            queued: vec![false; circuit.num_gates()],
            scratch: Vec::new(),
        }
    }

    pub fn fault(&self) -> Option<FaultSite> {
        self.fault
    }

    #[inline]
    pub fn value(&self, net: NetId) -> LogicValue {
        self.values[net.index()]
    }

    pub fn values(&self) -> &[LogicValue] {
        &self.values
    }

    /// D-frontier gates ordered by (output level, gate id).
    pub fn d_frontier(&self) -> impl Iterator<Item = GateId> + '_ {
        self.frontier.iter().map(|&(_, g)| g)
    }

    pub fn d_frontier_is_empty(&self) -> bool {
        self.frontier.is_empty()
    }

    /// True if a fault effect reached any output.
    pub fn detected(&self, circuit: &Circuit) -> bool {
        circuit
            .outputs()
            .iter()
            .any(|o| self.values[o.index()].is_fault_effect())
    }

    fn on_site(&self, net: NetId, v: LogicValue) -> LogicValue {
        match self.fault {
            Some(f) if f.net == net => f.apply(v),
            _ => v,
        }
    }

    fn schedule_fanout(&mut self, circuit: &Circuit, net: NetId) {
        for pin in &circuit.net(net).fanout {
            let g = pin.gate;
            if !self.queued[g.index()] {
                self.queued[g.index()] = true;
                let level = circuit.net(circuit.gate(g).output).level;
                self.queue.push(Reverse((level, g)));
            }
        }
    }

    /// Assigns an input net (`0`, `1` or `X` to unassign) and propagates to
    /// a fixpoint.
    pub fn imply(
        &mut self,
        circuit: &Circuit,
        net: NetId,
        value: LogicValue,
    ) -> Result<(), LogicError> {
        debug_assert!(circuit.net(net).is_input());
        debug_assert!(!value.is_fault_effect());
        let v = self.on_site(net, value);
        if self.values[net.index()] != v {
            self.values[net.index()] = v;
            self.schedule_fanout(circuit, net);
        }
        self.propagate(circuit)
    }

    fn propagate(&mut self, circuit: &Circuit) -> Result<(), LogicError> {
        while let Some(Reverse((level, g))) = self.queue.pop() {
            self.queued[g.index()] = false;
            let gate = circuit.gate(g);
            self.scratch.clear();
            self.scratch
                .extend(gate.inputs.iter().map(|i| self.values[i.index()]));
            let computed = eval_gate(gate.kind, &self.scratch)?;
            let out = self.on_site(gate.output, computed);
            if out != self.values[gate.output.index()] {
                self.values[gate.output.index()] = out;
                self.schedule_fanout(circuit, gate.output);
            }
            let member = out == LogicValue::X && self.scratch.iter().any(|v| v.is_fault_effect());
            if member != self.in_frontier[g.index()] {
                self.in_frontier[g.index()] = member;
                if member {
                    self.frontier.insert((level, g));
                } else {
                    self.frontier.remove(&(level, g));
                }
            }
        }
        Ok(())
    }
}

/// Non-incremental five-valued evaluation of every net, in topological
/// order. `inputs` follows `Circuit::inputs()`.
pub fn evaluate_full(
    circuit: &Circuit,
    fault: Option<FaultSite>,
    inputs: &[LogicValue],
) -> Result<Vec<LogicValue>, LogicError> {
    let site = |net: NetId, v: LogicValue| match fault {
        Some(f) if f.net == net => f.apply(v),
        _ => v,
    };
    let mut values = vec![LogicValue::X; circuit.num_nets()];
    for (&net, &v) in circuit.inputs().iter().zip(inputs) {
        values[net.index()] = site(net, v);
    }
    let mut buf = Vec::new();
    for &g in circuit.topo_order() {
        let gate = circuit.gate(g);
        buf.clear();
        buf.extend(gate.inputs.iter().map(|i| values[i.index()]));
        values[gate.output.index()] = site(gate.output, eval_gate(gate.kind, &buf)?);
    }
    Ok(values)
}

/// D-frontier recomputed from its definition over a value array.
pub fn d_frontier_of(circuit: &Circuit, values: &[LogicValue]) -> Vec<GateId> {
    let mut gates: Vec<(u32, GateId)> = circuit
        .gates()
        .iter()
        .filter(|g| {
            values[g.output.index()] == LogicValue::X
                && g.inputs.iter().any(|i| values[i.index()].is_fault_effect())
        })
        .map(|g| (circuit.net(g.output).level, g.id))
        .collect();
    gates.sort_unstable();
    gates.into_iter().map(|(_, g)| g).collect()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DetectionStatus {
    /// Detected by the vector at this index.
    Detected(usize),
    Undetected,
}

#[derive(Clone, Debug)]
pub struct CoverageReport {
    pub entries: Vec<(FaultSite, DetectionStatus)>,
}

impl CoverageReport {
    pub fn detected(&self) -> usize {
        self.entries
            .iter()
            .filter(|(_, s)| matches!(s, DetectionStatus::Detected(_)))
            .count()
    }

    /// `100 * detected / total`; an empty fault list is fully covered.
    pub fn coverage_percent(&self) -> f64 {
        if self.entries.is_empty() {
            100.0
        } else {
            100.0 * self.detected() as f64 / self.entries.len() as f64
        }
    }

    pub fn to_csv(&self, circuit: &Circuit) -> String {
        let mut out = String::from("fault_net,stuck_at,status\n");
        for (site, status) in &self.entries {
            let status = match status {
                DetectionStatus::Detected(_) => "detected",
                DetectionStatus::Undetected => "undetected",
            };
            out.push_str(&format!(
                "{},{},{}\n",
                circuit.net(site.net).name,
                site.stuck_at as u8,
                status
            ));
        }
        out.push_str(&format!(
            "# detected={} total={} coverage={:.4}\n",
            self.detected(),
            self.entries.len(),
            self.coverage_percent()
        ));
        out
    }
}

/// True if the fully specified vector produces a fault effect at an output.
pub fn detects(circuit: &Circuit, fault: FaultSite, vector: &[bool]) -> Result<bool, LogicError> {
    let inputs: Vec<LogicValue> = vector.iter().map(|&b| LogicValue::from_bool(b)).collect();
    let values = evaluate_full(circuit, Some(fault), &inputs)?;
    Ok(circuit
        .outputs()
        .iter()
        .any(|o| values[o.index()].is_fault_effect()))
}

/// Serial fault simulation: each fault is tried against vectors in order
/// until one detects it.
pub fn fault_simulate(
    circuit: &Circuit,
    vectors: &[TestVector],
    faults: &[FaultSite],
) -> Result<CoverageReport, LogicError> {
    let width = circuit.inputs().len();
    let mut full = Vec::with_capacity(vectors.len());
    for (k, v) in vectors.iter().enumerate() {
        if v.len() != width {
            return Err(LogicError::VectorWidth {
                vector: k,
                expected: width,
                found: v.len(),
            });
        }
        if let Some(pos) = v.0.iter().position(|b| b.is_none()) {
            return Err(LogicError::UnassignedInput {
                vector: k,
                net: circuit.net(circuit.inputs()[pos]).name.clone(),
            });
        }
        full.push(v.filled(false));
    }
    let mut entries = Vec::with_capacity(faults.len());
    for &f in faults {
        let mut status = DetectionStatus::Undetected;
        for (k, v) in full.iter().enumerate() {
            if detects(circuit, f, v)? {
                status = DetectionStatus::Detected(k);
                break;
            }
        }
        entries.push((f, status));
    }
    Ok(CoverageReport { entries })
}

/// Vector CSV: `vector_id,<input names...>`; don't-cares are written as 0.
pub fn write_vectors_csv(circuit: &Circuit, vectors: &[TestVector]) -> String {
    let mut out = String::from("vector_id");
    for &i in circuit.inputs() {
        out.push(',');
        out.push_str(&circuit.net(i).name);
    }
    out.push('\n');
    for (k, v) in vectors.iter().enumerate() {
        out.push_str(&k.to_string());
        for b in v.filled(false) {
            out.push(',');
            out.push(if b { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

pub fn read_vectors_csv(circuit: &Circuit, text: &str) -> Result<Vec<TestVector>, LogicError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(LogicError::VectorFormat {
        line: 1,
        message: "missing header".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"vector_id") {
        return Err(LogicError::VectorFormat {
            line: 1,
            message: "header must start with vector_id".into(),
        });
    }
    let mut position = Vec::with_capacity(cols.len() - 1);
    for name in &cols[1..] {
        let slot = circuit
            .inputs()
            .iter()
            .position(|&i| circuit.net(i).name == *name)
            .ok_or_else(|| LogicError::VectorFormat {
                line: 1,
                message: format!("`{name}` is not an input"),
            })?;
        position.push(slot);
    }
    let mut vectors = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(LogicError::VectorFormat {
                line: idx + 1,
                message: format!("expected {} fields", cols.len()),
            });
        }
        let mut v = TestVector::unassigned(circuit.inputs().len());
        for (field, &slot) in fields[1..].iter().zip(&position) {
            v.0[slot] = match *field {
                "0" => Some(false),
                "1" => Some(true),
                other => {
                    return Err(LogicError::VectorFormat {
                        line: idx + 1,
                        message: format!("bad value `{other}`"),
                    })
                }
            };
        }
        vectors.push(v);
    }
    Ok(vectors)
}
