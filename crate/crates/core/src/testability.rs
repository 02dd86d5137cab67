// SPDX-License-Identifier: Apache-2.0

//! COP and SCOAP testability measures and per-net feature vectors.
//!
//! COP assumes independent gate inputs, so values are exact only on
//! fanout-free circuits. Fanout stems take the maximum COP observability and
//! the minimum SCOAP observability over their branches.

use thiserror::Error;

use crate::netlist::{shortest_pi_distance, Circuit, Gate, GateType, NetId};

/// SCOAP observability of a net with no path to any output.
pub const SCOAP_UNOBSERVABLE: u32 = u32::MAX;

/// Length of the lower-level feature vector.
pub const BASE_FEATURES: usize = 3 + GateType::COUNT;
/// Length of the meta-level feature vector.
pub const EXTENDED_FEATURES: usize = BASE_FEATURES + 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TestabilityError {
    #[error("gate driving `{net}` has type {kind}, which has no testability semantics")]
    UnsupportedGate { net: String, kind: GateType },
    #[error("cannot normalize an empty distance map")]
    EmptyDistances,
    #[error("testability data covers {found} nets, circuit has {expected}")]
    MissingData { expected: usize, found: usize },
}

fn check_gates(circuit: &Circuit) -> Result<(), TestabilityError> {
    match circuit.find_bad_gate() {
        Some(g) => Err(TestabilityError::UnsupportedGate {
            net: circuit.net(g.output).name.clone(),
            kind: g.kind,
        }),
        None => Ok(()),
    }
}

/// Probability that the gate output is 1, inputs independent.
fn cop_gate(kind: GateType, p: &[f64]) -> f64 {
    let all_one = || p.iter().product::<f64>();
    let all_zero = || p.iter().map(|x| 1.0 - x).product::<f64>();
    match kind {
        GateType::And => all_one(),
        GateType::Nand => 1.0 - all_one(),
        GateType::Or => 1.0 - all_zero(),
        GateType::Nor => all_zero(),
        GateType::Xor | GateType::Xnor => {
            let odd = p
                .iter()
                .fold(0.0, |acc, &x| acc * (1.0 - x) + (1.0 - acc) * x);
            if kind == GateType::Xor {
                odd
            } else {
                1.0 - odd
            }
        }
        GateType::Not => 1.0 - p[0],
        _ => p[0],
    }
}

/// COP controllability: probability each net is 1 under uniform random
/// inputs.
pub fn cop_controllability(circuit: &Circuit) -> Result<Vec<f64>, TestabilityError> {
    check_gates(circuit)?;
    let mut cc = vec![0.5; circuit.num_nets()];
    let mut buf = Vec::new();
    for &g in circuit.topo_order() {
        let gate = circuit.gate(g);
        buf.clear();
        buf.extend(gate.inputs.iter().map(|i| cc[i.index()]));
        cc[gate.output.index()] = cop_gate(gate.kind, &buf).clamp(0.0, 1.0);
    }
    Ok(cc)
}

/// Probability that a change on input `pin` reaches the gate output.
fn cop_sensitization(gate: &Gate, pin: usize, cc: &[f64]) -> f64 {
    let others = gate
        .inputs
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != pin)
        .map(|(_, n)| cc[n.index()]);
    match gate.kind {
        GateType::And | GateType::Nand => others.product(),
        GateType::Or | GateType::Nor => others.map(|x| 1.0 - x).product(),
        _ => 1.0,
    }
}

/// COP observability by a backward sweep from the outputs.
pub fn cop_observability(circuit: &Circuit, cc: &[f64]) -> Result<Vec<f64>, TestabilityError> {
    check_gates(circuit)?;
    let mut co = vec![0.0f64; circuit.num_nets()];
    for &o in circuit.outputs() {
        co[o.index()] = 1.0;
    }
    for &g in circuit.topo_order().iter().rev() {
        let gate = circuit.gate(g);
        let out = co[gate.output.index()];
        for (pin, input) in gate.inputs.iter().enumerate() {
            let branch = (out * cop_sensitization(gate, pin, cc)).clamp(0.0, 1.0);
            let stem = &mut co[input.index()];
            *stem = stem.max(branch);
        }
    }
    Ok(co)
}

/// SCOAP (CC0, CC1) pairs.
pub type ScoapPair = (u32, u32);

fn sum(it: impl Iterator<Item = u32>) -> u32 {
    it.fold(0u32, |a, b| a.saturating_add(b))
}

fn scoap_gate(kind: GateType, ins: &[ScoapPair]) -> ScoapPair {
    let min0 = || ins.iter().map(|p| p.0).min().unwrap_or(0);
    let min1 = || ins.iter().map(|p| p.1).min().unwrap_or(0);
    let sum0 = || sum(ins.iter().map(|p| p.0));
    let sum1 = || sum(ins.iter().map(|p| p.1));
    let (c0, c1) = match kind {
        GateType::And => (min0(), sum1()),
        GateType::Nand => (sum1(), min0()),
        GateType::Or => (sum0(), min1()),
        GateType::Nor => (min1(), sum0()),
        GateType::Not => (ins[0].1, ins[0].0),
        GateType::Xor | GateType::Xnor => {
            // parity DP: cheapest way to reach even / odd parity
            let (mut even, mut odd) = (0u32, u32::MAX);
            for &(z, o) in ins {
                let e = even.saturating_add(z).min(odd.saturating_add(o));
                let d = even.saturating_add(o).min(odd.saturating_add(z));
                even = e;
                odd = d;
            }
            if kind == GateType::Xor {
                (even, odd)
            } else {
                (odd, even)
            }
        }
        _ => ins[0],
    };
    (c0.saturating_add(1), c1.saturating_add(1))
}

/// SCOAP combinational controllabilities; inputs are (1, 1) and every gate
/// adds a depth of 1.
pub fn scoap_controllability(circuit: &Circuit) -> Result<Vec<ScoapPair>, TestabilityError> {
    check_gates(circuit)?;
    let mut cc = vec![(1u32, 1u32); circuit.num_nets()];
    let mut buf = Vec::new();
    for &g in circuit.topo_order() {
        let gate = circuit.gate(g);
        buf.clear();
        buf.extend(gate.inputs.iter().map(|i| cc[i.index()]));
        cc[gate.output.index()] = scoap_gate(gate.kind, &buf);
    }
    Ok(cc)
}

/// SCOAP observability: outputs are 0, unobservable nets
/// [`SCOAP_UNOBSERVABLE`].
pub fn scoap_observability(
    circuit: &Circuit,
    cc: &[ScoapPair],
) -> Result<Vec<u32>, TestabilityError> {
    check_gates(circuit)?;
    let mut co = vec![SCOAP_UNOBSERVABLE; circuit.num_nets()];
    for &o in circuit.outputs() {
        co[o.index()] = 0;
    }
    for &g in circuit.topo_order().iter().rev() {
        let gate = circuit.gate(g);
        let out = co[gate.output.index()];
        if out == SCOAP_UNOBSERVABLE {
            continue;
        }
        for (pin, input) in gate.inputs.iter().enumerate() {
            let others = gate
                .inputs
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != pin)
                .map(|(_, n)| cc[n.index()]);
            let side = match gate.kind {
                GateType::And | GateType::Nand => sum(others.map(|p| p.1)),
                GateType::Or | GateType::Nor => sum(others.map(|p| p.0)),
                GateType::Xor | GateType::Xnor => sum(others.map(|p| p.0.min(p.1))),
                _ => 0,
            };
            let branch = out.saturating_add(side).saturating_add(1);
            let stem = &mut co[input.index()];
            *stem = (*stem).min(branch);
        }
    }
    Ok(co)
}

/// Min-max normalization into [0, 1]; a constant map normalizes to 0.
pub fn normalize_distance(distances: &[u32]) -> Result<Vec<f64>, TestabilityError> {
    let min = *distances
        .iter()
        .min()
        .ok_or(TestabilityError::EmptyDistances)?;
    let max = *distances.iter().max().unwrap();
    if max == min {
        return Ok(vec![0.0; distances.len()]);
    }
    let span = (max - min) as f64;
    Ok(distances.iter().map(|&d| (d - min) as f64 / span).collect())
}

/// Per-net testability measures.
#[derive(Clone, Debug, PartialEq)]
pub struct TestabilityRecord {
    pub cc: f64,
    pub co: f64,
    pub cc0: u32,
    pub cc1: u32,
    pub scoap_co: u32,
    pub distance: u32,
    pub fanout: u32,
}

/// All measures for one circuit, indexed by net id.
#[derive(Clone, Debug)]
pub struct Testability {
    pub cc: Vec<f64>,
    pub co: Vec<f64>,
    pub scoap_cc: Vec<ScoapPair>,
    pub scoap_co: Vec<u32>,
    pub distance: Vec<u32>,
    pub distance_norm: Vec<f64>,
    pub fanout: Vec<u32>,
}

impl Testability {
    pub fn analyze(circuit: &Circuit) -> Result<Self, TestabilityError> {
        let cc = cop_controllability(circuit)?;
        let co = cop_observability(circuit, &cc)?;
        let scoap_cc = scoap_controllability(circuit)?;
        let scoap_co = scoap_observability(circuit, &scoap_cc)?;
        let distance = shortest_pi_distance(circuit);
        let distance_norm = if distance.is_empty() {
            Vec::new()
        } else {
            normalize_distance(&distance)?
        };
        let fanout = circuit
            .nets()
            .iter()
            .map(|n| n.fanout_count() as u32)
            .collect();
        Ok(Testability {
            cc,
            co,
            scoap_cc,
            scoap_co,
            distance,
            distance_norm,
            fanout,
        })
    }

    pub fn record(&self, net: NetId) -> TestabilityRecord {
        let i = net.index();
        TestabilityRecord {
            cc: self.cc[i],
            co: self.co[i],
            cc0: self.scoap_cc[i].0,
            cc1: self.scoap_cc[i].1,
            scoap_co: self.scoap_co[i],
            distance: self.distance[i],
            fanout: self.fanout[i],
        }
    }

    pub fn len(&self) -> usize {
        self.cc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cc.is_empty()
    }
}

/// Per-net feature record. `base` feeds the lower-level regressors;
/// `extended` feeds the meta-classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub base: [f64; BASE_FEATURES],
    pub extended: [f64; EXTENDED_FEATURES],
}

/// Column names of the extended vector, in order.
pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = ["cc", "co", "dist_norm"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..GateType::COUNT).map(|k| format!("g{k}")));
    names.extend(
        ["cc0", "cc1", "scoap_co", "fanout"]
            .iter()
            .map(|s| s.to_string()),
    );
    names
}

pub fn build_features(
    circuit: &Circuit,
    t: &Testability,
) -> Result<Vec<FeatureVector>, TestabilityError> {
    if t.len() != circuit.num_nets() || t.distance_norm.len() != circuit.num_nets() {
        return Err(TestabilityError::MissingData {
            expected: circuit.num_nets(),
            found: t.len().min(t.distance_norm.len()),
        });
    }
    Ok(circuit
        .net_ids()
        .map(|net| {
            let i = net.index();
            let mut base = [0.0; BASE_FEATURES];
            base[0] = t.cc[i];
            base[1] = t.co[i];
            base[2] = t.distance_norm[i];
            base[3 + circuit.net_type(net).index()] = 1.0;
            let mut extended = [0.0; EXTENDED_FEATURES];
            extended[..BASE_FEATURES].copy_from_slice(&base);
            extended[BASE_FEATURES] = t.scoap_cc[i].0 as f64;
            extended[BASE_FEATURES + 1] = t.scoap_cc[i].1 as f64;
            extended[BASE_FEATURES + 2] = t.scoap_co[i] as f64;
            extended[BASE_FEATURES + 3] = t.fanout[i] as f64;
            FeatureVector { base, extended }
        })
        .collect())
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x}")
}

/// Feature dump: `net,cc,co,dist_norm,g0..g13,cc0,cc1,scoap_co,fanout`.
pub fn features_csv(circuit: &Circuit, features: &[FeatureVector]) -> String {
    let mut out = String::from("net,");
    out.push_str(&feature_names().join(","));
    out.push('\n');
    for (net, f) in circuit.nets().iter().zip(features) {
        out.push_str(&net.name);
        for (k, v) in f.extended.iter().enumerate() {
            out.push(',');
            if k >= 3 {
                out.push_str(&format!("{}", *v as u64));
            } else {
                out.push_str(&fmt_real(*v));
            }
        }
        out.push('\n');
    }
    out
}
