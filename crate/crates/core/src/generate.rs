// SPDX-License-Identifier: Apache-2.0

//! Seeded random circuits for property tests and experiments.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::netlist::{Circuit, CircuitBuilder, GateType, NetId};

const KINDS: [GateType; 8] = [
    GateType::And,
    GateType::Nand,
    GateType::Or,
    GateType::Nor,
    GateType::Xor,
    GateType::Xnor,
    GateType::Not,
    GateType::Buf,
];

fn fanin<R: Rng>(rng: &mut R, kind: GateType) -> usize {
    match kind {
        GateType::Not | GateType::Buf => 1,
        GateType::Xor | GateType::Xnor => 2,
        _ => rng.gen_range(2..=3),
    }
}

/// A random DAG with reconvergent fanout. Nets without fanout become outputs,
/// plus a few extra internal outputs.
pub fn random_circuit<R: Rng>(rng: &mut R, inputs: usize, gates: usize) -> Circuit {
    let mut b = CircuitBuilder::new("random");
    let mut nets: Vec<NetId> = (0..inputs)
        .map(|i| b.add_input(&format!("i{i}")).unwrap())
        .collect();
    let mut used = vec![false; inputs + gates];
    for g in 0..gates {
        let kind = *KINDS.choose(rng).unwrap();
        let n = fanin(rng, kind).min(nets.len());
        // bias toward recent nets so circuits get deep
        let mut picks: Vec<NetId> = Vec::with_capacity(n);
        while picks.len() < n {
            let span = nets.len();
            let idx = if rng.gen_bool(0.6) {
                span - 1 - rng.gen_range(0..span.min(6))
            } else {
                rng.gen_range(0..span)
            };
            if !picks.contains(&nets[idx]) {
                picks.push(nets[idx]);
            }
        }
        for p in &picks {
            used[p.index()] = true;
        }
        let out = b.add_gate_ids(kind, &picks, &format!("g{g}")).unwrap();
        nets.push(out);
    }
    let mut circuit_outputs = Vec::new();
    for (k, &n) in nets.iter().enumerate().skip(inputs) {
        if !used[k] || rng.gen_bool(0.1) {
            circuit_outputs.push(n);
        }
    }
    if circuit_outputs.is_empty() {
        circuit_outputs.push(*nets.last().unwrap());
    }
    for n in circuit_outputs {
        let name = if n.index() < inputs {
            format!("i{}", n.index())
        } else {
            format!("g{}", n.index() - inputs)
        };
        b.add_output(&name);
    }
    b.build().expect("generated circuit is well formed")
}

/// A random fanout-free circuit: every net drives at most one gate input.
/// Uses at most `inputs` inputs and stops early if it runs out of nets.
pub fn random_tree_circuit<R: Rng>(rng: &mut R, inputs: usize, gates: usize) -> Circuit {
    let mut b = CircuitBuilder::new("tree");
    let mut pool: Vec<String> = (0..inputs).map(|i| format!("i{i}")).collect();
    for name in &pool {
        b.add_input(name).unwrap();
    }
    for g in 0..gates {
        let kind = *KINDS.choose(rng).unwrap();
        let n = fanin(rng, kind);
        if pool.len() < n.max(2) && n > 1 || pool.is_empty() {
            break;
        }
        pool.shuffle(rng);
        let taken: Vec<String> = pool.drain(pool.len() - n..).collect();
        let refs: Vec<&str> = taken.iter().map(String::as_str).collect();
        let name = format!("g{g}");
        b.add_gate(kind, &refs, &name).unwrap();
        pool.push(name);
    }
    for name in &pool {
        b.add_output(name);
    }
    b.build().expect("generated circuit is well formed")
}
