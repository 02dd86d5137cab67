// SPDX-License-Identifier: Apache-2.0

//! Independent reference models for tests. Nothing here reuses the
//! evaluation code of `atpg-core`; only the circuit structure is shared.

use atpg_core::netlist::{Circuit, GateId, GateType, NetId};
use rand::Rng;

fn bool_gate(kind: GateType, ins: &[bool]) -> bool {
    let ones = ins.iter().filter(|&&b| b).count();
    match kind {
        GateType::And => ones == ins.len(),
        GateType::Nand => ones != ins.len(),
        GateType::Or => ones > 0,
        GateType::Nor => ones == 0,
        GateType::Xor => ones % 2 == 1,
        GateType::Xnor => ones % 2 == 0,
        GateType::Not => !ins[0],
        GateType::Buf | GateType::Po | GateType::Ppo => ins[0],
        other => panic!("oracle cannot evaluate {other:?}"),
    }
}

/// Two-valued simulation with an optional stuck-at fault.
pub fn simulate(circuit: &Circuit, inputs: &[bool], fault: Option<(NetId, bool)>) -> Vec<bool> {
    let mut v = vec![false; circuit.num_nets()];
    let force = |net: NetId, x: bool| match fault {
        Some((f, s)) if f == net => s,
        _ => x,
    };
    for (&i, &b) in circuit.inputs().iter().zip(inputs) {
        v[i.index()] = force(i, b);
    }
    for &g in circuit.topo_order() {
        let gate = circuit.gate(g);
        let ins: Vec<bool> = gate.inputs.iter().map(|i| v[i.index()]).collect();
        v[gate.output.index()] = force(gate.output, bool_gate(gate.kind, &ins));
    }
    v
}

/// Good and faulty machines disagree on some output.
pub fn detects(circuit: &Circuit, fault: (NetId, bool), inputs: &[bool]) -> bool {
    let good = simulate(circuit, inputs, None);
    let bad = simulate(circuit, inputs, Some(fault));
    circuit
        .outputs()
        .iter()
        .any(|o| good[o.index()] != bad[o.index()])
}

pub fn bits(m: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| m >> i & 1 == 1).collect()
}

/// First detecting vector by exhaustive enumeration over all inputs.
pub fn exhaustive_test(circuit: &Circuit, fault: (NetId, bool)) -> Option<Vec<bool>> {
    let n = circuit.inputs().len();
    assert!(n <= 20, "exhaustive oracle limited to 20 inputs");
    (0..1u64 << n)
        .map(|m| bits(m, n))
        .find(|v| detects(circuit, fault, v))
}

fn tri_gate(kind: GateType, ins: &[Option<bool>]) -> Option<bool> {
    // enumerate completions of the unknown inputs
    let unknown: Vec<usize> = (0..ins.len()).filter(|&k| ins[k].is_none()).collect();
    let mut seen = [false; 2];
    for m in 0..1u64 << unknown.len() {
        let mut full: Vec<bool> = ins.iter().map(|v| v.unwrap_or(false)).collect();
        for (j, &k) in unknown.iter().enumerate() {
            full[k] = m >> j & 1 == 1;
        }
        seen[bool_gate(kind, &full) as usize] = true;
    }
    match seen {
        [true, false] => Some(false),
        [false, true] => Some(true),
        _ => None,
    }
}

/// Non-incremental evaluation of the good and faulty machines side by side,
/// three-valued each. A net whose good or faulty value is unknown is unknown
/// in both, as in the five-valued algebra. `inputs[k]` is `None` for an
/// unassigned input.
pub fn pair_values(
    circuit: &Circuit,
    inputs: &[Option<bool>],
    fault: Option<(NetId, bool)>,
) -> Vec<(Option<bool>, Option<bool>)> {
    let settle = |net: NetId, good: Option<bool>, bad: Option<bool>| {
        let bad = match fault {
            Some((f, s)) if f == net => Some(s),
            _ => bad,
        };
        match (good, bad) {
            (Some(g), Some(b)) => (Some(g), Some(b)),
            _ => (None, None),
        }
    };
    let mut v = vec![(None, None); circuit.num_nets()];
    for (&i, &b) in circuit.inputs().iter().zip(inputs) {
        v[i.index()] = settle(i, b, b);
    }
    for &g in circuit.topo_order() {
        let gate = circuit.gate(g);
        let good: Vec<Option<bool>> = gate.inputs.iter().map(|i| v[i.index()].0).collect();
        let bad: Vec<Option<bool>> = gate.inputs.iter().map(|i| v[i.index()].1).collect();
        v[gate.output.index()] = settle(
            gate.output,
            tri_gate(gate.kind, &good),
            tri_gate(gate.kind, &bad),
        );
    }
    v
}

/// SCOAP controllability by enumerating every partial assignment of every
/// gate's inputs and taking the cheapest one that forces each output value.
pub fn scoap_bruteforce(circuit: &Circuit) -> Vec<(u32, u32)> {
    let mut cc = vec![(1u32, 1u32); circuit.num_nets()];
    for &g in circuit.topo_order() {
        let gate = circuit.gate(g);
        let n = gate.inputs.len();
        let mut best = [u32::MAX; 2];
        for m in 0..3u64.pow(n as u32) {
            let mut code = m;
            let mut assign = Vec::with_capacity(n);
            let mut cost = 0;
            for i in &gate.inputs {
                let c = cc[i.index()];
                let v = match code % 3 {
                    0 => None,
                    1 => Some(false),
                    _ => Some(true),
                };
                code /= 3;
                cost += match v {
                    None => 0,
                    Some(false) => c.0,
                    Some(true) => c.1,
                };
                assign.push(v);
            }
            if let Some(out) = tri_gate(gate.kind, &assign) {
                best[out as usize] = best[out as usize].min(cost);
            }
        }
        cc[gate.output.index()] = (best[0] + 1, best[1] + 1);
    }
    cc
}

fn word_gate(kind: GateType, ins: &[u64]) -> u64 {
    match kind {
        GateType::And => ins.iter().fold(u64::MAX, |a, b| a & b),
        GateType::Nand => !ins.iter().fold(u64::MAX, |a, b| a & b),
        GateType::Or => ins.iter().fold(0, |a, b| a | b),
        GateType::Nor => !ins.iter().fold(0, |a, b| a | b),
        GateType::Xor => ins.iter().fold(0, |a, b| a ^ b),
        GateType::Xnor => !ins.iter().fold(0, |a, b| a ^ b),
        GateType::Not => !ins[0],
        _ => ins[0],
    }
}

/// 64 vectors at once; bit `b` of each input word is vector `b`.
fn simulate_words(circuit: &Circuit, inputs: &[u64], fault: Option<(NetId, bool)>) -> Vec<u64> {
    let force = |net: NetId, x: u64| match fault {
        Some((f, s)) if f == net => {
            if s {
                u64::MAX
            } else {
                0
            }
        }
        _ => x,
    };
    let mut v = vec![0u64; circuit.num_nets()];
    for (&i, &w) in circuit.inputs().iter().zip(inputs) {
        v[i.index()] = force(i, w);
    }
    for &g in circuit.topo_order() {
        let gate = circuit.gate(g);
        let ins: Vec<u64> = gate.inputs.iter().map(|i| v[i.index()]).collect();
        v[gate.output.index()] = force(gate.output, word_gate(gate.kind, &ins));
    }
    v
}

/// Whether any of the `2^inputs` vectors detects the fault, 64 at a time.
pub fn testable_exhaustive(circuit: &Circuit, fault: (NetId, bool)) -> bool {
    let n = circuit.inputs().len();
    assert!(n <= 24, "exhaustive oracle limited to 24 inputs");
    let total = 1u64 << n;
    let mut base = 0u64;
    while base < total {
        let lanes = (total - base).min(64);
        let mask = if lanes == 64 {
            u64::MAX
        } else {
            (1u64 << lanes) - 1
        };
        let words: Vec<u64> = (0..n)
            .map(|k| (0..lanes).fold(0u64, |w, b| w | (((base + b) >> k) & 1) << b))
            .collect();
        let good = simulate_words(circuit, &words, None);
        let bad = simulate_words(circuit, &words, Some(fault));
        if circuit
            .outputs()
            .iter()
            .any(|o| (good[o.index()] ^ bad[o.index()]) & mask != 0)
        {
            return true;
        }
        base += lanes;
    }
    false
}

/// Fraction of random vectors setting each net to 1, simulated 64 vectors
/// per word.
pub fn monte_carlo_ones<R: Rng>(circuit: &Circuit, vectors: usize, rng: &mut R) -> Vec<f64> {
    let words = vectors.div_ceil(64);
    let tail_mask = if vectors.is_multiple_of(64) {
        u64::MAX
    } else {
        (1u64 << (vectors % 64)) - 1
    };
    let mut ones = vec![0u64; circuit.num_nets()];
    let mut v = vec![0u64; circuit.num_nets()];
    for w in 0..words {
        let mask = if w + 1 == words { tail_mask } else { u64::MAX };
        for &i in circuit.inputs() {
            v[i.index()] = rng.gen::<u64>();
        }
        for &g in circuit.topo_order() {
            let gate = circuit.gate(g);
            let ins: Vec<u64> = gate.inputs.iter().map(|i| v[i.index()]).collect();
            let x = word_gate(gate.kind, &ins);
            v[gate.output.index()] = x;
        }
        for (o, x) in ones.iter_mut().zip(&v) {
            *o += (x & mask).count_ones() as u64;
        }
    }
    ones.iter().map(|&o| o as f64 / vectors as f64).collect()
}

/// COP controllability and observability written from the definitions:
/// signal probabilities under independent inputs, and per net the best
/// single fanout path of sensitization probabilities. Recursive from each
/// net toward the outputs rather than a backward sweep.
pub fn cop_reference(circuit: &Circuit) -> (Vec<f64>, Vec<f64>) {
    let n = circuit.num_nets();
    let mut cc = vec![0.5; n];
    for &g in circuit.topo_order() {
        let gate = circuit.gate(g);
        let p: Vec<f64> = gate.inputs.iter().map(|i| cc[i.index()]).collect();
        let all1: f64 = p.iter().product();
        let all0: f64 = p.iter().map(|x| 1.0 - x).product();
        let odd = p
            .iter()
            .fold(0.0, |acc, x| acc * (1.0 - x) + (1.0 - acc) * x);
        cc[gate.output.index()] = match gate.kind {
            GateType::And => all1,
            GateType::Nand => 1.0 - all1,
            GateType::Or => 1.0 - all0,
            GateType::Nor => all0,
            GateType::Xor => odd,
            GateType::Xnor => 1.0 - odd,
            GateType::Not => 1.0 - p[0],
            _ => p[0],
        };
    }
    let mut readers: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &g in circuit.topo_order() {
        for (pin, i) in circuit.gate(g).inputs.iter().enumerate() {
            readers[i.index()].push((g.index(), pin));
        }
    }
    let is_output: Vec<bool> = {
        let mut v = vec![false; n];
        for o in circuit.outputs() {
            v[o.index()] = true;
        }
        v
    };
    let mut memo: Vec<Option<f64>> = vec![None; n];
    fn obs(
        net: usize,
        circuit: &Circuit,
        cc: &[f64],
        readers: &[Vec<(usize, usize)>],
        is_output: &[bool],
        memo: &mut Vec<Option<f64>>,
    ) -> f64 {
        if let Some(v) = memo[net] {
            return v;
        }
        let mut best: f64 = if is_output[net] { 1.0 } else { 0.0 };
        for &(g, pin) in &readers[net] {
            let gate = circuit.gate(GateId(g as u32));
            let others = gate
                .inputs
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != pin)
                .map(|(_, i)| cc[i.index()]);
            let sens: f64 = match gate.kind {
                GateType::And | GateType::Nand => others.product(),
                GateType::Or | GateType::Nor => others.map(|x| 1.0 - x).product(),
                _ => 1.0,
            };
            let down = obs(gate.output.index(), circuit, cc, readers, is_output, memo);
            best = best.max((down * sens).clamp(0.0, 1.0));
        }
        memo[net] = Some(best);
        best
    }
    let co = (0..n)
        .map(|k| obs(k, circuit, &cc, &readers, &is_output, &mut memo))
        .collect();
    (cc, co)
}
