// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use atpg_core::generate::random_circuit;
use atpg_core::netlist::{parse_bench, shortest_pi_distance, write_bench, Circuit};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape(
    c: &Circuit,
) -> (
    Vec<String>,
    Vec<String>,
    BTreeSet<(String, Vec<String>, String)>,
) {
    let name = |n: atpg_core::NetId| c.net(n).name.clone();
    (
        c.inputs().iter().map(|&n| name(n)).collect(),
        c.outputs().iter().map(|&n| name(n)).collect(),
        c.gates()
            .iter()
            .map(|g| {
                (
                    g.kind.keyword().to_string(),
                    g.inputs.iter().map(|&n| name(n)).collect(),
                    name(g.output),
                )
            })
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_is_isomorphic(seed in any::<u64>(), pis in 1usize..10, gates in 0usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, pis, gates);
        let again = parse_bench(&write_bench(&c)).unwrap();
        prop_assert_eq!(shape(&c), shape(&again));
        for net in c.nets() {
            let other = again.net(again.find_net(&net.name).unwrap());
            prop_assert_eq!(net.level, other.level);
            prop_assert_eq!(net.fanout_count(), other.fanout_count());
        }
    }

    #[test]
    fn structural_invariants(seed in any::<u64>(), pis in 1usize..10, gates in 0usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, pis, gates);
        let dist = shortest_pi_distance(&c);
        for net in c.nets() {
            prop_assert!(net.level >= dist[net.id.index()]);
            prop_assert_eq!(net.is_input(), net.driver().is_none());
        }
        let pins: usize = c.gates().iter().map(|g| g.inputs.len()).sum();
        let fanouts: usize = c.nets().iter().map(|n| n.fanout_count()).sum();
        prop_assert_eq!(pins, fanouts);
        for g in c.gates() {
            let out = c.net(g.output).level;
            for i in &g.inputs {
                prop_assert!(c.net(*i).level < out);
            }
        }
    }
}

#[test]
fn sequential_round_trip() {
    let text = "INPUT(a)\nOUTPUT(y)\nq = DFF(d)\nd = XOR(a, q)\ny = NOT(q)\n";
    let c = parse_bench(text).unwrap();
    let again = parse_bench(&write_bench(&c)).unwrap();
    assert_eq!(shape(&c), shape(&again));
    assert_eq!(again.flip_flops().len(), 1);
}
