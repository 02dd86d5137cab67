// SPDX-License-Identifier: Apache-2.0

use atpg_core::faults::{annotate, enumerate_faults, rank_hard_faults};
use atpg_core::generate::random_circuit;
use atpg_core::podem::{
    cop_baseline_heuristic, generate_test, run_campaign, Outcome, PodemConfig, ScoreTable,
};
use atpg_core::testability::Testability;
use atpg_oracle::{detects, exhaustive_test};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn outcomes_match_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = PodemConfig::with_limit(u64::MAX);
    for _ in 0..60 {
        let pis = rng.gen_range(2..=10);
        let gates = rng.gen_range(5..=40);
        let c = random_circuit(&mut rng, pis, gates);
        let t = Testability::analyze(&c).unwrap();
        let h = cop_baseline_heuristic(&t.cc);
        for f in enumerate_faults(&c) {
            let r = generate_test(&c, &f, &h, &cfg).unwrap();
            assert!(r.backtracks <= r.decisions && r.decisions <= r.backtraces);
            let truth = exhaustive_test(&c, (f.net, f.stuck_at));
            match r.outcome {
                Outcome::Detected(v) => {
                    assert!(detects(&c, (f.net, f.stuck_at), &v.filled(false)));
                    assert!(detects(&c, (f.net, f.stuck_at), &v.filled(true)));
                }
                Outcome::Untestable => assert!(truth.is_none()),
                Outcome::Aborted => panic!("unbounded search aborted"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn affine_scores_give_identical_searches(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, 8, 40);
        let scores: Vec<f64> = (0..c.num_nets()).map(|_| rng.gen()).collect();
        let a = ScoreTable::new(scores);
        let b = a.map(|s| 2.0 * s + 7.0);
        let faults = enumerate_faults(&c);
        let cfg = PodemConfig { backtrack_limit: 50, record_walks: true };
        let ra = run_campaign(&c, &faults, &a, &cfg, 1).unwrap();
        let rb = run_campaign(&c, &faults, &b, &cfg, 1).unwrap();
        for (x, y) in ra.results.iter().zip(&rb.results) {
            prop_assert!(x.same_search(y));
        }
    }

    #[test]
    fn abort_reports_limit_plus_one(seed in any::<u64>(), limit in 0u64..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, 8, 50);
        let t = Testability::analyze(&c).unwrap();
        let h = cop_baseline_heuristic(&t.cc);
        for f in enumerate_faults(&c) {
            let r = generate_test(&c, &f, &h, &PodemConfig::with_limit(limit)).unwrap();
            if r.outcome == Outcome::Aborted {
                prop_assert_eq!(r.backtracks, limit + 1);
            } else {
                prop_assert!(r.backtracks <= limit);
            }
        }
    }
}

#[test]
fn ranking_is_prefix_of_full_sort_and_order_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = random_circuit(&mut rng, 10, 60);
    let t = Testability::analyze(&c).unwrap();
    let mut all = enumerate_faults(&c);
    annotate(&mut all, &t);
    let full = rank_hard_faults(&all, all.len()).unwrap();
    for w in full.windows(2) {
        assert!(w[0].p_detect <= w[1].p_detect);
    }
    let top = rank_hard_faults(&all, 17).unwrap();
    assert_eq!(top[..], full[..17]);
    all.reverse();
    assert_eq!(rank_hard_faults(&all, 17).unwrap(), top);
}
