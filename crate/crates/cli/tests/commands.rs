// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use atpg_cli::pipeline::{load_circuit, Prepared};
use atpg_cli::work_ratio;
use atpg_learn::io::Bundle;
use atpg_learn::{HybNN, Regressor, Svr};
use atpg_oracle::cop_reference;
use tempfile::TempDir;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn atpg(dir: &Path, args: &[&str]) -> i32 {
    let d = dir.to_string_lossy().into_owned();
    let mut all = vec!["atpg", "--out-dir", d.as_str()];
    all.extend_from_slice(args);
    atpg_cli::run(all)
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Data rows of a CSV, comment lines dropped, split into fields.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write_netlist(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn stats_counts_c17() {
    let t = TempDir::new().unwrap();
    assert_eq!(atpg(t.path(), &["stats", &fixture("c17.bench")]), 0);
    let s = read(t.path(), "c17.stats.txt");
    assert!(s.contains("inputs: 5\n"));
    assert!(s.contains("outputs: 2\n"));
    assert!(s.contains("gates: 6\n"));
    assert!(t.path().join("c17.stats.txt.manifest.json").exists());
}

#[test]
fn stats_counts_single_and() {
    let t = TempDir::new().unwrap();
    let n = write_netlist(
        t.path(),
        "and2.bench",
        "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n",
    );
    assert_eq!(atpg(t.path(), &["stats", &n]), 0);
    let s = read(t.path(), "and2.stats.txt");
    assert!(s.contains("inputs: 2\n") && s.contains("outputs: 1\n") && s.contains("gates: 1\n"));
}

#[test]
fn exit_codes() {
    let t = TempDir::new().unwrap();
    let bad = write_netlist(t.path(), "bad.bench", "INPUT(a)\nOUTPUT(y)\ny = AND(a, b\n");
    assert_eq!(atpg(t.path(), &["stats", &bad]), 2);
    let undriven = write_netlist(
        t.path(),
        "undriven.bench",
        "INPUT(a)\nOUTPUT(y)\ny = AND(a, b)\n",
    );
    assert_eq!(atpg(t.path(), &["stats", &undriven]), 2);
    let unknown = write_netlist(t.path(), "frob.bench", "INPUT(a)\nOUTPUT(y)\ny = FROB(a)\n");
    assert_eq!(atpg(t.path(), &["stats", &unknown]), 0);
    assert_eq!(atpg(t.path(), &["testability", &unknown]), 2);
    assert_eq!(atpg(t.path(), &["stats", "/nonexistent/x.bench"]), 2);
    assert_eq!(atpg(t.path(), &["stats"]), 1);
    assert_eq!(atpg(t.path(), &["frobnicate"]), 1);
    assert_eq!(
        atpg(
            t.path(),
            &["rank-faults", &fixture("c17.bench"), "--faults", "hardest"]
        ),
        1
    );
    assert_eq!(
        atpg(
            t.path(),
            &["atpg", &fixture("c17.bench"), "--heuristic", "magic"]
        ),
        1
    );
    assert_eq!(atpg(t.path(), &["--help"]), 0);
    assert_eq!(atpg(t.path(), &["--version"]), 0);
}

#[test]
fn testability_matches_reference_cop() {
    let t = TempDir::new().unwrap();
    let net = fixture("mult4.bench");
    assert_eq!(atpg(t.path(), &["testability", &net, "-o", "f.csv"]), 0);
    let c = load_circuit(Path::new(&net)).unwrap();
    let (cc, co) = cop_reference(&c);
    let data = rows(&read(t.path(), "f.csv"));
    assert_eq!(data.len(), c.num_nets());
    for (k, r) in data.iter().enumerate() {
        let v: Vec<f64> = r[1..].iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(r[0], c.net(atpg_core::netlist::NetId(k as u32)).name);
        assert!((v[0] - cc[k]).abs() < 1e-12);
        assert!((v[1] - co[k]).abs() < 1e-12);
        let one_hot: f64 = v[3..17].iter().sum();
        assert_eq!(one_hot, 1.0);
    }
    for &i in c.inputs() {
        assert_eq!(data[i.index()][1], "0.5");
    }
}

#[test]
fn rank_faults_is_ascending_capped_and_seeded() {
    let t = TempDir::new().unwrap();
    let net = fixture("alu4.bench");
    assert_eq!(
        atpg(
            t.path(),
            &["rank-faults", &net, "--faults", "hard:25", "-o", "h.csv"]
        ),
        0
    );
    let hard = rows(&read(t.path(), "h.csv"));
    assert_eq!(hard.len(), 25);
    let p: Vec<f64> = hard.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(p.windows(2).all(|w| w[0] <= w[1]));

    let random = |seed: &str, out: &str| {
        assert_eq!(
            atpg(
                t.path(),
                &[
                    "--seed",
                    seed,
                    "rank-faults",
                    &net,
                    "--faults",
                    "random:30",
                    "-o",
                    out
                ]
            ),
            0
        );
        read(t.path(), out)
    };
    assert_eq!(random("3", "r1.csv"), random("3", "r2.csv"));
    assert_ne!(random("3", "r1.csv"), random("4", "r3.csv"));
}

#[test]
fn gen_data_targets() {
    let t = TempDir::new().unwrap();
    assert_eq!(
        atpg(
            t.path(),
            &["gen-data", &fixture("c17.bench"), &fixture("alu4.bench")]
        ),
        0
    );
    let data = rows(&read(t.path(), "train.csv"));
    assert!(!data.is_empty());
    for r in &data {
        let p: f64 = r.last().unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
        // c17 needs no backtracks under the baseline, so every walk succeeds
        if r[0] == "c17" {
            assert_eq!(p, 1.0);
        }
    }
    assert!(data
        .iter()
        .any(|r| r[0] == "alu4" && r.last().unwrap() != "1"));
}

#[test]
fn gen_data_rejects_duplicate_circuits() {
    let t = TempDir::new().unwrap();
    let c17 = fixture("c17.bench");
    assert_eq!(atpg(t.path(), &["gen-data", &c17, &c17]), 1);
}

fn trained(t: &Path) {
    let nets = [
        fixture("add8.bench"),
        fixture("alu4.bench"),
        fixture("mult4.bench"),
    ];
    let mut gen = vec!["gen-data"];
    gen.extend(nets.iter().map(String::as_str));
    assert_eq!(atpg(t, &gen), 0);
    let data = t.join("train.csv").to_string_lossy().into_owned();
    assert_eq!(
        atpg(
            t,
            &["train", "--kind", "hybnn", "--data", &data, "--epochs", "30", "-o", "h.model"]
        ),
        0
    );
    assert_eq!(
        atpg(
            t,
            &["train", "--kind", "svr", "--data", &data, "-o", "s.model"]
        ),
        0
    );
    let (h, s) = (t.join("h.model"), t.join("s.model"));
    let (h, s) = (h.to_string_lossy(), s.to_string_lossy());
    let mut labels = vec![
        "gen-data",
        "-o",
        "again.csv",
        "--meta-labels",
        "meta.csv",
        "--hybnn",
        &h,
        "--svr",
        &s,
    ];
    labels.extend(nets.iter().map(String::as_str));
    assert_eq!(atpg(t, &labels), 0);
    let meta = t.join("meta.csv").to_string_lossy().into_owned();
    assert_eq!(
        atpg(
            t,
            &[
                "train",
                "--kind",
                "meta",
                "--data",
                &data,
                "--meta-labels",
                &meta,
                "--trees",
                "15",
                "--hybnn",
                &h,
                "--svr",
                &s,
                "-o",
                "b.bundle"
            ]
        ),
        0
    );
}

#[test]
fn train_round_trips_and_reports_cv() {
    let t = TempDir::new().unwrap();
    trained(t.path());
    let text = read(t.path(), "h.model");
    assert_eq!(HybNN::from_text(&text).unwrap().to_text(), text);
    let text = read(t.path(), "s.model");
    assert_eq!(Svr::from_text(&text).unwrap().to_text(), text);
    assert!(t.path().join("b.importance.csv").exists());
    for f in ["b.meta.model", "b.hybnn.model", "b.svr.model"] {
        assert!(t.path().join(f).exists(), "{f}");
    }

    let data = t.path().join("train.csv").to_string_lossy().into_owned();
    let cv = |out: &str| {
        let args = [
            "train",
            "--kind",
            "svr",
            "--data",
            &data,
            "--cv",
            "--grid",
            "0.01,1,100",
            "--folds",
            "3",
            "-o",
            out,
        ];
        assert_eq!(atpg(t.path(), &args), 0);
    };
    cv("cv1.model");
    cv("cv2.model");
    let report = read(t.path(), "cv1.cv.csv");
    assert_eq!(rows(&report).len(), 3 * 3);
    assert!(report.contains("# best kind=svr"));
    assert_eq!(read(t.path(), "cv1.model"), read(t.path(), "cv2.model"));
    assert_eq!(report, read(t.path(), "cv2.cv.csv"));
}

#[test]
fn meta_heuristic_routes_each_net() {
    let t = TempDir::new().unwrap();
    trained(t.path());
    let bundle = t.path().join("b.bundle");
    let net = fixture("cmp8.bench");
    let spec = format!("meta:{}", bundle.display());
    assert_eq!(
        atpg(
            t.path(),
            &["atpg", &net, "--heuristic", &spec, "-o", "m.csv"]
        ),
        0
    );
    let routing = rows(&read(t.path(), "m.routing.csv"));
    let b = Bundle::load(&bundle).unwrap();
    let p = Prepared::new(load_circuit(Path::new(&net)).unwrap()).unwrap();
    assert_eq!(routing.len(), p.circuit.num_nets());
    for (r, f) in routing.iter().zip(&p.features) {
        let class: u8 = r[1].parse().unwrap();
        assert_eq!(class, b.meta.predict(&f.extended).unwrap());
        let want = if class == 0 {
            b.hybnn.predict(&f.base).unwrap()
        } else {
            b.svr.predict(&f.base).unwrap()
        };
        assert_eq!(r[2].parse::<f64>().unwrap(), want);
    }
}

fn without_timing(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# elapsed"))
        .map(|l| match l.rsplit_once(',') {
            Some((head, _)) if !l.starts_with('#') => head.to_string(),
            _ => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn atpg_c17_full_coverage_and_outputs() {
    let t = TempDir::new().unwrap();
    let c17 = fixture("c17.bench");
    let before = fs::read(&c17).unwrap();
    assert_eq!(
        atpg(t.path(), &["atpg", &c17, "--faults", "all", "-o", "a.csv"]),
        0
    );
    assert_eq!(
        atpg(
            t.path(),
            &["--jobs", "4", "atpg", &c17, "--faults", "all", "-o", "b.csv"]
        ),
        0
    );
    assert_eq!(fs::read(&c17).unwrap(), before);
    let a = read(t.path(), "a.csv");
    assert!(a.contains("# coverage=100"));
    assert!(a.contains("# aborted=0"));
    assert_eq!(without_timing(&a), without_timing(&read(t.path(), "b.csv")));
    let vectors = rows(&read(t.path(), "a.vectors.csv"));
    assert_eq!(vectors.len(), 22);
    let coverage = read(t.path(), "a.coverage.csv");
    assert!(!coverage.contains("undetected"));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(t.path(), "a.csv.manifest.json")).unwrap();
    assert_eq!(manifest["command"], "atpg");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn compare_reports() {
    let t = TempDir::new().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    for (dir, nets) in [(&a, &["c17", "add8"][..]), (&b, &["c17", "mux16"][..])] {
        for n in nets {
            let out = dir.join(format!("{n}.csv")).to_string_lossy().into_owned();
            assert_eq!(
                atpg(
                    t.path(),
                    &["atpg", &fixture(&format!("{n}.bench")), "-o", &out]
                ),
                0
            );
        }
        // vectors and coverage files share the directory and are skipped
    }
    let (sa, sb) = (
        a.to_string_lossy().into_owned(),
        b.to_string_lossy().into_owned(),
    );
    assert_eq!(atpg(t.path(), &["compare", &sa, &sb, "-o", "cmp.csv"]), 0);
    let table = rows(&read(t.path(), "cmp.csv"));
    let by_name = |n: &str| table.iter().find(|r| r[0] == n).unwrap().clone();
    let c17 = by_name("c17");
    assert_eq!(c17[10], "ok");
    assert_eq!(c17[9].parse::<f64>().unwrap(), 1.0);
    let work_a: u64 = c17[5].parse().unwrap();
    assert_eq!(
        work_a,
        c17[3].parse::<u64>().unwrap() + c17[4].parse::<u64>().unwrap()
    );
    assert_eq!(by_name("add8")[10], "missing_in_b");
    assert_eq!(by_name("mux16")[10], "missing_in_a");
    assert_eq!(work_ratio(0, 0), 1.0);
    assert_eq!(work_ratio(3, 6), 0.5);
}
