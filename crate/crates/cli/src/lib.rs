// SPDX-License-Identifier: Apache-2.0

//! The `atpg` command line: parse, analyze, rank, label, train, run test
//! generation and compare campaigns.

pub mod manifest;
pub mod pipeline;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use atpg_core::datagen::{
    assemble_training_set, meta_labels_csv, read_meta_labels_csv, read_training_csv, training_csv,
    TrainingRow,
};
use atpg_core::faults::{faults_csv, read_faults_csv, DEFAULT_HARD_FAULTS};
use atpg_core::logic::{fault_simulate, write_vectors_csv, DetectionStatus, TestVector};
use atpg_core::podem::{parse_campaign_summary, CampaignSummary, DEFAULT_BACKTRACK_LIMIT};
use atpg_core::testability::{feature_names, features_csv};
use atpg_core::{Fault, FaultSpec, FaultStatus};
use atpg_learn::cv::{
    accuracy, base_matrix, cross_validate, logspace, mse, select, targets, CvReport, Objective,
};
use atpg_learn::io::Bundle;
use atpg_learn::svr::KernelChoice;
use atpg_learn::{ForestConfig, HybNN, HybNNConfig, RandomForest, Regressor, Svr, SvrConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::manifest::RunManifest;
use crate::pipeline::{
    campaign, load_circuit, meta_data, meta_labels, routing_csv, train_hybnn, train_meta,
    train_svr, training_rows, Guidance, HeuristicSpec, Prepared,
};

/// Why a command failed; each maps to an exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Input(anyhow::Error),
    Invariant(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Input(e) | Failure::Invariant(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Invariant(e)
    }
}

trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }

    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "atpg",
    version,
    about = "Stuck-at test generation with learned backtrace guidance"
)]
pub struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for fault campaigns.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Directory for outputs; relative output paths resolve against it.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Circuit summary: inputs, outputs, gates, nets, levels.
    Stats { netlist: PathBuf },
    /// Per-net testability features.
    Testability {
        netlist: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Fault list ranked by detection probability.
    RankFaults {
        netlist: PathBuf,
        /// hard:K, random:K[:SEED], all or file:PATH.
        #[arg(long, default_value = "hard:100")]
        faults: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Training rows from COP-guided campaigns on the hardest faults.
    GenData(GenDataArgs),
    /// Train a regressor or the meta-classifier.
    Train(TrainArgs),
    /// Run test generation over a fault list.
    Atpg(AtpgArgs),
    /// Side-by-side comparison of two sets of campaign reports.
    Compare {
        /// A report CSV or a directory of them.
        a: PathBuf,
        b: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GenDataArgs {
    #[arg(required = true)]
    netlists: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_HARD_FAULTS)]
    k_hard: usize,
    #[arg(long, default_value_t = DEFAULT_BACKTRACK_LIMIT)]
    backtrack_limit: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also write circuit-level meta labels from the work of these models.
    #[arg(long, requires_all = ["hybnn", "svr"])]
    meta_labels: Option<PathBuf>,
    #[arg(long)]
    hybnn: Option<PathBuf>,
    #[arg(long)]
    svr: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Hybnn,
    Svr,
    Meta,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Rbf,
    Linear,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_enum)]
    kind: ModelKind,
    /// Training CSV from gen-data.
    #[arg(long)]
    data: PathBuf,
    /// Circuit classes, required for the meta-classifier.
    #[arg(long)]
    meta_labels: Option<PathBuf>,
    /// Circuit left out of training.
    #[arg(long)]
    holdout: Option<String>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Cross-validate over --grid and train the final model on the best
    /// point.
    #[arg(long)]
    cv: bool,
    /// Comma-separated values of the tuned parameter: learning rate for
    /// hybnn, C for svr, tree count for meta.
    #[arg(long)]
    grid: Option<String>,
    /// With --kind meta, bundle these regressors with the new forest.
    #[arg(long, requires = "svr")]
    hybnn: Option<PathBuf>,
    #[arg(long, requires = "hybnn")]
    svr: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 256)]
    batch: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    h1: usize,
    #[arg(long, default_value_t = 16)]
    h2: usize,
    #[arg(long, default_value_t = 20)]
    patience: usize,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    kernel: KernelArg,
    /// RBF width; defaults to 1 / (features * pooled variance).
    #[arg(long)]
    gamma: Option<f64>,
    /// Train the SVR on at most this many rows.
    #[arg(long)]
    max_samples: Option<usize>,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AtpgArgs {
    netlist: PathBuf,
    /// hard:K, random:K[:SEED], all or file:PATH.
    #[arg(long, default_value = "hard:100")]
    faults: String,
    /// cop, model:PATH or meta:PATH.
    #[arg(long, default_value = "cop")]
    heuristic: String,
    #[arg(long, default_value_t = DEFAULT_BACKTRACK_LIMIT)]
    backtrack_limit: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

struct Ctx {
    seed: u64,
    jobs: usize,
    out_dir: PathBuf,
    args: Vec<String>,
}

impl Ctx {
    fn out(&self, given: &Option<PathBuf>, default: String) -> Result<PathBuf, Failure> {
        let path = self
            .out_dir
            .join(given.clone().unwrap_or_else(|| default.into()));
        let dir = path.parent().unwrap_or(&self.out_dir);
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .input()?;
        Ok(path)
    }

    fn manifest(&self, command: &str) -> RunManifest {
        RunManifest::new(command, self.args.clone(), self.seed, self.jobs)
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .input()
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .input()
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into())
}

/// Sibling of `path` with `suffix` replacing its extension.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_file_name(format!("{}{suffix}", stem(path)))
}

fn prepare(path: &Path) -> Result<Prepared, Failure> {
    let c = load_circuit(path).input()?;
    Prepared::new(c).input()
}

/// A fault spec; `random:K` takes the global seed.
fn fault_spec(text: &str, seed: u64) -> Result<FaultSpec, Failure> {
    let text = match text.split(':').collect::<Vec<_>>()[..] {
        ["random", k] => format!("random:{k}:{seed}"),
        _ => text.to_string(),
    };
    text.parse::<FaultSpec>().usage()
}

fn faults_for(p: &Prepared, spec: &FaultSpec) -> Result<Vec<Fault>, Failure> {
    match spec {
        FaultSpec::File(path) => {
            let text = read(Path::new(path))?;
            read_faults_csv(&p.circuit, &text).input()
        }
        other => p.select(other).usage(),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let ctx = Ctx {
        seed: cli.seed,
        jobs: cli.jobs.max(1),
        out_dir: cli.out_dir.clone(),
        args: args
            .iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect(),
    };
    match dispatch(&ctx, cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            f.code()
        }
    }
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<(), Failure> {
    match command {
        Command::Stats { netlist } => cmd_stats(ctx, &netlist),
        Command::Testability { netlist, out } => cmd_testability(ctx, &netlist, &out),
        Command::RankFaults {
            netlist,
            faults,
            out,
        } => cmd_rank_faults(ctx, &netlist, &faults, &out),
        Command::GenData(a) => cmd_gen_data(ctx, &a),
        Command::Train(a) => cmd_train(ctx, &a),
        Command::Atpg(a) => cmd_atpg(ctx, &a),
        Command::Compare { a, b, out } => cmd_compare(ctx, &a, &b, &out),
    }
}

fn cmd_stats(ctx: &Ctx, netlist: &Path) -> Result<(), Failure> {
    let c = load_circuit(netlist).input()?;
    let text = format!(
        "circuit: {}\ninputs: {}\noutputs: {}\ngates: {}\nnets: {}\nlevels: {}\nflip_flops: {}\n",
        c.name(),
        c.inputs().len(),
        c.outputs().len(),
        c.num_gates(),
        c.num_nets(),
        c.max_level(),
        c.flip_flops().len()
    );
    print!("{text}");
    let out = ctx.out(&None, format!("{}.stats.txt", c.name()))?;
    write(&out, &text)?;
    let mut m = ctx.manifest("stats");
    m.input(netlist).input()?;
    m.finish(&[out])?;
    Ok(())
}

fn cmd_testability(ctx: &Ctx, netlist: &Path, out: &Option<PathBuf>) -> Result<(), Failure> {
    let p = prepare(netlist)?;
    let out = ctx.out(out, format!("{}.testability.csv", p.name()))?;
    write(&out, &features_csv(&p.circuit, &p.features))?;
    let mut m = ctx.manifest("testability");
    m.input(netlist).input()?;
    m.finish(&[out])?;
    Ok(())
}

fn cmd_rank_faults(
    ctx: &Ctx,
    netlist: &Path,
    spec: &str,
    out: &Option<PathBuf>,
) -> Result<(), Failure> {
    let p = prepare(netlist)?;
    let spec = fault_spec(spec, ctx.seed)?;
    let faults = faults_for(&p, &spec)?;
    let out = ctx.out(out, format!("{}.faults.csv", p.name()))?;
    write(&out, &faults_csv(&p.circuit, &faults))?;
    let mut m = ctx.manifest("rank-faults");
    m.input(netlist).input()?;
    m.flag("faults", &spec);
    m.finish(&[out])?;
    Ok(())
}

fn load_regressor<M>(
    path: &Path,
    parse: fn(&str) -> Result<M, atpg_learn::LearnError>,
) -> Result<M, Failure> {
    let text = read(path)?;
    parse(&text)
        .with_context(|| format!("loading {}", path.display()))
        .input()
}

fn cmd_gen_data(ctx: &Ctx, a: &GenDataArgs) -> Result<(), Failure> {
    let mut prepared = Vec::with_capacity(a.netlists.len());
    for n in &a.netlists {
        prepared.push(prepare(n)?);
    }
    let mut names: Vec<&str> = prepared.iter().map(Prepared::name).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Failure::Usage(anyhow!("two netlists are named `{}`", w[0])));
    }
    let mut rows: Vec<TrainingRow> = Vec::new();
    for p in &prepared {
        rows.extend(training_rows(p, a.k_hard, a.backtrack_limit, ctx.jobs)?);
    }
    let out = ctx.out(&a.out, "train.csv".into())?;
    write(&out, &training_csv(&rows))?;
    let mut outputs = vec![out];
    if let (Some(labels_out), Some(h), Some(s)) = (&a.meta_labels, &a.hybnn, &a.svr) {
        let hybnn = load_regressor(h, HybNN::from_text)?;
        let svr = load_regressor(s, Svr::from_text)?;
        let refs: Vec<&Prepared> = prepared.iter().collect();
        let labels = meta_labels(&refs, &hybnn, &svr, a.k_hard, a.backtrack_limit, ctx.jobs)?;
        let path = ctx.out(&Some(labels_out.clone()), String::new())?;
        write(&path, &meta_labels_csv(&labels))?;
        outputs.push(path);
    }
    let mut m = ctx.manifest("gen-data");
    for n in &a.netlists {
        m.input(n).input()?;
    }
    for p in [&a.hybnn, &a.svr].into_iter().flatten() {
        m.input(p).input()?;
    }
    m.flag("k_hard", a.k_hard);
    m.flag("backtrack_limit", a.backtrack_limit);
    m.finish(&outputs)?;
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(anyhow!("bad grid value `{s}`")))
        })
        .collect()
}

fn cv_csv(kind: &str, grid: &[f64], report: &CvReport) -> String {
    let mut out = String::from("point,value,fold,rows,score\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.point, grid[r.point], r.fold, r.rows, r.score
        ));
    }
    for (i, m) in report.means.iter().enumerate() {
        out.push_str(&format!("# mean point={i} value={} score={m}\n", grid[i]));
    }
    out.push_str(&format!(
        "# best kind={kind} point={} value={} score={}\n",
        report.best,
        grid[report.best],
        report.best_score()
    ));
    out
}

fn importance_csv(forest: &RandomForest) -> String {
    let imp = forest.feature_importance();
    let names = feature_names();
    let mut out = String::from("feature,tree,importance\n");
    for (f, name) in names.iter().enumerate().take(forest.dim()) {
        out.push_str(&format!("{name},all,{}\n", imp.total[f]));
    }
    for (t, per) in imp.per_tree.iter().enumerate() {
        for (f, name) in names.iter().enumerate().take(forest.dim()) {
            out.push_str(&format!("{name},{t},{}\n", per[f]));
        }
    }
    out
}

fn cmd_train(ctx: &Ctx, a: &TrainArgs) -> Result<(), Failure> {
    let text = read(&a.data)?;
    let all = read_training_csv(&text).input()?;
    let set = assemble_training_set(&all, a.holdout.as_deref(), a.folds, ctx.seed).input()?;
    let rows = &set.rows;
    let nn_cfg = HybNNConfig {
        h1: a.h1,
        h2: a.h2,
        epochs: a.epochs,
        batch: a.batch,
        lr: a.lr,
        patience: Some(a.patience),
        ..HybNNConfig::default()
    };
    let svr_cfg = SvrConfig {
        c: a.c,
        epsilon: a.epsilon,
        kernel: match a.kernel {
            KernelArg::Rbf => KernelChoice::Rbf(a.gamma),
            KernelArg::Linear => KernelChoice::Linear,
        },
        max_samples: a.max_samples,
        ..SvrConfig::default()
    };
    let forest_cfg = ForestConfig {
        n_trees: a.trees,
        mtry: a.mtry,
        ..ForestConfig::default()
    };
    let kind = match a.kind {
        ModelKind::Hybnn => "hybnn",
        ModelKind::Svr => "svr",
        ModelKind::Meta => "meta",
    };
    let labels = match (&a.meta_labels, a.kind) {
        (Some(p), _) => Some(read_meta_labels_csv(&read(p)?).input()?),
        (None, ModelKind::Meta) => {
            return Err(Failure::Usage(anyhow!("--kind meta needs --meta-labels")))
        }
        (None, _) => None,
    };
    let default_grid = match a.kind {
        ModelKind::Hybnn => vec![a.lr],
        ModelKind::Svr => logspace(1e-3, 1e4, 8),
        ModelKind::Meta => vec![a.trees as f64],
    };
    let grid = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => default_grid,
    };
    let x = base_matrix(rows);
    let y = targets(rows);
    let meta_xy = match &labels {
        Some(l) if a.kind == ModelKind::Meta => Some(meta_data(rows, l).input()?),
        _ => None,
    };

    let mut outputs = Vec::new();
    let out = ctx.out(&a.out, format!("{kind}.model"))?;
    let mut chosen = None;
    if a.cv {
        let seed = ctx.seed;
        let report = match a.kind {
            ModelKind::Hybnn => cross_validate(
                &set.folds,
                set.k,
                &grid,
                Objective::Minimize,
                |&lr, tr, te| {
                    let cfg = HybNNConfig {
                        lr,
                        ..nn_cfg.clone()
                    };
                    let (m, _) = HybNN::train(&select(&x, tr), &select(&y, tr), &cfg, seed)?;
                    let pred: Vec<f64> = te
                        .iter()
                        .map(|&i| m.forward(&x[i]))
                        .collect::<Result<_, _>>()?;
                    Ok(mse(&pred, &select(&y, te)))
                },
            ),
            ModelKind::Svr => cross_validate(
                &set.folds,
                set.k,
                &grid,
                Objective::Minimize,
                |&c, tr, te| {
                    let cfg = SvrConfig {
                        c,
                        ..svr_cfg.clone()
                    };
                    let (m, _) = Svr::train(&select(&x, tr), &select(&y, tr), &cfg, seed)?;
                    let pred: Vec<f64> = te
                        .iter()
                        .map(|&i| m.predict(&x[i]))
                        .collect::<Result<_, _>>()?;
                    Ok(mse(&pred, &select(&y, te)))
                },
            ),
            ModelKind::Meta => {
                let (mx, my) = meta_xy.as_ref().expect("meta data");
                cross_validate(
                    &set.folds,
                    set.k,
                    &grid,
                    Objective::Maximize,
                    |&n, tr, te| {
                        let cfg = ForestConfig {
                            n_trees: n as usize,
                            ..forest_cfg.clone()
                        };
                        let (m, _) =
                            RandomForest::train(&select(mx, tr), &select(my, tr), &cfg, seed)?;
                        let pred: Vec<u8> = te
                            .iter()
                            .map(|&i| m.predict(&mx[i]))
                            .collect::<Result<_, _>>()?;
                        Ok(accuracy(&pred, &select(my, te)))
                    },
                )
            }
        }
        .map_err(|e| Failure::Invariant(e.into()))?;
        let cv_path = sibling(&out, ".cv.csv");
        write(&cv_path, &cv_csv(kind, &grid, &report))?;
        println!(
            "cv best {}={} score={}",
            kind,
            grid[report.best],
            report.best_score()
        );
        chosen = Some(grid[report.best]);
        outputs.push(cv_path);
    }

    match a.kind {
        ModelKind::Hybnn => {
            let cfg = HybNNConfig {
                lr: chosen.unwrap_or(a.lr),
                ..nn_cfg
            };
            write(&out, &train_hybnn(rows, &cfg, ctx.seed)?.to_text())?;
            outputs.insert(0, out);
        }
        ModelKind::Svr => {
            let cfg = SvrConfig {
                c: chosen.unwrap_or(a.c),
                ..svr_cfg
            };
            write(&out, &train_svr(rows, &cfg, ctx.seed)?.to_text())?;
            outputs.insert(0, out);
        }
        ModelKind::Meta => {
            let cfg = ForestConfig {
                n_trees: chosen.map_or(a.trees, |n| n as usize),
                ..forest_cfg
            };
            let (forest, fit) = train_meta(rows, labels.as_ref().expect("labels"), &cfg, ctx.seed)?;
            if let Some(oob) = fit.oob_accuracy {
                println!("meta oob accuracy {oob:.4}");
            }
            let imp = sibling(&out, ".importance.csv");
            write(&imp, &importance_csv(&forest))?;
            if let (Some(h), Some(s)) = (&a.hybnn, &a.svr) {
                let bundle = Bundle {
                    meta: forest,
                    hybnn: load_regressor(h, HybNN::from_text)?,
                    svr: load_regressor(s, Svr::from_text)?,
                };
                let written = bundle.save(&out).input()?;
                // the bundle file itself is the primary output
                outputs.insert(0, written[written.len() - 1].clone());
                outputs.extend(written[..written.len() - 1].iter().cloned());
            } else {
                write(&out, &forest.to_text())?;
                outputs.insert(0, out);
            }
            outputs.push(imp);
        }
    }
    let mut m = ctx.manifest("train");
    m.input(&a.data).input()?;
    for p in [&a.meta_labels, &a.hybnn, &a.svr].into_iter().flatten() {
        m.input(p).input()?;
    }
    m.flag("kind", kind);
    m.flag("folds", a.folds);
    m.flag("holdout", a.holdout.as_deref().unwrap_or(""));
    m.finish(&outputs)?;
    Ok(())
}

fn cmd_atpg(ctx: &Ctx, a: &AtpgArgs) -> Result<(), Failure> {
    let p = prepare(&a.netlist)?;
    let spec = fault_spec(&a.faults, ctx.seed)?;
    let faults = faults_for(&p, &spec)?;
    let hspec: HeuristicSpec = a
        .heuristic
        .parse()
        .map_err(|e: String| Failure::Usage(anyhow!(e)))?;
    let guidance = Guidance::load(&hspec).input()?;
    let (heuristic, routing) = guidance.heuristic(&p).input()?;
    let report = campaign(&p, &faults, heuristic.as_ref(), a.backtrack_limit, ctx.jobs)?;

    // every detected fault must be confirmed by simulating the vectors
    let vectors: Vec<TestVector> = report
        .vectors()
        .iter()
        .map(|v| TestVector::from_bools(&v.filled(false)))
        .collect();
    let sites: Vec<_> = report.results.iter().map(|r| r.fault.site()).collect();
    let coverage =
        fault_simulate(&p.circuit, &vectors, &sites).map_err(|e| Failure::Invariant(e.into()))?;
    for (r, (_, status)) in report.results.iter().zip(&coverage.entries) {
        if r.fault.status == FaultStatus::Detected && *status == DetectionStatus::Undetected {
            return Err(Failure::Invariant(anyhow!(
                "vector for {} s-a-{} does not detect it",
                p.circuit.net(r.fault.net).name,
                r.fault.stuck_at as u8
            )));
        }
    }

    let out = ctx.out(&a.out, format!("{}.atpg.csv", p.name()))?;
    write(&out, &report.to_csv(&p.circuit))?;
    let vec_path = sibling(&out, ".vectors.csv");
    write(&vec_path, &write_vectors_csv(&p.circuit, &vectors))?;
    let cov_path = sibling(&out, ".coverage.csv");
    write(&cov_path, &coverage.to_csv(&p.circuit))?;
    let mut outputs = vec![out, vec_path, cov_path];
    if let Some(r) = &routing {
        let path = sibling(&outputs[0], ".routing.csv");
        write(&path, &routing_csv(&p.circuit, r))?;
        outputs.push(path);
    }
    let s = report.summary();
    println!(
        "{}: faults={} detected={} untestable={} aborted={} backtraces={} backtracks={} coverage={:.2}%",
        s.circuit, s.faults, s.detected, s.untestable, s.aborted, s.backtraces, s.backtracks, s.coverage
    );
    let mut m = ctx.manifest("atpg");
    m.input(&a.netlist).input()?;
    match &hspec {
        HeuristicSpec::Cop => {}
        HeuristicSpec::Model(path) | HeuristicSpec::Meta(path) => m.input(path).input()?,
    }
    m.flag("faults", &spec);
    m.flag("heuristic", &a.heuristic);
    m.flag("backtrack_limit", a.backtrack_limit);
    m.finish(&outputs)?;
    Ok(())
}

/// Campaign summaries by circuit from a report file or a directory of them.
fn summaries(path: &Path) -> Result<BTreeMap<String, CampaignSummary>, Failure> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(path)
            .with_context(|| format!("reading {}", path.display()))
            .input()?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let mut out = BTreeMap::new();
    for f in files {
        let text = read(&f)?;
        if !text.starts_with("fault_net,stuck_at,outcome") {
            continue;
        }
        let s = parse_campaign_summary(&text)
            .ok_or_else(|| Failure::Input(anyhow!("{}: missing summary block", f.display())))?;
        if out.insert(s.circuit.clone(), s).is_some() {
            return Err(Failure::Input(anyhow!(
                "{}: duplicate circuit",
                f.display()
            )));
        }
    }
    if out.is_empty() {
        return Err(Failure::Input(anyhow!(
            "{}: no campaign reports",
            path.display()
        )));
    }
    Ok(out)
}

/// `work_a / work_b`; two zero-work runs compare as equal.
pub fn work_ratio(a: u64, b: u64) -> f64 {
    if a == b {
        1.0
    } else {
        a as f64 / b as f64
    }
}

fn cmd_compare(ctx: &Ctx, a: &Path, b: &Path, out: &Option<PathBuf>) -> Result<(), Failure> {
    let sa = summaries(a)?;
    let sb = summaries(b)?;
    let mut names: Vec<&String> = sa.keys().chain(sb.keys()).collect();
    names.sort();
    names.dedup();
    let mut csv = String::from(
        "circuit,coverage_a,coverage_b,backtraces_a,backtracks_a,work_a,backtraces_b,backtracks_b,work_b,work_ratio,status\n",
    );
    for name in names {
        let line = match (sa.get(name), sb.get(name)) {
            (Some(x), Some(y)) => format!(
                "{name},{:.4},{:.4},{},{},{},{},{},{},{},ok",
                x.coverage,
                y.coverage,
                x.backtraces,
                x.backtracks,
                x.work(),
                y.backtraces,
                y.backtracks,
                y.work(),
                work_ratio(x.work(), y.work())
            ),
            (Some(x), None) => format!(
                "{name},{:.4},,{},{},{},,,,,missing_in_b",
                x.coverage,
                x.backtraces,
                x.backtracks,
                x.work()
            ),
            (None, Some(y)) => format!(
                "{name},,{:.4},,,,{},{},{},,missing_in_a",
                y.coverage,
                y.backtraces,
                y.backtracks,
                y.work()
            ),
            (None, None) => unreachable!(),
        };
        csv.push_str(&line);
        csv.push('\n');
    }
    print!("{csv}");
    let out = ctx.out(out, "compare.csv".into())?;
    write(&out, &csv)?;
    let mut m = ctx.manifest("compare");
    for p in [a, b] {
        if p.is_file() {
            m.input(p).input()?;
        }
    }
    m.finish(&[out])?;
    if csv.contains(",missing_in_") {
        log::warn!("some circuits appear in only one report set");
    }
    Ok(())
}
