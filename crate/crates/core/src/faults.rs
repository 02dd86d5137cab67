// SPDX-License-Identifier: Apache-2.0

//! Stuck-at fault lists, detection probabilities and hard-fault ranking.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::logic::FaultSite;
use crate::netlist::{Circuit, NetId};
use crate::testability::Testability;

/// Hard faults targeted when no count is given.
pub const DEFAULT_HARD_FAULTS: usize = 100;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum FaultStatus {
    Untried,
    Detected,
    Untestable,
    Aborted,
}

impl FaultStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FaultStatus::Untried => "untried",
            FaultStatus::Detected => "detected",
            FaultStatus::Untestable => "untestable",
            FaultStatus::Aborted => "aborted",
        }
    }
}

impl fmt::Display for FaultStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Fault {
    pub net: NetId,
    pub stuck_at: bool,
    pub p_detect: f64,
    pub status: FaultStatus,
}

impl Fault {
    pub fn new(net: NetId, stuck_at: bool) -> Self {
        Fault {
            net,
            stuck_at,
            p_detect: 0.0,
            status: FaultStatus::Untried,
        }
    }

    pub fn site(&self) -> FaultSite {
        FaultSite::new(self.net, self.stuck_at)
    }

    /// Records an ATPG verdict. Only untried faults may change status.
    pub fn resolve(&mut self, status: FaultStatus) {
        debug_assert_eq!(self.status, FaultStatus::Untried);
        debug_assert_ne!(status, FaultStatus::Untried);
        self.status = status;
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FaultError {
    #[error("k must be positive")]
    ZeroK,
    #[error("invalid fault selection `{0}`; expected hard:K, random:K:SEED, all or file:PATH")]
    BadSpec(String),
    #[error("fault file line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Both polarities on every net, s-a-0 first.
pub fn enumerate_faults(circuit: &Circuit) -> Vec<Fault> {
    circuit
        .net_ids()
        .flat_map(|n| [Fault::new(n, false), Fault::new(n, true)])
        .collect()
}

/// s-a-0: `cc * co`; s-a-1: `(1 - cc) * co`.
pub fn detection_probability(stuck_at: bool, cc: f64, co: f64) -> f64 {
    if stuck_at {
        (1.0 - cc) * co
    } else {
        cc * co
    }
}

/// Fills `p_detect` on every fault.
pub fn annotate(faults: &mut [Fault], t: &Testability) {
    for f in faults {
        let i = f.net.index();
        f.p_detect = detection_probability(f.stuck_at, t.cc[i], t.co[i]);
    }
}

/// The `k` lowest detection probabilities, ties by (net, stuck-at).
pub fn rank_hard_faults(faults: &[Fault], k: usize) -> Result<Vec<Fault>, FaultError> {
    if k == 0 {
        return Err(FaultError::ZeroK);
    }
    let mut sorted = faults.to_vec();
    sorted.sort_by(|a, b| {
        a.p_detect
            .total_cmp(&b.p_detect)
            .then(a.net.cmp(&b.net))
            .then(a.stuck_at.cmp(&b.stuck_at))
    });
    sorted.truncate(k);
    Ok(sorted)
}

/// `k` faults drawn uniformly without replacement, kept in list order.
pub fn random_faults(faults: &[Fault], k: usize, seed: u64) -> Result<Vec<Fault>, FaultError> {
    if k == 0 {
        return Err(FaultError::ZeroK);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = k.min(faults.len());
    let mut picked = sample(&mut rng, faults.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| faults[i]).collect())
}

/// Fault selection as given on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FaultSpec {
    Hard(usize),
    Random { k: usize, seed: u64 },
    All,
    File(String),
}

impl Default for FaultSpec {
    fn default() -> Self {
        FaultSpec::Hard(DEFAULT_HARD_FAULTS)
    }
}

impl FromStr for FaultSpec {
    type Err = FaultError;

    fn from_str(s: &str) -> Result<Self, FaultError> {
        let bad = || FaultError::BadSpec(s.to_string());
        let parts: Vec<&str> = s.splitn(3, ':').collect();
        match parts.as_slice() {
            ["all"] => Ok(FaultSpec::All),
            ["hard", k] => {
                let k: usize = k.parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(FaultError::ZeroK);
                }
                Ok(FaultSpec::Hard(k))
            }
            ["random", k, seed] => {
                let k: usize = k.parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(FaultError::ZeroK);
                }
                Ok(FaultSpec::Random {
                    k,
                    seed: seed.parse().map_err(|_| bad())?,
                })
            }
            ["file", rest @ ..] if !rest.is_empty() => Ok(FaultSpec::File(rest.join(":"))),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultSpec::Hard(k) => write!(f, "hard:{k}"),
            FaultSpec::Random { k, seed } => write!(f, "random:{k}:{seed}"),
            FaultSpec::All => f.write_str("all"),
            FaultSpec::File(p) => write!(f, "file:{p}"),
        }
    }
}

/// Resolves a non-file spec against an annotated fault universe.
pub fn select_faults(all: &[Fault], spec: &FaultSpec) -> Result<Vec<Fault>, FaultError> {
    match spec {
        FaultSpec::Hard(k) => rank_hard_faults(all, *k),
        FaultSpec::Random { k, seed } => random_faults(all, *k, *seed),
        FaultSpec::All => Ok(all.to_vec()),
        FaultSpec::File(_) => Err(FaultError::BadSpec(spec.to_string())),
    }
}

/// Fault list CSV: `net,stuck_at,p_detect,status`.
pub fn faults_csv(circuit: &Circuit, faults: &[Fault]) -> String {
    let mut out = String::from("net,stuck_at,p_detect,status\n");
    for f in faults {
        out.push_str(&format!(
            "{},{},{},{}\n",
            circuit.net(f.net).name,
            f.stuck_at as u8,
            f.p_detect,
            f.status
        ));
    }
    out
}

/// Reads a fault list CSV; `p_detect` and `status` columns are optional and
/// statuses are reset to untried.
pub fn read_faults_csv(circuit: &Circuit, text: &str) -> Result<Vec<Fault>, FaultError> {
    let mut faults = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (idx == 0 && line.starts_with("net,")) {
            continue;
        }
        let err = |message: String| FaultError::Format {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(err("expected net,stuck_at".into()));
        }
        let net = circuit
            .find_net(fields[0])
            .ok_or_else(|| err(format!("unknown net `{}`", fields[0])))?;
        let stuck_at = match fields[1] {
            "0" => false,
            "1" => true,
            other => return Err(err(format!("bad stuck-at value `{other}`"))),
        };
        let mut f = Fault::new(net, stuck_at);
        if let Some(p) = fields.get(2) {
            f.p_detect = p.parse().map_err(|_| err(format!("bad p_detect `{p}`")))?;
        }
        faults.push(f);
    }
    Ok(faults)
}
