// SPDX-License-Identifier: Apache-2.0

//! Combinational stuck-at ATPG: BENCH netlists, five-valued simulation,
//! COP/SCOAP testability, hard-fault ranking, PODEM with pluggable backtrace
//! guidance, and label generation for learned guidance.

pub mod datagen;
pub mod faults;
pub mod generate;
pub mod logic;
pub mod netlist;
pub mod podem;
pub mod testability;

pub use faults::{Fault, FaultSpec, FaultStatus};
pub use logic::{FaultSite, LogicValue, TestVector, ValueState};
pub use netlist::{parse_bench, Circuit, GateId, GateType, NetId};
pub use podem::{BacktraceHeuristic, PodemConfig};
pub use testability::{FeatureVector, Testability};
