//! JSON reports printed by the property commands.

use serde::Serialize;

use bnnv_core::ceg::{CegStats, IterationTrace};
use bnnv_core::properties::{FormulaStats, SolverReport, UnknownReason};
use bnnv_core::{Verdict, Witness};

use crate::{EXIT_COUNTEREXAMPLE, EXIT_HOLDS, EXIT_UNKNOWN};

pub const SCHEMA_VERSION: u32 = 1;

pub fn exit_code(v: &Verdict) -> i32 {
    match v {
        Verdict::Holds => EXIT_HOLDS,
        Verdict::Counterexample { .. } => EXIT_COUNTEREXAMPLE,
        Verdict::Unknown { .. } => EXIT_UNKNOWN,
    }
}

/// One-line summary of a verdict for `property`.
pub fn status(property: &str, v: &Verdict) -> String {
    match v {
        Verdict::Holds => match property {
            "robustness" => "robust (certified)",
            "equivalence" => "equivalent (certified)",
            _ => "no universal perturbation (certified)",
        }
        .into(),
        Verdict::Counterexample {
            witness: Witness::Robustness { degenerate: true, .. },
        } => "counterexample (image already misclassified)".into(),
        Verdict::Counterexample { .. } => "counterexample".into(),
        Verdict::Unknown {
            reason: UnknownReason::Timeout,
        } => "unknown (timeout)".into(),
        Verdict::Unknown {
            reason: UnknownReason::ConflictLimit,
        } => "unknown (conflict limit)".into(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseReport {
    pub phase: u8,
    /// Pixels allowed to move, or `null` for all of them.
    pub pixels: Option<Vec<usize>>,
    pub verdict: Verdict,
    pub formula: FormulaStats,
    pub solver: SolverReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ceg: Option<CegStats>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<IterationTrace>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub property: &'static str,
    pub engine: &'static str,
    pub saliency: &'static str,
    pub model: String,
    pub image: String,
    pub label: usize,
    pub label_source: &'static str,
    pub epsilon: i64,
    pub status: String,
    pub verdict: Verdict,
    /// Phase that produced the final verdict.
    pub decided_in_phase: u8,
    pub phases: Vec<PhaseReport>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub schema_version: u32,
    pub command: &'static str,
    pub property: &'static str,
    pub inputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub status: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula: Option<FormulaStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverReport>,
    pub seconds: f64,
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}
