//! Machine-readable reports. Field order is fixed by the struct layout and
//! floating-point values serialise with full round-trip precision, so two
//! runs with identical inputs produce byte-identical documents apart from
//! the timestamp.

use serde::Serialize;

use histent::{SearchResult, ValidationReport};

pub const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Serialize)]
pub struct Report {
    pub version: String,
    pub timestamp_unix_ms: u64,
    pub command: String,
    pub argv: Vec<String>,
    pub problem: ProblemDigest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub windows: Option<Vec<WindowSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSection>,
}

impl Report {
    pub fn new(command: &str, problem: ProblemDigest) -> Self {
        let timestamp_unix_ms = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix_ms,
            command: command.to_string(),
            argv: std::env::args().collect(),
            problem,
            validation: None,
            windows: None,
            search: None,
            split: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ProblemDigest {
    pub kind: String,
    pub dim_h: usize,
    pub n_times: usize,
    pub dim_v: usize,
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct ValidationSection {
    pub passed: bool,
    /// Operator-condition residuals; absent for chain backends, which carry
    /// no explicit operator to check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swap_symmetry_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_sampled_diagonal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_sampled_diagonal_imag: Option<f64>,
    pub samples: usize,
    pub violations: Vec<String>,
    /// Worst deviation of the operator values from `tr(P rho Q)`
    /// (single-time problems only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bridge_residual: Option<f64>,
    /// Worst deviation from the chain-recipe values on homogeneous pairs
    /// (two-time problems only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_agreement_residual: Option<f64>,
    /// `|d(1,1) - 1|` (chain problems without an explicit operator).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization_deviation: Option<f64>,
}

impl ValidationSection {
    pub fn from_core(report: &ValidationReport) -> Self {
        ValidationSection {
            passed: report.passed(),
            swap_symmetry_residual: Some(report.swap_symmetry_residual),
            trace_deviation: Some(report.trace_deviation),
            min_sampled_diagonal: Some(report.min_diagonal),
            max_sampled_diagonal_imag: Some(report.max_diagonal_imag),
            samples: report.samples,
            violations: report.violations(),
            bridge_residual: None,
            chain_agreement_residual: None,
            normalization_deviation: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct IxEntry {
    pub x: f64,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_bits: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct WindowSection {
    pub name: String,
    pub block_dims: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub consistency_residual: f64,
    pub i_hat: f64,
    pub i_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i_hat_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i_norm_bits: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub i_x: Vec<IxEntry>,
}

#[derive(Debug, Serialize)]
pub struct SearchSection {
    pub strategy: String,
    /// Upper-bound strategies may sit above the true minimum; the spectral
    /// value is exact for unitary recipes.
    pub is_upper_bound: bool,
    pub best_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_value_bits: Option<f64>,
    pub block_dims: Vec<usize>,
    pub evaluations: usize,
    pub seed: u64,
}

impl SearchSection {
    pub fn from_core(result: &SearchResult, bits: bool) -> Self {
        SearchSection {
            strategy: result.strategy.to_string(),
            is_upper_bound: result.strategy != histent::Strategy::Spectral,
            best_value: result.best_value,
            best_value_bits: bits.then(|| result.best_value / LN_2),
            block_dims: result.best_window.block_dims(),
            evaluations: result.evaluations,
            seed: result.seed,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SplitSection {
    pub plus_path: String,
    pub minus_path: String,
    /// `max |(X+ + X-)/2 - X|` over entries.
    pub reconstruction_residual: f64,
    /// Largest sampled `|tr((a ⊗ a) Y)|`.
    pub y_diagonal_max: f64,
    pub plus_validation: ValidationSection,
    pub minus_validation: ValidationSection,
}
