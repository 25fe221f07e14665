//! Problem files: a single self-describing JSON document.
//!
//! Complex numbers are two-element arrays `[re, im]`, matrices are
//! row-major nested arrays, windows are named lists of projector matrices.
//! The `kind` field selects how the decoherence function is built:
//!
//! - `explicit_x`    — `x` holds the operator on `V ⊗ V`;
//! - `single_time`   — `rho` holds the state, `n_times` must be 1;
//! - `two_time`      — `rho` holds the state, trivial evolution on `H ⊗ H`;
//! - `n_time`        — `rho` plus `n_times + 1` evolution operators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use histent::{
    C64, ComplexMatrix, DecoherenceError, DecoherenceFunction, DecoherenceOperator,
    HistoryError, HistoryProposition, MatrixError, Window, make_window,
};

use crate::CliError;

/// Row-major matrix of `[re, im]` pairs.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    ExplicitX,
    SingleTime,
    TwoTime,
    NTime,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::ExplicitX => "explicit_x",
            ProblemKind::SingleTime => "single_time",
            ProblemKind::TwoTime => "two_time",
            ProblemKind::NTime => "n_time",
        }
    }
}

fn default_n_times() -> usize {
    1
}

fn default_tolerance() -> f64 {
    1e-9
}

/// The on-disk document, kept faithful for round-tripping.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub kind: ProblemKind,
    pub dim_h: usize,
    #[serde(default = "default_n_times")]
    pub n_times: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolutions: Option<Vec<JsonMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<JsonMatrix>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub windows: BTreeMap<String, Vec<JsonMatrix>>,
}

pub fn matrix_from_json(raw: &JsonMatrix) -> Result<ComplexMatrix, CliError> {
    let rows = raw.len();
    if rows == 0 {
        return Err(CliError::Parse("matrix has no rows".into()));
    }
    let cols = raw[0].len();
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (i, row) in raw.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::Parse(format!(
                "ragged matrix: row {i} has {got} entries, expected {cols}",
                got = row.len()
            )));
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(CliError::Parse(format!("non-finite entry at ({i},{j})")));
            }
            m.set(i, j, C64::new(re, im));
        }
    }
    Ok(m)
}

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| {
                    let z = m.get(i, j);
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

/// A parsed and semantically validated problem.
pub struct Problem {
    pub file: ProblemFile,
    pub dim_v: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub d: DecoherenceFunction,
    /// Explicit operator when the backend carries one.
    pub x_op: Option<DecoherenceOperator>,
    pub rho: Option<ComplexMatrix>,
    pub windows: BTreeMap<String, Window>,
}

fn classify_build_error(e: DecoherenceError) -> CliError {
    match e {
        DecoherenceError::Matrix(m) => classify_matrix_error(m),
        DecoherenceError::History(h) => classify_history_error(h),
        DecoherenceError::OperatorShape { side, expected } => CliError::Parse(format!(
            "operator side {side} does not match dim_v^2 = {expected}"
        )),
        DecoherenceError::EvolutionCount { expected, got } => CliError::Parse(format!(
            "expected {expected} evolution operators, got {got}"
        )),
        other => CliError::InputMatrix(other.to_string()),
    }
}

fn classify_matrix_error(e: MatrixError) -> CliError {
    match e {
        MatrixError::NotSquare { .. } | MatrixError::DimensionMismatch { .. } => {
            CliError::Parse(e.to_string())
        }
        other => CliError::InputMatrix(other.to_string()),
    }
}

fn classify_history_error(e: HistoryError) -> CliError {
    match e {
        HistoryError::Matrix(m) => classify_matrix_error(m),
        other => CliError::InputMatrix(other.to_string()),
    }
}

impl Problem {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let file: ProblemFile =
            serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        Self::build(file)
    }

    pub fn build(file: ProblemFile) -> Result<Self, CliError> {
        if file.dim_h == 0 {
            return Err(CliError::Parse("dim_h must be positive".into()));
        }
        if file.n_times == 0 {
            return Err(CliError::Parse("n_times must be positive".into()));
        }
        let dim_v = file.dim_h.pow(file.n_times as u32);
        let tolerance = file.tolerance;
        let seed = file.seed;

        let want_shape = |m: &ComplexMatrix, side: usize, what: &str| -> Result<(), CliError> {
            if m.rows() != side || m.cols() != side {
                return Err(CliError::Parse(format!(
                    "{what} must be {side}x{side}, got {r}x{c}",
                    r = m.rows(),
                    c = m.cols()
                )));
            }
            Ok(())
        };

        let mut rho = None;
        if let Some(raw) = &file.rho {
            let m = matrix_from_json(raw)?;
            want_shape(&m, file.dim_h, "rho")?;
            rho = Some(m);
        }

        let d = match file.kind {
            ProblemKind::ExplicitX => {
                let raw = file
                    .x
                    .as_ref()
                    .ok_or_else(|| CliError::Parse("explicit_x requires the x field".into()))?;
                let m = matrix_from_json(raw)?;
                want_shape(&m, dim_v * dim_v, "x")?;
                let op = DecoherenceOperator::new(m, dim_v).map_err(classify_build_error)?;
                DecoherenceFunction::from_explicit(op)
            }
            ProblemKind::SingleTime => {
                if file.n_times != 1 {
                    return Err(CliError::Parse("single_time requires n_times = 1".into()));
                }
                let state = rho
                    .clone()
                    .ok_or_else(|| CliError::Parse("single_time requires rho".into()))?;
                DecoherenceFunction::from_single_time(state, tolerance)
                    .map_err(classify_build_error)?
            }
            ProblemKind::TwoTime => {
                if file.n_times != 2 {
                    return Err(CliError::Parse("two_time requires n_times = 2".into()));
                }
                let state = rho
                    .clone()
                    .ok_or_else(|| CliError::Parse("two_time requires rho".into()))?;
                DecoherenceFunction::from_two_time(state, tolerance)
                    .map_err(classify_build_error)?
            }
            ProblemKind::NTime => {
                let state = rho
                    .clone()
                    .ok_or_else(|| CliError::Parse("n_time requires rho".into()))?;
                let raws = file
                    .evolutions
                    .as_ref()
                    .ok_or_else(|| CliError::Parse("n_time requires evolutions".into()))?;
                let mut evolutions = Vec::with_capacity(raws.len());
                for (k, raw) in raws.iter().enumerate() {
                    let m = matrix_from_json(raw)?;
                    want_shape(&m, file.dim_h, &format!("evolutions[{k}]"))?;
                    evolutions.push(m);
                }
                DecoherenceFunction::from_chain(state, evolutions, file.n_times, tolerance)
                    .map_err(classify_build_error)?
            }
        };
        let x_op = d.explicit_operator().cloned();

        let mut windows = BTreeMap::new();
        for (name, raw_blocks) in &file.windows {
            let mut blocks = Vec::with_capacity(raw_blocks.len());
            for raw in raw_blocks {
                let m = matrix_from_json(raw)?;
                want_shape(&m, dim_v, &format!("window '{name}' block"))?;
                let p = HistoryProposition::new(m, tolerance).map_err(classify_history_error)?;
                blocks.push(p);
            }
            let w = make_window(blocks, tolerance).map_err(classify_history_error)?;
            windows.insert(name.clone(), w);
        }

        Ok(Problem {
            file,
            dim_v,
            tolerance,
            seed,
            d,
            x_op,
            rho,
            windows,
        })
    }
}
