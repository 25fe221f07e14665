//! Command implementations behind the `histent` binary.
//!
//! Exit-code contract:
//!
//! | code | meaning                                              |
//! |------|------------------------------------------------------|
//! | 0    | success                                              |
//! | 1    | parse error: unreadable file, bad JSON, shape or     |
//! |      | declaration mismatch, unknown window name            |
//! | 2    | operator validation failed                           |
//! | 3    | requested window is not consistent                   |
//! | 4    | strategy incompatible with the backend, or empty     |
//! |      | candidate family                                     |
//! | 5    | input matrix fails a semantic check (not a density   |
//! |      | matrix, not a projector, not Hermitian)              |

pub mod problem;
pub mod report;

use std::fmt;
use std::path::Path;

use histent::sample::{random_projector, seeded_rng};
use histent::{
    C64, ComplexMatrix, DecoherenceError, EntropyError, GridSpec, HistoryProposition,
    HomogeneousHistory, HomogeneousSum, SearchError, entropy, impurity_split, kron_trace,
    minimize_exhaustive, minimize_greedy_refinement, minimize_parametrized_1d,
    minimize_spectral, validate_with_windows,
};
use rand::Rng;

use problem::{Problem, ProblemFile, ProblemKind, matrix_from_json, matrix_to_json};
use report::{
    IxEntry, LN_2, ProblemDigest, Report, SearchSection, SplitSection, ValidationSection,
    WindowSection,
};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable input, malformed JSON, or shape/declaration mismatch.
    Parse(String),
    /// The operator failed validation; the report carries the details.
    ValidationFailed(Box<Report>),
    /// The requested window is not consistent.
    Inconsistent { residual: f64, tol: f64 },
    /// Strategy incompatible with the backend, or nothing to search.
    Strategy(String),
    /// A matrix failed a semantic check.
    InputMatrix(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(msg) => write!(f, "parse error: {msg}"),
            CliError::ValidationFailed(_) => write!(f, "operator validation failed"),
            CliError::Inconsistent { residual, tol } => write!(
                f,
                "window is not consistent: residual {residual:.17e} exceeds tolerance {tol:.3e}"
            ),
            CliError::Strategy(msg) => write!(f, "strategy error: {msg}"),
            CliError::InputMatrix(msg) => write!(f, "input matrix error: {msg}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 1,
            CliError::ValidationFailed(_) => 2,
            CliError::Inconsistent { .. } => 3,
            CliError::Strategy(_) => 4,
            CliError::InputMatrix(_) => 5,
        }
    }
}

pub fn digest(problem: &Problem) -> ProblemDigest {
    ProblemDigest {
        kind: problem.file.kind.as_str().to_string(),
        dim_h: problem.file.dim_h,
        n_times: problem.file.n_times,
        dim_v: problem.dim_v,
        tolerance: problem.tolerance,
        seed: problem.seed,
    }
}

pub fn read_problem(path: &Path, tol: Option<f64>, seed: Option<u64>) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let mut file: ProblemFile =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    if let Some(t) = tol {
        file.tolerance = t;
    }
    if let Some(s) = seed {
        file.seed = s;
    }
    Problem::build(file)
}

fn operator_validation(problem: &Problem, sample_count: usize) -> Option<ValidationSection> {
    let op = problem.x_op.as_ref()?;
    let windows: Vec<&histent::Window> = problem.windows.values().collect();
    let core = validate_with_windows(op, &windows, sample_count, problem.tolerance, problem.seed);
    let mut section = ValidationSection::from_core(&core);

    let mut rng = seeded_rng(problem.seed);
    match problem.file.kind {
        ProblemKind::SingleTime => {
            // cross-check the operator against the direct formula
            let rho = problem.rho.as_ref().expect("single_time carries rho");
            let n = problem.dim_v;
            let mut worst = 0.0_f64;
            for _ in 0..50 {
                let rank_a = 1 + rng.random_range(0..n.max(2) - 1);
                let rank_b = 1 + rng.random_range(0..n.max(2) - 1);
                let p = random_projector(&mut rng, n, rank_a);
                let q = random_projector(&mut rng, n, rank_b);
                let via_op = kron_trace(&p, &q, op.matrix());
                let direct = p.mul(rho).mul(&q).trace();
                worst = worst.max((via_op - direct).norm());
            }
            section.bridge_residual = Some(worst);
        }
        ProblemKind::TwoTime => {
            // cross-check against the chain recipe on homogeneous pairs
            let recipe = problem.d.recipe().expect("two_time carries a recipe");
            let n = problem.file.dim_h;
            let mut worst = 0.0_f64;
            for _ in 0..20 {
                let mut slots = Vec::with_capacity(4);
                for _ in 0..4 {
                    let rank = 1 + rng.random_range(0..n.max(2) - 1);
                    slots.push(random_projector(&mut rng, n, rank));
                }
                let later = slots.split_off(2);
                let a = HomogeneousHistory::new(slots, problem.tolerance)
                    .expect("random projectors are valid");
                let b = HomogeneousHistory::new(later, problem.tolerance)
                    .expect("random projectors are valid");
                let via_op = problem
                    .d
                    .eval_sum(&HomogeneousSum::single(a.clone()), &HomogeneousSum::single(b.clone()))
                    .expect("explicit backend evaluates sums");
                let via_chain = recipe.eval_sums(
                    &HomogeneousSum::single(a),
                    &HomogeneousSum::single(b),
                )
                .expect("chain recipe evaluates sums");
                worst = worst.max((via_op - via_chain).norm());
            }
            section.chain_agreement_residual = Some(worst);
        }
        _ => {}
    }
    Some(section)
}

fn chain_validation(problem: &Problem) -> ValidationSection {
    // no explicit operator: check normalisation through the chain formula
    let recipe = problem.d.recipe().expect("chain backend carries its recipe");
    let id = ComplexMatrix::identity(problem.file.dim_h);
    let ones = HomogeneousSum::single(
        HomogeneousHistory::new(vec![id; problem.file.n_times], problem.tolerance)
            .expect("identity slots form a history"),
    );
    let value = recipe
        .eval_sums(&ones, &ones)
        .expect("normalisation evaluates");
    let deviation = (value - C64::new(1.0, 0.0)).norm();
    let passed = deviation <= problem.tolerance;
    let violations = if passed {
        Vec::new()
    } else {
        vec![format!("normalization: |d(1,1) - 1| = {deviation:.3e}")]
    };
    ValidationSection {
        passed,
        swap_symmetry_residual: None,
        trace_deviation: None,
        min_sampled_diagonal: None,
        max_sampled_diagonal_imag: None,
        samples: 1,
        violations,
        bridge_residual: None,
        chain_agreement_residual: None,
        normalization_deviation: Some(deviation),
    }
}

/// `validate`: check the operator conditions, or the chain normalisation
/// when no explicit operator exists.
pub fn cmd_validate(problem: &Problem, sample_count: usize) -> Result<Report, CliError> {
    let mut report = Report::new("validate", digest(problem));
    let section = match operator_validation(problem, sample_count) {
        Some(s) => s,
        None => chain_validation(problem),
    };
    let passed = section.passed;
    report.validation = Some(section);
    if !passed {
        return Err(CliError::ValidationFailed(Box::new(report)));
    }
    Ok(report)
}

/// `entropy`: consistency, probabilities and the entropy functionals of one
/// named window.
pub fn cmd_entropy(
    problem: &Problem,
    window_name: &str,
    exponents: &[f64],
    bits: bool,
) -> Result<Report, CliError> {
    let window = problem
        .windows
        .get(window_name)
        .ok_or_else(|| CliError::Parse(format!("no window named '{window_name}' in the file")))?;
    let rep = match entropy::report(&problem.d, window, problem.tolerance) {
        Ok(r) => r,
        Err(EntropyError::InconsistentWindow { residual, tol }) => {
            return Err(CliError::Inconsistent { residual, tol });
        }
        Err(e) => return Err(CliError::Strategy(e.to_string())),
    };
    let mut i_x_entries = Vec::with_capacity(exponents.len());
    for &x in exponents {
        let value = entropy::i_x(&problem.d, window, x, problem.tolerance).map_err(|e| match e {
            EntropyError::Domain(msg) => CliError::Parse(msg),
            other => CliError::Strategy(other.to_string()),
        })?;
        i_x_entries.push(IxEntry {
            x,
            value,
            value_bits: bits.then(|| value / LN_2),
        });
    }
    let mut report = Report::new("entropy", digest(problem));
    report.windows = Some(vec![WindowSection {
        name: window_name.to_string(),
        block_dims: rep.window_block_dims,
        probabilities: rep.probabilities,
        consistency_residual: rep.consistency_residual,
        i_hat: rep.i_hat,
        i_norm: rep.i_norm,
        i_hat_bits: bits.then(|| rep.i_hat / LN_2),
        i_norm_bits: bits.then(|| rep.i_norm / LN_2),
        i_x: i_x_entries,
    }]);
    Ok(report)
}

fn classify_search_error(e: SearchError) -> CliError {
    match e {
        SearchError::SpectralNeedsRecipe
        | SearchError::NonUnitaryEvolution
        | SearchError::GreedyNeedsExplicit
        | SearchError::IncompatibleBackend { .. }
        | SearchError::EmptyFamily => CliError::Strategy(e.to_string()),
        SearchError::Decoherence(DecoherenceError::InhomogeneousChainEval) => {
            CliError::Strategy(DecoherenceError::InhomogeneousChainEval.to_string())
        }
        SearchError::Entropy(EntropyError::Decoherence(
            DecoherenceError::InhomogeneousChainEval,
        )) => CliError::Strategy(DecoherenceError::InhomogeneousChainEval.to_string()),
        other => CliError::InputMatrix(other.to_string()),
    }
}

/// `minimize`: run one strategy and report the best window found.
pub fn cmd_minimize(
    problem: &Problem,
    strategy: &str,
    budget: Option<usize>,
    bits: bool,
) -> Result<Report, CliError> {
    let tol = problem.tolerance;
    let result = match strategy {
        "spectral" => minimize_spectral(&problem.d, tol).map_err(classify_search_error)?,
        "param1d" => {
            let grid = GridSpec {
                basis_samples: budget.unwrap_or(200),
                ..GridSpec::default()
            };
            minimize_parametrized_1d(&problem.d, &grid, 8, problem.seed, tol)
                .map_err(classify_search_error)?
        }
        "greedy" => {
            let rounds = budget.unwrap_or(16);
            minimize_greedy_refinement(&problem.d, rounds, 6, problem.seed, tol)
                .map_err(classify_search_error)?
        }
        "exhaustive" => {
            let mut family = Vec::new();
            for w in problem.windows.values() {
                family.extend(
                    w.coarse_grainings()
                        .map_err(|e| CliError::Strategy(e.to_string()))?,
                );
            }
            if family.is_empty() {
                return Err(CliError::Strategy(
                    "exhaustive strategy needs named windows in the problem file".into(),
                ));
            }
            minimize_exhaustive(&problem.d, &family, tol).map_err(classify_search_error)?
        }
        other => return Err(CliError::Parse(format!("unknown strategy '{other}'"))),
    };
    let mut report = Report::new("minimize", digest(problem));
    report.search = Some(SearchSection::from_core(&result, bits));
    Ok(report)
}

fn read_matrix_file(path: &Path) -> Result<ComplexMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let raw: problem::JsonMatrix =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    matrix_from_json(&raw)
}

/// `split`: write the two shifted operators and report the reconstruction
/// and skew-diagonal residuals.
pub fn cmd_split(
    problem: &Problem,
    s1_path: &Path,
    s2_path: &Path,
    out_prefix: &Path,
    sample_count: usize,
) -> Result<Report, CliError> {
    let op = problem.x_op.as_ref().ok_or_else(|| {
        CliError::Strategy("split needs an explicit operator behind the problem".into())
    })?;
    let s1 = read_matrix_file(s1_path)?;
    let s2 = read_matrix_file(s2_path)?;
    let (plus, minus) = impurity_split(op, &s1, &s2, problem.tolerance).map_err(|e| match e {
        DecoherenceError::NotHermitian { residual } => {
            CliError::InputMatrix(format!("shift operand not Hermitian: residual {residual:.3e}"))
        }
        DecoherenceError::SpaceMismatch { expected, got } => CliError::Parse(format!(
            "shift operand acts on dim {got}, expected {expected}"
        )),
        other => CliError::InputMatrix(other.to_string()),
    })?;

    let recombined = plus
        .matrix()
        .scale_real(0.5)
        .add(&minus.matrix().scale_real(0.5));
    let reconstruction_residual = recombined.max_abs_diff(op.matrix());

    // sample the skew part on the diagonal
    let mut rng = seeded_rng(problem.seed);
    let n = problem.dim_v;
    let mut y_diagonal_max = 0.0_f64;
    for _ in 0..sample_count.max(1) {
        let rank = 1 + rng.random_range(0..n.max(2) - 1);
        let a = random_projector(&mut rng, n, rank);
        let p = HistoryProposition::new(a, problem.tolerance)
            .expect("random projector is valid");
        let on_plus = kron_trace(p.matrix(), p.matrix(), plus.matrix());
        let on_base = kron_trace(p.matrix(), p.matrix(), op.matrix());
        y_diagonal_max = y_diagonal_max.max((on_plus - on_base).norm());
    }

    let windows: Vec<&histent::Window> = problem.windows.values().collect();
    let plus_validation = ValidationSection::from_core(&validate_with_windows(
        &plus,
        &windows,
        sample_count,
        problem.tolerance,
        problem.seed,
    ));
    let minus_validation = ValidationSection::from_core(&validate_with_windows(
        &minus,
        &windows,
        sample_count,
        problem.tolerance,
        problem.seed,
    ));

    let write_out = |suffix: &str, op: &histent::DecoherenceOperator| -> Result<String, CliError> {
        let mut file = problem.file.clone();
        file.kind = ProblemKind::ExplicitX;
        file.rho = None;
        file.evolutions = None;
        file.x = Some(matrix_to_json(op.matrix()));
        let path = out_prefix.with_extension(format!("{suffix}.json"));
        let text = serde_json::to_string_pretty(&file)
            .map_err(|e| CliError::Parse(e.to_string()))?;
        std::fs::write(&path, text)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        Ok(path.display().to_string())
    };
    let plus_path = write_out("plus", &plus)?;
    let minus_path = write_out("minus", &minus)?;

    let mut report = Report::new("split", digest(problem));
    report.split = Some(SplitSection {
        plus_path,
        minus_path,
        reconstruction_residual,
        y_diagonal_max,
        plus_validation,
        minus_validation,
    });
    Ok(report)
}
