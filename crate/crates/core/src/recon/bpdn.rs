use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::pdhg::{self, FidelityNorm, Kkt, SolveStatus, SolverSettings};
use crate::error::{invalid, Error, Result};
use crate::operators::{haar_forward, haar_inverse, HaarSynthesis, LinearOperator, SensingOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SparsityBasis {
    #[default]
    Identity,
    Haar,
}

impl FromStr for SparsityBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "pixel" => Ok(Self::Identity),
            "haar" => Ok(Self::Haar),
            other => Err(invalid(format!("unknown sparsity basis '{other}'"))),
        }
    }
}

/// `min ‖Ψ* u‖₁  s.t.  ‖y − B u‖₁ ≤ ε`.
#[derive(Debug, Clone)]
pub struct BpdnProblem<'a> {
    pub op: &'a SensingOp,
    pub y: Array1<f64>,
    pub epsilon: f64,
    pub sparsity_basis: SparsityBasis,
    pub settings: SolverSettings,
}

impl<'a> BpdnProblem<'a> {
    pub fn new(op: &'a SensingOp, y: Array1<f64>, epsilon: f64) -> Self {
        Self {
            op,
            y,
            epsilon,
            sparsity_basis: SparsityBasis::Identity,
            settings: SolverSettings::default(),
        }
    }

    pub fn with_basis(mut self, basis: SparsityBasis) -> Self {
        self.sparsity_basis = basis;
        self
    }

    pub fn with_settings(mut self, settings: SolverSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.settings.max_iters = max_iters;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconResult {
    #[serde(skip)]
    pub estimate: Array2<f64>,
    pub iterations: usize,
    /// Constraint excess `max(0, ‖y − B f̂‖ − ε)`.
    pub primal_residual: f64,
    /// `‖y − B f̂‖` in the fidelity norm.
    pub fidelity_value: f64,
    /// `‖Ψ* f̂‖₁`.
    pub objective: f64,
    pub status: SolveStatus,
    /// Primal tolerance the status was judged against.
    pub tol_primal: f64,
    pub kkt: Kkt,
    /// `(iteration, optimality score)` at each solver restart.
    pub restarts: Vec<(usize, f64)>,
}

pub(crate) fn validate(y: &Array1<f64>, m: usize, epsilon: f64) -> Result<()> {
    if y.len() != m {
        return Err(invalid(format!(
            "{} measurements for an operator with M = {m}",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(invalid("measurements must be finite"));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!(
            "fidelity radius must be nonnegative, got {epsilon}"
        )));
    }
    Ok(())
}

/// Runs the engine on `op` directly or on `op ∘ Ψ` and maps the solution
/// back to the image domain.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run<O: LinearOperator>(
    op: O,
    op_norm: f64,
    side: usize,
    y: &Array1<f64>,
    p: FidelityNorm,
    epsilon: f64,
    basis: SparsityBasis,
    settings: &SolverSettings,
) -> Result<ReconResult> {
    let out = match basis {
        SparsityBasis::Identity => pdhg::solve(&op, y.view(), p, epsilon, op_norm, settings),
        // Ψ is orthonormal, so the composed operator has the same norm.
        SparsityBasis::Haar => {
            let wrapped = HaarSynthesis::new(op, side)?;
            pdhg::solve(&wrapped, y.view(), p, epsilon, op_norm, settings)
        }
    };
    let coeffs = out
        .x
        .into_shape_with_order((side, side))
        .expect("domain is an image");
    let (estimate, objective) = match basis {
        SparsityBasis::Identity => {
            let obj = coeffs.iter().map(|v| v.abs()).sum();
            (coeffs, obj)
        }
        SparsityBasis::Haar => {
            let img = haar_inverse(coeffs.view())?;
            let obj = haar_forward(img.view())?.iter().map(|v| v.abs()).sum();
            (img, obj)
        }
    };
    Ok(ReconResult {
        estimate,
        iterations: out.iterations,
        primal_residual: out.kkt.excess,
        fidelity_value: out.kkt.fidelity,
        objective,
        status: out.status,
        tol_primal: out.tol_primal,
        kkt: out.kkt,
        restarts: out.restarts,
    })
}

/// Basis pursuit denoising with ℓ1 data fidelity over the sensing operator.
/// Deterministic for a given problem and iteration budget.
pub fn solve_bpdn_l1(problem: &BpdnProblem<'_>) -> Result<ReconResult> {
    let op = problem.op;
    validate(&problem.y, op.measurement_count(), problem.epsilon)?;
    run(
        op,
        op.norm(),
        op.grid().side(),
        &problem.y,
        FidelityNorm::L1,
        problem.epsilon,
        problem.sparsity_basis,
        &problem.settings,
    )
}
