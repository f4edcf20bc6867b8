use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::metrics::relative_error;
use crate::error::{invalid, Result};
use crate::geometry::{
    fermat_spiral_layout, integer_grid_layout, CoreLayout, ImageGrid, LayoutKind, Optics,
};
use crate::operators::{make_sketches, SensingOp, SketchDistribution};
use crate::physics::{NoiseKind, NoiseModel};
use crate::recon::{solve_bpdn_l1, BpdnProblem, SolveStatus, SolverSettings, SparsityBasis};
use crate::rng::{derive_seed, rng_from_seed};

/// How the ℓ1 fidelity radius is chosen for a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum EpsilonRule {
    Zero,
    Fixed(f64),
    /// Median of `‖n‖₁` over this many independent noise draws.
    PilotMedian(usize),
}

/// One cell of a Monte Carlo sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub n: usize,
    pub q: usize,
    pub m: usize,
    pub k: usize,
    pub layout_kind: LayoutKind,
    pub fiber_diameter: f64,
    pub optics: Optics,
    pub distribution: SketchDistribution,
    pub noise: NoiseModel,
    pub epsilon_rule: EpsilonRule,
    pub basis: SparsityBasis,
    pub seed: u64,
    pub success_threshold: f64,
    pub max_iters: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            n: 32,
            q: 32,
            m: 100,
            k: 5,
            layout_kind: LayoutKind::FermatSpiral,
            fiber_diameter: 2e-4,
            optics: Optics::default(),
            distribution: SketchDistribution::ComplexGaussian,
            noise: NoiseModel::none(),
            epsilon_rule: EpsilonRule::Zero,
            basis: SparsityBasis::Identity,
            seed: 0,
            success_threshold: 1e-3,
            max_iters: 5000,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.q == 0 || self.m == 0 {
            return Err(invalid(format!(
                "trial needs n ≥ 2, Q ≥ 1, M ≥ 1 (got n = {}, Q = {}, M = {})",
                self.n, self.q, self.m
            )));
        }
        if self.k > self.n * self.n {
            return Err(invalid(format!(
                "sparsity {} exceeds the {} pixels",
                self.k,
                self.n * self.n
            )));
        }
        if !(self.success_threshold > 0.0 && self.success_threshold < 1.0) {
            return Err(invalid(format!(
                "success threshold must lie in (0, 1), got {}",
                self.success_threshold
            )));
        }
        self.noise.validate()?;
        Ok(())
    }

    /// Seed of trial `t` of this cell, independent of scheduling.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        derive_seed(
            self.seed,
            &[
                self.m as u64,
                self.k as u64,
                self.q as u64,
                self.n as u64,
                trial as u64,
            ],
        )
    }

    /// Layout and raster for this cell. Spirals use a grid fitted to the
    /// band edge; integer grids (`Q` a perfect square) use one bin per
    /// lattice step.
    pub fn layout_and_grid(&self) -> Result<(CoreLayout, ImageGrid)> {
        match self.layout_kind {
            LayoutKind::FermatSpiral => {
                let l = fermat_spiral_layout(self.q, self.fiber_diameter, self.optics)?;
                let g = ImageGrid::fitted(&l, self.n)?;
                Ok((l, g))
            }
            LayoutKind::IntegerGrid => {
                let side = (self.q as f64).sqrt().round() as usize;
                if side * side != self.q {
                    return Err(invalid(format!(
                        "integer-grid layouts need a square core count, got {}",
                        self.q
                    )));
                }
                let pitch = self.fiber_diameter / side as f64;
                let l = integer_grid_layout(side, pitch, self.optics)?;
                let g = ImageGrid::lattice(&l, pitch, self.n)?;
                Ok((l, g))
            }
            LayoutKind::Explicit => {
                Err(invalid("trial configurations cannot use explicit layouts"))
            }
        }
    }
}

/// `k`-sparse image: support uniform without replacement, amplitudes
/// uniform in `[0.5, 1.5]`, or standard normal when `signed`.
pub fn sparse_phantom<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    signed: bool,
    rng: &mut R,
) -> Array2<f64> {
    let mut f = Array2::zeros((n, n));
    for i in sample(rng, n * n, k.min(n * n)) {
        f[[i / n, i % n]] = if signed {
            rng.sample(StandardNormal)
        } else {
            rng.gen_range(0.5..1.5)
        };
    }
    f
}

/// `ε` for a given rule: the median ℓ1 norm of noise realizations around
/// the clean measurements.
pub fn calibrate_epsilon(
    rule: EpsilonRule,
    clean: &Array1<f64>,
    noise: &NoiseModel,
    seed: u64,
) -> Result<f64> {
    match rule {
        EpsilonRule::Zero => Ok(0.0),
        EpsilonRule::Fixed(e) => Ok(e),
        EpsilonRule::PilotMedian(draws) => {
            if noise.kind == NoiseKind::None || draws == 0 {
                return Ok(0.0);
            }
            let mut norms = Vec::with_capacity(draws);
            for d in 0..draws {
                let noisy = noise.apply(clean.view(), derive_seed(seed, &[d as u64]))?;
                norms.push((&noisy - clean).iter().map(|v| v.abs()).sum::<f64>());
            }
            norms.sort_by(f64::total_cmp);
            let mid = draws / 2;
            Ok(if draws % 2 == 1 {
                norms[mid]
            } else {
                0.5 * (norms[mid - 1] + norms[mid])
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub error: f64,
    pub success: bool,
    pub status: SolveStatus,
    pub iterations: usize,
}

/// One seeded recovery: draw a phantom and sketches, simulate, solve, score.
/// The phantom plays the role of the vignetted sample the operator acts on.
pub fn run_trial(cfg: &TrialConfig, trial: usize) -> Result<TrialOutcome> {
    cfg.validate()?;
    let seed = cfg.trial_seed(trial);
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    let f = sparse_phantom(cfg.n, cfg.k, false, &mut rng);
    let (layout, grid) = cfg.layout_and_grid()?;
    let sketches = make_sketches(cfg.m, cfg.q, cfg.distribution, derive_seed(seed, &[1]))?;
    let op = SensingOp::general(layout, grid, sketches)?;
    let clean = op.apply(f.view())?;
    let y = cfg.noise.apply(clean.view(), derive_seed(seed, &[2]))?;
    let eps = calibrate_epsilon(
        cfg.epsilon_rule,
        &clean,
        &cfg.noise,
        derive_seed(seed, &[3]),
    )?;
    let settings = SolverSettings {
        max_iters: cfg.max_iters,
        ..SolverSettings::default()
    };
    let r = solve_bpdn_l1(
        &BpdnProblem::new(&op, y, eps)
            .with_basis(cfg.basis)
            .with_settings(settings),
    )?;
    let error = relative_error(r.estimate.view(), f.view());
    Ok(TrialOutcome {
        error,
        success: error < cfg.success_threshold,
        status: r.status,
        iterations: r.iterations,
    })
}
