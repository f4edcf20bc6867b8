use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::metrics::{relative_error, ssim, zeros_like};
use super::trial::{calibrate_epsilon, sparse_phantom, EpsilonRule};
use crate::error::Result;
use crate::geometry::{fermat_spiral_layout, ImageGrid, Optics};
use crate::operators::{make_sketches, SensingOp, SketchDistribution};
use crate::physics::NoiseModel;
use crate::recon::{solve_bpdn_l1, BpdnProblem, SolveStatus, SolverSettings, SparsityBasis};
use crate::rng::{derive_seed, rng_from_seed};

/// Few-versus-many-measurements reconstruction of one simulated phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub n: usize,
    pub q: usize,
    pub k: usize,
    pub measurements: Vec<usize>,
    pub noise: NoiseModel,
    pub epsilon_rule: EpsilonRule,
    pub basis: SparsityBasis,
    pub fiber_diameter: f64,
    pub optics: Optics,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            n: 32,
            q: 110,
            k: 20,
            measurements: vec![49, 20_000],
            noise: NoiseModel {
                kind: crate::physics::NoiseKind::Poisson,
                photon_scale: 1.0,
                sigma: 0.0,
            },
            epsilon_rule: EpsilonRule::PilotMedian(100),
            basis: SparsityBasis::Identity,
            fiber_diameter: 2e-4,
            optics: Optics::default(),
            max_iters: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkEntry {
    pub m: usize,
    pub relative_error: f64,
    pub similarity: f64,
    /// `None` when no measurement was taken.
    pub status: Option<SolveStatus>,
    pub iterations: usize,
    #[serde(skip)]
    pub estimate: Array2<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    #[serde(skip)]
    pub truth: Array2<f64>,
    pub entries: Vec<BenchmarkEntry>,
}

/// Reconstructs the same `k`-sparse phantom from every budget in
/// `measurements`. The sketch sets are nested: the first `M` rows are shared
/// across budgets. A zero budget yields the zero image (error 1).
pub fn run_benchmark_figure(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    cfg.noise.validate()?;
    let layout = fermat_spiral_layout(cfg.q, cfg.fiber_diameter, cfg.optics)?;
    let grid = ImageGrid::fitted(&layout, cfg.n)?;
    let truth = sparse_phantom(
        cfg.n,
        cfg.k,
        false,
        &mut rng_from_seed(derive_seed(cfg.seed, &[0])),
    );
    let largest = cfg.measurements.iter().copied().max().unwrap_or(0);
    let all = if largest > 0 {
        Some(make_sketches(
            largest,
            cfg.q,
            SketchDistribution::ComplexGaussian,
            derive_seed(cfg.seed, &[1]),
        )?)
    } else {
        None
    };
    let mut entries = Vec::with_capacity(cfg.measurements.len());
    for &m in &cfg.measurements {
        let entry = match &all {
            Some(all) if m > 0 => {
                let op = SensingOp::general(layout.clone(), grid, all.truncated(m))?;
                let clean = op.apply(truth.view())?.mapv(|v| v.max(0.0));
                let y = cfg
                    .noise
                    .apply(clean.view(), derive_seed(cfg.seed, &[2, m as u64]))?;
                let eps = calibrate_epsilon(
                    cfg.epsilon_rule,
                    &clean,
                    &cfg.noise,
                    derive_seed(cfg.seed, &[3, m as u64]),
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
                BenchmarkEntry {
                    m,
                    relative_error: relative_error(r.estimate.view(), truth.view()),
                    similarity: ssim(r.estimate.view(), truth.view()),
                    status: Some(r.status),
                    iterations: r.iterations,
                    estimate: r.estimate,
                }
            }
            _ => {
                let estimate = zeros_like(truth.view());
                BenchmarkEntry {
                    m,
                    relative_error: 1.0,
                    similarity: ssim(estimate.view(), truth.view()),
                    status: None,
                    iterations: 0,
                    estimate,
                }
            }
        };
        log::info!("benchmark M = {m}: error {:.3e}", entry.relative_error);
        entries.push(entry);
    }
    Ok(BenchmarkReport { truth, entries })
}
