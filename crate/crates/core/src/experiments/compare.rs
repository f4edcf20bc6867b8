use ndarray::Array2;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::relative_error;
use super::trial::{calibrate_epsilon, sparse_phantom, EpsilonRule};
use crate::error::{invalid, Result};
use crate::geometry::{fermat_spiral_layout, ImageGrid, Optics};
use crate::operators::{make_sketches, SensingOp, SketchDistribution};
use crate::physics::{raster_scan, NoiseModel};
use crate::recon::{solve_bpdn_l1, BpdnProblem, SolverSettings};
use crate::rng::{derive_seed, rng_from_seed};

/// Raster scanning against sketched acquisition on the same phantoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub n: usize,
    pub q: usize,
    pub k: usize,
    pub budgets: Vec<usize>,
    pub trials: usize,
    /// Expected photon count per modality and trial; `None` is noiseless.
    pub photon_budget: Option<f64>,
    pub fiber_diameter: f64,
    pub optics: Optics,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            n: 32,
            q: 32,
            k: 5,
            budgets: vec![10, 25, 50, 102, 256, 1024],
            trials: 5,
            photon_budget: None,
            fiber_diameter: 2e-4,
            optics: Optics::default(),
            max_iters: 5000,
            seed: 0,
        }
    }
}

/// Median relative errors at one measurement budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub m: usize,
    pub raster_error: f64,
    pub sketch_error: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Poisson model whose expected total count over `clean` equals `budget`.
fn budget_noise(budget: Option<f64>, total: f64) -> Result<NoiseModel> {
    match budget {
        Some(b) if total > 0.0 => NoiseModel::poisson(b / total),
        _ => Ok(NoiseModel::none()),
    }
}

/// Raster estimate of the vignetted sample: each scanned pixel reads its
/// measurement divided by the focal gain `Q`, unscanned pixels stay zero.
fn raster_trial(
    cfg: &CompareConfig,
    truth: &Array2<f64>,
    grid: &ImageGrid,
    m: usize,
    seed: u64,
) -> Result<f64> {
    let layout = fermat_spiral_layout(cfg.q, cfg.fiber_diameter, cfg.optics)?;
    let n = cfg.n;
    let count = m.min(n * n);
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    let mut pixels: Vec<usize> = sample(&mut rng, n * n, count).into_vec();
    pixels.sort_unstable();
    let points: Vec<_> = pixels
        .iter()
        .map(|&i| grid.position(i / n, i % n))
        .collect();
    // The physical sample carries no vignette; the scan applies it.
    let w = grid.vignette();
    let sample_density = truth / &w;
    let clean = raster_scan(
        sample_density.view(),
        &layout,
        grid,
        &points,
        &NoiseModel::none(),
        0,
    )?;
    let noise = budget_noise(cfg.photon_budget, clean.sum())?;
    let y = noise.apply(clean.mapv(|v| v.max(0.0)).view(), derive_seed(seed, &[1]))?;
    let mut est = Array2::zeros((n, n));
    for (&i, v) in pixels.iter().zip(y.iter()) {
        est[[i / n, i % n]] = v / cfg.q as f64;
    }
    Ok(relative_error(est.view(), truth.view()))
}

fn sketch_trial(
    cfg: &CompareConfig,
    truth: &Array2<f64>,
    grid: &ImageGrid,
    m: usize,
    seed: u64,
) -> Result<f64> {
    let layout = fermat_spiral_layout(cfg.q, cfg.fiber_diameter, cfg.optics)?;
    let sketches = make_sketches(
        m,
        cfg.q,
        SketchDistribution::ComplexGaussian,
        derive_seed(seed, &[0]),
    )?;
    let op = SensingOp::general(layout, *grid, sketches)?;
    let clean = op.apply(truth.view())?.mapv(|v| v.max(0.0));
    let noise = budget_noise(cfg.photon_budget, clean.sum())?;
    let y = noise.apply(clean.view(), derive_seed(seed, &[1]))?;
    let eps = calibrate_epsilon(
        EpsilonRule::PilotMedian(100),
        &clean,
        &noise,
        derive_seed(seed, &[2]),
    )?;
    let settings = SolverSettings {
        max_iters: cfg.max_iters,
        ..SolverSettings::default()
    };
    let r = solve_bpdn_l1(&BpdnProblem::new(&op, y, eps).with_settings(settings))?;
    Ok(relative_error(r.estimate.view(), truth.view()))
}

/// Error-versus-budget table. Both modalities see the same phantoms and,
/// with a photon budget, the same expected number of detected photons.
pub fn compare_rs_vs_srop(cfg: &CompareConfig) -> Result<Vec<ComparisonRow>> {
    if cfg.trials == 0 || cfg.budgets.is_empty() {
        return Err(invalid(
            "comparison needs at least one trial and one budget",
        ));
    }
    if cfg.budgets.contains(&0) {
        return Err(invalid("measurement budgets must be positive"));
    }
    if let Some(b) = cfg.photon_budget {
        NoiseModel::poisson(b)?;
    }
    let layout = fermat_spiral_layout(cfg.q, cfg.fiber_diameter, cfg.optics)?;
    let grid = ImageGrid::fitted(&layout, cfg.n)?;
    let phantoms: Vec<Array2<f64>> = (0..cfg.trials)
        .map(|t| {
            sparse_phantom(
                cfg.n,
                cfg.k,
                false,
                &mut rng_from_seed(derive_seed(cfg.seed, &[0, t as u64])),
            )
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cfg.budgets.len())
        .flat_map(|b| (0..cfg.trials).map(move |t| (b, t)))
        .collect();
    let errors: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(b, t)| {
            let m = cfg.budgets[b];
            let seed = derive_seed(cfg.seed, &[1, m as u64, t as u64]);
            let rs = raster_trial(cfg, &phantoms[t], &grid, m, derive_seed(seed, &[0]))
                .unwrap_or(f64::INFINITY);
            let sk = sketch_trial(cfg, &phantoms[t], &grid, m, derive_seed(seed, &[1]))
                .unwrap_or(f64::INFINITY);
            (rs, sk)
        })
        .collect();
    Ok(cfg
        .budgets
        .iter()
        .zip(errors.chunks(cfg.trials))
        .map(|(&m, e)| ComparisonRow {
            m,
            raster_error: median(e.iter().map(|p| p.0).collect()),
            sketch_error: median(e.iter().map(|p| p.1).collect()),
        })
        .collect())
}
