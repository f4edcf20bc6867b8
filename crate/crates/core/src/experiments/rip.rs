use ndarray::Array2;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use super::trial::sparse_phantom;
use crate::error::{invalid, Result};
use crate::geometry::Optics;
use crate::operators::{make_sketches, SensingOp, SketchDistribution};
use crate::rng::{derive_seed, rng_from_seed};

/// Lattice pitch of the cores; any positive value gives the same operator.
const PITCH: f64 = 1e-5;

/// Empirical concentration of `‖B f‖₁ / (M ‖f‖₂)` over random `k`-sparse
/// probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub k: usize,
    pub m: usize,
    pub samples: usize,
    pub ratios: Vec<f64>,
    /// 2.5% quantile of the ratios.
    pub lower: f64,
    /// 97.5% quantile of the ratios.
    pub upper: f64,
}

impl RipReport {
    fn from_ratios(k: usize, m: usize, ratios: Vec<f64>) -> Self {
        let mut data = Data::new(ratios.clone());
        let lower = data.quantile(0.025);
        let upper = data.quantile(0.975);
        Self {
            k,
            m,
            samples: ratios.len(),
            ratios,
            lower,
            upper,
        }
    }

    /// Relative width `(upper − lower)/(upper + lower)` of the central 95%.
    pub fn spread(&self) -> f64 {
        let s = self.upper + self.lower;
        if s > 0.0 {
            (self.upper - self.lower) / s
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RipConfig {
    /// Lattice side; the image and the core lattice both have `side²` sites.
    pub side: usize,
    pub measurements: Vec<usize>,
    pub sparsities: Vec<usize>,
    pub samples: usize,
    pub distribution: SketchDistribution,
    pub seed: u64,
}

impl Default for RipConfig {
    fn default() -> Self {
        Self {
            side: 16,
            measurements: vec![50, 100, 200, 400],
            sparsities: vec![5],
            samples: 500,
            distribution: SketchDistribution::ComplexGaussian,
            seed: 0,
        }
    }
}

/// `‖B f‖₁ / (M ‖f‖₂)`; zero for a zero image.
pub fn rip_ratio(op: &SensingOp, f: &Array2<f64>) -> Result<f64> {
    let l2 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return Ok(0.0);
    }
    let y = op.apply(f.view())?;
    Ok(y.iter().map(|v| v.abs()).sum::<f64>() / (op.measurement_count() as f64 * l2))
}

/// Ratio statistics on the circulant operator for every `(M, k)` pair, in
/// the order `measurements × sparsities`. Probes have signed Gaussian
/// amplitudes and depend only on `(seed, k, sample)`, so every `M` sees
/// the same probe set.
pub fn run_rip_study(cfg: &RipConfig) -> Result<Vec<RipReport>> {
    if cfg.samples < 2 {
        return Err(invalid("need at least two probes per setting"));
    }
    let n = cfg.side * cfg.side;
    if let Some(&k) = cfg.sparsities.iter().find(|&&k| k == 0 || k > n) {
        return Err(invalid(format!("sparsity {k} must lie in 1..={n}")));
    }
    let probes: Vec<Vec<Array2<f64>>> = cfg
        .sparsities
        .iter()
        .map(|&k| {
            (0..cfg.samples)
                .map(|s| {
                    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[1, k as u64, s as u64]));
                    sparse_phantom(cfg.side, k, true, &mut rng)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(cfg.measurements.len() * cfg.sparsities.len());
    for &m in &cfg.measurements {
        let sketches = make_sketches(
            m,
            n,
            cfg.distribution,
            derive_seed(cfg.seed, &[0, m as u64]),
        )?;
        let op = SensingOp::circulant(cfg.side, PITCH, Optics::default(), sketches)?;
        for (&k, set) in cfg.sparsities.iter().zip(&probes) {
            let ratios = set
                .iter()
                .map(|f| rip_ratio(&op, f))
                .collect::<Result<Vec<_>>>()?;
            out.push(RipReport::from_ratios(k, m, ratios));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_is_positively_homogeneous() {
        let sketches = make_sketches(20, 64, SketchDistribution::ComplexGaussian, 3).unwrap();
        let op = SensingOp::circulant(8, PITCH, Optics::default(), sketches).unwrap();
        let f = sparse_phantom(8, 3, true, &mut rng_from_seed(9));
        let a = rip_ratio(&op, &f).unwrap();
        let b = rip_ratio(&op, &(&f * 2.0)).unwrap();
        assert!((a - b).abs() <= 1e-14 * a);
    }

    #[test]
    fn report_quantiles_are_ordered() {
        let cfg = RipConfig {
            side: 8,
            measurements: vec![16],
            sparsities: vec![2],
            samples: 40,
            ..RipConfig::default()
        };
        let r = &run_rip_study(&cfg).unwrap()[0];
        assert_eq!(r.ratios.len(), 40);
        assert!(0.0 <= r.lower && r.lower <= r.upper);
        assert!(r.ratios.iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
