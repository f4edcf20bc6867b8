use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Hypergeometric};

use super::trial::{run_trial, TrialConfig};
use crate::error::{invalid, Result};

/// Aggregate of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub m: usize,
    pub q: usize,
    pub k: usize,
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub median_error: f64,
}

impl CellResult {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

fn aggregate(cfg: &TrialConfig, trials: usize, errors: Vec<f64>) -> CellResult {
    let successes = errors
        .iter()
        .filter(|&&e| e < cfg.success_threshold)
        .count();
    CellResult {
        m: cfg.m,
        q: cfg.q,
        k: cfg.k,
        n: cfg.n,
        trials,
        successes,
        median_error: median(errors),
    }
}

/// Runs `trials` seeded trials of one cell. A failed solve counts as an
/// unsuccessful trial with infinite error.
pub fn run_cell(cfg: &TrialConfig, trials: usize) -> Result<CellResult> {
    cfg.validate()?;
    let errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t).map(|o| o.error).unwrap_or(f64::INFINITY))
        .collect();
    Ok(aggregate(cfg, trials, errors))
}

/// Success-rate table over a list of cells. Trials of all cells are
/// scheduled together on the rayon pool; results are reduced by cell index,
/// so the table is bit-identical for any number of workers.
pub fn run_phase_diagram(cells: &[TrialConfig], trials: usize) -> Result<Vec<CellResult>> {
    if trials == 0 {
        return Err(invalid("need at least one trial per cell"));
    }
    for c in cells {
        c.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let errors: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, t)| {
            run_trial(&cells[c], t)
                .map(|o| o.error)
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    Ok(cells
        .iter()
        .zip(errors.chunks(trials))
        .map(|(cfg, e)| aggregate(cfg, trials, e.to_vec()))
        .collect())
}

/// One-sided exact test that the success probability of cell `b` is lower
/// than that of cell `a` (Fisher's conditional test on the 2×2 table).
/// Returns the p-value.
pub fn decrease_p_value(a: &CellResult, b: &CellResult) -> f64 {
    let total = (a.trials + b.trials) as u64;
    let successes = (a.successes + b.successes) as u64;
    if successes == 0 || successes == total {
        return 1.0;
    }
    // Under equal rates, a's successes follow a hypergeometric law; a
    // decrease shows up as many successes in a.
    let h = Hypergeometric::new(total, successes, a.trials as u64).expect("valid hypergeometric");
    let observed = a.successes as u64;
    if observed == 0 {
        1.0
    } else {
        h.sf(observed - 1)
    }
}

/// Adjacent pairs `(i, i+1)` of an ordered sweep whose success rate drops
/// significantly at level `alpha`.
pub fn monotonicity_violations(ordered: &[CellResult], alpha: f64) -> Vec<(usize, f64)> {
    ordered
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let p = decrease_p_value(&w[0], &w[1]);
            (p < alpha).then_some((i, p))
        })
        .collect()
}

/// Where a sweep ordered by increasing `M` first crosses 50% success, by
/// linear interpolation in `log M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "m")]
pub enum Transition {
    /// Crossing between two measured budgets.
    Crossing(f64),
    /// Already at or above 50% at the smallest budget.
    AtOrBelow(f64),
    /// Never reached 50% within the sweep.
    Above(f64),
}

impl Transition {
    pub fn crossing(&self) -> Option<f64> {
        match *self {
            Transition::Crossing(m) => Some(m),
            _ => None,
        }
    }
}

pub fn transition_point(ordered_by_m: &[CellResult]) -> Option<Transition> {
    let first = ordered_by_m.first()?;
    if first.success_rate() >= 0.5 {
        return Some(Transition::AtOrBelow(first.m as f64));
    }
    for w in ordered_by_m.windows(2) {
        let (r0, r1) = (w[0].success_rate(), w[1].success_rate());
        if r0 < 0.5 && r1 >= 0.5 {
            let (l0, l1) = ((w[0].m as f64).ln(), (w[1].m as f64).ln());
            let t = (0.5 - r0) / (r1 - r0);
            return Some(Transition::Crossing((l0 + t * (l1 - l0)).exp()));
        }
    }
    Some(Transition::Above(ordered_by_m.last()?.m as f64))
}

/// Least-squares fits of the transition budgets `M*(K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Slope `a` of `M* ≈ a·K·ln N + b`.
    pub slope: f64,
    /// Offset `b`.
    pub offset: f64,
    /// Coefficient of determination of the linear fit.
    pub r_squared: f64,
    /// Exponent `p` of the power-law fit `M* ≈ c·K^p`.
    pub exponent: f64,
}

/// Fits `M* = a·(K ln N) + b` and `ln M* = p ln K + ln c` over `(K, M*)`
/// points. Needs at least two distinct sparsity levels.
pub fn fit_scaling(points: &[(usize, f64)], pixels: usize) -> Option<ScalingFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(k, m)| *k > 0 && m.is_finite() && *m > 0.0)
        .map(|&(k, m)| (k as f64, m))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let ln_n = (pixels as f64).ln();
    let line = |xs: &[f64], ys: &[f64]| -> Option<(f64, f64, f64)> {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if sxx == 0.0 {
            return None;
        }
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let offset = my - slope * mx;
        let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - slope * x - offset).powi(2))
            .sum();
        let r2 = if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else {
            1.0
        };
        Some((slope, offset, r2))
    };
    let xs: Vec<f64> = pts.iter().map(|(k, _)| k * ln_n).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, m)| *m).collect();
    let (slope, offset, r_squared) = line(&xs, &ys)?;
    let lx: Vec<f64> = pts.iter().map(|(k, _)| k.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|(_, m)| m.ln()).collect();
    let (exponent, _, _) = line(&lx, &ly)?;
    Some(ScalingFit {
        slope,
        offset,
        r_squared,
        exponent,
    })
}
