use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mcf_core::experiments::{
    fit_scaling, monotonicity_violations, run_benchmark_figure, run_cell, run_rip_study,
    transition_point, BenchmarkConfig, CellResult, EpsilonRule, RipConfig, RipReport, ScalingFit,
    Transition, TrialConfig,
};
use mcf_core::geometry::LayoutKind;
use mcf_core::io::{write_image_csv, write_image_pgm};
use mcf_core::physics::{NoiseKind, NoiseModel};
use mcf_core::recon::SolveStatus;
use mcf_core::rng::derive_seed;
use mcf_core::SketchDistribution;
use serde::{Deserialize, Serialize};

use crate::cli::{set, BenchmarkArgs, PhaseArgs, RipArgs, SweepFlags};
use crate::config::{LayoutChoice, RunConfig};
use crate::exit::{self, Failure};
use crate::store::CellStore;

/// Significance level of the adjacent-cell monotonicity test.
const MONOTONICITY_ALPHA: f64 = 0.05;
/// Noise draws behind the fidelity radius of noisy trials.
const PILOT_DRAWS: usize = 100;

fn out_dir(flags: &SweepFlags, default: &str) -> PathBuf {
    flags.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// Result of one phase-diagram cell, with a failed-solve median stored as
/// `null`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PhaseRow {
    m: usize,
    q: usize,
    k: usize,
    n: usize,
    trials: usize,
    successes: usize,
    median_error: Option<f64>,
}

impl PhaseRow {
    fn from_cell(c: &CellResult) -> Self {
        Self {
            m: c.m,
            q: c.q,
            k: c.k,
            n: c.n,
            trials: c.trials,
            successes: c.successes,
            median_error: c.median_error.is_finite().then_some(c.median_error),
        }
    }

    fn to_cell(&self) -> CellResult {
        CellResult {
            m: self.m,
            q: self.q,
            k: self.k,
            n: self.n,
            trials: self.trials,
            successes: self.successes,
            median_error: self.median_error.unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Serialize)]
struct PhasePlan<'a> {
    cells: &'a [TrialConfig],
    trials: usize,
}

#[derive(Serialize)]
struct PhaseSummary {
    transitions: Vec<(usize, Option<Transition>)>,
    /// `(K, index of the lower cell, p-value)` of significant drops.
    violations: Vec<(usize, usize, f64)>,
    fit: Option<ScalingFit>,
}

fn trial_cells(cfg: &RunConfig) -> Result<Vec<TrialConfig>, Failure> {
    let (layout_kind, q) = match cfg.layout_kind()? {
        LayoutChoice::Fermat => (LayoutKind::FermatSpiral, cfg.layout.cores),
        LayoutChoice::Grid => (LayoutKind::IntegerGrid, cfg.layout.side * cfg.layout.side),
        LayoutChoice::File(_) => {
            return Err(Failure::config(
                "phase diagrams need a fermat or grid layout",
            ))
        }
    };
    let noise = cfg.noise.model()?;
    let epsilon_rule = if cfg.solver.epsilon > 0.0 {
        EpsilonRule::Fixed(cfg.solver.epsilon)
    } else if noise.kind != NoiseKind::None {
        EpsilonRule::PilotMedian(PILOT_DRAWS)
    } else {
        EpsilonRule::Zero
    };
    let mut cells = Vec::new();
    for &k in &cfg.phase.sparsities {
        for &m in &cfg.phase.measurements {
            let c = TrialConfig {
                n: cfg.grid.side.unwrap_or(32),
                q,
                m,
                k,
                layout_kind,
                fiber_diameter: cfg.layout.fiber_diameter.unwrap_or(2e-4),
                optics: cfg.optics()?,
                distribution: cfg.sketch.distribution,
                noise,
                epsilon_rule,
                basis: cfg.solver.basis,
                seed: cfg.seed,
                success_threshold: cfg.phase.success_threshold,
                max_iters: cfg.solver.max_iters,
            };
            c.validate()?;
            cells.push(c);
        }
    }
    Ok(cells)
}

fn summarize(rows: &[CellResult], pixels: usize) -> PhaseSummary {
    let mut by_k: BTreeMap<usize, Vec<CellResult>> = BTreeMap::new();
    for r in rows {
        by_k.entry(r.k).or_default().push(r.clone());
    }
    let mut transitions = Vec::new();
    let mut violations = Vec::new();
    let mut crossings = Vec::new();
    for (k, mut cells) in by_k {
        cells.sort_by_key(|c| c.m);
        let t = transition_point(&cells);
        if let Some(m) = t.and_then(|t| t.crossing()) {
            crossings.push((k, m));
        }
        transitions.push((k, t));
        for (i, p) in monotonicity_violations(&cells, MONOTONICITY_ALPHA) {
            violations.push((k, i, p));
        }
    }
    PhaseSummary {
        transitions,
        violations,
        fit: fit_scaling(&crossings, pixels),
    }
}

pub fn phase_diagram(mut cfg: RunConfig, args: &PhaseArgs) -> Result<u8, Failure> {
    args.model.apply(&mut cfg);
    args.noise.apply(&mut cfg);
    args.solver.apply(&mut cfg);
    set(&mut cfg.phase.measurements, args.ms.clone());
    set(&mut cfg.phase.sparsities, args.ks.clone());
    set(&mut cfg.phase.trials, args.trials);
    set(&mut cfg.phase.success_threshold, args.threshold);
    cfg.validate()?;
    let cells = trial_cells(&cfg)?;
    let trials = cfg.phase.trials;
    if args.sweep.dry_run {
        println!("{} cells x {trials} trials:", cells.len());
        for c in &cells {
            println!("  M={} K={} Q={} n={}", c.m, c.k, c.q, c.n);
        }
        return Ok(exit::OK);
    }
    let dir = out_dir(&args.sweep, "phase-diagram");
    let mut store = CellStore::<PhaseRow>::open(
        &dir,
        "phase-diagram",
        cfg.seed,
        &PhasePlan {
            cells: &cells,
            trials,
        },
    )?;
    let mut computed = 0;
    let mut rows = Vec::with_capacity(cells.len());
    for c in &cells {
        let key = format!("m{}-k{}", c.m, c.k);
        let row = match store.get(&key) {
            Some(r) => r.clone(),
            None => {
                if args.sweep.stop_after.is_some_and(|s| computed >= s) {
                    println!("stopped after {computed} new cells; rerun to resume");
                    return Ok(exit::OK);
                }
                let r = PhaseRow::from_cell(&run_cell(c, trials)?);
                log::info!(
                    "M={} K={}: {}/{} successes",
                    r.m,
                    r.k,
                    r.successes,
                    r.trials
                );
                store.record(&key, &r)?;
                computed += 1;
                r
            }
        };
        rows.push(row);
    }

    let dir = store.dir().to_path_buf();
    let mut table = String::from("M,Q,K,trials,successes,median_error\n");
    for r in &rows {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.m,
            r.q,
            r.k,
            r.trials,
            r.successes,
            r.median_error.map_or("inf".to_string(), |e| e.to_string())
        ));
    }
    fs::write(dir.join("table.csv"), &table)?;
    let cells: Vec<CellResult> = rows.iter().map(PhaseRow::to_cell).collect();
    write_phase_dat(&dir.join("phase.dat"), &cells)?;
    let n = cfg.grid.side.unwrap_or(32);
    let summary = summarize(&cells, n * n);
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    print!("{table}");
    for (k, t) in &summary.transitions {
        println!("K={k}: transition {t:?}");
    }
    if let Some(f) = &summary.fit {
        println!(
            "fit M* = {:.3}·K·ln N + {:.3} (R² {:.3}); power-law exponent {:.3}",
            f.slope, f.offset, f.r_squared, f.exponent
        );
    }
    store.finish(&["table.csv", "phase.dat", "summary.json"])?;
    Ok(exit::OK)
}

/// Gnuplot blocks, one per sparsity level: `M success_rate median_error`.
fn write_phase_dat(path: &Path, cells: &[CellResult]) -> Result<(), Failure> {
    let mut by_k: BTreeMap<usize, Vec<&CellResult>> = BTreeMap::new();
    for c in cells {
        by_k.entry(c.k).or_default().push(c);
    }
    let mut s = String::new();
    for (k, mut v) in by_k {
        v.sort_by_key(|c| c.m);
        s.push_str(&format!("# K = {k}\n# M success_rate median_error\n"));
        for c in v {
            s.push_str(&format!(
                "{} {} {}\n",
                c.m,
                c.success_rate(),
                c.median_error
            ));
        }
        s.push_str("\n\n");
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn rip(mut cfg: RunConfig, args: &RipArgs) -> Result<u8, Failure> {
    set(&mut cfg.rip.side, args.side);
    set(&mut cfg.rip.measurements, args.ms.clone());
    set(&mut cfg.rip.sparsities, args.ks.clone());
    set(&mut cfg.rip.samples, args.samples);
    set(&mut cfg.seed, args.seed);
    cfg.validate()?;
    let study = RipConfig {
        side: cfg.rip.side,
        measurements: cfg.rip.measurements.clone(),
        sparsities: cfg.rip.sparsities.clone(),
        samples: cfg.rip.samples,
        distribution: SketchDistribution::ComplexGaussian,
        seed: cfg.seed,
    };
    if args.sweep.dry_run {
        println!(
            "{} cells, {} probes each:",
            study.measurements.len(),
            study.samples
        );
        for m in &study.measurements {
            println!(
                "  M={m} k={:?} N={}",
                study.sparsities,
                study.side * study.side
            );
        }
        return Ok(exit::OK);
    }
    let dir = out_dir(&args.sweep, "rip");
    let mut store = CellStore::<Vec<RipReport>>::open(&dir, "rip", cfg.seed, &study)?;
    let mut computed = 0;
    let mut reports = Vec::new();
    for &m in &study.measurements {
        let key = format!("m{m}");
        let r = match store.get(&key) {
            Some(r) => r.clone(),
            None => {
                if args.sweep.stop_after.is_some_and(|s| computed >= s) {
                    println!("stopped after {computed} new cells; rerun to resume");
                    return Ok(exit::OK);
                }
                let r = run_rip_study(&RipConfig {
                    measurements: vec![m],
                    ..study.clone()
                })?;
                store.record(&key, &r)?;
                computed += 1;
                r
            }
        };
        reports.extend(r);
    }
    let dir = store.dir().to_path_buf();
    let mut table = String::from("k,M,samples,lower,upper,spread\n");
    let mut ratios = String::from("k,M,ratio\n");
    for r in &reports {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k,
            r.m,
            r.samples,
            r.lower,
            r.upper,
            r.spread()
        ));
        for v in &r.ratios {
            ratios.push_str(&format!("{},{},{v}\n", r.k, r.m));
        }
    }
    fs::write(dir.join("rip.csv"), &table)?;
    fs::write(dir.join("ratios.csv"), ratios)?;
    print!("{table}");
    store.finish(&["rip.csv", "ratios.csv"])?;
    Ok(exit::OK)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BenchRow {
    m: usize,
    relative_error: f64,
    similarity: f64,
    status: Option<SolveStatus>,
    iterations: usize,
}

pub fn benchmark(mut cfg: RunConfig, args: &BenchmarkArgs) -> Result<u8, Failure> {
    let b = &mut cfg.benchmark;
    set(&mut b.cores, args.cores);
    set(&mut b.side, args.n);
    set(&mut b.sparsity, args.k);
    set(&mut b.measurements, args.ms.clone());
    set(&mut b.seeds, args.seeds);
    set(&mut b.photon_scale, args.photon_scale);
    set(&mut b.max_iters, args.max_iters);
    b.noiseless |= args.noiseless;
    set(&mut cfg.seed, args.seed);
    cfg.validate()?;
    let b = &cfg.benchmark;
    let noise = if b.noiseless {
        NoiseModel::none()
    } else {
        NoiseModel::poisson(b.photon_scale)?
    };
    let base = BenchmarkConfig {
        n: b.side,
        q: b.cores,
        k: b.sparsity,
        measurements: b.measurements.clone(),
        noise,
        epsilon_rule: EpsilonRule::PilotMedian(b.pilot_draws),
        basis: cfg.solver.basis,
        fiber_diameter: cfg.layout.fiber_diameter.unwrap_or(2e-4),
        optics: cfg.optics()?,
        max_iters: b.max_iters,
        seed: cfg.seed,
    };
    let seeds: Vec<u64> = (0..b.seeds as u64)
        .map(|s| derive_seed(cfg.seed, &[s]))
        .collect();
    if args.sweep.dry_run {
        println!(
            "{} phantoms (Q={}, n={}, K={}):",
            seeds.len(),
            base.q,
            base.n,
            base.k
        );
        for (i, _) in seeds.iter().enumerate() {
            println!("  seed {i}: M in {:?}", base.measurements);
        }
        return Ok(exit::OK);
    }
    let dir = out_dir(&args.sweep, "benchmark");
    let mut store = CellStore::<Vec<BenchRow>>::open(&dir, "benchmark", cfg.seed, &base)?;
    let mut computed = 0;
    let mut table = String::from("seed,M,relative_error,similarity,status,iterations\n");
    let mut files = vec![];
    for (i, &s) in seeds.iter().enumerate() {
        let key = format!("seed{i}");
        let truth_name = format!("truth_s{i}.pgm");
        let mut names = vec![truth_name.clone(), format!("truth_s{i}.csv")];
        for m in &base.measurements {
            names.push(format!("estimate_s{i}_m{m}.pgm"));
            names.push(format!("estimate_s{i}_m{m}.csv"));
        }
        let rows = match store.get(&key) {
            Some(r) => r.clone(),
            None => {
                if args.sweep.stop_after.is_some_and(|n| computed >= n) {
                    println!("stopped after {computed} new cells; rerun to resume");
                    return Ok(exit::OK);
                }
                let report = run_benchmark_figure(&BenchmarkConfig {
                    seed: s,
                    ..base.clone()
                })?;
                write_image_pgm(&dir.join(&truth_name), report.truth.view())?;
                write_image_csv(&dir.join(format!("truth_s{i}.csv")), report.truth.view())?;
                for e in &report.entries {
                    write_image_pgm(
                        &dir.join(format!("estimate_s{i}_m{}.pgm", e.m)),
                        e.estimate.view(),
                    )?;
                    write_image_csv(
                        &dir.join(format!("estimate_s{i}_m{}.csv", e.m)),
                        e.estimate.view(),
                    )?;
                }
                let rows: Vec<BenchRow> = report
                    .entries
                    .iter()
                    .map(|e| BenchRow {
                        m: e.m,
                        relative_error: e.relative_error,
                        similarity: e.similarity,
                        status: e.status,
                        iterations: e.iterations,
                    })
                    .collect();
                store.record(&key, &rows)?;
                computed += 1;
                rows
            }
        };
        for r in &rows {
            table.push_str(&format!(
                "{i},{},{},{},{},{}\n",
                r.m,
                r.relative_error,
                r.similarity,
                r.status.map_or("none".to_string(), |s| format!("{s:?}")),
                r.iterations
            ));
        }
        files.extend(names);
    }
    fs::write(store.dir().join("benchmark.csv"), &table)?;
    print!("{table}");
    files.push("benchmark.csv".into());
    let refs: Vec<&str> = files.iter().map(String::as_str).collect();
    store.finish(&refs)?;
    Ok(exit::OK)
}
