use std::fs;
use std::path::Path;

use mcf_core::experiments::relative_error;
use mcf_core::io::{
    read_image, read_vector_csv, write_image_csv, write_image_pgm, write_vector_csv, Manifest,
};
use mcf_core::recon::{solve_bpdn_l1, BpdnProblem, SolveStatus};
use mcf_core::rng::derive_seed;
use mcf_core::selftest::run_selftest;
use mcf_core::{make_sketches, Error, SensingOp, SketchDistribution};
use serde::{Deserialize, Serialize};

use crate::cli::{set, ReconstructArgs, SimulateArgs};
use crate::config::RunConfig;
use crate::exit::{self, Failure};

const MANIFEST: &str = "manifest.json";
const MEASUREMENTS: &str = "measurements.csv";
const SKETCHES: &str = "sketches.json";
const IMAGE: &str = "image.csv";

/// Stream labels folded into the master seed.
const SKETCH_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

#[derive(Debug, Serialize, Deserialize)]
struct SketchRecord {
    distribution: SketchDistribution,
    count: usize,
    cores: usize,
    seed: u64,
}

fn build_operator(cfg: &RunConfig, side: usize, sketch_seed: u64) -> Result<SensingOp, Failure> {
    let layout = cfg.build_layout()?;
    let grid = cfg.build_grid(&layout, side)?;
    let sketches = make_sketches(
        cfg.sketch.count,
        layout.core_count(),
        cfg.sketch.distribution,
        sketch_seed,
    )?;
    Ok(SensingOp::general(layout, grid, sketches)?)
}

/// Measures the sample `f` through the speckle model: the operator acts on
/// the vignetted image `w·f`.
pub fn simulate(mut cfg: RunConfig, args: &SimulateArgs) -> Result<u8, Failure> {
    args.model.apply(&mut cfg);
    args.noise.apply(&mut cfg);
    set(&mut cfg.sketch.count, args.m);
    set(&mut cfg.sketch.distribution, args.distribution);
    cfg.validate()?;
    if !args.image.exists() {
        return Err(Failure::io(format!(
            "input image {} does not exist",
            args.image.display()
        )));
    }
    let f = read_image(&args.image)?;
    let (rows, cols) = f.dim();
    if rows != cols {
        return Err(Failure::new(
            exit::MODEL,
            format!("image must be square, got {rows} x {cols}"),
        ));
    }
    if let Some(n) = cfg.grid.side.filter(|&n| n != rows) {
        log::warn!("configured grid side {n} replaced by the image side {rows}");
    }
    cfg.grid.side = Some(rows);
    let noise = cfg.noise.model()?;
    let sketch_seed = derive_seed(cfg.seed, &[SKETCH_STREAM]);
    let op = build_operator(&cfg, rows, sketch_seed)?;
    let clean = op.apply((&f * &op.grid().vignette()).view())?;
    let clean = if noise.kind == mcf_core::physics::NoiseKind::Poisson {
        clean.mapv(|v| v.max(0.0))
    } else {
        clean
    };
    let y = noise.apply(clean.view(), derive_seed(cfg.seed, &[NOISE_STREAM]))?;

    let dir = &args.out;
    fs::create_dir_all(dir)?;
    write_vector_csv(&dir.join(MEASUREMENTS), "y", y.view())?;
    write_image_csv(&dir.join(IMAGE), f.view())?;
    let record = SketchRecord {
        distribution: cfg.sketch.distribution,
        count: cfg.sketch.count,
        cores: op.layout().core_count(),
        seed: sketch_seed,
    };
    fs::write(
        dir.join(SKETCHES),
        serde_json::to_string_pretty(&record)? + "\n",
    )?;
    let mut manifest = Manifest::new("simulate", cfg.seed, &cfg)?;
    for name in [MEASUREMENTS, IMAGE, SKETCHES] {
        manifest.record_file(dir, name)?;
    }
    manifest.write(&dir.join(MANIFEST))?;
    println!(
        "wrote {} measurements to {}",
        y.len(),
        dir.join(MEASUREMENTS).display()
    );
    Ok(exit::OK)
}

#[derive(Serialize)]
struct Metrics<'a> {
    #[serde(flatten)]
    result: &'a mcf_core::recon::ReconResult,
    epsilon: f64,
    /// Error against the vignetted ground truth, when one was given.
    relative_error: Option<f64>,
}

fn same_acquisition(a: &RunConfig, b: &RunConfig) -> bool {
    a.seed == b.seed
        && a.layout == b.layout
        && a.optics == b.optics
        && a.grid.fov == b.grid.fov
        && a.grid.vignette_sigma == b.grid.vignette_sigma
        && a.sketch == b.sketch
}

/// Reconstructs the vignetted sample `w·f` from a `simulate` directory.
pub fn reconstruct(
    user: RunConfig,
    explicit_config: bool,
    args: &ReconstructArgs,
) -> Result<u8, Failure> {
    let input = &args.input;
    let manifest_path = input.join(MANIFEST);
    if !manifest_path.exists() {
        return Err(Failure::io(format!(
            "{} does not exist",
            manifest_path.display()
        )));
    }
    let manifest = Manifest::read(&manifest_path)?;
    if manifest.command != "simulate" {
        return Err(Error::ConfigMismatch(format!(
            "{} was not written by simulate",
            manifest_path.display()
        ))
        .into());
    }
    manifest.verify_file(input, MEASUREMENTS)?;
    manifest.verify_file(input, SKETCHES)?;
    let recorded: RunConfig = manifest.config_as()?;
    recorded
        .validate()
        .map_err(|f| Failure::config(format!("manifest config: {}", f.message)))?;
    if explicit_config && !same_acquisition(&user, &recorded) {
        return Err(Failure::config(
            "configuration does not match the acquisition recorded in the manifest",
        ));
    }
    let record: SketchRecord = serde_json::from_str(&fs::read_to_string(input.join(SKETCHES))?)
        .map_err(|e| Failure::config(format!("sketch record: {e}")))?;
    if record.seed != derive_seed(recorded.seed, &[SKETCH_STREAM])
        || record.count != recorded.sketch.count
    {
        return Err(Failure::config("sketch record does not match the manifest"));
    }

    let mut cfg = recorded.clone();
    if explicit_config {
        cfg.solver = user.solver.clone();
    }
    args.solver.apply(&mut cfg);
    let side = cfg
        .grid
        .side
        .ok_or_else(|| Failure::config("manifest lacks the image side"))?;
    let op = build_operator(&cfg, side, record.seed)?;
    let y = read_vector_csv(&input.join(MEASUREMENTS))?;
    if y.len() != op.measurement_count() {
        return Err(Failure::config(format!(
            "{} holds {} values, the manifest declares {}",
            MEASUREMENTS,
            y.len(),
            op.measurement_count()
        )));
    }
    let problem = BpdnProblem::new(&op, y, cfg.solver.epsilon)
        .with_basis(cfg.solver.basis)
        .with_settings(cfg.solver.settings());
    let result = solve_bpdn_l1(&problem)?;

    let error = match &args.truth {
        Some(p) => {
            let truth = read_image(p)?;
            if truth.dim() != result.estimate.dim() {
                return Err(Failure::new(
                    exit::MODEL,
                    "ground truth and estimate differ in size",
                ));
            }
            let vignetted = &truth * &op.grid().vignette();
            Some(relative_error(result.estimate.view(), vignetted.view()))
        }
        None => None,
    };
    let out = args.out.as_deref().unwrap_or(input.as_path());
    fs::create_dir_all(out)?;
    write_image_pgm(&out.join("estimate.pgm"), result.estimate.view())?;
    write_image_csv(&out.join("estimate.csv"), result.estimate.view())?;
    let metrics = Metrics {
        result: &result,
        epsilon: cfg.solver.epsilon,
        relative_error: error,
    };
    fs::write(
        out.join("metrics.json"),
        serde_json::to_string_pretty(&metrics)? + "\n",
    )?;
    write_run_manifest(out, &cfg)?;

    println!(
        "status {:?} after {} iterations; fidelity {:.3e}, objective {:.3e}",
        result.status, result.iterations, result.fidelity_value, result.objective
    );
    if let Some(e) = error {
        println!("relative error {e:.3e}");
    }
    Ok(match result.status {
        SolveStatus::Converged => exit::OK,
        _ => exit::NOT_CONVERGED,
    })
}

fn write_run_manifest(out: &Path, cfg: &RunConfig) -> Result<(), Failure> {
    let mut m = Manifest::new("reconstruct", cfg.seed, cfg)?;
    for name in ["estimate.pgm", "estimate.csv", "metrics.json"] {
        m.record_file(out, name)?;
    }
    m.write(&out.join("reconstruct.manifest.json"))?;
    Ok(())
}

pub fn selftest(seed: u64) -> Result<u8, Failure> {
    let checks = run_selftest(seed)?;
    let mut ok = true;
    for c in &checks {
        println!(
            "{} {:<40} residual {:.2e} (tolerance {:.0e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance
        );
        ok &= c.passed;
    }
    Ok(if ok { exit::OK } else { exit::MODEL })
}
