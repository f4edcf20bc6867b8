use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mcf_core::physics::NoiseKind;
use mcf_core::recon::SparsityBasis;
use mcf_core::SketchDistribution;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "mcf",
    version,
    about = "Multicore-fiber single-pixel imaging: simulation, reconstruction, Monte Carlo studies"
)]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for Monte Carlo commands (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report the visibility set of a core layout and write the layout CSV.
    Geometry(GeometryArgs),
    /// Simulate single-pixel measurements of an image.
    Simulate(SimulateArgs),
    /// Reconstruct an image from simulated measurements.
    Reconstruct(ReconstructArgs),
    /// Success-rate table over measurement budgets and sparsity levels.
    PhaseDiagram(PhaseArgs),
    /// Concentration of the ℓ1/ℓ2 ratio on the circulant operator.
    Rip(RipArgs),
    /// Few- versus many-measurement reconstructions of a sparse phantom.
    Benchmark(BenchmarkArgs),
    /// Run the operator self-checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args, Default)]
pub struct ModelFlags {
    /// Core layout: fermat, grid, or file:<csv>.
    #[arg(long)]
    pub layout: Option<String>,
    /// Number of cores of a spiral layout.
    #[arg(long = "Q", alias = "cores")]
    pub cores: Option<usize>,
    /// Side of a grid layout.
    #[arg(long)]
    pub side: Option<usize>,
    /// Lattice spacing of a grid layout (m).
    #[arg(long)]
    pub pitch: Option<f64>,
    #[arg(long)]
    pub fiber_diameter: Option<f64>,
    #[arg(long)]
    pub wavelength: Option<f64>,
    #[arg(long)]
    pub distance: Option<f64>,
    /// Image side n.
    #[arg(long)]
    pub n: Option<usize>,
    /// Field of view (m).
    #[arg(long)]
    pub fov: Option<f64>,
    #[arg(long)]
    pub vignette_sigma: Option<f64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ModelFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = &self.layout {
            cfg.layout.kind = v.clone();
        }
        set(&mut cfg.layout.cores, self.cores);
        set(&mut cfg.layout.side, self.side);
        set(&mut cfg.layout.pitch, self.pitch);
        if self.fiber_diameter.is_some() {
            cfg.layout.fiber_diameter = self.fiber_diameter;
        }
        set(&mut cfg.optics.wavelength, self.wavelength);
        set(&mut cfg.optics.distance, self.distance);
        if self.n.is_some() {
            cfg.grid.side = self.n;
        }
        if self.fov.is_some() {
            cfg.grid.fov = self.fov;
        }
        if self.vignette_sigma.is_some() {
            cfg.grid.vignette_sigma = self.vignette_sigma;
        }
        set(&mut cfg.seed, self.seed);
    }
}

#[derive(Debug, Args, Default)]
pub struct NoiseFlags {
    /// none, poisson or additive-gaussian.
    #[arg(long, value_parser = parse_noise)]
    pub noise: Option<NoiseKind>,
    /// Expected photon counts per unit intensity.
    #[arg(long)]
    pub photon_scale: Option<f64>,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long)]
    pub sigma: Option<f64>,
}

impl NoiseFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.noise.kind, self.noise);
        set(&mut cfg.noise.photon_scale, self.photon_scale);
        set(&mut cfg.noise.sigma, self.sigma);
    }
}

fn parse_noise(s: &str) -> Result<NoiseKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "none" => Ok(NoiseKind::None),
        "poisson" => Ok(NoiseKind::Poisson),
        "gaussian" | "additive-gaussian" => Ok(NoiseKind::AdditiveGaussian),
        other => Err(format!("unknown noise kind '{other}'")),
    }
}

#[derive(Debug, Args, Default)]
pub struct SolverFlags {
    /// ℓ1 fidelity radius.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// identity or haar.
    #[arg(long, value_parser = |s: &str| s.parse::<SparsityBasis>().map_err(|e| e.to_string()))]
    pub basis: Option<SparsityBasis>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol_primal: Option<f64>,
    #[arg(long)]
    pub tol_gap: Option<f64>,
}

impl SolverFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.solver.epsilon, self.epsilon);
        set(&mut cfg.solver.basis, self.basis);
        set(&mut cfg.solver.max_iters, self.max_iters);
        if self.tol_primal.is_some() {
            cfg.solver.tol_primal = self.tol_primal;
        }
        set(&mut cfg.solver.tol_gap, self.tol_gap);
    }
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    /// Directory for layout.csv and the coverage map.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub noise: NoiseFlags,
    /// Input image (PGM, or CSV of exact values).
    #[arg(long)]
    pub image: PathBuf,
    /// Number of sketches M.
    #[arg(long)]
    pub m: Option<usize>,
    /// complex-gaussian, steering or deterministic.
    #[arg(long, value_parser = |s: &str| s.parse::<SketchDistribution>().map_err(|e| e.to_string()))]
    pub distribution: Option<SketchDistribution>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Directory written by `simulate`.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Ground-truth image for error reporting.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output directory (default: the input directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SweepFlags {
    /// Output directory; rerunning into it resumes an interrupted run.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the planned cells and exit without writing anything.
    #[arg(long)]
    pub dry_run: bool,
    /// Stop after this many newly computed cells.
    #[arg(long, hide = true)]
    pub stop_after: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub noise: NoiseFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Measurement budgets, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ms: Option<Vec<usize>>,
    /// Sparsity levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub sweep: SweepFlags,
}

#[derive(Debug, Args)]
pub struct RipArgs {
    /// Lattice side (N = side² pixels and cores).
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub ms: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub sweep: SweepFlags,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long = "Q", alias = "cores")]
    pub cores: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Phantom sparsity.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub ms: Option<Vec<usize>>,
    /// Number of seeds (phantoms).
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub photon_scale: Option<f64>,
    /// Skip the Poisson noise.
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub sweep: SweepFlags,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

pub fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}
