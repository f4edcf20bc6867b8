use std::fs;
use std::path::{Path, PathBuf};

use mcf_core::geometry::{
    fermat_spiral_layout, integer_grid_layout, CoreLayout, ImageGrid, Optics,
};
use mcf_core::io::read_layout_csv;
use mcf_core::physics::{NoiseKind, NoiseModel};
use mcf_core::recon::{SolverSettings, SparsityBasis};
use mcf_core::SketchDistribution;
use serde::{Deserialize, Serialize};

use crate::exit::Failure;

/// Every knob of every subcommand. Loaded from a TOML file, then
/// overridden by command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub layout: LayoutSection,
    pub optics: OpticsSection,
    pub grid: GridSection,
    pub sketch: SketchSection,
    pub noise: NoiseSection,
    pub solver: SolverSection,
    pub phase: PhaseSection,
    pub rip: RipSection,
    pub benchmark: BenchmarkSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutSection {
    /// `fermat`, `grid`, or `file:<path>` to a CSV of core positions.
    pub kind: String,
    /// Core count of a spiral.
    pub cores: usize,
    /// Lattice side of a grid layout (`side²` cores).
    pub side: usize,
    /// Lattice spacing of a grid layout (m).
    pub pitch: f64,
    /// Fiber diameter (m); inferred for file layouts when absent.
    pub fiber_diameter: Option<f64>,
}

impl Default for LayoutSection {
    fn default() -> Self {
        Self {
            kind: "fermat".into(),
            cores: 32,
            side: 2,
            pitch: 1e-5,
            fiber_diameter: None,
        }
    }
}

const DEFAULT_FIBER_DIAMETER: f64 = 2e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsSection {
    pub wavelength: f64,
    pub distance: f64,
}

impl Default for OpticsSection {
    fn default() -> Self {
        let o = Optics::default();
        Self {
            wavelength: o.wavelength,
            distance: o.distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Image side `n`; commands fall back to their own default.
    pub side: Option<usize>,
    /// Field of view (m); fitted to the layout when absent.
    pub fov: Option<f64>,
    /// Vignette scale (m); a quarter of the field of view when absent.
    pub vignette_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SketchSection {
    pub count: usize,
    pub distribution: SketchDistribution,
}

impl Default for SketchSection {
    fn default() -> Self {
        Self {
            count: 100,
            distribution: SketchDistribution::ComplexGaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub kind: NoiseKind,
    pub photon_scale: f64,
    pub sigma: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseModel::none();
        Self {
            kind: n.kind,
            photon_scale: n.photon_scale,
            sigma: n.sigma,
        }
    }
}

impl NoiseSection {
    pub fn model(&self) -> Result<NoiseModel, Failure> {
        let m = NoiseModel {
            kind: self.kind,
            photon_scale: self.photon_scale,
            sigma: self.sigma,
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    /// ℓ1 fidelity radius.
    pub epsilon: f64,
    pub basis: SparsityBasis,
    pub max_iters: usize,
    pub tol_primal: Option<f64>,
    pub tol_gap: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            epsilon: 0.0,
            basis: SparsityBasis::Identity,
            max_iters: s.max_iters,
            tol_primal: s.tol_primal,
            tol_gap: s.tol_gap,
        }
    }
}

impl SolverSection {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            max_iters: self.max_iters,
            tol_primal: self.tol_primal,
            tol_gap: self.tol_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSection {
    pub measurements: Vec<usize>,
    pub sparsities: Vec<usize>,
    pub trials: usize,
    pub success_threshold: f64,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            measurements: vec![12, 18, 25, 35, 50, 70, 100, 200, 400],
            sparsities: vec![2, 4, 6, 8, 10],
            trials: 50,
            success_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RipSection {
    pub side: usize,
    pub measurements: Vec<usize>,
    pub sparsities: Vec<usize>,
    pub samples: usize,
}

impl Default for RipSection {
    fn default() -> Self {
        Self {
            side: 16,
            measurements: vec![50, 100, 200, 400],
            sparsities: vec![5],
            samples: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSection {
    pub cores: usize,
    pub side: usize,
    pub sparsity: usize,
    pub measurements: Vec<usize>,
    pub seeds: usize,
    /// Poisson photon scale; ignored when `noiseless`.
    pub photon_scale: f64,
    pub noiseless: bool,
    pub pilot_draws: usize,
    pub max_iters: usize,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self {
            cores: 110,
            side: 32,
            sparsity: 20,
            measurements: vec![49, 20_000],
            seeds: 5,
            photon_scale: 1.0,
            noiseless: false,
            pilot_draws: 100,
            max_iters: 1000,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
            .map_err(|f| Failure::config(format!("{}: {}", path.display(), f.message)))
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: Self = toml::from_str(text).map_err(|e| Failure::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<(), Failure> {
        self.layout_kind()?;
        self.optics()?;
        self.noise.model().map_err(|f| Failure::config(f.message))?;
        if self.phase.trials == 0 {
            return Err(Failure::config("phase.trials must be at least 1"));
        }
        if !(self.phase.success_threshold > 0.0 && self.phase.success_threshold < 1.0) {
            return Err(Failure::config(
                "phase.success_threshold must lie in (0, 1)",
            ));
        }
        if let Some(fov) = self.grid.fov {
            if !(fov > 0.0 && fov.is_finite()) {
                return Err(Failure::config("grid.fov must be positive"));
            }
        }
        Ok(())
    }

    pub fn optics(&self) -> Result<Optics, Failure> {
        Ok(Optics::new(self.optics.wavelength, self.optics.distance)?)
    }

    pub fn layout_kind(&self) -> Result<LayoutChoice, Failure> {
        let k = self.layout.kind.trim();
        if let Some(p) = k.strip_prefix("file:") {
            return Ok(LayoutChoice::File(PathBuf::from(p)));
        }
        match k {
            "fermat" | "spiral" => Ok(LayoutChoice::Fermat),
            "grid" | "integer-grid" => Ok(LayoutChoice::Grid),
            other => Err(Failure::config(format!(
                "layout.kind must be 'fermat', 'grid' or 'file:<path>', got '{other}'"
            ))),
        }
    }

    pub fn build_layout(&self) -> Result<CoreLayout, Failure> {
        let optics = self.optics()?;
        Ok(match self.layout_kind()? {
            LayoutChoice::Fermat => fermat_spiral_layout(
                self.layout.cores,
                self.layout.fiber_diameter.unwrap_or(DEFAULT_FIBER_DIAMETER),
                optics,
            )?,
            LayoutChoice::Grid => integer_grid_layout(self.layout.side, self.layout.pitch, optics)?,
            LayoutChoice::File(p) => {
                if !p.exists() {
                    return Err(Failure::io(format!(
                        "layout file {} does not exist",
                        p.display()
                    )));
                }
                read_layout_csv(&p, self.layout.fiber_diameter, optics)?
            }
        })
    }

    /// Raster of side `side` for `layout`: an explicit field of view when
    /// configured, one bin per lattice step for grid layouts, otherwise
    /// fitted to the band edge.
    pub fn build_grid(&self, layout: &CoreLayout, side: usize) -> Result<ImageGrid, Failure> {
        let base = match (self.grid.fov, layout.pitch()) {
            (Some(fov), _) => ImageGrid::new(side, fov)?,
            (None, Some(pitch)) => ImageGrid::lattice(layout, pitch, side)?,
            (None, None) => ImageGrid::fitted(layout, side)?,
        };
        Ok(match self.grid.vignette_sigma {
            Some(s) => ImageGrid::with_vignette(side, base.fov(), s)?,
            None => base,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayoutChoice {
    Fermat,
    Grid,
    File(PathBuf),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_is_lossless() {
        let mut cfg = RunConfig {
            seed: 17,
            ..RunConfig::default()
        };
        cfg.grid.fov = Some(3.5e-3);
        cfg.noise.kind = NoiseKind::Poisson;
        cfg.noise.photon_scale = 20.0;
        cfg.phase.sparsities = vec![1, 3];
        cfg.solver.tol_primal = Some(1e-7);
        let back = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("seed = 1\nbogus = 2\n").is_err());
        assert!(RunConfig::parse("[layout]\ncores = 5\nshape = 'x'\n").is_err());
    }

    #[test]
    fn sections_are_optional() {
        let cfg = RunConfig::parse("[layout]\ncores = 12\n").unwrap();
        assert_eq!(cfg.layout.cores, 12);
        assert_eq!(cfg.sketch, SketchSection::default());
    }
}
