use std::collections::HashMap;
use std::sync::OnceLock;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::circulant::{autocorrelation, CirculantMatrix};
use super::interf::{interf_adjoint_with, interf_forward_with};
use super::linop::{power_norm, LinearOperator, POWER_ITERATIONS};
use super::srop::{srop_adjoint, srop_apply, SketchSet};
use crate::error::{invalid, Result};
use crate::fft::Fft2;
use crate::geometry::{
    compute_visibilities, integer_grid_layout, CoreLayout, ImageGrid, Optics, VisibilitySet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensingVariant {
    /// Partial Fourier sampling on the gridded visibilities, then SROP.
    General,
    /// Every lattice site of the `n × n` grid is a core; the interferometric
    /// matrix is the block-circulant embedding of the full spectrum.
    Circulant,
}

/// The composed sensing map `B`: real `n × n` image ↦ real `M`-vector of
/// rank-one projections of its interferometric matrix.
///
/// Applications go through a fused spectral form: for each sketch the
/// quadratic form collapses to a fixed linear functional of the image
/// spectrum restricted to one representative per conjugate pair of visited
/// cells. The step-by-step composition is kept as `apply_reference` /
/// `adjoint_reference`.
#[derive(Debug)]
pub struct SensingOp {
    layout: CoreLayout,
    grid: ImageGrid,
    visibilities: Option<VisibilitySet>,
    sketches: SketchSet,
    variant: SensingVariant,
    fft: Fft2,
    fused: SpectralSketch,
    norm: OnceLock<f64>,
}

/// `y = W · [Re s_rep ; Im s_rep]` with `s` the image spectrum.
#[derive(Debug, Clone)]
struct SpectralSketch {
    reps: Vec<[usize; 2]>,
    weights: Array2<f64>,
}

/// Canonical representative of a cell under `b ↦ −b`.
fn negate(cell: [usize; 2], n: usize) -> [usize; 2] {
    [(n - cell[0]) % n, (n - cell[1]) % n]
}

fn representative(cell: [usize; 2], n: usize) -> [usize; 2] {
    cell.min(negate(cell, n))
}

impl SensingOp {
    /// `B = A ∘ R_Ṽ ∘ F` for an arbitrary layout.
    pub fn general(layout: CoreLayout, grid: ImageGrid, sketches: SketchSet) -> Result<Self> {
        let q = layout.core_count();
        if sketches.core_count() != q {
            return Err(invalid(format!(
                "sketches have {} entries for {q} cores",
                sketches.core_count()
            )));
        }
        let vis = compute_visibilities(&layout, &grid)?;
        let n = grid.side();

        let mut index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut reps = Vec::new();
        for &cell in vis.multiplicity().keys() {
            let r = representative(cell, n);
            index.entry(r).or_insert_with(|| {
                reps.push(r);
                reps.len() - 1
            });
        }
        let pairs: Vec<(usize, bool)> = (0..q * q)
            .map(|jk| {
                let cell = vis.cell(jk / q, jk % q);
                (
                    index[&representative(cell, n)],
                    cell == representative(cell, n),
                )
            })
            .collect();
        let selfconj: Vec<bool> = reps.iter().map(|&r| negate(r, n) == r).collect();

        let p = reps.len();
        let rows: Vec<Vec<Complex64>> = (0..sketches.len())
            .into_par_iter()
            .map(|m| {
                let a = sketches.vector(m);
                let mut coef = vec![Complex64::new(0.0, 0.0); p];
                for j in 0..q {
                    let aj = a[j].conj();
                    for k in 0..q {
                        let z = aj * a[k];
                        let (idx, direct) = pairs[j * q + k];
                        coef[idx] += if direct { z } else { z.conj() };
                    }
                }
                coef
            })
            .collect();
        let fused = SpectralSketch::from_rows(reps, &selfconj, rows);

        Ok(Self {
            layout,
            grid,
            visibilities: Some(vis),
            sketches,
            variant: SensingVariant::General,
            fft: Fft2::new(n, n),
            fused,
            norm: OnceLock::new(),
        })
    }

    /// `B = A ∘ T ∘ F` on an `n × n` lattice of cores with spacing `pitch`;
    /// sketches must have `n²` entries indexed `a·n + b` for site `(a, b)`.
    pub fn circulant(side: usize, pitch: f64, optics: Optics, sketches: SketchSet) -> Result<Self> {
        let layout = integer_grid_layout(side, pitch, optics)?;
        let grid = ImageGrid::lattice(&layout, pitch, side)?;
        let n = side;
        if sketches.core_count() != n * n {
            return Err(invalid(format!(
                "circulant sketches need {} entries, got {}",
                n * n,
                sketches.core_count()
            )));
        }
        let fft = Fft2::new(n, n);
        let mut reps = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let c = [a, b];
                if representative(c, n) == c {
                    reps.push(c);
                }
            }
        }
        let selfconj: Vec<bool> = reps.iter().map(|&r| negate(r, n) == r).collect();
        let rows: Vec<Vec<Complex64>> = (0..sketches.len())
            .into_par_iter()
            .map(|m| {
                let r = autocorrelation(&fft, sketches.vector(m));
                reps.iter()
                    .zip(&selfconj)
                    .map(|(&c, &sc)| {
                        if sc {
                            r[c]
                        } else {
                            r[c] + r[negate(c, n)].conj()
                        }
                    })
                    .collect()
            })
            .collect();
        let fused = SpectralSketch::from_rows(reps, &selfconj, rows);
        Ok(Self {
            layout,
            grid,
            visibilities: None,
            sketches,
            variant: SensingVariant::Circulant,
            fft,
            fused,
            norm: OnceLock::new(),
        })
    }

    pub fn layout(&self) -> &CoreLayout {
        &self.layout
    }

    pub fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    /// Gridded visibilities (General variant only).
    pub fn visibilities(&self) -> Option<&VisibilitySet> {
        self.visibilities.as_ref()
    }

    pub fn sketches(&self) -> &SketchSet {
        &self.sketches
    }

    pub fn variant(&self) -> SensingVariant {
        self.variant
    }

    pub fn measurement_count(&self) -> usize {
        self.sketches.len()
    }

    /// Number of conjugate-pair spectral cells the measurements depend on.
    pub fn spectral_support(&self) -> usize {
        self.fused.reps.len()
    }

    /// Cached estimate of `‖B‖₂` (power iteration).
    pub fn norm(&self) -> f64 {
        *self.norm.get_or_init(|| power_norm(self, POWER_ITERATIONS))
    }

    fn check_image(&self, f: ArrayView2<f64>) -> Result<()> {
        if f.dim() != self.grid.shape() {
            return Err(invalid(format!(
                "image is {:?}, operator expects {:?}",
                f.dim(),
                self.grid.shape()
            )));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(invalid("image has non-finite pixels"));
        }
        Ok(())
    }

    fn check_measurements(&self, y: ArrayView1<f64>) -> Result<()> {
        if y.len() != self.measurement_count() {
            return Err(invalid(format!(
                "{} measurements for an operator with M = {}",
                y.len(),
                self.measurement_count()
            )));
        }
        Ok(())
    }

    /// `B f` (fused path).
    pub fn apply(&self, f: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.check_image(f)?;
        Ok(self.apply_unchecked(f))
    }

    fn apply_unchecked(&self, f: ArrayView2<f64>) -> Array1<f64> {
        let s = self.fft.spectrum(f);
        let p = self.fused.reps.len();
        let mut u = Array1::zeros(2 * p);
        for (i, &c) in self.fused.reps.iter().enumerate() {
            u[i] = s[c].re;
            u[p + i] = s[c].im;
        }
        self.fused.weights.dot(&u)
    }

    /// `B* y` (fused path).
    pub fn adjoint(&self, y: ArrayView1<f64>) -> Result<Array2<f64>> {
        self.check_measurements(y)?;
        Ok(self.adjoint_unchecked(y))
    }

    fn adjoint_unchecked(&self, y: ArrayView1<f64>) -> Array2<f64> {
        let p = self.fused.reps.len();
        // Row-wise accumulation reads `W` contiguously; `Wᵀ·y` through a
        // transposed view is several times slower.
        let mut g = Array1::<f64>::zeros(2 * p);
        for (row, &ym) in self.fused.weights.axis_iter(Axis(0)).zip(y.iter()) {
            if ym != 0.0 {
                g.scaled_add(ym, &row);
            }
        }
        let mut spec = Array2::<Complex64>::zeros(self.grid.shape());
        for (i, &c) in self.fused.reps.iter().enumerate() {
            spec[c] = Complex64::new(g[i], g[p + i]);
        }
        self.fft.spectrum_adjoint(spec)
    }

    /// `B f` evaluated stage by stage: interferometric matrix (or its
    /// circulant embedding), then the rank-one projections.
    pub fn apply_reference(&self, f: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.check_image(f)?;
        match self.variant {
            SensingVariant::General => {
                let vis = self
                    .visibilities
                    .as_ref()
                    .expect("general variant has visibilities");
                let h = interf_forward_with(&self.fft, f, vis, &self.grid)?;
                srop_apply(&h, &self.sketches)
            }
            SensingVariant::Circulant => {
                let c = CirculantMatrix::from_generator(self.fft.spectrum(f).view());
                let mut y = Array1::zeros(self.measurement_count());
                for (m, v) in y.iter_mut().enumerate() {
                    *v = c.quadratic_form(self.sketches.vector(m))?.re;
                }
                Ok(y)
            }
        }
    }

    /// `B* y` evaluated stage by stage: `Σ y_m α_m α_m*`, scattered onto the
    /// spectrum, then the adjoint DFT.
    pub fn adjoint_reference(&self, y: ArrayView1<f64>) -> Result<Array2<f64>> {
        self.check_measurements(y)?;
        let h = srop_adjoint(y, &self.sketches)?;
        match self.variant {
            SensingVariant::General => {
                let vis = self
                    .visibilities
                    .as_ref()
                    .expect("general variant has visibilities");
                interf_adjoint_with(&self.fft, h.entries().view(), vis, &self.grid)
            }
            SensingVariant::Circulant => {
                let n = self.grid.side();
                let mut spec = Array2::<Complex64>::zeros((n, n));
                for (jk, z) in h.entries().iter().enumerate() {
                    let (j, k) = (jk / (n * n), jk % (n * n));
                    let cell = [(j / n + n - k / n) % n, (j % n + n - k % n) % n];
                    spec[cell] += z;
                }
                Ok(self.fft.spectrum_adjoint(spec))
            }
        }
    }
}

impl SpectralSketch {
    fn from_rows(reps: Vec<[usize; 2]>, selfconj: &[bool], rows: Vec<Vec<Complex64>>) -> Self {
        let p = reps.len();
        let mut weights = Array2::zeros((rows.len(), 2 * p));
        for (mut w, coef) in weights.axis_iter_mut(Axis(0)).zip(rows) {
            for (i, z) in coef.into_iter().enumerate() {
                // Self-conjugate cells carry real spectra; their imaginary
                // coefficient only multiplies rounding noise.
                w[i] = z.re;
                w[p + i] = if selfconj[i] { 0.0 } else { -z.im };
            }
        }
        Self { reps, weights }
    }
}

impl LinearOperator for SensingOp {
    fn domain_len(&self) -> usize {
        self.grid.len()
    }

    fn range_len(&self) -> usize {
        self.measurement_count()
    }

    fn matvec(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let f = x.to_shape(self.grid.shape()).expect("domain length");
        self.apply_unchecked(f.view())
    }

    fn rmatvec(&self, y: ArrayView1<f64>) -> Array1<f64> {
        Array1::from_iter(self.adjoint_unchecked(y))
    }
}

/// Noiseless measurements `B f`.
pub fn sensing_apply(f: ArrayView2<f64>, op: &SensingOp) -> Result<Array1<f64>> {
    op.apply(f)
}

/// Zero-pads sketches for a `q × q` integer-grid layout (core `a·q + b`)
/// onto the sites of an `n × n` lattice (core `a·n + b`).
pub fn embed_sketches(sketches: &SketchSet, q_side: usize, n: usize) -> Result<SketchSet> {
    if sketches.core_count() != q_side * q_side {
        return Err(invalid(format!(
            "sketches have {} entries, a {q_side}×{q_side} grid has {}",
            sketches.core_count(),
            q_side * q_side
        )));
    }
    if q_side > n {
        return Err(invalid(format!(
            "cannot embed a {q_side}-wide grid into an {n}-wide lattice"
        )));
    }
    let mut out = Array2::<Complex64>::zeros((sketches.len(), n * n));
    for (m, a) in sketches.vectors().rows().into_iter().enumerate() {
        for (j, z) in a.iter().enumerate() {
            out[[m, (j / q_side) * n + j % q_side]] = *z;
        }
    }
    SketchSet::from_vectors(out)
}
