use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::interf::InterfMatrix;
use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SketchDistribution {
    /// i.i.d. circular complex Gaussian entries with `E|α|² = 1`.
    ComplexGaussian,
    /// i.i.d. unit-modulus entries `e^{iφ}` with uniform phases, the pattern
    /// a phase-only modulator produces.
    Steering,
    /// The polarization probe set of [`deterministic_probe_set`].
    Deterministic,
    /// Caller-supplied vectors; cannot be drawn by [`make_sketches`].
    Explicit,
}

impl fmt::Display for SketchDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ComplexGaussian => "complex-gaussian",
            Self::Steering => "steering",
            Self::Deterministic => "deterministic",
            Self::Explicit => "explicit",
        })
    }
}

impl FromStr for SketchDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "complex-gaussian" | "gaussian" => Ok(Self::ComplexGaussian),
            "steering" => Ok(Self::Steering),
            "deterministic" => Ok(Self::Deterministic),
            "explicit" => Ok(Self::Explicit),
            other => Err(invalid(format!("unknown sketch distribution '{other}'"))),
        }
    }
}

/// `M` sketching vectors `α_m ∈ ℂ^Q`, stored as the rows of an `M × Q` array.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchSet {
    vectors: Array2<Complex64>,
    distribution: SketchDistribution,
    seed: u64,
}

impl SketchSet {
    /// Wraps caller-supplied vectors (one per row).
    pub fn from_vectors(vectors: Array2<Complex64>) -> Result<Self> {
        Self::with_metadata(vectors, SketchDistribution::Explicit, 0)
    }

    pub(crate) fn with_metadata(
        vectors: Array2<Complex64>,
        distribution: SketchDistribution,
        seed: u64,
    ) -> Result<Self> {
        if vectors.ncols() == 0 {
            return Err(invalid("sketch vectors must have at least one entry"));
        }
        if vectors
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(invalid("sketch vectors must be finite"));
        }
        Ok(Self {
            vectors,
            distribution,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    pub fn core_count(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vector(&self, m: usize) -> ArrayView1<'_, Complex64> {
        self.vectors.row(m)
    }

    pub fn vectors(&self) -> &Array2<Complex64> {
        &self.vectors
    }

    pub fn distribution(&self) -> SketchDistribution {
        self.distribution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The first `m` vectors, keeping the generation metadata.
    pub fn truncated(&self, m: usize) -> Self {
        let m = m.min(self.len());
        Self {
            vectors: self.vectors.slice(ndarray::s![..m, ..]).to_owned(),
            distribution: self.distribution,
            seed: self.seed,
        }
    }
}

/// Draws `m` sketching vectors of length `q`. The stream depends on the seed
/// only, so the result is identical across runs and thread counts.
pub fn make_sketches(
    m: usize,
    q: usize,
    distribution: SketchDistribution,
    seed: u64,
) -> Result<SketchSet> {
    if m == 0 || q == 0 {
        return Err(invalid(format!(
            "need M ≥ 1 and Q ≥ 1, got M = {m}, Q = {q}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let vectors = match distribution {
        SketchDistribution::ComplexGaussian => {
            let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
            let mut out = Array2::zeros((m, q));
            for z in out.iter_mut() {
                *z = Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            }
            out
        }
        SketchDistribution::Steering => {
            let phase = Uniform::new(0.0, std::f64::consts::TAU);
            let mut out = Array2::zeros((m, q));
            for z in out.iter_mut() {
                *z = Complex64::from_polar(1.0, phase.sample(&mut rng));
            }
            out
        }
        SketchDistribution::Deterministic => {
            if m != q * q {
                return Err(invalid(format!(
                    "the deterministic probe set for Q = {q} has exactly {} vectors, requested {m}",
                    q * q
                )));
            }
            return Ok(deterministic_probe_set(q));
        }
        SketchDistribution::Explicit => {
            return Err(invalid(
                "explicit sketches cannot be drawn; build them with SketchSet::from_vectors",
            ));
        }
    };
    SketchSet::with_metadata(vectors, distribution, seed)
}

/// The `Q²` polarization probes, in order: `e_j` for every `j`, then
/// `e_j + e_k` and finally `e_j + i·e_k`, each over `j < k` in
/// lexicographic order.
pub fn deterministic_probe_set(q: usize) -> SketchSet {
    let q = q.max(1);
    let mut v = Array2::<Complex64>::zeros((q * q, q));
    let one = Complex64::new(1.0, 0.0);
    for j in 0..q {
        v[[j, j]] = one;
    }
    let pairs = q * (q - 1) / 2;
    let mut row = q;
    for j in 0..q {
        for k in (j + 1)..q {
            v[[row, j]] = one;
            v[[row, k]] = one;
            v[[row + pairs, j]] = one;
            v[[row + pairs, k]] = Complex64::i();
            row += 1;
        }
    }
    SketchSet {
        vectors: v,
        distribution: SketchDistribution::Deterministic,
        seed: 0,
    }
}

/// Inverts the polarization probes: given `y = srop_apply(H, deterministic_probe_set(Q))`,
/// rebuilds `H` from
/// `H_jj = y_j`,
/// `Re H_jk = (y⁺_jk − H_jj − H_kk)/2` and
/// `Im H_jk = (H_jj + H_kk − y^i_jk)/2`,
/// the last because `(e_j + i e_k)* H (e_j + i e_k) = H_jj + H_kk − 2 Im H_jk`.
pub fn recover_matrix(y: &[f64], q: usize) -> Result<InterfMatrix> {
    if q == 0 || y.len() != q * q {
        return Err(invalid(format!(
            "polarization recovery for Q = {q} needs {} measurements, got {}",
            q * q,
            y.len()
        )));
    }
    let mut h = Array2::<Complex64>::zeros((q, q));
    for j in 0..q {
        h[[j, j]] = Complex64::new(y[j], 0.0);
    }
    let pairs = q * (q - 1) / 2;
    let mut row = q;
    for j in 0..q {
        for k in (j + 1)..q {
            let d = y[j] + y[k];
            let re = 0.5 * (y[row] - d);
            let im = 0.5 * (d - y[row + pairs]);
            h[[j, k]] = Complex64::new(re, im);
            h[[k, j]] = Complex64::new(re, -im);
            row += 1;
        }
    }
    Ok(InterfMatrix::symmetrized(h))
}

/// Symmetric rank-one projections `y_m = α_m* H α_m`. The imaginary parts
/// vanish for Hermitian `H` and are dropped after a sanity check.
pub fn srop_apply(h: &InterfMatrix, sketches: &SketchSet) -> Result<Array1<f64>> {
    let q = h.dim();
    if sketches.core_count() != q {
        return Err(invalid(format!(
            "sketches have {} entries, matrix is {q}×{q}",
            sketches.core_count()
        )));
    }
    let hm = h.entries();
    let hnorm = h.norm();
    let mut y = Array1::zeros(sketches.len());
    let mut hx = vec![Complex64::new(0.0, 0.0); q];
    for (m, a) in sketches.vectors.rows().into_iter().enumerate() {
        for (j, out) in hx.iter_mut().enumerate() {
            let row = hm.row(j);
            *out = row.iter().zip(a.iter()).map(|(x, b)| x * b).sum();
        }
        let v: Complex64 = a.iter().zip(hx.iter()).map(|(b, x)| b.conj() * x).sum();
        let scale = hnorm * a.iter().map(|z| z.norm_sqr()).sum::<f64>();
        debug_assert!(
            v.im.abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE),
            "non-negligible imaginary part {} in a Hermitian form",
            v.im
        );
        y[m] = v.re;
    }
    Ok(y)
}

/// Adjoint of [`srop_apply`]: `Σ_m y_m α_m α_m*`.
pub fn srop_adjoint(y: ArrayView1<f64>, sketches: &SketchSet) -> Result<InterfMatrix> {
    if y.len() != sketches.len() {
        return Err(invalid(format!(
            "{} measurements for {} sketches",
            y.len(),
            sketches.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(invalid("measurements must be finite"));
    }
    let q = sketches.core_count();
    let mut h = Array2::<Complex64>::zeros((q, q));
    for (a, &ym) in sketches.vectors.rows().into_iter().zip(y.iter()) {
        if ym == 0.0 {
            continue;
        }
        for j in 0..q {
            let aj = a[j] * ym;
            for k in j..q {
                h[[j, k]] += aj * a[k].conj();
            }
        }
    }
    for j in 0..q {
        h[[j, j]].im = 0.0;
        for k in (j + 1)..q {
            h[[k, j]] = h[[j, k]].conj();
        }
    }
    Ok(InterfMatrix::symmetrized(h))
}
