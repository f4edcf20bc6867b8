//! Quick numerical self-checks of the operator chain: adjoint identities,
//! naive-oracle agreement, and exact probe recovery.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{compute_visibilities, integer_grid_layout, CoreLayout, ImageGrid, Optics};
use crate::operators::{
    deterministic_probe_set, embed_sketches, interf_adjoint, interf_forward, make_sketches,
    recover_matrix, srop_adjoint, srop_apply, InterfMatrix, SensingOp, SketchDistribution,
};
use crate::physics::{measure, NoiseModel};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    /// Worst relative discrepancy observed.
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &'static str, residual: f64, tolerance: f64) -> Self {
        Self {
            name,
            residual,
            tolerance,
            passed: residual.is_finite() && residual < tolerance,
        }
    }
}

fn random_image<R: Rng>(n: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, n), || rng.sample(StandardNormal))
}

fn random_layout<R: Rng>(q: usize, rng: &mut R) -> Result<CoreLayout> {
    let positions = (0..q)
        .map(|_| [rng.gen_range(-1e-4..1e-4), rng.gen_range(-1e-4..1e-4)])
        .collect();
    CoreLayout::explicit(positions, None, Optics::default())
}

fn random_hermitian<R: Rng>(q: usize, rng: &mut R) -> InterfMatrix {
    let mut a = Array2::<Complex64>::zeros((q, q));
    for j in 0..q {
        a[[j, j]] = Complex64::new(rng.sample(StandardNormal), 0.0);
        for k in j + 1..q {
            let z = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            a[[j, k]] = z;
            a[[k, j]] = z.conj();
        }
    }
    InterfMatrix::from_hermitian(a).expect("constructed Hermitian")
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

fn dot(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.dot(b)
}

fn naive_dft_check(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let n = 8;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let layout = random_layout(5, &mut rng)?;
        let grid = ImageGrid::fitted(&layout, n)?;
        let vis = compute_visibilities(&layout, &grid)?;
        let f = random_image(n, &mut rng);
        let h = interf_forward(f.view(), &vis, &grid)?;
        let c = (n / 2) as f64;
        let mut err = 0.0;
        let mut norm = 0.0;
        for j in 0..5 {
            for k in 0..5 {
                let g = vis.gridded(j.min(k), j.max(k));
                let mut z = Complex64::new(0.0, 0.0);
                for ((a, b), &v) in f.indexed_iter() {
                    let phase =
                        -2.0 * PI * (g[0] as f64 * (a as f64 - c) + g[1] as f64 * (b as f64 - c))
                            / n as f64;
                    z += v * Complex64::from_polar(1.0, phase);
                }
                if j > k {
                    z = z.conj();
                }
                err += (h.entries()[[j, k]] - z).norm_sqr();
                norm += z.norm_sqr();
            }
        }
        worst = worst.max((err / norm).sqrt());
    }
    Ok(worst)
}

fn interf_adjoint_check(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let layout = random_layout(7, &mut rng)?;
    let grid = ImageGrid::fitted(&layout, 16)?;
    let vis = compute_visibilities(&layout, &grid)?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = random_image(16, &mut rng);
        let h = random_hermitian(7, &mut rng);
        let lhs = interf_forward(f.view(), &vis, &grid)?.inner(&h);
        let rhs = (&f * &interf_adjoint(&h, &vis, &grid)?).sum();
        let scale = interf_forward(f.view(), &vis, &grid)?.norm() * h.norm();
        worst = worst.max(rel(lhs, rhs, scale));
    }
    Ok(worst)
}

fn srop_adjoint_check(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let sketches = make_sketches(12, 6, SketchDistribution::ComplexGaussian, seed)?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let h = random_hermitian(6, &mut rng);
        let y: Array1<f64> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
        let ah = srop_apply(&h, &sketches)?;
        let lhs = dot(&ah, &y);
        let rhs = h.inner(&srop_adjoint(y.view(), &sketches)?);
        worst = worst.max(rel(lhs, rhs, ah.dot(&ah).sqrt() * y.dot(&y).sqrt()));
    }
    Ok(worst)
}

fn sensing_adjoint_check(op: &SensingOp, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let n = op.grid().side();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = random_image(n, &mut rng);
        let y: Array1<f64> = (0..op.measurement_count())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let bf = op.apply(f.view())?;
        let lhs = bf.dot(&y);
        let rhs = (&f * &op.adjoint(y.view())?).sum();
        worst = worst.max(rel(lhs, rhs, bf.dot(&bf).sqrt() * y.dot(&y).sqrt()));
    }
    Ok(worst)
}

fn variant_agreement_check(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let (q_side, n) = (3, 8);
    let pitch = 1e-5;
    let layout = integer_grid_layout(q_side, pitch, Optics::default())?;
    let grid = ImageGrid::lattice(&layout, pitch, n)?;
    let sketches = make_sketches(
        10,
        q_side * q_side,
        SketchDistribution::ComplexGaussian,
        seed,
    )?;
    let general = SensingOp::general(layout, grid, sketches.clone())?;
    let circulant = SensingOp::circulant(
        n,
        pitch,
        Optics::default(),
        embed_sketches(&sketches, q_side, n)?,
    )?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = random_image(n, &mut rng);
        let a = general.apply(f.view())?;
        let b = circulant.apply(f.view())?;
        worst = worst.max((&a - &b).dot(&(&a - &b)).sqrt() / a.dot(&a).sqrt());
    }
    Ok(worst)
}

fn probe_recovery_check(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let q = 10;
    let probes = deterministic_probe_set(q);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let h = random_hermitian(q, &mut rng);
        let y = srop_apply(&h, &probes)?;
        let back = recover_matrix(y.as_slice().expect("contiguous"), q)?;
        let diff = InterfMatrix::symmetrized(back.entries() - h.entries());
        worst = worst.max(diff.norm() / h.norm());
    }
    Ok(worst)
}

fn modeling_identity_check(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    // Lattice cores put every visibility exactly on a DFT bin.
    let layout = integer_grid_layout(3, 1e-5, Optics::default())?;
    let grid = ImageGrid::lattice(&layout, 1e-5, 16)?;
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let f = random_image(16, &mut rng).mapv(f64::abs);
        let sketches = make_sketches(1, 9, SketchDistribution::ComplexGaussian, seed ^ t as u64)?;
        let op = SensingOp::general(layout.clone(), grid, sketches.clone())?;
        let via_op = op.apply((&f * &grid.vignette()).view())?[0];
        let via_physics = measure(
            f.view(),
            sketches.vector(0),
            &layout,
            &grid,
            &NoiseModel::none(),
            0,
        )?;
        worst = worst.max(rel(via_op, via_physics, via_physics.abs()));
    }
    Ok(worst)
}

/// Runs every check; the suite passes when every entry does.
pub fn run_selftest(seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng_from_seed(seed);
    let layout = random_layout(9, &mut rng)?;
    let grid = ImageGrid::fitted(&layout, 16)?;
    let general = SensingOp::general(
        layout,
        grid,
        make_sketches(30, 9, SketchDistribution::ComplexGaussian, seed)?,
    )?;
    let circulant = SensingOp::circulant(
        8,
        1e-5,
        Optics::default(),
        make_sketches(30, 64, SketchDistribution::ComplexGaussian, seed)?,
    )?;
    Ok(vec![
        Check::new(
            "interferometric forward vs naive DFT",
            naive_dft_check(5, seed)?,
            1e-12,
        ),
        Check::new(
            "interferometric adjoint identity",
            interf_adjoint_check(20, seed)?,
            1e-10,
        ),
        Check::new(
            "sketch adjoint identity",
            srop_adjoint_check(20, seed)?,
            1e-10,
        ),
        Check::new(
            "general sensing adjoint identity",
            sensing_adjoint_check(&general, 20, seed)?,
            1e-10,
        ),
        Check::new(
            "circulant sensing adjoint identity",
            sensing_adjoint_check(&circulant, 20, seed)?,
            1e-10,
        ),
        Check::new(
            "general vs circulant agreement",
            variant_agreement_check(5, seed)?,
            1e-12,
        ),
        Check::new(
            "polarization probe recovery",
            probe_recovery_check(5, seed)?,
            1e-12,
        ),
        Check::new(
            "speckle measurement vs operator",
            modeling_identity_check(10, seed)?,
            1e-10,
        ),
    ])
}
