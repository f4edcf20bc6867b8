//! Fixtures shared by the criterion benches.

use mcf_core::experiments::sparse_phantom;
use mcf_core::rng::rng_from_seed;
use mcf_core::{
    fermat_spiral_layout, make_sketches, ImageGrid, Optics, SensingOp, SketchDistribution,
};
use ndarray::Array2;

/// Spiral layout of `q` cores on a fitted `n x n` grid with `m` Gaussian sketches.
pub fn spiral_operator(q: usize, n: usize, m: usize) -> SensingOp {
    let layout = fermat_spiral_layout(q, 2e-4, Optics::default()).expect("layout");
    let grid = ImageGrid::fitted(&layout, n).expect("grid");
    let sketches = make_sketches(m, q, SketchDistribution::ComplexGaussian, 7).expect("sketches");
    SensingOp::general(layout, grid, sketches).expect("operator")
}

/// Lattice operator with `side²` cores and pixels.
pub fn lattice_operator(side: usize, m: usize) -> SensingOp {
    let sketches =
        make_sketches(m, side * side, SketchDistribution::ComplexGaussian, 7).expect("sketches");
    SensingOp::circulant(side, 1e-5, Optics::default(), sketches).expect("operator")
}

pub fn phantom(n: usize, k: usize) -> Array2<f64> {
    sparse_phantom(n, k, false, &mut rng_from_seed(3))
}
