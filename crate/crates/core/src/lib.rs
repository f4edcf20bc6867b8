//! Simulation and reconstruction toolkit for lensless multicore-fiber
//! single-pixel imaging.
//!
//! The sensing chain is modeled as partial Fourier sampling of the sample on
//! the core-difference frequencies (the interferometric matrix), followed by
//! symmetric rank-one projections set by the wavefront-shaping vectors.
//! Images are recovered by basis pursuit with an ℓ1 data-fidelity constraint.

pub mod error;
pub mod experiments;
pub mod fft;
pub mod geometry;
pub mod io;
pub mod operators;
pub mod physics;
pub mod recon;
pub mod rng;
pub mod selftest;

pub use error::{Error, Result};
pub use geometry::{
    compute_visibilities, fermat_spiral_layout, integer_grid_layout, CoreLayout, ImageGrid,
    LayoutKind, Optics, VisibilitySet,
};
pub use operators::{
    interf_adjoint, interf_forward, make_sketches, sensing_apply, InterfMatrix, LinearOperator,
    SensingOp, SensingVariant, SketchDistribution, SketchSet,
};
