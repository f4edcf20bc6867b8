//! Convex reconstruction: ℓ1-fidelity basis pursuit over the sensing
//! operator, least-squares recovery of the interferometric matrix, and the
//! partial-Fourier image stage.

mod bpdn;
mod fourier;
mod matrix;
pub mod pdhg;

pub use bpdn::{solve_bpdn_l1, BpdnProblem, ReconResult, SparsityBasis};
pub use fourier::{frequencies_to_image, SparsityPrior};
pub use matrix::{recover_interf_matrix, MatrixFit};
pub use pdhg::{FidelityNorm, Kkt, SolveStatus, SolverSettings};
