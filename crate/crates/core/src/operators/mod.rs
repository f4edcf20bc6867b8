//! Interferometric sensing operators and their adjoints.

mod circulant;
mod haar;
mod interf;
mod linop;
mod sensing;
mod srop;

pub use circulant::{circulant_embed, CirculantMatrix};
pub use haar::{haar_forward, haar_inverse, HaarSynthesis};
pub use interf::{interf_adjoint, interf_forward, InterfMatrix, HERMITIAN_TOL};
pub use linop::{power_norm, LinearOperator, POWER_ITERATIONS};
pub use sensing::{embed_sketches, sensing_apply, SensingOp, SensingVariant};
pub use srop::{
    deterministic_probe_set, make_sketches, recover_matrix, srop_adjoint, srop_apply,
    SketchDistribution, SketchSet,
};
