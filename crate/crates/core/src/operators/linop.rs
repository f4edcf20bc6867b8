use ndarray::{Array1, ArrayView1};
use rand_distr::{Distribution, StandardNormal};

use crate::rng::rng_from_seed;

/// A real linear map between flat vectors, with its adjoint.
pub trait LinearOperator: Sync {
    fn domain_len(&self) -> usize;
    fn range_len(&self) -> usize;
    fn matvec(&self, x: ArrayView1<f64>) -> Array1<f64>;
    fn rmatvec(&self, y: ArrayView1<f64>) -> Array1<f64>;
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn domain_len(&self) -> usize {
        (**self).domain_len()
    }
    fn range_len(&self) -> usize {
        (**self).range_len()
    }
    fn matvec(&self, x: ArrayView1<f64>) -> Array1<f64> {
        (**self).matvec(x)
    }
    fn rmatvec(&self, y: ArrayView1<f64>) -> Array1<f64> {
        (**self).rmatvec(y)
    }
}

/// Number of power iterations used for step-size estimates.
pub const POWER_ITERATIONS: usize = 100;

/// Largest singular value of `op`, estimated by power iteration on `A*A`
/// from a fixed pseudo-random start.
pub fn power_norm(op: &dyn LinearOperator, iterations: usize) -> f64 {
    let n = op.domain_len();
    if n == 0 || op.range_len() == 0 {
        return 0.0;
    }
    let mut rng = rng_from_seed(0x5eed);
    let mut x: Array1<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut sigma = 0.0;
    for _ in 0..iterations.max(1) {
        let nx = x.dot(&x).sqrt();
        if nx == 0.0 {
            return 0.0;
        }
        x /= nx;
        let ax = op.matvec(x.view());
        sigma = ax.dot(&ax).sqrt();
        x = op.rmatvec(ax.view());
    }
    sigma
}
