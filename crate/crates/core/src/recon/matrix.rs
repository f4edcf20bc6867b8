use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::operators::{
    recover_matrix, srop_adjoint, srop_apply, InterfMatrix, SketchDistribution, SketchSet,
};

/// Interferometric matrix estimated from rank-one projections.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixFit {
    #[serde(skip)]
    pub matrix: InterfMatrix,
    /// `M < Q²`: the fit is the minimum-Frobenius-norm solution.
    pub underdetermined: bool,
    pub iterations: usize,
    /// `‖y − A[H]‖₂`.
    pub residual: f64,
}

const CG_TOL: f64 = 1e-14;

fn add_scaled(a: &InterfMatrix, b: &InterfMatrix, s: f64) -> InterfMatrix {
    let e: Array2<Complex64> = a.entries() + &(b.entries() * Complex64::new(s, 0.0));
    InterfMatrix::from_hermitian(e).expect("sum of Hermitian matrices")
}

/// Recovers `H` from `y_m = α_m* H α_m`.
///
/// Polarization probe sets are inverted exactly. Any other sketch set is
/// fitted by least squares over Hermitian matrices, with conjugate
/// gradients on the normal equations started from zero; that start keeps
/// the iterates in the range of the adjoint, so an under-determined system
/// yields its minimum-norm solution.
pub fn recover_interf_matrix(y: ArrayView1<f64>, sketches: &SketchSet) -> Result<MatrixFit> {
    let q = sketches.core_count();
    let m = sketches.len();
    if m == 0 {
        return Err(invalid("need at least one measurement"));
    }
    if y.len() != m {
        return Err(invalid(format!(
            "{} measurements for {m} sketches",
            y.len()
        )));
    }
    if sketches.distribution() == SketchDistribution::Deterministic {
        let h = recover_matrix(&y.to_vec(), q)?;
        let residual = (&srop_apply(&h, sketches)? - &y)
            .mapv(|v| v * v)
            .sum()
            .sqrt();
        return Ok(MatrixFit {
            matrix: h,
            underdetermined: false,
            iterations: 0,
            residual,
        });
    }

    let mut x = InterfMatrix::zeros(q);
    let mut r: Array1<f64> = y.to_owned();
    let mut s = srop_adjoint(r.view(), sketches)?;
    let mut p = s.clone();
    let mut gamma = s.inner(&s);
    let stop = CG_TOL * gamma.sqrt();
    let max_iters = 4 * q * q + 50;
    let mut iterations = 0;
    while iterations < max_iters && gamma.sqrt() > stop && gamma > 0.0 {
        let ap = srop_apply(&p, sketches)?;
        let denom = ap.dot(&ap);
        if denom == 0.0 {
            break;
        }
        let step = gamma / denom;
        x = add_scaled(&x, &p, step);
        r.scaled_add(-step, &ap);
        s = srop_adjoint(r.view(), sketches)?;
        let gamma_new = s.inner(&s);
        p = add_scaled(&s, &p, gamma_new / gamma);
        gamma = gamma_new;
        iterations += 1;
    }
    let residual = (&srop_apply(&x, sketches)? - &y)
        .mapv(|v| v * v)
        .sum()
        .sqrt();
    Ok(MatrixFit {
        matrix: x,
        underdetermined: m < q * q,
        iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{deterministic_probe_set, make_sketches};

    #[test]
    fn zero_measurements_give_zero_matrix() {
        let s = make_sketches(20, 3, SketchDistribution::ComplexGaussian, 1).unwrap();
        let fit = recover_interf_matrix(Array1::zeros(20).view(), &s).unwrap();
        assert_eq!(fit.matrix.norm(), 0.0);
        assert!(!fit.underdetermined);
    }

    #[test]
    fn deterministic_probes_are_inverted_exactly() {
        let h = InterfMatrix::from_hermitian(Array2::from_shape_fn((3, 3), |(j, k)| {
            let re = (j + k) as f64;
            let im = j as f64 - k as f64;
            Complex64::new(re, im)
        }))
        .unwrap();
        let s = deterministic_probe_set(3);
        let y = srop_apply(&h, &s).unwrap();
        let fit = recover_interf_matrix(y.view(), &s).unwrap();
        for (a, b) in fit.matrix.entries().iter().zip(h.entries().iter()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn underdetermined_fit_is_flagged_and_consistent() {
        let s = make_sketches(5, 4, SketchDistribution::ComplexGaussian, 2).unwrap();
        let y = Array1::from_iter((0..5).map(|i| i as f64 + 1.0));
        let fit = recover_interf_matrix(y.view(), &s).unwrap();
        assert!(fit.underdetermined);
        assert!(fit.residual < 1e-8 * y.dot(&y).sqrt());
    }
}
