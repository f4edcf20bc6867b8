//! Orthonormal 2-D Haar transform (full Mallat pyramid on power-of-two
//! squares).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use std::f64::consts::FRAC_1_SQRT_2;

use super::linop::LinearOperator;
use crate::error::{invalid, Result};

fn check_side(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(invalid(format!(
            "the Haar basis needs a power-of-two side, got {n}"
        )));
    }
    Ok(())
}

fn step_forward(v: &mut [f64], len: usize, tmp: &mut Vec<f64>) {
    let h = len / 2;
    tmp.clear();
    tmp.resize(len, 0.0);
    for i in 0..h {
        let (a, b) = (v[2 * i], v[2 * i + 1]);
        tmp[i] = (a + b) * FRAC_1_SQRT_2;
        tmp[h + i] = (a - b) * FRAC_1_SQRT_2;
    }
    v[..len].copy_from_slice(tmp);
}

fn step_inverse(v: &mut [f64], len: usize, tmp: &mut Vec<f64>) {
    let h = len / 2;
    tmp.clear();
    tmp.resize(len, 0.0);
    for i in 0..h {
        let (s, d) = (v[i], v[h + i]);
        tmp[2 * i] = (s + d) * FRAC_1_SQRT_2;
        tmp[2 * i + 1] = (s - d) * FRAC_1_SQRT_2;
    }
    v[..len].copy_from_slice(tmp);
}

/// Image → Haar coefficients. Each level transforms the rows then the
/// columns of the current low-pass block.
pub fn haar_forward(image: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (n, m) = image.dim();
    if n != m {
        return Err(invalid(format!(
            "the Haar basis needs a square image, got {n}×{m}"
        )));
    }
    check_side(n)?;
    let mut c = image.to_owned();
    let mut tmp = Vec::with_capacity(n);
    let mut line = vec![0.0; n];
    let mut len = n;
    while len >= 2 {
        for r in 0..len {
            for (i, v) in line.iter_mut().take(len).enumerate() {
                *v = c[[r, i]];
            }
            step_forward(&mut line, len, &mut tmp);
            for i in 0..len {
                c[[r, i]] = line[i];
            }
        }
        for col in 0..len {
            for (i, v) in line.iter_mut().take(len).enumerate() {
                *v = c[[i, col]];
            }
            step_forward(&mut line, len, &mut tmp);
            for i in 0..len {
                c[[i, col]] = line[i];
            }
        }
        len /= 2;
    }
    Ok(c)
}

/// Haar coefficients → image; inverse and adjoint of [`haar_forward`].
pub fn haar_inverse(coeffs: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (n, m) = coeffs.dim();
    if n != m {
        return Err(invalid(format!(
            "the Haar basis needs a square array, got {n}×{m}"
        )));
    }
    check_side(n)?;
    let mut c = coeffs.to_owned();
    let mut tmp = Vec::with_capacity(n);
    let mut line = vec![0.0; n];
    let mut len = 2;
    while len <= n {
        for col in 0..len {
            for (i, v) in line.iter_mut().take(len).enumerate() {
                *v = c[[i, col]];
            }
            step_inverse(&mut line, len, &mut tmp);
            for i in 0..len {
                c[[i, col]] = line[i];
            }
        }
        for r in 0..len {
            for (i, v) in line.iter_mut().take(len).enumerate() {
                *v = c[[r, i]];
            }
            step_inverse(&mut line, len, &mut tmp);
            for i in 0..len {
                c[[r, i]] = line[i];
            }
        }
        len *= 2;
    }
    Ok(c)
}

/// `op ∘ Ψ`: an operator acting on Haar coefficients of an `n × n` image.
pub struct HaarSynthesis<O> {
    inner: O,
    side: usize,
}

impl<O: LinearOperator> HaarSynthesis<O> {
    pub fn new(inner: O, side: usize) -> Result<Self> {
        check_side(side)?;
        if inner.domain_len() != side * side {
            return Err(invalid(format!(
                "operator acts on {} pixels, not a {side}×{side} image",
                inner.domain_len()
            )));
        }
        Ok(Self { inner, side })
    }
}

impl<O: LinearOperator> LinearOperator for HaarSynthesis<O> {
    fn domain_len(&self) -> usize {
        self.side * self.side
    }

    fn range_len(&self) -> usize {
        self.inner.range_len()
    }

    fn matvec(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let c = x.to_shape((self.side, self.side)).expect("domain length");
        let img = haar_inverse(c.view()).expect("validated side");
        self.inner.matvec(Array1::from_iter(img).view())
    }

    fn rmatvec(&self, y: ArrayView1<f64>) -> Array1<f64> {
        let img = self.inner.rmatvec(y);
        let img = img.to_shape((self.side, self.side)).expect("domain length");
        Array1::from_iter(haar_forward(img.view()).expect("validated side"))
    }
}
