use ndarray::{s, Array2, ArrayView2};

/// `‖estimate − truth‖₂ / ‖truth‖₂`; for a zero truth, the absolute error
/// (so a zero estimate of a zero image scores 0).
pub fn relative_error(estimate: ArrayView2<f64>, truth: ArrayView2<f64>) -> f64 {
    let num: f64 = estimate
        .iter()
        .zip(truth.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

const SSIM_WINDOW: usize = 7;

/// Mean structural similarity over `7 × 7` windows (stride 1), with the
/// usual stabilizers `C1 = (0.01 L)²`, `C2 = (0.03 L)²` where `L` is the
/// dynamic range of `truth`. Images smaller than the window use one
/// window covering everything.
pub fn ssim(estimate: ArrayView2<f64>, truth: ArrayView2<f64>) -> f64 {
    assert_eq!(
        estimate.dim(),
        truth.dim(),
        "ssim needs equally sized images"
    );
    let (lo, hi) = truth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let range = if hi > lo { hi - lo } else { 1.0 };
    let c1 = (0.01 * range).powi(2);
    let c2 = (0.03 * range).powi(2);
    let (r, c) = truth.dim();
    let w = SSIM_WINDOW.min(r).min(c);
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..=(r - w) {
        for j in 0..=(c - w) {
            let a = estimate.slice(s![i..i + w, j..j + w]);
            let b = truth.slice(s![i..i + w, j..j + w]);
            let n = (w * w) as f64;
            let ma = a.sum() / n;
            let mb = b.sum() / n;
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for (x, y) in a.iter().zip(b.iter()) {
                va += (x - ma) * (x - ma);
                vb += (y - mb) * (y - mb);
                cov += (x - ma) * (y - mb);
            }
            let d = (n - 1.0).max(1.0);
            let (va, vb, cov) = (va / d, vb / d, cov / d);
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

/// Pixels with `|v| > threshold·max|v|`, row-major flat indices.
pub fn support(image: ArrayView2<f64>, threshold: f64) -> Vec<usize> {
    let peak = image.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Vec::new();
    }
    image
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > threshold * peak)
        .map(|(i, _)| i)
        .collect()
}

/// Zero image with the same shape.
pub(crate) fn zeros_like(a: ArrayView2<f64>) -> Array2<f64> {
    Array2::zeros(a.dim())
}
