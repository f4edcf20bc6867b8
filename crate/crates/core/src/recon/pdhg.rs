//! Restarted primal-dual hybrid gradient for
//! `min ‖x‖₁  s.t.  ‖Bx − y‖_p ≤ ε`, `p ∈ {1, 2}`.
//!
//! Each iteration costs one application of `B` and one of `B*`. Every
//! [`CHECK_PERIOD`] iterations the current and averaged iterates are scored
//! with a scale-free optimality measure; the better one becomes a restart
//! point when the measure has dropped enough, and the primal weight
//! (the ratio of dual to primal step) is rebalanced at each restart.

use ndarray::{Array1, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::operators::LinearOperator;

pub const CHECK_PERIOD: usize = 64;
const SUFFICIENT_DECREASE: f64 = 0.2;
const NECESSARY_DECREASE: f64 = 0.8;
const ARTIFICIAL_RESTART: f64 = 0.36;
const STEP_SAFETY: f64 = 0.9;
/// Relative primal excess above which an unconverged run is reported as
/// infeasible rather than merely out of iterations.
const INFEASIBLE_EXCESS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FidelityNorm {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iters: usize,
    /// Absolute tolerance on the constraint excess `max(0, ‖Bx − y‖ − ε)`;
    /// `None` means `1e-6·‖y‖`.
    pub tol_primal: Option<f64>,
    /// Tolerance on the relative duality gap and on the dual infeasibility.
    pub tol_gap: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol_primal: None,
            tol_gap: 1e-6,
        }
    }
}

/// Optimality measures of one primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kkt {
    /// `‖Bx − y‖` in the fidelity norm.
    pub fidelity: f64,
    /// `max(0, fidelity − ε)`.
    pub excess: f64,
    /// `‖(|B*z| − 1)₊‖₂ / √N`.
    pub dual_infeasibility: f64,
    /// `|P − D| / (|P| + |D|)`.
    pub relative_gap: f64,
    /// Combined scale-free score used for restart decisions.
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct EngineOutput {
    pub x: Array1<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub kkt: Kkt,
    pub tol_primal: f64,
    /// `(iteration, score)` at every restart.
    pub restarts: Vec<(usize, f64)>,
}

pub(crate) fn norm(v: ArrayView1<f64>, p: FidelityNorm) -> f64 {
    match p {
        FidelityNorm::L1 => v.iter().map(|x| x.abs()).sum(),
        FidelityNorm::L2 => v.dot(&v).sqrt(),
    }
}

fn dual_norm(v: ArrayView1<f64>, p: FidelityNorm) -> f64 {
    match p {
        FidelityNorm::L1 => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        FidelityNorm::L2 => v.dot(&v).sqrt(),
    }
}

/// Euclidean projection onto `{u : ‖u‖₁ ≤ r}` (sort-based).
pub(crate) fn project_l1_ball(u: &mut Array1<f64>, r: f64) {
    let l1: f64 = u.iter().map(|x| x.abs()).sum();
    if l1 <= r {
        return;
    }
    if r <= 0.0 {
        u.fill(0.0);
        return;
    }
    let mut a: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    a.sort_unstable_by(|p, q| q.total_cmp(p));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &v) in a.iter().enumerate() {
        cum += v;
        let t = (cum - r) / (i + 1) as f64;
        if v > t {
            theta = t;
        } else {
            break;
        }
    }
    u.mapv_inplace(|x| x.signum() * (x.abs() - theta).max(0.0));
}

fn project_l2_ball(u: &mut Array1<f64>, r: f64) {
    let n = u.dot(u).sqrt();
    if n > r {
        if r <= 0.0 {
            u.fill(0.0);
        } else {
            *u *= r / n;
        }
    }
}

struct Problem<'a> {
    y: ArrayView1<'a, f64>,
    p: FidelityNorm,
    eps: f64,
    y_norm: f64,
}

impl Problem<'_> {
    /// `z − σ·Proj_C(z/σ)` with `C = {v : ‖v − y‖ ≤ ε}`.
    fn dual_prox(&self, v: Array1<f64>, sigma: f64) -> Array1<f64> {
        let mut u = v.mapv(|a| a / sigma);
        u -= &self.y;
        match self.p {
            FidelityNorm::L1 => project_l1_ball(&mut u, self.eps),
            FidelityNorm::L2 => project_l2_ball(&mut u, self.eps),
        }
        u += &self.y;
        v - u * sigma
    }

    fn kkt(&self, x: &Array1<f64>, z: &Array1<f64>, bx: &Array1<f64>, btz: &Array1<f64>) -> Kkt {
        let fidelity = norm((bx - &self.y).view(), self.p);
        let excess = (fidelity - self.eps).max(0.0);
        let n = x.len().max(1) as f64;
        let dual_infeasibility = btz
            .iter()
            .map(|g| (g.abs() - 1.0).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
            / n.sqrt();
        let primal = x.iter().map(|v| v.abs()).sum::<f64>();
        let dual = -self.y.dot(z) - self.eps * dual_norm(z.view(), self.p);
        let denom = primal.abs() + dual.abs();
        let relative_gap = if denom > 0.0 {
            (primal - dual).abs() / denom
        } else {
            0.0
        };
        let rel_excess = excess / self.y_norm;
        Kkt {
            fidelity,
            excess,
            dual_infeasibility,
            relative_gap,
            score: (rel_excess * rel_excess
                + dual_infeasibility * dual_infeasibility
                + relative_gap * relative_gap)
                .sqrt(),
        }
    }
}

fn soft_threshold(v: &mut Array1<f64>, t: f64) {
    v.mapv_inplace(|x| x.signum() * (x.abs() - t).max(0.0));
}

/// Runs the solver. `op_norm` is (an upper estimate of) `‖B‖₂`.
pub fn solve(
    op: &dyn LinearOperator,
    y: ArrayView1<f64>,
    p: FidelityNorm,
    eps: f64,
    op_norm: f64,
    settings: &SolverSettings,
) -> EngineOutput {
    let n = op.domain_len();
    let m = op.range_len();
    assert_eq!(
        y.len(),
        m,
        "measurement length must match the operator range"
    );
    let y_norm = norm(y, p);
    let tol_primal = settings.tol_primal.unwrap_or(1e-6 * y_norm);
    let zero_kkt = |fidelity: f64| Kkt {
        fidelity,
        excess: (fidelity - eps).max(0.0),
        dual_infeasibility: 0.0,
        relative_gap: 0.0,
        score: 0.0,
    };

    if y_norm <= eps || op_norm == 0.0 {
        let status = if y_norm <= eps + tol_primal {
            SolveStatus::Converged
        } else {
            SolveStatus::Infeasible
        };
        return EngineOutput {
            x: Array1::zeros(n),
            iterations: 0,
            status,
            kkt: zero_kkt(y_norm),
            tol_primal,
            restarts: Vec::new(),
        };
    }

    let prob = Problem { y, p, eps, y_norm };
    let eta = STEP_SAFETY / op_norm;
    let mut omega = (n as f64).sqrt() / y.dot(&y).sqrt();

    let mut x = Array1::<f64>::zeros(n);
    let mut z = Array1::<f64>::zeros(m);
    let mut bx = Array1::<f64>::zeros(m);
    let mut btz = Array1::<f64>::zeros(n);

    let mut sum_x = Array1::<f64>::zeros(n);
    let mut sum_z = Array1::<f64>::zeros(m);
    let mut sum_bx = Array1::<f64>::zeros(m);
    let mut sum_btz = Array1::<f64>::zeros(n);
    let mut count = 0usize;

    let mut anchor_x = x.clone();
    let mut anchor_z = z.clone();
    let mut last_restart_score = prob.kkt(&x, &z, &bx, &btz).score;
    let mut prev_candidate_score = f64::INFINITY;
    let mut since_restart = 0usize;
    let mut restarts = Vec::new();
    let mut best = (x.clone(), prob.kkt(&x, &z, &bx, &btz));

    let mut iter = 0;
    let mut status = SolveStatus::MaxIters;
    while iter < settings.max_iters {
        let tau = eta / omega;
        let sigma = eta * omega;

        let mut x_new = &x - &(&btz * tau);
        soft_threshold(&mut x_new, tau);
        let bx_new = op.matvec(x_new.view());
        let mut v = z.clone();
        Zip::from(&mut v)
            .and(&bx_new)
            .and(&bx)
            .for_each(|v, &a, &b| *v += sigma * (2.0 * a - b));
        let z_new = prob.dual_prox(v, sigma);
        let btz_new = op.rmatvec(z_new.view());

        x = x_new;
        z = z_new;
        bx = bx_new;
        btz = btz_new;
        sum_x += &x;
        sum_z += &z;
        sum_bx += &bx;
        sum_btz += &btz;
        count += 1;
        iter += 1;
        since_restart += 1;

        if iter % CHECK_PERIOD != 0 && iter != settings.max_iters {
            continue;
        }

        let inv = 1.0 / count as f64;
        let (ax, az, abx, abtz) = (&sum_x * inv, &sum_z * inv, &sum_bx * inv, &sum_btz * inv);
        let k_avg = prob.kkt(&ax, &az, &abx, &abtz);
        let k_cur = prob.kkt(&x, &z, &bx, &btz);
        let use_avg = k_avg.score < k_cur.score;
        let cand_kkt = if use_avg { k_avg } else { k_cur };
        let cand_x = if use_avg { &ax } else { &x };
        if cand_kkt.score < best.1.score {
            best = (cand_x.clone(), cand_kkt);
        }

        if cand_kkt.excess <= tol_primal
            && cand_kkt.relative_gap <= settings.tol_gap
            && cand_kkt.dual_infeasibility <= settings.tol_gap
        {
            best = (cand_x.clone(), cand_kkt);
            status = SolveStatus::Converged;
            break;
        }

        let restart = cand_kkt.score <= SUFFICIENT_DECREASE * last_restart_score
            || (cand_kkt.score <= NECESSARY_DECREASE * last_restart_score
                && cand_kkt.score > prev_candidate_score)
            || since_restart as f64 >= ARTIFICIAL_RESTART * iter as f64;
        prev_candidate_score = cand_kkt.score;

        if restart {
            if use_avg {
                x = ax;
                z = az;
            }
            // Refresh the tracked products so rounding drift does not accumulate.
            bx = op.matvec(x.view());
            btz = op.rmatvec(z.view());
            let dx = (&x - &anchor_x).mapv(|v| v * v).sum().sqrt();
            let dz = (&z - &anchor_z).mapv(|v| v * v).sum().sqrt();
            if dx > 1e-12 && dz > 1e-12 {
                omega = (0.5 * (dz / dx).ln() + 0.5 * omega.ln()).exp();
            }
            anchor_x = x.clone();
            anchor_z = z.clone();
            last_restart_score = cand_kkt.score;
            prev_candidate_score = f64::INFINITY;
            since_restart = 0;
            sum_x.fill(0.0);
            sum_z.fill(0.0);
            sum_bx.fill(0.0);
            sum_btz.fill(0.0);
            count = 0;
            restarts.push((iter, cand_kkt.score));
        }
    }

    let (x, kkt) = best;
    if status != SolveStatus::Converged && kkt.excess / y_norm > INFEASIBLE_EXCESS {
        status = SolveStatus::Infeasible;
    }
    EngineOutput {
        x,
        iterations: iter,
        status,
        kkt,
        tol_primal,
        restarts,
    }
}
