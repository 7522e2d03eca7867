//! Independent reference solutions and the a-priori error bound.
//!
//! [`volterra_reference`] discretises u = u₀ + K_α * F[u] directly with the
//! exact kernel and product-rectangle weights; it shares nothing with the
//! kernel compression beyond the operator's `apply`.

use crate::error::{Error, Result};
use crate::schemes::{step_count, Field, RunRecord, SplitOperator};
use crate::specfun::{gamma_fn, mittag_leffler, MLParams};

const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 100;

/// a_{n,1..=n} for step `n`: [(t_n - t_{j-1})^α - (t_n - t_j)^α] / Γ(α+1).
pub fn oracle_weights(alpha: f64, h: f64, n: usize) -> Result<Vec<f64>> {
    let lags = lag_weights(alpha, h, n)?;
    Ok((1..=n).map(|j| lags[n - j]).collect())
}

// w_i = h^α [(i+1)^α - i^α] / Γ(α+1), written to avoid cancellation.
fn lag_weights(alpha: f64, h: f64, n: usize) -> Result<Vec<f64>> {
    let scale = h.powf(alpha) / gamma_fn(alpha + 1.0)?;
    Ok((0..n)
        .map(|i| {
            if i == 0 {
                scale
            } else {
                let x = i as f64;
                scale * x.powf(alpha) * (alpha * (1.0 / x).ln_1p()).exp_m1()
            }
        })
        .collect())
}

/// Product-rectangle solution of u = u₀ + K_α * F[u] on N = T/h steps.
///
/// Every field is kept as a snapshot (the oracle is meant for small
/// systems). The implicit equation of each step, u = rhs + a_{n,n} F(u), is
/// solved by plain fixed-point iteration.
pub fn volterra_reference(
    u0: Field,
    op: &dyn SplitOperator,
    alpha: f64,
    h: f64,
    t_end: f64,
) -> Result<RunRecord> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if u0.len() != op.dim() {
        return Err(Error::InvalidArgument(
            "initial field does not match the operator".into(),
        ));
    }
    let n_steps = step_count(h, t_end)?;
    if n_steps > 100_000 {
        return Err(Error::InvalidArgument(format!(
            "{n_steps} steps exceed the oracle's limit of 1e5"
        )));
    }
    let lags = lag_weights(alpha, h, n_steps)?;
    let dim = u0.len();

    let mut rec = RunRecord::new(h, t_end, op.cell_weight(), u0.clone());
    rec.t.push(0.0);
    rec.norm.push(op.norm(&u0));
    rec.snapshots.push((0.0, u0.clone()));

    let mut f_hist: Vec<Field> = Vec::with_capacity(n_steps);
    let mut u = u0.clone();
    for n in 1..=n_steps {
        let t = n as f64 * h;
        let mut rhs = u0.clone();
        // ascending j, lag n - j
        for (j, fj) in f_hist.iter().enumerate() {
            let a = lags[n - 1 - j];
            for (r, v) in rhs.iter_mut().zip(fj) {
                *r += a * v;
            }
        }
        let a_nn = lags[0];
        let mut converged = false;
        for _ in 0..FIXED_POINT_MAX_ITER {
            let f = op.apply(t, &u);
            let next: Field = rhs.iter().zip(&f).map(|(r, v)| r + a_nn * v).collect();
            let change = (0..dim).map(|i| (next[i] - u[i]).abs()).fold(0.0, f64::max);
            let scale = next.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            u = next;
            if change <= FIXED_POINT_TOL * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "oracle fixed point at step {n} (t={t})"
            )));
        }
        f_hist.push(op.apply(t, &u));
        rec.t.push(t);
        rec.norm.push(op.norm(&u));
        rec.snapshots.push((t, u.clone()));
    }
    Ok(rec)
}

/// Constants of the a-priori estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub c_alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub h: f64,
    pub t_end: f64,
    pub alpha: f64,
    pub rhs_norm: f64,
}

/// h^{1+α} · 2 C_α · E_{α,1}(C₁ T^α) · (C₂ + ‖D^α u‖), valid when
/// C₁ C_α h^{1+α} ≤ 1/2.
pub fn theorem_bound(b: &BoundInputs) -> Result<f64> {
    let fields = [b.c_alpha, b.c1, b.c2, b.h, b.t_end, b.alpha, b.rhs_norm];
    if fields.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(
            "bound inputs must be finite and non-negative".into(),
        ));
    }
    let hp = b.h.powf(1.0 + b.alpha);
    if b.c1 * b.c_alpha * hp > 0.5 {
        return Err(Error::Precondition(format!(
            "C1*C_alpha*h^(1+alpha) = {:e} exceeds 1/2",
            b.c1 * b.c_alpha * hp
        )));
    }
    if b.c_alpha == 0.0 {
        return Ok(0.0);
    }
    let growth = mittag_leffler(MLParams::classical(b.alpha)?, b.c1 * b.t_end.powf(b.alpha))?;
    Ok(hp * 2.0 * b.c_alpha * growth * (b.c2 + b.rhs_norm))
}
