//! Modal time stepping for u = u₀ + K̃_α * F[u].
//!
//! With K̃ = Σ c_k e^{-d_k t} + c_∞ δ the solution is u = u₀ + Σ u_k + c_∞ F[u]
//! where every mode obeys u_k' + d_k u_k = c_k F[u]. A step advances the modes
//! by a one-step rule with weights (γ_k, β¹_k, β²_k) and solves a single
//! implicit problem of the original size for u.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::RationalKernel;
use crate::specfun::gamma_fn;

/// A state vector (scalar, 1D or flattened 2D grid).
pub type Field = Vec<f64>;

/// F = F₋ + F₊ with F₋ monotone (treated implicitly) and F₊ treated
/// explicitly.
pub trait SplitOperator: Sync {
    fn dim(&self) -> usize;

    fn apply_minus(&self, t: f64, u: &[f64]) -> Field;

    fn apply_plus(&self, t: f64, u: &[f64]) -> Field;

    /// Solves u - β F₋(u) = rhs.
    fn solve_implicit(&self, beta: f64, rhs: &[f64]) -> Result<Field>;

    /// Quadrature weight of one grid value in the spatial L² norm.
    fn cell_weight(&self) -> f64 {
        1.0
    }

    /// Whether F₊ vanishes identically.
    fn plus_is_zero(&self) -> bool {
        false
    }

    fn apply(&self, t: f64, u: &[f64]) -> Field {
        let mut f = self.apply_minus(t, u);
        if !self.plus_is_zero() {
            for (a, b) in f.iter_mut().zip(self.apply_plus(t, u)) {
                *a += b;
            }
        }
        f
    }

    /// Solves u - β F(u) = rhs with the full operator: exact when F₊ ≡ 0,
    /// otherwise a fixed-point iteration on the explicit part around
    /// [`solve_implicit`](Self::solve_implicit).
    fn solve_implicit_full(&self, t: f64, beta: f64, rhs: &[f64]) -> Result<Field> {
        let mut u = self.solve_implicit(beta, rhs)?;
        if self.plus_is_zero() {
            return Ok(u);
        }
        let mut last = f64::INFINITY;
        for _ in 0..FULL_SOLVE_MAX_ITER {
            let fp = self.apply_plus(t, &u);
            let shifted: Field = rhs.iter().zip(&fp).map(|(r, p)| r + beta * p).collect();
            let next = self.solve_implicit(beta, &shifted)?;
            let change = self.norm(&diff(&next, &u));
            let scale = self.norm(&next).max(f64::MIN_POSITIVE);
            u = next;
            // iterate to rounding level: stop once the remaining error
            // q/(1-q)·change is negligible, or once updates stop shrinking
            let q = change / last;
            let remaining = if last.is_finite() && q < 1.0 {
                change * q / (1.0 - q)
            } else {
                f64::INFINITY
            };
            if change <= FULL_SOLVE_FLOOR * scale
                || remaining <= FULL_SOLVE_FLOOR * scale
                || (q >= 1.0 && change <= FULL_SOLVE_TOL * scale)
            {
                return Ok(u);
            }
            last = change;
        }
        Err(Error::NonConvergence(
            "fixed-point iteration for the full implicit solve".into(),
        ))
    }

    fn norm(&self, u: &[f64]) -> f64 {
        (self.cell_weight() * u.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.cell_weight() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }
}

const FULL_SOLVE_TOL: f64 = 1e-13;
const FULL_SOLVE_FLOOR: f64 = 4.0 * f64::EPSILON;
const FULL_SOLVE_MAX_ITER: usize = 1000;

pub(crate) fn diff(a: &[f64], b: &[f64]) -> Field {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// θ-scheme on the modal system; θ = 1/2 is Crank–Nicolson.
    Theta(f64),
    /// Implicit Euler.
    Ie,
    /// Modified (exponential) Crank–Nicolson.
    Mcn,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Theta(_) => "theta",
            Scheme::Ie => "ie",
            Scheme::Mcn => "mcn",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeCoefficients {
    pub scheme: Scheme,
    pub h: f64,
    pub gamma: Vec<f64>,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub beta1_total: f64,
    pub beta2_total: f64,
    pub beta_total: f64,
}

impl SchemeCoefficients {
    pub fn m(&self) -> usize {
        self.gamma.len()
    }

    pub fn theta(&self) -> Option<f64> {
        match self.scheme {
            Scheme::Theta(t) => Some(t),
            _ => None,
        }
    }
}

pub fn coefficients(k: &RationalKernel, scheme: Scheme, h: f64) -> Result<SchemeCoefficients> {
    match scheme {
        Scheme::Theta(theta) => theta_coefficients(k, h, theta),
        Scheme::Ie => ie_coefficients(k, h),
        Scheme::Mcn => mcn_coefficients(k, h),
    }
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "step size must be positive, got {h}"
        )))
    }
}

fn assemble(
    scheme: Scheme,
    h: f64,
    c_inf: f64,
    gamma: Vec<f64>,
    beta1: Vec<f64>,
    beta2: Vec<f64>,
) -> SchemeCoefficients {
    let b1: f64 = beta1.iter().sum();
    let b2: f64 = beta2.iter().sum();
    SchemeCoefficients {
        scheme,
        h,
        beta1_total: b1 + c_inf,
        beta2_total: b2,
        beta_total: beta1.iter().zip(&beta2).map(|(a, b)| a + b).sum::<f64>() + c_inf,
        gamma,
        beta1,
        beta2,
    }
}

pub fn theta_coefficients(k: &RationalKernel, h: f64, theta: f64) -> Result<SchemeCoefficients> {
    check_h(h)?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    let den = |d: f64| 1.0 + theta * d * h;
    let gamma =
        k.d.iter()
            .map(|&d| (1.0 - (1.0 - theta) * d * h) / den(d))
            .collect();
    let beta1 =
        k.c.iter()
            .zip(&k.d)
            .map(|(&c, &d)| c * theta * h / den(d))
            .collect();
    let beta2 =
        k.c.iter()
            .zip(&k.d)
            .map(|(&c, &d)| c * (1.0 - theta) * h / den(d))
            .collect();
    Ok(assemble(
        Scheme::Theta(theta),
        h,
        k.c_inf,
        gamma,
        beta1,
        beta2,
    ))
}

pub fn ie_coefficients(k: &RationalKernel, h: f64) -> Result<SchemeCoefficients> {
    check_h(h)?;
    let gamma = k.d.iter().map(|&d| 1.0 / (1.0 + d * h)).collect();
    let beta1 =
        k.c.iter()
            .zip(&k.d)
            .map(|(&c, &d)| c * h / (1.0 + d * h))
            .collect();
    Ok(assemble(
        Scheme::Ie,
        h,
        k.c_inf,
        gamma,
        beta1,
        vec![0.0; k.m()],
    ))
}

/// Below this d·h the weights use a three-term Taylor expansion.
pub const MCN_TAYLOR_SWITCH: f64 = 1e-4;

pub fn mcn_coefficients(k: &RationalKernel, h: f64) -> Result<SchemeCoefficients> {
    check_h(h)?;
    let gamma = k.d.iter().map(|&d| (-d * h).exp()).collect();
    let (beta1, beta2) =
        k.c.iter()
            .zip(&k.d)
            .map(|(&c, &d)| mcn_mode_weights(c, d, h))
            .unzip();
    Ok(assemble(Scheme::Mcn, h, k.c_inf, gamma, beta1, beta2))
}

/// (β¹, β²) of one mode: c h φ₁(dh), c h φ₂(dh) with
/// φ₁(x) = (e^{-x} - 1 + x)/x² and φ₂(x) = (1 - (1 + x)e^{-x})/x².
pub fn mcn_mode_weights(c: f64, d: f64, h: f64) -> (f64, f64) {
    let x = d * h;
    let (p1, p2) = if x < MCN_TAYLOR_SWITCH {
        (0.5 - x / 6.0 + x * x / 24.0, 0.5 - x / 3.0 + x * x / 8.0)
    } else if x < 1.0 {
        phi_series(x)
    } else {
        let g = (-x).exp();
        ((g - 1.0 + x) / (x * x), (1.0 - (1.0 + x) * g) / (x * x))
    };
    (c * h * p1, c * h * p2)
}

// φ₁ = Σ (-x)^n/(n+2)!, φ₂ = Σ (n+1)(-x)^n/(n+2)!; no cancellation for x < 1.
fn phi_series(x: f64) -> (f64, f64) {
    let (mut p1, mut p2) = (0.0, 0.0);
    let mut term = 0.5;
    for n in 0..24 {
        p1 += term;
        p2 += (n + 1) as f64 * term;
        term *= -x / (n + 3) as f64;
    }
    (p1, p2)
}

/// (h^α/Γ(α+2), α h^α/Γ(α+2)).
pub fn adams_moulton_reference(alpha: f64, h: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if !(h >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "h must be non-negative, got {h}"
        )));
    }
    let b = h.powf(alpha) / gamma_fn(alpha + 2.0)?;
    Ok((b, alpha * b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub n: usize,
    pub u: Field,
    pub u0: Field,
    /// One field per kernel mode, ascending d.
    pub modes: Vec<Field>,
    /// F(uⁿ).
    pub f_prev: Field,
    /// F₊(uⁿ).
    pub fplus_prev: Field,
}

impl SolverState {
    pub fn new(u0: Field, op: &dyn SplitOperator, m: usize) -> Result<Self> {
        if u0.len() != op.dim() {
            return Err(Error::InvalidArgument(format!(
                "initial field has {} entries, operator expects {}",
                u0.len(),
                op.dim()
            )));
        }
        let fplus_prev = if op.plus_is_zero() {
            vec![0.0; u0.len()]
        } else {
            op.apply_plus(0.0, &u0)
        };
        let mut f_prev = op.apply_minus(0.0, &u0);
        for (a, b) in f_prev.iter_mut().zip(&fplus_prev) {
            *a += b;
        }
        Ok(Self {
            t: 0.0,
            n: 0,
            modes: vec![vec![0.0; u0.len()]; m],
            u: u0.clone(),
            u0,
            f_prev,
            fplus_prev,
        })
    }
}

// Mode updates run in parallel once the work is large enough to pay for it.
const PAR_MODE_WORK: usize = 8192;

/// Advances `state` by one step of size `coeffs.h`.
pub fn step(
    state: &mut SolverState,
    op: &dyn SplitOperator,
    coeffs: &SchemeCoefficients,
) -> Result<()> {
    if state.modes.len() != coeffs.m() {
        return Err(Error::InvalidArgument(format!(
            "state carries {} modes, coefficients {}",
            state.modes.len(),
            coeffs.m()
        )));
    }
    let t_next = (state.n + 1) as f64 * coeffs.h;

    // H = u₀ + Σ γ_k u_k, ascending d
    let mut rhs = state.u0.clone();
    for (g, uk) in coeffs.gamma.iter().zip(&state.modes) {
        for (r, v) in rhs.iter_mut().zip(uk) {
            *r += g * v;
        }
    }

    let u_next = match coeffs.scheme {
        Scheme::Theta(_) => {
            for (r, f) in rhs.iter_mut().zip(&state.f_prev) {
                *r += coeffs.beta2_total * f;
            }
            op.solve_implicit_full(t_next, coeffs.beta1_total, &rhs)?
        }
        Scheme::Ie | Scheme::Mcn => {
            if !op.plus_is_zero() {
                for (r, f) in rhs.iter_mut().zip(&state.fplus_prev) {
                    *r += coeffs.beta_total * f;
                }
            }
            op.solve_implicit(coeffs.beta_total, &rhs)?
        }
    };

    let fplus = if op.plus_is_zero() {
        vec![0.0; u_next.len()]
    } else {
        op.apply_plus(t_next, &u_next)
    };
    let mut f_next = op.apply_minus(t_next, &u_next);
    for (a, b) in f_next.iter_mut().zip(&fplus) {
        *a += b;
    }

    let f_prev = &state.f_prev;
    let update = |(k, uk): (usize, &mut Field)| {
        let (g, b1, b2) = (coeffs.gamma[k], coeffs.beta1[k], coeffs.beta2[k]);
        for ((v, fn1), fn0) in uk.iter_mut().zip(&f_next).zip(f_prev) {
            *v = g * *v + b1 * fn1 + b2 * fn0;
        }
    };
    if coeffs.m() * u_next.len() >= PAR_MODE_WORK {
        state.modes.par_iter_mut().enumerate().for_each(update);
    } else {
        state.modes.iter_mut().enumerate().for_each(update);
    }

    state.u = u_next;
    state.f_prev = f_next;
    state.fplus_prev = fplus;
    state.n += 1;
    state.t = t_next;
    Ok(())
}

/// Number of steps N with N·h = T up to rounding.
pub fn step_count(h: f64, t_end: f64) -> Result<usize> {
    check_h(h)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "T must be non-negative, got {t_end}"
        )));
    }
    let n = (t_end / h).round();
    if (n * h - t_end).abs() > 2.0 * f64::EPSILON * t_end.max(h) {
        return Err(Error::InvalidArgument(format!(
            "T={t_end} is not an integer multiple of h={h}"
        )));
    }
    Ok(n as usize)
}

pub type EnergyFn<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);
pub type ReferenceFn<'a> = &'a (dyn Fn(f64) -> Result<Field> + Sync);
/// Called with (t, u) after every step, including t = 0.
pub type ObserverFn<'a> = &'a (dyn Fn(f64, &[f64]) + Sync);

/// What a run records besides t and ‖u‖.
#[derive(Default)]
pub struct RunOptions<'a> {
    pub energy: Option<EnergyFn<'a>>,
    /// Exact solution; fills the `err` column with ‖u(t) - ref(t)‖.
    pub reference: Option<ReferenceFn<'a>>,
    /// Times whose fields are kept as snapshots.
    pub snapshot_times: Vec<f64>,
    /// Keep every `capture_every`-th field from this time on.
    pub capture_from: Option<f64>,
    pub capture_every: usize,
    pub observer: Option<ObserverFn<'a>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub h: f64,
    pub t_end: f64,
    pub cell_weight: f64,
    pub u0: Field,
    pub t: Vec<f64>,
    pub norm: Vec<f64>,
    pub energy: Option<Vec<f64>>,
    pub err: Option<Vec<f64>>,
    /// (t, field) pairs in time order.
    pub snapshots: Vec<(f64, Field)>,
}

impl RunRecord {
    pub fn new(h: f64, t_end: f64, cell_weight: f64, u0: Field) -> Self {
        Self {
            h,
            t_end,
            cell_weight,
            u0,
            t: Vec::new(),
            norm: Vec::new(),
            energy: None,
            err: None,
            snapshots: Vec::new(),
        }
    }

    pub fn final_field(&self) -> Option<&Field> {
        self.snapshots.last().map(|s| &s.1)
    }

    /// Field stored at time `t` (matched to within a thousandth of a step).
    pub fn field_at(&self, t: f64) -> Option<&Field> {
        let tol = 1e-3 * self.h;
        let i = self.snapshots.partition_point(|(s, _)| *s < t - tol);
        self.snapshots
            .get(i)
            .filter(|(s, _)| (s - t).abs() <= tol)
            .map(|s| &s.1)
    }

    /// CSV with header `t,norm,energy,err`; absent columns stay empty.
    pub fn to_csv(&self) -> String {
        use crate::fmt::real;
        let mut out = String::from("t,norm,energy,err\n");
        for i in 0..self.t.len() {
            let e = self.energy.as_ref().map(|v| real(v[i])).unwrap_or_default();
            let r = self.err.as_ref().map(|v| real(v[i])).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{e},{r}\n",
                real(self.t[i]),
                real(self.norm[i])
            ));
        }
        out
    }
}

pub(crate) fn is_multiple(n: usize, every: usize) -> bool {
    every <= 1 || n.is_multiple_of(every)
}

/// Runs N = T/h steps from `u0`, recording every step.
pub fn run(
    u0: Field,
    op: &dyn SplitOperator,
    k: &RationalKernel,
    scheme: Scheme,
    h: f64,
    t_end: f64,
    opts: &RunOptions<'_>,
) -> Result<RunRecord> {
    let n_steps = step_count(h, t_end)?;
    let coeffs = coefficients(k, scheme, h)?;
    let mut state = SolverState::new(u0, op, k.m())?;
    let mut rec = RunRecord::new(h, t_end, op.cell_weight(), state.u0.clone());
    if opts.energy.is_some() {
        rec.energy = Some(Vec::with_capacity(n_steps + 1));
    }
    if opts.reference.is_some() {
        rec.err = Some(Vec::with_capacity(n_steps + 1));
    }
    let tol = 1e-3 * h;
    let observe = |state: &SolverState, rec: &mut RunRecord| -> Result<()> {
        rec.t.push(state.t);
        rec.norm.push(op.norm(&state.u));
        if let Some(o) = opts.observer {
            o(state.t, &state.u);
        }
        if let (Some(e), Some(col)) = (opts.energy, rec.energy.as_mut()) {
            col.push(e(&state.u));
        }
        if let (Some(r), Some(col)) = (opts.reference, rec.err.as_mut()) {
            let exact = r(state.t)?;
            col.push(op.norm(&diff(&state.u, &exact)));
        }
        let captured = opts
            .capture_from
            .is_some_and(|t0| state.t >= t0 - tol && is_multiple(state.n, opts.capture_every));
        if captured
            || opts
                .snapshot_times
                .iter()
                .any(|s| (s - state.t).abs() <= tol)
        {
            rec.snapshots.push((state.t, state.u.clone()));
        }
        if state.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonConvergence(format!(
                "solution overflowed at t={}",
                state.t
            )));
        }
        Ok(())
    };
    observe(&state, &mut rec)?;
    for _ in 0..n_steps {
        step(&mut state, op, &coeffs)?;
        observe(&state, &mut rec)?;
    }
    Ok(rec)
}
