//! Gamma and Mittag-Leffler functions.
//!
//! The Mittag-Leffler function E_{α,β}(x) = Σ x^k / Γ(αk + β) is evaluated
//! along one of two routes:
//!
//! * the power series, with terms and the running sum carried in
//!   double-double arithmetic, whenever its worst term is small enough that
//!   cancellation cannot eat the last significant digits;
//! * otherwise a trapezoidal rule on a parabolic Hankel contour applied to
//!   the Laplace-domain representation s^{α-β} / (s^α - x) (plus the residue
//!   of the real pole when x > 0).
//!
//! When the contour's refinement check fails on a tiny value (α near 1, x
//! far below zero) and β = 1, the real-line integral representation with its
//! positive integrand takes over.
//!
//! The series and contour routes are exposed so that callers (and tests)
//! can cross-check them.

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::quad;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for x > 0 (Lanczos, g = 7, nine terms).
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "gamma requires a finite x > 0, got {x}"
        )));
    }
    if x < 0.5 {
        return Ok(gamma_fn(x + 1.0)? / x);
    }
    if x <= 30.0 && x.fract() == 0.0 {
        // exact factorial for small integers
        return Ok((1..x as u32).map(f64::from).product());
    }
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // split the power so Γ(x) stays finite right up to x ≈ 171
    let half = t.powf(0.5 * (z + 0.5));
    Ok((2.0 * PI).sqrt() * half * (half * (-t).exp()) * a)
}

/// Parameters (α, β) of E_{α,β}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MLParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!(
                "Mittag-Leffler alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!(
                "Mittag-Leffler beta must be > 0, got {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// The one-parameter function E_α = E_{α,1}.
    pub fn classical(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }
}

/// Supported argument range.
pub const ML_X_MIN: f64 = -50.0;
pub const ML_X_MAX: f64 = 10.0;

/// E_{α,β}(x) for x ∈ [-50, 10].
pub fn mittag_leffler(p: MLParams, x: f64) -> Result<f64> {
    let p = MLParams::new(p.alpha, p.beta)?;
    if !(ML_X_MIN..=ML_X_MAX).contains(&x) {
        return Err(Error::Domain(format!(
            "Mittag-Leffler argument {x} outside [{ML_X_MIN}, {ML_X_MAX}]"
        )));
    }
    if x == 0.0 {
        return Ok(1.0 / gamma_fn(p.beta)?);
    }
    match ml_series(p, x) {
        Ok(v) => Ok(v),
        Err(Error::NonConvergence(_)) => match ml_contour(p, x) {
            // small values are beyond the contour's absolute resolution
            Err(Error::NonConvergence(_)) if p.alpha == 1.0 && p.beta == 1.0 => Ok(x.exp()),
            Err(Error::NonConvergence(_)) if p.beta == 1.0 && x < 0.0 => {
                ml_real_integral(p.alpha, x)
            }
            other => other,
        },
        Err(e) => Err(e),
    }
}

const SERIES_MAX_TERMS: usize = 500;
const SERIES_STOP_RATIO: f64 = 1e-17;
// worst-term / |sum| allowed before the double-double sum is considered unsafe
const SERIES_MAX_CANCELLATION: f64 = 1e18;

/// Power-series route in double-double arithmetic.
///
/// Fails with `NonConvergence` when the series needs more than 500 terms or
/// when cancellation between terms would exceed ~15 decimal digits.
pub fn ml_series(p: MLParams, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(1.0 / gamma_fn(p.beta)?);
    }
    let ln_abs_x = Dd::new(x.abs()).ln();
    let mut sum = Dd::ZERO;
    let mut max_term = 0.0f64;
    let mut small_run = 0;
    for k in 0..SERIES_MAX_TERMS {
        let arg = Dd::prod(p.alpha, k as f64) + Dd::new(p.beta);
        let log_mag = ln_abs_x * Dd::new(k as f64) - ln_gamma_dd(arg);
        if log_mag.hi > 700.0 {
            return Err(Error::NonConvergence(format!(
                "series term {k} overflows for alpha={}, x={x}",
                p.alpha
            )));
        }
        let mut term = log_mag.exp();
        if x < 0.0 && k % 2 == 1 {
            term = -term;
        }
        sum = sum + term;
        max_term = max_term.max(term.hi.abs());
        if term.hi.abs() < SERIES_STOP_RATIO * sum.hi.abs() {
            small_run += 1;
            if small_run == 3 {
                let value = sum.to_f64();
                if max_term > SERIES_MAX_CANCELLATION * value.abs() {
                    return Err(Error::NonConvergence(format!(
                        "series cancellation {:.1e} too large for alpha={}, x={x}",
                        max_term / value.abs(),
                        p.alpha
                    )));
                }
                return Ok(value);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence(format!(
        "series did not settle within {SERIES_MAX_TERMS} terms for alpha={}, x={x}",
        p.alpha
    )))
}

/// ln Γ(y) in double-double for y > 0: upward shift to y ≥ 30 followed by
/// the Stirling series.
fn ln_gamma_dd(y: Dd) -> Dd {
    // B_{2j} / (2j (2j - 1)) as exact rationals
    const STIRLING: [(f64, f64); 12] = [
        (1.0, 12.0),
        (-1.0, 360.0),
        (1.0, 1260.0),
        (-1.0, 1680.0),
        (1.0, 1188.0),
        (-691.0, 360_360.0),
        (1.0, 156.0),
        (-3617.0, 122_400.0),
        (43_867.0, 244_188.0),
        (-174_611.0, 125_400.0),
        (77_683.0, 5_796.0),
        (-236_364_091.0, 1_506_960.0),
    ];
    const HALF_LN_2PI: Dd = Dd {
        hi: 0.918_938_533_204_672_8,
        lo: -3.878_294_158_067_241_4e-17,
    };

    let mut shifted = y;
    let mut product = Dd::new(1.0);
    while shifted.hi < 30.0 {
        product = product * shifted;
        shifted = shifted + Dd::new(1.0);
    }
    let ln_y = shifted.ln();
    let mut acc = (shifted - Dd::new(0.5)) * ln_y - shifted + HALF_LN_2PI;
    let inv = Dd::new(1.0) / shifted;
    let inv2 = inv * inv;
    let mut pow = inv;
    for (num, den) in STIRLING {
        acc = acc + Dd::new(num) / Dd::new(den) * pow;
        pow = pow * inv2;
    }
    acc - product.ln()
}

// Two node counts; their agreement is the contour route's self-check.
const CONTOUR_NODES: usize = 18;
const CONTOUR_NODES_CHECK: usize = 22;
const CONTOUR_REL_TOL: f64 = 1e-11;

/// Hankel-contour route: trapezoidal rule on the parabola
/// s(u) = μ(1 + iu)², u ∈ [-3, 3], with μ = πN/12.
pub fn ml_contour(p: MLParams, x: f64) -> Result<f64> {
    let a = contour_eval(p, x, CONTOUR_NODES)?;
    let b = contour_eval(p, x, CONTOUR_NODES_CHECK)?;
    let scale = a.abs().max(b.abs()).max(1e-300);
    if (a - b).abs() > CONTOUR_REL_TOL * scale {
        return Err(Error::NonConvergence(format!(
            "contour refinement disagrees ({a:e} vs {b:e}) for alpha={}, beta={}, x={x}",
            p.alpha, p.beta
        )));
    }
    Ok(b)
}

fn contour_eval(p: MLParams, x: f64, n: usize) -> Result<f64> {
    let mu = PI * n as f64 / 12.0;
    let step = 3.0 / n as f64;
    let mut pole_part = 0.0;
    if x > 0.0 {
        // real pole s* = x^{1/α} must sit outside the parabola
        let s_star = x.powf(1.0 / p.alpha);
        if s_star < 2.0 * mu {
            return Err(Error::NonConvergence(format!(
                "pole {s_star:e} too close to the contour for alpha={}, x={x}",
                p.alpha
            )));
        }
        pole_part = s_star.powf(1.0 - p.beta) * s_star.exp() / p.alpha;
        if !pole_part.is_finite() {
            return Err(Error::Domain(format!(
                "E_(alpha={}, beta={})({x}) overflows",
                p.alpha, p.beta
            )));
        }
    }
    let one = Complex::new(1.0, 0.0);
    let integrand = |u: f64| -> f64 {
        let w = Complex::new(1.0, u);
        let s = w * w * mu;
        let ds = w * (2.0 * mu);
        let ln_s = s.ln();
        let s_alpha = (ln_s * p.alpha).exp();
        let f = (ln_s * (p.alpha - p.beta)).exp() / (s_alpha - x * one);
        (s.exp() * f * ds).re / (2.0 * PI)
    };
    // conjugate symmetry: integrate over u ≥ 0 and double
    let mut acc = 0.5 * integrand(0.0);
    for k in 1..=n {
        acc += integrand(k as f64 * step);
    }
    Ok(pole_part + 2.0 * step * acc)
}

/// Real-line route for 0 < α < 1, β = 1, x < 0:
/// E_α(-X) = sin(απ)/(απ) ∫_0^∞ exp(-v^{1/α}) X / (v² + 2Xv cos απ + X²) dv.
///
/// The integrand is positive, so the result keeps its relative accuracy
/// however small it is.
fn ml_real_integral(alpha: f64, x: f64) -> Result<f64> {
    let big = -x;
    let (s, c) = (alpha * PI).sin_cos();
    let f = |v: f64| (-v.powf(1.0 / alpha)).exp() * big / (v * v + 2.0 * big * v * c + big * big);
    // beyond v_max the exponential factor is below e^{-750}
    let v_max = 750f64.powf(alpha);
    let mut knots = vec![0.0, 1.0, v_max];
    if c < 0.0 {
        // Lorentzian peak of the denominator
        let (v0, w) = (-big * c, big * s);
        knots.extend([v0 - 4.0 * w, v0 - w, v0, v0 + w, v0 + 4.0 * w]);
    }
    knots.retain(|v| (0.0..=v_max).contains(v));
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    // ∫_0^1 f ≥ e^{-1} X/(1+X)² bounds the result from below
    let tol = 1e-14 * (-1f64).exp() * big / ((1.0 + big) * (1.0 + big)) / knots.len() as f64;
    let mut total = 0.0;
    for w in knots.windows(2) {
        total += quad::integrate(&f, w[0], w[1], tol)?;
    }
    Ok(s / (alpha * PI) * total)
}
