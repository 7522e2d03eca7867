//! Sum-of-exponentials kernel K̃_α(t) = Σ c_k e^{-d_k t} + c_∞ δ(t).
//!
//! Its Laplace transform Σ c_k / (s + d_k) + c_∞ approximates s^{-α} on
//! [1/T, 1/h]. It is obtained from an AAA fit r_b(z) ≈ z^α on [h, T]
//! through the substitution z = 1/s: a pole π of r_b with residue ρ becomes
//! the mode d = -1/π, c = -ρ/π², and the Dirac weight is c_∞ = r_b(0).

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::fmt::real;
use crate::quad;
use crate::raprox::{aaa_fit, extract_poles, log_grid, SampleSet};
use crate::specfun::gamma_fn;

/// Candidate grid size used unless told otherwise.
pub const DEFAULT_SAMPLES: usize = 100;
/// Upper bound on the AAA degree during kernel builds.
pub const MAX_DEGREE: usize = 60;

const DROP_REL: f64 = 1e-14;
const CLAMP_NEG: f64 = 1e-12;
const SELF_CHECK_LIMIT: f64 = 1e-9;
const SELF_CHECK_POINTS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct RationalKernel {
    pub alpha: f64,
    pub h: f64,
    /// Horizon T.
    pub t_end: f64,
    pub tol: f64,
    /// Mode weights, all ≥ 0.
    pub c: Vec<f64>,
    /// Mode rates, ≥ 0 and strictly increasing.
    pub d: Vec<f64>,
    pub c_inf: f64,
}

/// Builds the kernel for exponent `alpha` resolved on `[h, t_end]`.
pub fn build_kernel(
    alpha: f64,
    h: f64,
    t_end: f64,
    tol: f64,
    n_samples: usize,
) -> Result<RationalKernel> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    if !(h > 0.0 && h <= t_end && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < h <= T, got h={h}, T={t_end}"
        )));
    }
    if !(1e-13..=1e-3).contains(&tol) {
        return Err(Error::InvalidArgument(format!(
            "tol must lie in [1e-13, 1e-3], got {tol}"
        )));
    }
    if n_samples < 20 {
        return Err(Error::InvalidArgument(format!(
            "n_samples must be at least 20, got {n_samples}"
        )));
    }
    let base = RationalKernel {
        alpha,
        h,
        t_end,
        tol,
        c: Vec::new(),
        d: Vec::new(),
        c_inf: 0.0,
    };
    if alpha == 1.0 {
        return Ok(RationalKernel {
            c: vec![1.0],
            d: vec![0.0],
            ..base
        });
    }
    if alpha == 0.0 {
        return Ok(RationalKernel { c_inf: 1.0, ..base });
    }

    let samples = SampleSet::log_spaced(h, t_end, n_samples, |z| z.powf(alpha))?;
    let rb = aaa_fit(&samples, tol, MAX_DEGREE.min(n_samples - 2))?;
    let pr = extract_poles(&rb)?;

    let mut modes: Vec<(f64, f64)> = Vec::with_capacity(pr.poles.len() + 1);
    for (&p, &rho) in pr.poles.iter().zip(&pr.residues) {
        if p >= 0.0 {
            return Err(Error::Positivity(format!(
                "pole {p:e} of the fit is not negative"
            )));
        }
        modes.push((-rho / (p * p), -1.0 / p));
    }
    if pr.linear_coeff != 0.0 {
        modes.push((pr.linear_coeff, 0.0));
    }

    let cmax = modes.iter().fold(0.0f64, |m, v| m.max(v.0.abs()));
    modes.retain(|&(c, _)| c.abs() > DROP_REL * cmax);
    for (c, d) in modes.iter_mut() {
        if *c < 0.0 && *c > -CLAMP_NEG {
            *c = 0.0;
        }
        if *c < 0.0 || *d < 0.0 {
            return Err(Error::Positivity(format!("mode c={c:e}, d={d:e}")));
        }
    }
    modes.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut c_inf = rb.eval_precise(0.0);
    if c_inf < 0.0 && c_inf > -CLAMP_NEG {
        c_inf = 0.0;
    }
    if !(0.0..=1.0).contains(&c_inf) {
        return Err(Error::Positivity(format!(
            "Dirac weight {c_inf:e} outside [0, 1]"
        )));
    }

    let k = RationalKernel {
        c: modes.iter().map(|m| m.0).collect(),
        d: modes.iter().map(|m| m.1).collect(),
        c_inf,
        ..base
    };

    // the substitution must reproduce r_b(1/s) on the resolved band
    let max_dev = log_grid(1.0 / t_end, 1.0 / h, SELF_CHECK_POINTS)
        .into_iter()
        .map(|s| (k.laplace(s) - rb.eval_precise(1.0 / s)).abs())
        .fold(0.0, f64::max);
    if !(max_dev <= SELF_CHECK_LIMIT) {
        return Err(Error::SelfCheck {
            max_dev,
            limit: SELF_CHECK_LIMIT,
        });
    }
    Ok(k)
}

impl RationalKernel {
    pub fn m(&self) -> usize {
        self.c.len()
    }

    /// K̂̃(s) = Σ c_k / (s + d_k) + c_∞.
    pub fn laplace(&self, s: f64) -> f64 {
        self.c
            .iter()
            .zip(&self.d)
            .map(|(c, d)| c / (s + d))
            .sum::<f64>()
            + self.c_inf
    }

    /// Σ c_k (1 - e^{-d_k h}) / d_k + c_∞, the kernel mass on [0, h].
    pub fn step_mass(&self, h: f64) -> f64 {
        self.c
            .iter()
            .zip(&self.d)
            .map(|(&c, &d)| c * one_minus_exp_over(d, h))
            .sum::<f64>()
            + self.c_inf
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invariant(m));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(self.h > 0.0 && self.h <= self.t_end && self.t_end.is_finite()) {
            return bad(format!(
                "need 0 < h <= T, got h={}, T={}",
                self.h, self.t_end
            ));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tol));
        }
        if self.c.len() != self.d.len() {
            return bad("mode arrays differ in length".into());
        }
        if let Some(c) = self.c.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
            return bad(format!("negative or non-finite weight c={c}"));
        }
        if let Some(d) = self.d.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
            return bad(format!("negative or non-finite rate d={d}"));
        }
        if self.d.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("rates must be strictly increasing".into());
        }
        if !(0.0..=1.0).contains(&self.c_inf) {
            return bad(format!("Dirac weight {} outside [0, 1]", self.c_inf));
        }
        if self.c.is_empty() && self.alpha != 0.0 {
            return bad("a kernel without modes requires alpha = 0".into());
        }
        Ok(())
    }

    /// JSON text with 17 significant digits per number.
    pub fn to_json(&self) -> String {
        let modes: Vec<String> = self
            .c
            .iter()
            .zip(&self.d)
            .map(|(c, d)| format!("    {{\"c\": {}, \"d\": {}}}", real(*c), real(*d)))
            .collect();
        let body = if modes.is_empty() {
            String::new()
        } else {
            format!("\n{}\n  ", modes.join(",\n"))
        };
        format!(
            "{{\n  \"alpha\": {},\n  \"h\": {},\n  \"T\": {},\n  \"tol\": {},\n  \"c_inf\": {},\n  \"modes\": [{body}]\n}}\n",
            real(self.alpha),
            real(self.h),
            real(self.t_end),
            real(self.tol),
            real(self.c_inf),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Schema("top level must be an object".into()))?;
        let num = |o: &serde_json::Map<String, Value>, key: &str| -> Result<f64> {
            o.get(key)
                .ok_or_else(|| Error::Schema(format!("missing key \"{key}\"")))?
                .as_f64()
                .ok_or_else(|| Error::Schema(format!("\"{key}\" must be a number")))
        };
        for key in obj.keys() {
            if !["alpha", "h", "T", "tol", "c_inf", "modes"].contains(&key.as_str()) {
                return Err(Error::Schema(format!("unknown key \"{key}\"")));
            }
        }
        let modes = obj
            .get("modes")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Schema("\"modes\" must be an array".into()))?;
        let mut c = Vec::with_capacity(modes.len());
        let mut d = Vec::with_capacity(modes.len());
        for m in modes {
            let o = m
                .as_object()
                .ok_or_else(|| Error::Schema("each mode must be an object".into()))?;
            if o.len() != 2 {
                return Err(Error::Schema(
                    "each mode has exactly the keys \"c\" and \"d\"".into(),
                ));
            }
            c.push(num(o, "c")?);
            d.push(num(o, "d")?);
        }
        let k = RationalKernel {
            alpha: num(obj, "alpha")?,
            h: num(obj, "h")?,
            t_end: num(obj, "T")?,
            tol: num(obj, "tol")?,
            c,
            d,
            c_inf: num(obj, "c_inf")?,
        };
        k.validate()?;
        Ok(k)
    }

    /// Writes the JSON atomically (temporary file, then rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// (1 - e^{-d h}) / d, equal to h at d = 0.
pub fn one_minus_exp_over(d: f64, h: f64) -> f64 {
    if d == 0.0 {
        h
    } else {
        -(-d * h).exp_m1() / d
    }
}

/// K̃^Exp(t) = Σ c_k e^{-d_k t}.
pub fn eval_exp_kernel(k: &RationalKernel, t: f64) -> f64 {
    k.c.iter().zip(&k.d).map(|(c, d)| c * (-d * t).exp()).sum()
}

/// max |s^{-α} - K̂̃(s)| over `n_grid` log-spaced s in [1/T, 1/h].
pub fn spectrum_sup_error(k: &RationalKernel, n_grid: usize) -> f64 {
    log_grid(1.0 / k.t_end, 1.0 / k.h, n_grid.max(2))
        .into_iter()
        .map(|s| (s.powf(-k.alpha) - k.laplace(s)).abs())
        .fold(0.0, f64::max)
}

/// [`spectrum_sup_error`] divided by max s^{-α} = T^α on the band.
pub fn spectrum_rel_error(k: &RationalKernel, n_grid: usize) -> f64 {
    spectrum_sup_error(k, n_grid) / k.t_end.powf(k.alpha)
}

const PANELS_PER_DECADE: usize = 4;
const PANEL_TOL: f64 = 1e-13;

/// ‖K_α - K̃^Exp‖_{L¹(h,T)} + |∫_0^h (K_α - K̃^Exp) - c_∞|.
pub fn time_domain_error(k: &RationalKernel) -> Result<f64> {
    let a = k.alpha;
    if a == 1.0 {
        // K̃^Exp ≡ 1 only for the exact trivial kernel
        return time_domain_error_with(k, |_| 1.0);
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "time-domain error needs 0 < alpha <= 1, got {a}"
        )));
    }
    let g = gamma_fn(a)?;
    time_domain_error_with(k, move |t| t.powf(a - 1.0) / g)
}

fn time_domain_error_with(k: &RationalKernel, exact: impl Fn(f64) -> f64) -> Result<f64> {
    let decades = (k.t_end / k.h).log10().max(0.0);
    let n_panels = ((decades * PANELS_PER_DECADE as f64).ceil() as usize).max(1);
    let edges = log_grid(k.h, k.t_end, n_panels + 1);
    let mut l1 = 0.0;
    if k.t_end > k.h {
        let f = |t: f64| (exact(t) - eval_exp_kernel(k, t)).abs();
        for w in edges.windows(2) {
            l1 += quad::integrate(&f, w[0], w[1], PANEL_TOL)?;
        }
    }
    let exact_mass = k.h.powf(k.alpha) / gamma_fn(k.alpha + 1.0)?;
    let local = (exact_mass - (k.step_mass(k.h) - k.c_inf) - k.c_inf).abs();
    Ok(l1 + local)
}
