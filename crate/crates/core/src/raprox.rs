//! Real AAA rational approximation.
//!
//! [`aaa_fit`] builds a barycentric interpolant
//!
//! ```text
//!        Σ_j w_j f_j / (z - z_j)
//! r(z) = -----------------------
//!        Σ_j w_j / (z - z_j)
//! ```
//!
//! by greedily adding the worst-fitted sample as a support point and taking
//! the weights from the smallest right singular vector of the Loewner
//! matrix. [`extract_poles`] converts it to partial-fraction form.

use nalgebra::{DMatrix, DVector};

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Sample points with function values; points strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<f64>,
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} sample points but {} values",
                points.len(),
                values.len()
            )));
        }
        if points.len() < 3 {
            return Err(Error::DegenerateSamples(format!(
                "need at least 3 samples, got {}",
                points.len()
            )));
        }
        if points.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(Error::DegenerateSamples(
                "sample points must be strictly increasing".into(),
            ));
        }
        if points.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("samples must be finite".into()));
        }
        Ok(Self { points, values })
    }

    /// `n` logarithmically spaced points of `[a, b]` (endpoints exact) with
    /// values `f(z)`.
    pub fn log_spaced(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(a > 0.0 && a < b && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "log grid needs 0 < a < b, got [{a:e}, {b:e}]"
            )));
        }
        let points = log_grid(a, b, n);
        let values = points.iter().map(|&z| f(z)).collect();
        Self::new(points, values)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n ≥ 2` log-spaced points from `a` to `b`, both endpoints exact.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| match i {
            0 => a,
            _ if i == n - 1 => b,
            _ => (la + (lb - la) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// One greedy AAA iteration: the support point added and the resulting
/// max absolute residual over all samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AaaStep {
    pub support_point: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricRational {
    pub support: Vec<f64>,
    pub fvals: Vec<f64>,
    /// Unit Euclidean norm.
    pub weights: Vec<f64>,
    pub log: Vec<AaaStep>,
    /// False when the degree cap stopped the fit before the tolerance.
    pub converged: bool,
    /// Candidate grid the fit was run on.
    pub sample_points: Vec<f64>,
}

/// Greedy AAA fit; stops at `max|r - f| ≤ rel_tol·max|f|` or once
/// `n - 1 = max_degree` support points beyond the first are used.
pub fn aaa_fit(
    samples: &SampleSet,
    rel_tol: f64,
    max_degree: usize,
) -> Result<BarycentricRational> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rel_tol must lie in (0, 1), got {rel_tol}"
        )));
    }
    if max_degree < 1 {
        return Err(Error::InvalidArgument(
            "max_degree must be at least 1".into(),
        ));
    }
    let z = samples.points();
    let f = samples.values();
    let n_samples = z.len();
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = f.iter().sum::<f64>() / n_samples as f64;
    let limit = rel_tol * fmax;

    let mut is_support = vec![false; n_samples];
    let mut idx: Vec<usize> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut approx = vec![mean; n_samples];
    let mut log = Vec::new();
    let mut converged = false;

    loop {
        let next = argmax_residual(f, &approx, &is_support);
        let Some(j) = next else { break };
        is_support[j] = true;
        idx.push(j);

        let rows: Vec<usize> = (0..n_samples).filter(|&i| !is_support[i]).collect();
        weights = loewner_null_vector(z, f, &rows, &idx);

        for (i, a) in approx.iter_mut().enumerate() {
            *a = if is_support[i] {
                f[i]
            } else {
                bary(&idx, z, f, &weights, z[i])
            };
        }
        let max_residual = f
            .iter()
            .zip(&approx)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        log.push(AaaStep {
            support_point: z[j],
            max_residual,
        });

        if idx.len() >= 2 && max_residual <= limit {
            converged = true;
            break;
        }
        if idx.len() > max_degree || rows.is_empty() {
            break;
        }
    }
    if idx.len() < 2 {
        return Err(Error::DegenerateSamples(
            "fewer than 3 distinct sample points".into(),
        ));
    }
    Ok(BarycentricRational {
        support: idx.iter().map(|&i| z[i]).collect(),
        fvals: idx.iter().map(|&i| f[i]).collect(),
        weights,
        log,
        converged,
        sample_points: z.to_vec(),
    })
}

// Ties resolve to the smallest index.
fn argmax_residual(f: &[f64], approx: &[f64], is_support: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..f.len() {
        if is_support[i] {
            continue;
        }
        let r = (f[i] - approx[i]).abs();
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((i, r));
        }
    }
    best.map(|(i, _)| i)
}

fn loewner_null_vector(z: &[f64], f: &[f64], rows: &[usize], cols: &[usize]) -> Vec<f64> {
    let n = cols.len();
    // zero padding keeps V square when there are fewer rows than columns
    let m = rows.len().max(n);
    let mut l = DMatrix::<f64>::zeros(m, n);
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            l[(r, c)] = (f[i] - f[j]) / (z[i] - z[j]);
        }
    }
    let svd = l.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |(bi, bv), (i, &s)| if s < bv { (i, s) } else { (bi, bv) },
        )
        .0;
    let mut w: Vec<f64> = v_t.row(k).iter().copied().collect();
    // fix the sign: first nonzero weight positive
    if w.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0) {
        w.iter_mut().for_each(|v| *v = -*v);
    }
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter_mut().for_each(|v| *v /= norm);
    w
}

fn bary(idx: &[usize], z: &[f64], f: &[f64], w: &[f64], x: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (k, &j) in idx.iter().enumerate() {
        let t = w[k] / (x - z[j]);
        num += t * f[j];
        den += t;
    }
    num / den
}

impl BarycentricRational {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Value at `z`; exactly `fvals[j]` when `z == support[j]`.
    pub fn eval(&self, z: f64) -> f64 {
        if let Some(j) = self.support.iter().position(|&s| s == z) {
            return self.fvals[j];
        }
        let (mut num, mut den) = (0.0, 0.0);
        for ((&s, &fv), &w) in self.support.iter().zip(&self.fvals).zip(&self.weights) {
            let t = w / (z - s);
            num += t * fv;
            den += t;
        }
        num / den
    }

    /// Same as [`eval`](Self::eval) with sums carried in double-double.
    pub fn eval_precise(&self, z: f64) -> f64 {
        if let Some(j) = self.support.iter().position(|&s| s == z) {
            return self.fvals[j];
        }
        let (mut num, mut den) = (Dd::ZERO, Dd::ZERO);
        for ((&s, &fv), &w) in self.support.iter().zip(&self.fvals).zip(&self.weights) {
            let t = Dd::new(w) / Dd::diff(z, s);
            num = num + t * Dd::new(fv);
            den = den + t;
        }
        (num / den).to_f64()
    }
}

/// r(z) = const_at_infinity + linear_coeff·z + Σ residues_j / (z - poles_j).
#[derive(Debug, Clone, PartialEq)]
pub struct PoleResidueForm {
    /// Ascending.
    pub poles: Vec<f64>,
    pub residues: Vec<f64>,
    pub const_at_infinity: f64,
    /// Nonzero only when Σ w_j vanishes (polynomial degeneracy).
    pub linear_coeff: f64,
}

impl PoleResidueForm {
    pub fn eval(&self, z: f64) -> f64 {
        let poles: f64 = self
            .poles
            .iter()
            .zip(&self.residues)
            .map(|(p, r)| r / (z - p))
            .sum();
        self.const_at_infinity + self.linear_coeff * z + poles
    }
}

const DEGENERATE_SUM: f64 = 1e-12;
const INFINITE_POLE: f64 = 1e13;
const COMPLEX_POLE: f64 = 1e-8;

/// Partial-fraction form of `r`.
///
/// Poles are the finite eigenvalues of the arrowhead pencil
/// ([0, wᵀ; 1, diag z], diag(0, 1, …, 1)). The pencil is deflated exactly
/// (its constraint row is eliminated by a Householder reflection) to an
/// ordinary eigenproblem, so no generalized solver is needed. Each pole is
/// then refined by Newton's method on the denominator and residues are
/// evaluated in double-double.
pub fn extract_poles(r: &BarycentricRational) -> Result<PoleResidueForm> {
    let z = &r.support;
    let w = &r.weights;
    let f = &r.fvals;
    let wnorm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let degenerate = (w.iter().sum::<f64>() / wnorm).abs() < DEGENERATE_SUM;

    let zmax = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut poles = Vec::new();
    for lam in pencil_eigenvalues(z, w, degenerate)? {
        if lam.norm() > INFINITE_POLE * zmax {
            continue;
        }
        if lam.im.abs() > COMPLEX_POLE * (1.0 + lam.re.abs()) {
            return Err(Error::ComplexPole {
                re: lam.re,
                im: lam.im,
            });
        }
        poles.push(polish_pole(z, w, lam.re));
    }
    poles.sort_by(f64::total_cmp);
    if poles.windows(2).any(|p| p[0] == p[1]) {
        return Err(Error::Invariant(
            "coincident poles in partial-fraction form".into(),
        ));
    }

    let residues: Vec<f64> = poles.iter().map(|&p| residue(z, w, f, p)).collect();

    let (const_at_infinity, linear_coeff) = if degenerate {
        fit_affine_part(r, &poles, &residues)?
    } else {
        let (mut num, mut den) = (Dd::ZERO, Dd::ZERO);
        for (&wj, &fj) in w.iter().zip(f) {
            num = num + Dd::prod(wj, fj);
            den = den + Dd::new(wj);
        }
        ((num / den).to_f64(), 0.0)
    };
    Ok(PoleResidueForm {
        poles,
        residues,
        const_at_infinity,
        linear_coeff,
    })
}

type C64 = nalgebra::Complex<f64>;

// Eigenvalues λ with (A - λ)v ∈ span(g), cᵀv = 0, starting from
// A = diag(z), c = w, g = 1. Each level reflects c onto e₁; if g keeps a
// component along c the constraint is eliminated, otherwise it is replaced
// by a new one and the reduction repeats.
fn pencil_eigenvalues(z: &[f64], w: &[f64], degenerate_top: bool) -> Result<Vec<C64>> {
    let mut a = DMatrix::from_diagonal(&DVector::from_column_slice(z));
    let mut c = DVector::from_column_slice(w);
    let mut g = DVector::from_element(z.len(), 1.0);
    let mut level = 0;
    loop {
        let k = a.nrows();
        if k <= 1 {
            return Ok(Vec::new());
        }
        let h = householder(&c);
        let m = &h * &a * &h;
        let hg = &h * &g;
        let lead = hg[0];
        let degenerate = if level == 0 {
            degenerate_top
        } else {
            lead.abs() < DEGENERATE_SUM * g.norm()
        };
        let sub = m.view((1, 1), (k - 1, k - 1)).into_owned();
        if !degenerate {
            let coupling = hg.rows(1, k - 1).into_owned() * m.view((0, 1), (1, k - 1)) / lead;
            let reduced = sub - coupling;
            let schur = nalgebra::Schur::try_new(reduced, f64::EPSILON, 100_000)
                .ok_or_else(|| Error::NonConvergence("Schur iteration for poles".into()))?;
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
        c = DVector::from_iterator(k - 1, m.view((0, 1), (1, k - 1)).iter().copied());
        if c.norm() == 0.0 {
            return Err(Error::NonConvergence("pole pencil is singular".into()));
        }
        g = hg.rows(1, k - 1).into_owned();
        a = sub;
        level += 1;
    }
}

// Symmetric orthogonal H with H c ∥ e₁.
fn householder(c: &DVector<f64>) -> DMatrix<f64> {
    let k = c.len();
    let mut v = c.clone();
    let sign = if c[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign * c.norm();
    let vv = v.dot(&v);
    let mut h = DMatrix::identity(k, k);
    if vv > 0.0 {
        h -= (&v * v.transpose()) * (2.0 / vv);
    }
    h
}

// D and D' in double-double: when Σw is small D' is tiny and plain
// double sums would shift the root.
fn polish_pole(z: &[f64], w: &[f64], mut p: f64) -> f64 {
    for _ in 0..30 {
        let (mut d, mut dp) = (Dd::ZERO, Dd::ZERO);
        for (&zj, &wj) in z.iter().zip(w) {
            let t = Dd::new(1.0) / Dd::diff(p, zj);
            let wt = Dd::new(wj) * t;
            d = d + wt;
            dp = dp - wt * t;
        }
        let step = (d / dp).to_f64();
        if !step.is_finite() {
            break;
        }
        let next = p - step;
        if (next - p).abs() <= 2.0 * f64::EPSILON * p.abs() {
            return next;
        }
        p = next;
    }
    p
}

// N(p)/D'(p) in double-double.
fn residue(z: &[f64], w: &[f64], f: &[f64], p: f64) -> f64 {
    let (mut num, mut dden) = (Dd::ZERO, Dd::ZERO);
    for ((&zj, &wj), &fj) in z.iter().zip(w).zip(f) {
        let t = Dd::new(1.0) / Dd::diff(p, zj);
        num = num + Dd::prod(wj, fj) * t;
        dden = dden - Dd::new(wj) * t * t;
    }
    (num / dden).to_f64()
}

// Least squares of r(z) - Σ ρ/(z - π) against (1, z) on the sample grid.
fn fit_affine_part(r: &BarycentricRational, poles: &[f64], residues: &[f64]) -> Result<(f64, f64)> {
    let pts = &r.sample_points;
    let mut a = DMatrix::<f64>::zeros(pts.len(), 2);
    let mut b = DVector::<f64>::zeros(pts.len());
    for (i, &z) in pts.iter().enumerate() {
        a[(i, 0)] = 1.0;
        a[(i, 1)] = z;
        let pf: f64 = poles.iter().zip(residues).map(|(p, q)| q / (z - p)).sum();
        b[i] = r.eval(z) - pf;
    }
    let x = a
        .svd(true, true)
        .solve(&b, f64::EPSILON)
        .map_err(|e| Error::NonConvergence(format!("affine least squares: {e}")))?;
    Ok((x[0], x[1]))
}
