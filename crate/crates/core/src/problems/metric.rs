use rayon::prelude::*;

use super::ch::{ch_energy, ch_initial, ch_operator, CHParams, DEFAULT_CENTERS, DEFAULT_RADIUS};
use super::heat::{heat_analytic, heat_analytic_discrete, heat_initial, heat_operator, Heat1D};
use super::scalar::{scalar_analytic, scalar_operator, ScalarLinear};
use crate::error::{Error, Result};
use crate::fmt::real;
use crate::kernel::{build_kernel, RationalKernel, DEFAULT_SAMPLES};
use crate::schemes::{
    diff, run, step_count, Field, ReferenceFn, RunOptions, RunRecord, Scheme, SplitOperator,
};

pub type BoxedEnergy = Box<dyn Fn(&[f64]) -> f64 + Sync>;
pub type BoxedReference = Box<dyn Fn(f64) -> Result<Field> + Sync>;

/// Where the exact solution of an error measurement comes from.
#[derive(Clone, Copy)]
pub enum Reference<'a> {
    Analytic(ReferenceFn<'a>),
    /// A finer run whose snapshots cover every step of the measured run.
    Run(&'a RunRecord),
}

#[derive(Clone, Copy)]
pub struct ErrorMetric<'a> {
    pub t_start: f64,
    pub reference: Reference<'a>,
}

/// E_r = sqrt(Σ ‖u - ref‖²) / sqrt(Σ ‖ref - u₀‖²) over the steps with
/// t ≥ t_start; spatial norms use the run's cell weight.
///
/// Every such step of `run` must be present among its snapshots.
pub fn relative_error(run: &RunRecord, metric: &ErrorMetric<'_>) -> Result<f64> {
    if !(metric.t_start < run.t_end) {
        return Err(Error::InvalidArgument(format!(
            "t_start={} is not below T={}",
            metric.t_start, run.t_end
        )));
    }
    let tol = 1e-3 * run.h;
    let sq = |v: &[f64]| run.cell_weight * v.iter().map(|x| x * x).sum::<f64>();
    let (mut num, mut den) = (0.0, 0.0);
    let mut count = 0usize;
    for &t in run.t.iter().filter(|&&t| t >= metric.t_start - tol) {
        let u = run
            .field_at(t)
            .ok_or_else(|| Error::IncompatibleGrids(format!("run has no field at t={t}")))?;
        let exact: Field = match metric.reference {
            Reference::Analytic(f) => f(t)?,
            Reference::Run(r) => r.field_at(t).cloned().ok_or_else(|| {
                Error::IncompatibleGrids(format!("reference has no field at t={t}"))
            })?,
        };
        if exact.len() != u.len() {
            return Err(Error::IncompatibleGrids(format!(
                "field sizes {} and {}",
                u.len(),
                exact.len()
            )));
        }
        num += sq(&diff(u, &exact));
        den += sq(&diff(&exact, &run.u0));
        count += 1;
    }
    if count == 0 {
        return Err(Error::IncompatibleGrids(
            "no steps inside the error window".into(),
        ));
    }
    if den == 0.0 {
        return if num == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::Domain("reference never leaves u0".into()))
        };
    }
    Ok((num / den).sqrt())
}

/// The model problems of the convergence harness, with their default
/// initial states (u₀ = 1, sin(πx), four bubbles).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem {
    Scalar { lambda: f64 },
    Heat { n_cells: usize },
    Ch(CHParams),
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Scalar { .. } => "scalar",
            Problem::Heat { .. } => "heat1d",
            Problem::Ch(_) => "ch2d",
        }
    }

    pub fn operator(&self) -> Result<Box<dyn SplitOperator>> {
        Ok(match *self {
            Problem::Scalar { lambda } => Box::new(scalar_operator(ScalarLinear { lambda })?),
            Problem::Heat { n_cells } => Box::new(heat_operator(Heat1D { n_cells })?),
            Problem::Ch(p) => Box::new(ch_operator(p)?),
        })
    }

    pub fn initial(&self) -> Result<Field> {
        match *self {
            Problem::Scalar { .. } => Ok(vec![1.0]),
            Problem::Heat { n_cells } => Ok(heat_initial(Heat1D { n_cells })),
            Problem::Ch(p) => ch_initial(&ch_operator(p)?, DEFAULT_RADIUS, &DEFAULT_CENTERS),
        }
    }

    /// Exact solution, when one is known.
    pub fn analytic(&self, alpha: f64, discrete: bool) -> Option<BoxedReference> {
        match *self {
            Problem::Scalar { lambda } => Some(Box::new(move |t| {
                Ok(vec![scalar_analytic(alpha, lambda, 1.0, t)?])
            })),
            Problem::Heat { n_cells } => {
                let p = Heat1D { n_cells };
                if discrete {
                    Some(Box::new(move |t| heat_analytic_discrete(alpha, t, p)))
                } else {
                    Some(Box::new(move |t| heat_analytic(alpha, t, p)))
                }
            }
            Problem::Ch(_) => None,
        }
    }

    /// Energy functional recorded alongside the norm, when defined.
    pub fn energy(&self) -> Result<Option<BoxedEnergy>> {
        match *self {
            Problem::Ch(p) => {
                let op = ch_operator(p)?;
                Ok(Some(Box::new(move |u| ch_energy(&op, u))))
            }
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    /// AAA tolerance of the shared kernel.
    pub tol: f64,
    pub n_samples: usize,
    /// Measure heat errors against the semi-discrete solution (stencil
    /// eigenvalue) instead of the continuous one.
    pub discrete_heat_reference: bool,
    /// Error window starts at `window * T`.
    pub window: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            n_samples: DEFAULT_SAMPLES,
            discrete_heat_reference: false,
            window: 1.0 / 3.0,
        }
    }
}

impl ConvergenceOptions {
    /// Defaults with the kernel tolerance used for each problem: 1e-13 where
    /// a closed form exposes the kernel error floor, 1e-12 otherwise.
    pub fn for_problem(problem: &Problem) -> Self {
        let tol = if matches!(problem, Problem::Ch(_)) {
            1e-12
        } else {
            1e-13
        };
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    /// (h, E_r) in the order of the requested step sizes.
    pub rows: Vec<(f64, f64)>,
    /// Least-squares slope of ln E_r against ln h.
    pub slope: f64,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,E_r\n");
        for (h, e) in &self.rows {
            out.push_str(&format!("{},{}\n", real(*h), real(*e)));
        }
        out.push_str(&format!("# slope={}\n", real(self.slope)));
        out
    }
}

/// Slope of the least-squares line through (ln h, ln e).
pub fn fit_slope(h: &[f64], e: &[f64]) -> Result<f64> {
    if h.len() != e.len() || h.len() < 2 {
        return Err(Error::InvalidArgument(
            "slope fit needs at least two (h, E) pairs".into(),
        ));
    }
    if h.iter().chain(e).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(
            "slope fit needs positive finite values".into(),
        ));
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "step sizes must not all be equal".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// Step size the study kernel must resolve: min(h), or the reference step
/// min(h)/4 for problems without a closed form.
pub fn kernel_step(problem: &Problem, h_min: f64) -> f64 {
    if problem.analytic(1.0, false).is_some() {
        h_min
    } else {
        h_min / REFERENCE_REFINEMENT as f64
    }
}

const REFERENCE_REFINEMENT: usize = 4;

/// Runs `problem` at every step size and measures E_r on [window·T, T].
///
/// One kernel, built at the finest step in play, serves every run. Problems
/// without a closed-form solution are measured against a run at
/// h_ref = min(h)/4. Runs execute concurrently; rows keep the input order.
pub fn convergence_study(
    problem: &Problem,
    scheme: Scheme,
    alpha: f64,
    h_list: &[f64],
    t_end: f64,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceTable> {
    check_steps(h_list, t_end)?;
    let h_kernel = kernel_step(problem, h_list[h_list.len() - 1]);
    let kernel = build_kernel(alpha, h_kernel, t_end, opts.tol, opts.n_samples)?;
    convergence_study_with(problem, scheme, &kernel, h_list, opts)
}

/// [`convergence_study`] with a prebuilt kernel; its h must equal
/// [`kernel_step`] of the finest step and its horizon is the study's T.
pub fn convergence_study_with(
    problem: &Problem,
    scheme: Scheme,
    kernel: &RationalKernel,
    h_list: &[f64],
    opts: &ConvergenceOptions,
) -> Result<ConvergenceTable> {
    let t_end = kernel.t_end;
    check_steps(h_list, t_end)?;
    let h_min = h_list[h_list.len() - 1];
    let h_kernel = kernel_step(problem, h_min);
    if kernel.h != h_kernel {
        return Err(Error::InvalidArgument(format!(
            "kernel resolves h={}, the study needs h={h_kernel}",
            kernel.h
        )));
    }
    let analytic = problem.analytic(kernel.alpha, opts.discrete_heat_reference);
    let op = problem.operator()?;
    let u0 = problem.initial()?;
    let t_start = opts.window * t_end;

    let reference_run = match &analytic {
        Some(f) => sample_reference(f.as_ref(), &u0, op.cell_weight(), h_min, t_end, t_start)?,
        None => capture_run(
            &u0,
            op.as_ref(),
            kernel,
            scheme,
            h_kernel,
            t_end,
            t_start,
            REFERENCE_REFINEMENT,
        )?,
    };
    let reference = Reference::Run(&reference_run);
    let metric = ErrorMetric { t_start, reference };

    let errors: Vec<f64> = h_list
        .par_iter()
        .map(|&h| {
            let rec = capture_run(&u0, op.as_ref(), kernel, scheme, h, t_end, t_start, 1)?;
            relative_error(&rec, &metric)
        })
        .collect::<Result<_>>()?;
    let slope = fit_slope(h_list, &errors)?;
    Ok(ConvergenceTable {
        rows: h_list.iter().copied().zip(errors).collect(),
        slope,
    })
}

fn check_steps(h_list: &[f64], t_end: f64) -> Result<()> {
    if h_list.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 step sizes, got {}",
            h_list.len()
        )));
    }
    if h_list.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidArgument(
            "step sizes must be strictly descending".into(),
        ));
    }
    for &h in h_list {
        step_count(h, t_end)?;
    }
    Ok(())
}

// Closed-form fields on the finest grid from t_start on, evaluated once.
fn sample_reference(
    f: ReferenceFn<'_>,
    u0: &[f64],
    cell_weight: f64,
    h: f64,
    t_end: f64,
    t_start: f64,
) -> Result<RunRecord> {
    let n = step_count(h, t_end)?;
    let first = ((t_start / h) - 1e-3).ceil().max(0.0) as usize;
    let snapshots = (first..=n)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * h;
            Ok((t, f(t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rec = RunRecord::new(h, t_end, cell_weight, u0.to_vec());
    rec.t = snapshots.iter().map(|s| s.0).collect();
    rec.snapshots = snapshots;
    Ok(rec)
}

#[allow(clippy::too_many_arguments)]
fn capture_run(
    u0: &[f64],
    op: &dyn SplitOperator,
    k: &RationalKernel,
    scheme: Scheme,
    h: f64,
    t_end: f64,
    t_start: f64,
    every: usize,
) -> Result<RunRecord> {
    let opts = RunOptions {
        capture_from: Some(t_start),
        capture_every: every,
        ..RunOptions::default()
    };
    run(u0.to_vec(), op, k, scheme, h, t_end, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(fields: &[(f64, Field)], h: f64) -> RunRecord {
        let mut r = RunRecord::new(h, fields.last().unwrap().0, 1.0, fields[0].1.clone());
        for (t, u) in fields {
            r.t.push(*t);
            r.norm.push(0.0);
            r.snapshots.push((*t, u.clone()));
        }
        r
    }

    #[test]
    fn identical_and_frozen_runs() {
        let fields: Vec<(f64, Field)> = (0..=4)
            .map(|i| (i as f64 * 0.25, vec![1.0 - 0.1 * i as f64]))
            .collect();
        let r = record(&fields, 0.25);
        let same = ErrorMetric {
            t_start: 1.0 / 3.0,
            reference: Reference::Run(&r),
        };
        assert_eq!(relative_error(&r, &same).unwrap(), 0.0);
        let frozen = record(
            &fields
                .iter()
                .map(|(t, _)| (*t, vec![1.0]))
                .collect::<Vec<_>>(),
            0.25,
        );
        let m = ErrorMetric {
            t_start: 1.0 / 3.0,
            reference: Reference::Run(&r),
        };
        assert_eq!(relative_error(&frozen, &m).unwrap(), 1.0);
    }

    #[test]
    fn missing_reference_steps_are_rejected() {
        let fine: Vec<(f64, Field)> = (0..=2).map(|i| (i as f64 * 0.5, vec![i as f64])).collect();
        let coarse: Vec<(f64, Field)> =
            (0..=4).map(|i| (i as f64 * 0.25, vec![i as f64])).collect();
        let rf = record(&fine, 0.5);
        let rc = record(&coarse, 0.25);
        let m = ErrorMetric {
            t_start: 0.0,
            reference: Reference::Run(&rf),
        };
        assert!(matches!(
            relative_error(&rc, &m),
            Err(Error::IncompatibleGrids(_))
        ));
    }

    #[test]
    fn slope_of_power_law() {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        assert!((fit_slope(&h, &e).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn study_rejects_bad_lists() {
        let p = Problem::Scalar { lambda: -1.0 };
        let o = ConvergenceOptions::default();
        assert!(convergence_study(&p, Scheme::Ie, 0.5, &[0.1, 0.05, 0.025], 1.0, &o).is_err());
        assert!(
            convergence_study(&p, Scheme::Ie, 0.5, &[0.1, 0.025, 0.05, 0.0125], 1.0, &o).is_err()
        );
    }

    #[test]
    fn csv_layout() {
        let t = ConvergenceTable {
            rows: vec![(0.5, 0.25)],
            slope: 2.0,
        };
        let csv = t.to_csv();
        assert!(csv.starts_with("h,E_r\n5.0000000000000000e-1,2.5000000000000000e-1\n"));
        assert!(csv.ends_with("# slope=2.0000000000000000e0\n"));
    }
}
