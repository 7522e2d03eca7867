//! The four subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use soefrac::fmt::real;
use soefrac::kernel::{build_kernel, spectrum_sup_error, time_domain_error, write_atomic};
use soefrac::oracle::volterra_reference;
use soefrac::problems::{
    convergence_study_with, grid_mean, kernel_step, scalar_analytic, scalar_operator, CHParams,
    ConvergenceOptions, Problem, ScalarLinear,
};
use soefrac::schemes::{run as run_scheme, step_count, RunOptions, RunRecord, Scheme};

use crate::cache::KernelCache;
use crate::{
    CacheParams, CompareCmd, ConvergenceCmd, Failure, KernelCmd, KernelParams, ProblemKind,
    ProblemParams, RunCmd, SchemeKind, SchemeParams,
};

const SPECTRUM_GRID: usize = 1000;
const KERNEL_TOL: f64 = 1e-12;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Writes `data` to `out` (atomically) or standard output; the summary goes
/// to standard output when the data went to a file, else to standard error.
fn emit(out: Option<&Path>, data: &str, summary: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            write_atomic(path, data.as_bytes())?;
            println!("{summary}");
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(data.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(soefrac::Error::from)?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!(
            "--{name} must be positive and finite, got {v}"
        )))
    }
}

/// h ≤ T and T an integer multiple of h.
fn check_grid(h: f64, t_end: f64) -> Result<(), Failure> {
    check_positive("h", h)?;
    check_positive("T", t_end)?;
    if h > t_end {
        return Err(usage(format!("--h {h} exceeds --T {t_end}")));
    }
    step_count(h, t_end).map_err(|e| usage(e.to_string()))?;
    Ok(())
}

fn scheme(p: &SchemeParams) -> Result<Scheme, Failure> {
    match (p.scheme, p.theta) {
        (SchemeKind::Theta, Some(t)) if (0.0..=1.0).contains(&t) => Ok(Scheme::Theta(t)),
        (SchemeKind::Theta, Some(t)) => Err(usage(format!("--theta must lie in [0, 1], got {t}"))),
        (SchemeKind::Theta, None) => Err(usage("--scheme theta requires --theta")),
        (_, Some(_)) => Err(usage("--theta is only valid with --scheme theta")),
        (SchemeKind::Ie, None) => Ok(Scheme::Ie),
        (SchemeKind::Mcn, None) => Ok(Scheme::Mcn),
    }
}

fn problem(p: &ProblemParams) -> Problem {
    match p.problem {
        ProblemKind::Scalar => Problem::Scalar { lambda: p.lambda },
        ProblemKind::Heat1d => Problem::Heat { n_cells: p.n_cells },
        ProblemKind::Ch2d => Problem::Ch(CHParams {
            nx: p.nx,
            ny: p.ny,
            mobility: p.mobility,
            eps: p.eps,
            linear_chemistry: false,
        }),
    }
}

fn check_alpha(alpha: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(usage(format!("--alpha must lie in [0, 1], got {alpha}")))
    }
}

fn cache(p: &CacheParams) -> KernelCache {
    KernelCache::new(p.cache_dir.clone(), p.no_cache)
}

pub fn kernel(c: KernelCmd) -> Result<(), Failure> {
    let KernelParams {
        alpha,
        tol,
        n_samples,
    } = c.kernel;
    check_alpha(alpha)?;
    check_positive("h", c.h)?;
    check_positive("T", c.t_end)?;
    let k = build_kernel(alpha, c.h, c.t_end, tol.unwrap_or(KERNEL_TOL), n_samples)?;
    // the order-0 kernel is the identity and carries no time-domain error
    let e_ra = if alpha == 0.0 {
        0.0
    } else {
        time_domain_error(&k)?
    };
    let summary = format!(
        "alpha={} m={} c_inf={} eps_ra={} E_ra={}",
        real(alpha),
        k.m(),
        real(k.c_inf),
        real(spectrum_sup_error(&k, SPECTRUM_GRID)),
        real(e_ra)
    );
    emit(c.common.out.as_deref(), &k.to_json(), &summary)
}

/// CH field as `ny` lines of `nx` values, preceded by a `# t=` comment.
fn grid_csv(t: f64, nx: usize, u: &[f64]) -> String {
    let mut out = format!("# t={}\n", real(t));
    for row in u.chunks(nx) {
        let line: Vec<String> = row.iter().map(|&v| real(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// `<dir>/<stem>.snap<k>.csv` for the k-th snapshot.
fn snapshot_base(c: &RunCmd) -> Option<(PathBuf, String)> {
    let stem = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned());
    match (&c.snapshot_dir, &c.common.out) {
        (Some(dir), out) => Some((
            dir.clone(),
            out.as_deref()
                .and_then(stem)
                .unwrap_or_else(|| "run".into()),
        )),
        (None, Some(out)) => {
            let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
            Some((dir, stem(out).unwrap_or_else(|| "run".into())))
        }
        (None, None) => None,
    }
}

pub fn run(c: RunCmd) -> Result<(), Failure> {
    let alpha = c.kernel.alpha;
    check_alpha(alpha)?;
    check_grid(c.h, c.t_end)?;
    let scheme = scheme(&c.scheme)?;
    let problem = problem(&c.problem);
    let op = problem.operator()?;
    let u0 = problem.initial()?;
    let tol = c
        .kernel
        .tol
        .unwrap_or(ConvergenceOptions::for_problem(&problem).tol);
    let k = cache(&c.cache).get(alpha, c.h, c.t_end, tol, c.kernel.n_samples)?;

    let is_ch = matches!(problem, Problem::Ch(_));
    let mut snapshot_times = c.snapshot_times.clone();
    if snapshot_times.is_empty() {
        snapshot_times.push(c.t_end);
    }
    if let Some(t) = snapshot_times
        .iter()
        .find(|t| !(0.0..=c.t_end).contains(*t))
    {
        return Err(usage(format!("snapshot time {t} lies outside [0, T]")));
    }
    let analytic = problem.analytic(alpha, false);
    let energy = problem.energy()?;
    let mass0 = grid_mean(&u0);
    let drift = Mutex::new(0.0f64);
    let track_mass = |_: f64, u: &[f64]| {
        let mut d = drift.lock().unwrap();
        *d = d.max((grid_mean(u) - mass0).abs());
    };
    let opts = RunOptions {
        energy: energy.as_deref(),
        reference: analytic.as_deref(),
        snapshot_times: if is_ch {
            snapshot_times.clone()
        } else {
            vec![c.t_end]
        },
        observer: if is_ch { Some(&track_mass) } else { None },
        ..Default::default()
    };
    let rec = run_scheme(u0, op.as_ref(), &k, scheme, c.h, c.t_end, &opts)?;

    let mut summary = format!(
        "problem={} scheme={} alpha={} h={} T={} steps={} m={} final_norm={}",
        problem.name(),
        scheme.name(),
        real(alpha),
        real(c.h),
        real(c.t_end),
        rec.t.len() - 1,
        k.m(),
        real(*rec.norm.last().unwrap())
    );
    if let Some(err) = &rec.err {
        summary.push_str(&format!(" final_err={}", real(*err.last().unwrap())));
    }
    if let Some(e) = &rec.energy {
        summary.push_str(&format!(
            " energy0={} energy_final={}",
            real(e[0]),
            real(*e.last().unwrap())
        ));
    }
    if is_ch {
        summary.push_str(&format!(
            " mass0={} mass_drift={}",
            real(mass0),
            real(*drift.lock().unwrap())
        ));
        if let Some((dir, stem)) = snapshot_base(&c) {
            write_snapshots(&rec, &problem, &dir, &stem)?;
        }
    }
    emit(c.common.out.as_deref(), &rec.to_csv(), &summary)
}

fn write_snapshots(
    rec: &RunRecord,
    problem: &Problem,
    dir: &Path,
    stem: &str,
) -> Result<(), Failure> {
    let Problem::Ch(p) = problem else {
        return Ok(());
    };
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(dir).map_err(soefrac::Error::from)?;
    }
    for (i, (t, u)) in rec.snapshots.iter().enumerate() {
        let path = if dir.as_os_str().is_empty() {
            PathBuf::from(format!("{stem}.snap{i}.csv"))
        } else {
            dir.join(format!("{stem}.snap{i}.csv"))
        };
        write_atomic(&path, grid_csv(*t, p.nx, u).as_bytes())?;
    }
    Ok(())
}

pub fn convergence(c: ConvergenceCmd) -> Result<(), Failure> {
    let alpha = c.kernel.alpha;
    check_alpha(alpha)?;
    check_positive("T", c.t_end)?;
    let scheme = scheme(&c.scheme)?;
    if c.h_min_exp - c.h_max_exp < 3 {
        return Err(usage(format!(
            "--h-max-exp {} .. --h-min-exp {} gives fewer than 4 step sizes",
            c.h_max_exp, c.h_min_exp
        )));
    }
    let h_list: Vec<f64> = (c.h_max_exp..=c.h_min_exp).map(|e| 2f64.powi(-e)).collect();
    for &h in &h_list {
        check_grid(h, c.t_end)?;
    }
    let problem = problem(&c.problem);
    let defaults = ConvergenceOptions::for_problem(&problem);
    let opts = ConvergenceOptions {
        tol: c.kernel.tol.unwrap_or(defaults.tol),
        n_samples: c.kernel.n_samples,
        discrete_heat_reference: c.discrete_reference,
        ..defaults
    };
    let h_kernel = kernel_step(&problem, h_list[h_list.len() - 1]);
    let k = cache(&c.cache).get(alpha, h_kernel, c.t_end, opts.tol, opts.n_samples)?;
    let table = convergence_study_with(&problem, scheme, &k, &h_list, &opts)?;
    let summary = format!(
        "problem={} scheme={} alpha={} points={} slope={}",
        problem.name(),
        scheme.name(),
        real(alpha),
        table.rows.len(),
        real(table.slope)
    );
    emit(c.common.out.as_deref(), &table.to_csv(), &summary)
}

pub fn compare(c: CompareCmd) -> Result<(), Failure> {
    let alpha = c.kernel.alpha;
    check_alpha(alpha)?;
    check_grid(c.h, c.t_end)?;
    let scheme = scheme(&c.scheme)?;
    let op = scalar_operator(ScalarLinear { lambda: c.lambda })?;
    let tol = c
        .kernel
        .tol
        .unwrap_or(ConvergenceOptions::for_problem(&Problem::Scalar { lambda: c.lambda }).tol);
    let k = cache(&c.cache).get(alpha, c.h, c.t_end, tol, c.kernel.n_samples)?;
    let opts = RunOptions {
        capture_from: Some(0.0),
        capture_every: 1,
        ..Default::default()
    };
    let s = run_scheme(vec![1.0], &op, &k, scheme, c.h, c.t_end, &opts)?;
    let o = volterra_reference(vec![1.0], &op, alpha, c.h, c.t_end)?;
    if s.snapshots.len() != o.snapshots.len() {
        return Err(soefrac::Error::IncompatibleGrids(format!(
            "scheme has {} steps, oracle {}",
            s.snapshots.len(),
            o.snapshots.len()
        ))
        .into());
    }
    let mut csv = String::from("t,u_scheme,u_oracle,u_analytic,diff\n");
    let (mut max_diff, mut err_scheme, mut err_oracle) = (0.0f64, 0.0f64, 0.0f64);
    for ((t, us), (_, uo)) in s.snapshots.iter().zip(&o.snapshots) {
        let (us, uo) = (us[0], uo[0]);
        let ua = scalar_analytic(alpha, c.lambda, 1.0, *t)?;
        let diff = (us - uo).abs();
        max_diff = max_diff.max(diff);
        err_scheme = err_scheme.max((us - ua).abs());
        err_oracle = err_oracle.max((uo - ua).abs());
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            real(*t),
            real(us),
            real(uo),
            real(ua),
            real(diff)
        ));
    }
    let summary = format!(
        "scheme={} alpha={} h={} max_diff={} max_err_scheme={} max_err_oracle={}",
        scheme.name(),
        real(alpha),
        real(c.h),
        real(max_diff),
        real(err_scheme),
        real(err_oracle)
    );
    emit(c.common.out.as_deref(), &csv, &summary)
}
