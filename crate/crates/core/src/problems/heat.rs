use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::schemes::{Field, SplitOperator};
use crate::specfun::{mittag_leffler, MLParams};

/// Second-difference Laplacian on (0, 1) with zero Dirichlet values;
/// `n_cells` interior points, spacing 1/(n_cells + 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heat1D {
    pub n_cells: usize,
}

impl Heat1D {
    pub fn dx(&self) -> f64 {
        1.0 / (self.n_cells + 1) as f64
    }

    /// Interior grid points.
    pub fn grid(&self) -> Vec<f64> {
        let dx = self.dx();
        (1..=self.n_cells).map(|i| i as f64 * dx).collect()
    }

    /// Eigenvalue of the stencil for sin(πx).
    pub fn lambda_h(&self) -> f64 {
        let dx = self.dx();
        let s = (0.5 * PI * dx).sin();
        -4.0 * s * s / (dx * dx)
    }
}

pub fn heat_operator(p: Heat1D) -> Result<Heat1D> {
    if p.n_cells < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 interior points, got {}",
            p.n_cells
        )));
    }
    Ok(p)
}

impl SplitOperator for Heat1D {
    fn dim(&self) -> usize {
        self.n_cells
    }

    fn apply_minus(&self, _t: f64, u: &[f64]) -> Field {
        let n = self.n_cells;
        let inv = 1.0 / (self.dx() * self.dx());
        (0..n)
            .map(|i| {
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                let right = if i + 1 < n { u[i + 1] } else { 0.0 };
                (left - 2.0 * u[i] + right) * inv
            })
            .collect()
    }

    fn apply_plus(&self, _t: f64, _u: &[f64]) -> Field {
        vec![0.0; self.n_cells]
    }

    // Thomas algorithm for the symmetric tridiagonal (I - βΔ_h).
    fn solve_implicit(&self, beta: f64, rhs: &[f64]) -> Result<Field> {
        let n = self.n_cells;
        let r = beta / (self.dx() * self.dx());
        let (diag, off) = (1.0 + 2.0 * r, -r);
        let mut cp = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut denom = diag;
        cp[0] = off / denom;
        x[0] = rhs[0] / denom;
        for i in 1..n {
            denom = diag - off * cp[i - 1];
            cp[i] = off / denom;
            x[i] = (rhs[i] - off * x[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            x[i] -= cp[i] * x[i + 1];
        }
        Ok(x)
    }

    fn cell_weight(&self) -> f64 {
        self.dx()
    }

    fn plus_is_zero(&self) -> bool {
        true
    }
}

/// sin(πx) on the interior grid.
pub fn heat_initial(p: Heat1D) -> Field {
    p.grid().iter().map(|x| (PI * x).sin()).collect()
}

/// E_α(-π² t^α) sin(πx) on the interior grid.
pub fn heat_analytic(alpha: f64, t: f64, p: Heat1D) -> Result<Field> {
    sine_mode(alpha, -PI * PI, t, p)
}

/// E_α(λ_h t^α) sin(πx) with λ_h the stencil eigenvalue: the exact solution
/// of the space-discrete problem.
pub fn heat_analytic_discrete(alpha: f64, t: f64, p: Heat1D) -> Result<Field> {
    sine_mode(alpha, p.lambda_h(), t, p)
}

fn sine_mode(alpha: f64, lambda: f64, t: f64, p: Heat1D) -> Result<Field> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time must be non-negative, got {t}"
        )));
    }
    let amp = if t == 0.0 {
        1.0
    } else {
        mittag_leffler(MLParams::classical(alpha)?, lambda * t.powf(alpha))?
    };
    Ok(heat_initial(p).into_iter().map(|s| amp * s).collect())
}
