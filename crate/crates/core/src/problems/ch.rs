//! Cahn–Hilliard on the unit square with homogeneous Neumann conditions.
//!
//! Cell-centred grid, fields stored row-major (`u[j * nx + i]`, j along y).
//! With chemical potential μ = ψ(u) - ε²Δu and ψ(u) = u³ - u the operator
//! F(u) = MΔμ splits into the implicit part F₋(u) = MΔ(2u - ε²Δu) and the
//! explicit part F₊(u) = MΔ(u³ - 3u). The implicit operator
//! I - 2βMΔ + βMε²Δ² is diagonal in the tensor cosine basis, so it is
//! solved exactly there.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::schemes::{Field, SplitOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CHParams {
    pub nx: usize,
    pub ny: usize,
    /// Mobility M.
    pub mobility: f64,
    pub eps: f64,
    /// Replace ψ by its linear part -u (test hook).
    pub linear_chemistry: bool,
}

impl Default for CHParams {
    fn default() -> Self {
        Self {
            nx: 64,
            ny: 64,
            mobility: 0.05,
            eps: 0.03,
            linear_chemistry: false,
        }
    }
}

pub const DEFAULT_RADIUS: f64 = 0.15;
pub const DEFAULT_CENTERS: [(f64, f64); 4] = [(0.3, 0.3), (0.3, 0.7), (0.7, 0.7), (0.7, 0.3)];

pub struct CHOperator {
    p: CHParams,
    dx: f64,
    dy: f64,
    /// Orthonormal DCT-II matrices.
    cx: DMatrix<f64>,
    cy: DMatrix<f64>,
    /// Laplacian eigenvalue of each cosine mode, row-major.
    lambda: Vec<f64>,
}

pub fn ch_operator(p: CHParams) -> Result<CHOperator> {
    if p.nx < 8 || p.ny < 8 {
        return Err(Error::InvalidArgument(format!(
            "grid must be at least 8x8, got {}x{}",
            p.nx, p.ny
        )));
    }
    if !(p.mobility > 0.0 && p.eps > 0.0) {
        return Err(Error::InvalidArgument(
            "mobility and eps must be positive".into(),
        ));
    }
    let dx = 1.0 / p.nx as f64;
    let dy = 1.0 / p.ny as f64;
    let lx = eigenvalues(p.nx, dx);
    let ly = eigenvalues(p.ny, dy);
    let lambda = ly
        .iter()
        .flat_map(|ll| lx.iter().map(move |lk| lk + ll))
        .collect();
    Ok(CHOperator {
        p,
        dx,
        dy,
        cx: dct_matrix(p.nx),
        cy: dct_matrix(p.ny),
        lambda,
    })
}

fn eigenvalues(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = (PI * k as f64 / (2 * n) as f64).sin();
            -4.0 * s * s / (h * h)
        })
        .collect()
}

fn dct_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |k, i| {
        let s = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        s * (PI * k as f64 * (i as f64 + 0.5) / n as f64).cos()
    })
}

impl CHOperator {
    pub fn params(&self) -> CHParams {
        self.p
    }

    /// (x, y) of cell (i, j).
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dy)
    }

    /// Five-point Neumann Laplacian (mirror ghost cells).
    pub fn laplacian(&self, u: &[f64]) -> Field {
        let (nx, ny) = (self.p.nx, self.p.ny);
        let (ix2, iy2) = (1.0 / (self.dx * self.dx), 1.0 / (self.dy * self.dy));
        let mut out = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let c = u[j * nx + i];
                let w = if i > 0 { u[j * nx + i - 1] } else { c };
                let e = if i + 1 < nx { u[j * nx + i + 1] } else { c };
                let s = if j > 0 { u[(j - 1) * nx + i] } else { c };
                let n = if j + 1 < ny { u[(j + 1) * nx + i] } else { c };
                out[j * nx + i] = (w - 2.0 * c + e) * ix2 + (s - 2.0 * c + n) * iy2;
            }
        }
        out
    }

    /// ψ(u): u³ - u, or -u with the linear hook.
    pub fn chemistry(&self, u: f64) -> f64 {
        if self.p.linear_chemistry {
            -u
        } else {
            u * u * u - u
        }
    }

    /// μ = ψ(u) - ε²Δu.
    pub fn chemical_potential(&self, u: &[f64]) -> Field {
        let lap = self.laplacian(u);
        let e2 = self.p.eps * self.p.eps;
        u.iter()
            .zip(&lap)
            .map(|(&v, l)| self.chemistry(v) - e2 * l)
            .collect()
    }

    fn forward(&self, u: &[f64]) -> DMatrix<f64> {
        let m = DMatrix::from_row_slice(self.p.ny, self.p.nx, u);
        &self.cy * m * self.cx.transpose()
    }

    fn inverse(&self, c: &DMatrix<f64>) -> Field {
        let m = self.cy.transpose() * c * &self.cx;
        let mut out = Vec::with_capacity(self.p.nx * self.p.ny);
        for j in 0..self.p.ny {
            out.extend(m.row(j).iter());
        }
        out
    }
}

impl SplitOperator for CHOperator {
    fn dim(&self) -> usize {
        self.p.nx * self.p.ny
    }

    fn apply_minus(&self, _t: f64, u: &[f64]) -> Field {
        let lap = self.laplacian(u);
        let e2 = self.p.eps * self.p.eps;
        let inner: Field = u.iter().zip(&lap).map(|(v, l)| 2.0 * v - e2 * l).collect();
        self.laplacian(&inner)
            .into_iter()
            .map(|v| self.p.mobility * v)
            .collect()
    }

    fn apply_plus(&self, _t: f64, u: &[f64]) -> Field {
        let inner: Field = u.iter().map(|&v| self.chemistry(v) - 2.0 * v).collect();
        self.laplacian(&inner)
            .into_iter()
            .map(|v| self.p.mobility * v)
            .collect()
    }

    fn solve_implicit(&self, beta: f64, rhs: &[f64]) -> Result<Field> {
        let mut c = self.forward(rhs);
        let (m, e2) = (self.p.mobility, self.p.eps * self.p.eps);
        let nx = self.p.nx;
        for l in 0..self.p.ny {
            for k in 0..nx {
                let lam = self.lambda[l * nx + k];
                let symbol = 1.0 - 2.0 * beta * m * lam + beta * m * e2 * lam * lam;
                if !(symbol > 0.0) {
                    return Err(Error::SymbolSingular(format!(
                        "symbol {symbol:e} at mode ({k}, {l})"
                    )));
                }
                c[(l, k)] /= symbol;
            }
        }
        Ok(self.inverse(&c))
    }

    fn cell_weight(&self) -> f64 {
        self.dx * self.dy
    }
}

/// Σ tanh((r - |x - x_i|)/(√2 ε)) + 3 at the cell centres.
pub fn ch_initial(op: &CHOperator, r: f64, centers: &[(f64, f64)]) -> Result<Field> {
    if centers
        .iter()
        .any(|&(x, y)| !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)))
    {
        return Err(Error::InvalidArgument(
            "bubble centres must lie in the unit square".into(),
        ));
    }
    let p = op.params();
    let w = std::f64::consts::SQRT_2 * p.eps;
    let mut u = Vec::with_capacity(p.nx * p.ny);
    for j in 0..p.ny {
        for i in 0..p.nx {
            let (x, y) = op.cell_center(i, j);
            let s: f64 = centers
                .iter()
                .map(|&(cx, cy)| ((r - (x - cx).hypot(y - cy)) / w).tanh())
                .sum();
            u.push(s + centers.len() as f64 - 1.0);
        }
    }
    Ok(u)
}

/// Ginzburg–Landau energy ∫ ¼(u² - 1)² + (ε²/2)|∇u|² (midpoint rule,
/// forward differences, zero flux across the boundary).
pub fn ch_energy(op: &CHOperator, u: &[f64]) -> f64 {
    let p = op.params();
    let (nx, ny) = (p.nx, p.ny);
    let half_e2 = 0.5 * p.eps * p.eps;
    let mut total = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let c = u[j * nx + i];
            let gx = if i + 1 < nx {
                (u[j * nx + i + 1] - c) / op.dx
            } else {
                0.0
            };
            let gy = if j + 1 < ny {
                (u[(j + 1) * nx + i] - c) / op.dy
            } else {
                0.0
            };
            let q = c * c - 1.0;
            total += 0.25 * q * q + half_e2 * (gx * gx + gy * gy);
        }
    }
    total * op.dx * op.dy
}

pub fn grid_mean(u: &[f64]) -> f64 {
    u.iter().sum::<f64>() / u.len() as f64
}
