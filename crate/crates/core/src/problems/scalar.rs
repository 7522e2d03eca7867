use crate::error::{Error, Result};
use crate::schemes::{Field, SplitOperator};
use crate::specfun::{mittag_leffler, MLParams};

/// u' = λu in fractional form; F = F₋ = λu with λ ≤ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarLinear {
    pub lambda: f64,
}

pub fn scalar_operator(p: ScalarLinear) -> Result<ScalarLinear> {
    if !(p.lambda <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be <= 0, got {}",
            p.lambda
        )));
    }
    Ok(p)
}

impl SplitOperator for ScalarLinear {
    fn dim(&self) -> usize {
        1
    }

    fn apply_minus(&self, _t: f64, u: &[f64]) -> Field {
        vec![self.lambda * u[0]]
    }

    fn apply_plus(&self, _t: f64, _u: &[f64]) -> Field {
        vec![0.0]
    }

    fn solve_implicit(&self, beta: f64, rhs: &[f64]) -> Result<Field> {
        Ok(vec![rhs[0] / (1.0 - beta * self.lambda)])
    }

    fn plus_is_zero(&self) -> bool {
        true
    }
}

/// Scalar F(u) = (minus + plus)·u with minus ≤ 0 implicit and plus explicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSplit {
    pub minus: f64,
    pub plus: f64,
}

impl SplitOperator for ScalarSplit {
    fn dim(&self) -> usize {
        1
    }

    fn apply_minus(&self, _t: f64, u: &[f64]) -> Field {
        vec![self.minus * u[0]]
    }

    fn apply_plus(&self, _t: f64, u: &[f64]) -> Field {
        vec![self.plus * u[0]]
    }

    fn solve_implicit(&self, beta: f64, rhs: &[f64]) -> Result<Field> {
        Ok(vec![rhs[0] / (1.0 - beta * self.minus)])
    }
}

/// u(t) = E_α(λ t^α) u₀.
pub fn scalar_analytic(alpha: f64, lambda: f64, u0: f64, t: f64) -> Result<f64> {
    Ok(u0 * mittag_leffler(MLParams::classical(alpha)?, lambda * t.powf(alpha))?)
}
