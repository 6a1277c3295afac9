use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    /// `F(u, λ) / (1 + λ) -> 0`; the recession function is zero.
    Sublinear,
    AsymptoticallyLinear,
}

type ValueFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;
type RecessionFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// A test function `F(u, λ)` on `T^d × R_+` with its recession function
/// `F^∞(u) = lim F(u, λ)/(1 + λ)`, which is always supplied in closed form.
#[derive(Clone)]
pub struct TestFunction {
    f: ValueFn,
    recession: Option<RecessionFn>,
    growth: Growth,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("growth", &self.growth)
            .field("has_recession", &self.recession.is_some())
            .finish()
    }
}

impl TestFunction {
    pub fn new(
        f: impl Fn([f64; 2], f64) -> f64 + Send + Sync + 'static,
        recession: Option<RecessionFn>,
        growth: Growth,
    ) -> Self {
        Self { f: Arc::new(f), recession, growth }
    }

    pub fn sublinear(f: impl Fn([f64; 2], f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(f, None, Growth::Sublinear)
    }

    pub fn asymptotically_linear(
        f: impl Fn([f64; 2], f64) -> f64 + Send + Sync + 'static,
        recession: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(f, Some(Arc::new(recession)), Growth::AsymptoticallyLinear)
    }

    /// `f(u) λ` with recession `f(u)`.
    pub fn linear_in_lambda(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        let f = Arc::new(f);
        let g = f.clone();
        Self::asymptotically_linear(move |u, l| f(u) * l, move |u| g(u))
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    #[inline]
    pub fn eval(&self, u: [f64; 2], lambda: f64) -> f64 {
        (self.f)(u, lambda)
    }

    /// The recession function; zero for sublinear growth, `None` when an
    /// asymptotically linear function was given without one.
    pub fn recession_fn(&self) -> Option<RecessionFn> {
        match (self.growth, &self.recession) {
            (_, Some(rf)) => Some(rf.clone()),
            (Growth::Sublinear, None) => Some(Arc::new(|_| 0.0)),
            (Growth::AsymptoticallyLinear, None) => None,
        }
    }

    /// Checks that `|F(u, λ)/(1+λ) - F^∞(u)|` is nonincreasing over
    /// `λ ∈ {10^2, 10^3, 10^4}` at the given points and small at `10^4`.
    pub fn check_recession(&self, points: &[[f64; 2]]) -> Result<()> {
        let Some(rf) = self.recession_fn() else {
            return invalid("asymptotically linear test function without recession function");
        };
        for &u in points {
            let gaps: Vec<f64> = [1e2, 1e3, 1e4]
                .iter()
                .map(|&l| (self.eval(u, l) / (1.0 + l) - rf(u)).abs())
                .collect();
            if gaps[1] > gaps[0] + 1e-12 || gaps[2] > gaps[1] + 1e-12 || gaps[2] > 1e-2 {
                return invalid(format!("recession function inconsistent at u = {u:?}: gaps {gaps:?}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recession_checks() {
        let pts = [[0.1, 0.0], [0.6, 0.0]];
        let lin = TestFunction::linear_in_lambda(|u| 2.0 + u[0]);
        assert!(lin.check_recession(&pts).is_ok());
        let sqrt = TestFunction::sublinear(|_, l| l.sqrt());
        assert!(sqrt.check_recession(&pts).is_ok());
        let wrong = TestFunction::asymptotically_linear(|_, l| 3.0 * l, |_| 1.0);
        assert!(wrong.check_recession(&pts).is_err());
    }
}
