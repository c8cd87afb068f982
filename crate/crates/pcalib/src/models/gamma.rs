//! Gamma likelihood with known shape: a single rate parameter.

use nalgebra::{dvector, DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use super::Likelihood;
use crate::error::{Error, Result};

/// iid Gamma(shape, rate) observations with the shape known; the rate is the
/// one free parameter, so β̂ = shape/x̄ in closed form.
#[derive(Debug, Clone)]
pub struct GammaKnownShape {
    pub shape: f64,
    n: usize,
    sum: f64,
    sum_ln: f64,
}

impl GammaKnownShape {
    pub fn new(shape: f64, data: &[f64]) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::Domain(format!("shape must be > 0, got {shape}")));
        }
        if data.is_empty() {
            return Err(Error::Domain("gamma model needs data".into()));
        }
        if data.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::Domain("gamma observations must be positive".into()));
        }
        Ok(GammaKnownShape {
            shape,
            n: data.len(),
            sum: data.iter().sum(),
            sum_ln: data.iter().map(|x| x.ln()).sum(),
        })
    }

    /// Build from sufficient statistics (n, Σx, Σln x).
    pub fn from_sufficient(shape: f64, n: usize, sum: f64, sum_ln: f64) -> Result<Self> {
        if !(shape > 0.0) || n == 0 || !(sum > 0.0) {
            return Err(Error::Domain("invalid gamma sufficient statistics".into()));
        }
        Ok(GammaKnownShape {
            shape,
            n,
            sum,
            sum_ln,
        })
    }

    pub fn mle_rate(&self) -> f64 {
        self.shape * self.n as f64 / self.sum
    }
}

impl Likelihood for GammaKnownShape {
    fn dim(&self) -> usize {
        1
    }

    fn loglik(&self, theta: &DVector<f64>) -> f64 {
        let rate = theta[0];
        if !(rate > 0.0) {
            return f64::NEG_INFINITY;
        }
        let n = self.n as f64;
        n * self.shape * rate.ln() - n * ln_gamma(self.shape) + (self.shape - 1.0) * self.sum_ln
            - rate * self.sum
    }

    fn score(&self, theta: &DVector<f64>) -> DVector<f64> {
        let rate = theta[0];
        dvector![self.n as f64 * self.shape / rate - self.sum]
    }

    fn observed_info(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let rate = theta[0];
        DMatrix::from_element(1, 1, self.n as f64 * self.shape / (rate * rate))
    }

    fn start(&self) -> DVector<f64> {
        dvector![self.mle_rate()]
    }
}
