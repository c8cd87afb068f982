//! Weibull regression without censoring.
//!
//! Parameterization: log-scale linear predictor η_i = x_iᵀβ (so the scale is
//! λ_i = e^{η_i}) and unconstrained log-shape τ = ln κ. With
//! z_i = κ(ln y_i − η_i) the log-likelihood is
//! Σ τ + (κ−1) ln y_i − κ η_i − e^{z_i}, and score/Hessian are analytic.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{Dataset, Likelihood};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct WeibullRegression {
    pub data: Dataset,
    log_y: Vec<f64>,
}

impl WeibullRegression {
    pub fn new(data: Dataset) -> Result<Self> {
        if data.y.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain(
                "weibull responses must be strictly positive".into(),
            ));
        }
        let log_y = data.y.iter().map(|y| y.ln()).collect();
        Ok(WeibullRegression { data, log_y })
    }

    /// Number of regression coefficients (the shape adds one more).
    pub fn n_coeffs(&self) -> usize {
        self.data.x.ncols()
    }

    fn split(&self, theta: &DVector<f64>) -> (DVector<f64>, f64) {
        let k = self.n_coeffs();
        let beta = DVector::from_iterator(k, (0..k).map(|i| theta[i]));
        (beta, theta[k])
    }
}

/// exp with the argument capped so intermediate Hessian terms stay finite;
/// the line search rejects steps whose loglik is −∞ anyway.
#[inline]
fn exp_capped(z: f64) -> f64 {
    z.min(700.0).exp()
}

impl Likelihood for WeibullRegression {
    fn dim(&self) -> usize {
        self.n_coeffs() + 1
    }

    fn loglik(&self, theta: &DVector<f64>) -> f64 {
        let (beta, tau) = self.split(theta);
        if !tau.is_finite() || tau.abs() > 300.0 {
            return f64::NEG_INFINITY;
        }
        let kappa = tau.exp();
        let eta = &self.data.x * beta;
        let mut ll = 0.0;
        for i in 0..self.log_y.len() {
            let z = kappa * (self.log_y[i] - eta[i]);
            if z > 700.0 {
                return f64::NEG_INFINITY;
            }
            ll += tau + (kappa - 1.0) * self.log_y[i] - kappa * eta[i] - z.exp();
        }
        ll
    }

    fn score(&self, theta: &DVector<f64>) -> DVector<f64> {
        let (beta, tau) = self.split(theta);
        let kappa = tau.exp();
        let eta = &self.data.x * beta;
        let k = self.n_coeffs();
        let mut g = DVector::zeros(k + 1);
        for i in 0..self.log_y.len() {
            let z = kappa * (self.log_y[i] - eta[i]);
            let ez = exp_capped(z);
            let gb = kappa * (ez - 1.0);
            for j in 0..k {
                g[j] += gb * self.data.x[(i, j)];
            }
            g[k] += 1.0 + z * (1.0 - ez);
        }
        g
    }

    fn observed_info(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let (beta, tau) = self.split(theta);
        let kappa = tau.exp();
        let eta = &self.data.x * beta;
        let k = self.n_coeffs();
        let mut h = DMatrix::zeros(k + 1, k + 1);
        for i in 0..self.log_y.len() {
            let z = kappa * (self.log_y[i] - eta[i]);
            let ez = exp_capped(z);
            let w_bb = kappa * kappa * ez;
            let w_bt = -(kappa * (ez - 1.0) + kappa * ez * z);
            let w_tt = -(z * (1.0 - ez) - z * z * ez);
            for a in 0..k {
                let xa = self.data.x[(i, a)];
                for b in a..k {
                    h[(a, b)] += w_bb * xa * self.data.x[(i, b)];
                }
                h[(a, k)] += w_bt * xa;
            }
            h[(k, k)] += w_tt;
        }
        // mirror the upper triangle
        for a in 0..=k {
            for b in (a + 1)..=k {
                h[(b, a)] = h[(a, b)];
            }
        }
        h
    }

    fn start(&self) -> DVector<f64> {
        // least squares of log-responses on the design, log-shape 0
        let k = self.n_coeffs();
        let xtx = self.data.x.transpose() * &self.data.x;
        let xty = self.data.x.transpose() * DVector::from_column_slice(&self.log_y);
        let beta = Cholesky::new(xtx)
            .map(|c| c.solve(&xty))
            .unwrap_or_else(|| DVector::zeros(k));
        let mut theta = DVector::zeros(k + 1);
        theta.rows_mut(0, k).copy_from(&beta);
        theta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fit_mle;
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Weibull};

    #[test]
    fn gradient_and_information_match_finite_differences() {
        let x = DMatrix::from_row_slice(
            6,
            2,
            &[1.0, 0.2, 1.0, -0.4, 1.0, 1.1, 1.0, 0.5, 1.0, -0.9, 1.0, 0.0],
        );
        let y = vec![1.2, 0.4, 3.3, 2.0, 0.6, 1.5];
        let m = WeibullRegression::new(Dataset::new(y, x).unwrap()).unwrap();
        let theta = dvector![0.4, -0.2, 0.1];
        let h = 1e-6;
        let g = m.score(&theta);
        let info = m.observed_info(&theta);
        for j in 0..3 {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += h;
            tm[j] -= h;
            let num = (m.loglik(&tp) - m.loglik(&tm)) / (2.0 * h);
            assert_relative_eq!(num, g[j], max_relative = 1e-5, epsilon = 1e-7);
            for i in 0..3 {
                let num2 = -(m.score(&tp)[i] - m.score(&tm)[i]) / (2.0 * h);
                assert_relative_eq!(num2, info[(i, j)], max_relative = 1e-4, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn intercept_only_recovers_shape_and_scale() {
        // y ~ Weibull(shape 1, scale 2), n = 10^4: estimates within 3 se
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = Weibull::new(2.0, 1.0).unwrap(); // (scale, shape)
        let n = 10_000usize;
        let y: Vec<f64> = (0..n).map(|_| w.sample(&mut rng)).collect();
        let x = DMatrix::from_element(n, 1, 1.0);
        let m = WeibullRegression::new(Dataset::new(y, x).unwrap()).unwrap();
        let fit = fit_mle(&m).unwrap();
        assert!(fit.converged);
        let scale = fit.estimates[0].exp();
        let shape = fit.estimates[1].exp();
        let se_scale = fit.se(0).unwrap() * scale; // delta method on log-scale
        let se_shape = fit.se(1).unwrap() * shape;
        assert!(
            (scale - 2.0).abs() <= 3.0 * se_scale,
            "scale {scale} vs 2.0 (se {se_scale})"
        );
        assert!(
            (shape - 1.0).abs() <= 3.0 * se_shape,
            "shape {shape} vs 1.0 (se {se_shape})"
        );
    }

    #[test]
    fn positive_responses_required() {
        let x = DMatrix::from_element(3, 1, 1.0);
        assert!(WeibullRegression::new(Dataset::new(vec![1.0, 0.0, 2.0], x).unwrap()).is_err());
    }
}
