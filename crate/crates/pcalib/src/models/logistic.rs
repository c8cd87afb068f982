//! Logistic regression fitted by damped Newton (IRLS with step halving for
//! the canonical link), plus the single-coefficient GLM score test.

use nalgebra::{DMatrix, DVector};

use super::{fit_constrained, Dataset, Likelihood, TestMethod, TestResult};
use crate::error::{Error, Result};
use crate::specialfn::sf_raw;

/// Linear predictors beyond this leave fitted probabilities within 2e-9 of
/// the {0,1} boundary. A converged fit can only sit out there when some
/// response group is (quasi-)separated, so the fitter flags it.
const ETA_PINNED: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct Logistic {
    pub data: Dataset,
}

impl Logistic {
    pub fn new(data: Dataset) -> Result<Self> {
        if data.y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Domain(
                "logistic responses must be 0/1 labels".into(),
            ));
        }
        let ones = data.y.iter().filter(|&&v| v == 1.0).count();
        if ones == 0 || ones == data.y.len() {
            return Err(Error::Separation(
                "response is constant; intercept diverges".into(),
            ));
        }
        Ok(Logistic { data })
    }

    fn eta(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.data.x * theta
    }

    pub fn probabilities(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.eta(theta).map(logistic_stable)
    }
}

fn logistic_stable(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^eta) without overflow.
fn log1p_exp(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

impl Likelihood for Logistic {
    fn dim(&self) -> usize {
        self.data.x.ncols()
    }

    fn loglik(&self, theta: &DVector<f64>) -> f64 {
        let eta = self.eta(theta);
        self.data
            .y
            .iter()
            .zip(eta.iter())
            .map(|(&y, &e)| y * e - log1p_exp(e))
            .sum()
    }

    fn score(&self, theta: &DVector<f64>) -> DVector<f64> {
        let pi = self.probabilities(theta);
        let resid = DVector::from_iterator(
            self.data.y.len(),
            self.data.y.iter().zip(pi.iter()).map(|(&y, &p)| y - p),
        );
        self.data.x.transpose() * resid
    }

    fn observed_info(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let pi = self.probabilities(theta);
        let mut xw = self.data.x.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= pi[i] * (1.0 - pi[i]);
        }
        self.data.x.transpose() * xw
    }

    fn start(&self) -> DVector<f64> {
        let ybar = self.data.y.iter().sum::<f64>() / self.data.y.len() as f64;
        let mut theta = DVector::zeros(self.dim());
        theta[0] = (ybar / (1.0 - ybar)).ln();
        theta
    }

    fn separation_signal(&self, theta: &DVector<f64>) -> Option<String> {
        let eta = self.eta(theta);
        let worst = eta.amax();
        if worst > ETA_PINNED {
            Some(format!(
                "fitted probabilities pinned at the boundary (max |eta| = {worst:.1})"
            ))
        } else {
            None
        }
    }
}

/// Single-coefficient GLM score statistic at the constrained fit:
/// S = [(XᵀDX)⁻¹]_jj^{1/2} · Σᵢ a′(ηᵢ) x_{ij} (yᵢ − f(ηᵢ)), with the
/// canonical logistic link a′ ≡ 1 and D_ii = π̂ᵢ(1 − π̂ᵢ). Two-sided p from
/// the standard normal limit.
pub fn score_test_glm(model: &Logistic, j: usize, psi0: f64) -> Result<TestResult> {
    let constrained = fit_constrained(model, j, psi0)?;
    score_test_glm_at(model, &constrained, j)
}

/// Score statistic reusing an existing constrained fit.
pub fn score_test_glm_at(
    model: &Logistic,
    constrained: &super::ModelFit,
    j: usize,
) -> Result<TestResult> {
    let info = model.observed_info(&constrained.estimates); // XᵀDX at the null fit
    let chol = nalgebra::Cholesky::new(info).ok_or_else(|| {
        Error::Singular("XᵀDX at the constrained fit is not positive definite".into())
    })?;
    let mut e = DVector::zeros(model.dim());
    e[j] = 1.0;
    let inv_jj = chol.solve(&e)[j];
    if inv_jj <= 0.0 {
        return Err(Error::Singular("non-positive (XᵀDX)⁻¹ diagonal".into()));
    }
    let score_j = model.score(&constrained.estimates)[j];
    let statistic = inv_jj.sqrt() * score_j;
    Ok(TestResult {
        statistic,
        p_value: (2.0 * sf_raw(statistic.abs())).min(1.0),
        method: TestMethod::Score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit_constrained, fit_mle, wald_test};
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Binomial, Distribution, Normal};

    fn small_dataset() -> Logistic {
        let x = DMatrix::from_row_slice(
            8,
            2,
            &[
                1.0, -1.2, 1.0, -0.7, 1.0, -0.3, 1.0, 0.1, 1.0, 0.4, 1.0, 0.8, 1.0, 1.3, 1.0, 1.9,
            ],
        );
        let y = vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        Logistic::new(Dataset::new(y, x).unwrap()).unwrap()
    }

    #[test]
    fn gradient_and_information_match_finite_differences() {
        let m = small_dataset();
        let theta = dvector![0.3, -0.8];
        let h = 1e-6;
        for j in 0..2 {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += h;
            tm[j] -= h;
            let num = (m.loglik(&tp) - m.loglik(&tm)) / (2.0 * h);
            assert_relative_eq!(num, m.score(&theta)[j], max_relative = 1e-5, epsilon = 1e-8);
            for i in 0..2 {
                let num2 = -(m.score(&tp)[i] - m.score(&tm)[i]) / (2.0 * h);
                assert_relative_eq!(
                    num2,
                    m.observed_info(&theta)[(i, j)],
                    max_relative = 1e-4,
                    epsilon = 1e-7
                );
            }
        }
    }

    #[test]
    fn intercept_only_constrained_fit_is_logit_of_mean() {
        let m = small_dataset();
        let con = fit_constrained(&m, 1, 0.0).unwrap();
        let ybar: f64 = 0.5;
        assert_relative_eq!(con.estimates[0], (ybar / (1.0 - ybar)).ln(), epsilon = 1e-8);
    }

    #[test]
    fn perfect_separation_is_reported() {
        // y == 1 exactly when the covariate is 1
        let x = DMatrix::from_row_slice(
            8,
            2,
            &[
                1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
            ],
        );
        let y = vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let m = Logistic::new(Dataset::new(y, x).unwrap()).unwrap();
        match fit_mle(&m) {
            Err(Error::Separation(_)) => {}
            other => panic!("expected separation, got {other:?}"),
        }
        // constant labels are rejected up front
        let x2 = DMatrix::from_row_slice(4, 1, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            Logistic::new(Dataset::new(vec![0.0, 0.0, 0.0], x2.rows(0, 3).into_owned()).unwrap()),
            Err(Error::Separation(_))
        ));
    }

    #[test]
    fn score_test_equals_brute_force_efficient_score() {
        // the Schur-complement identity makes the (XᵀDX)⁻¹_jj scaling equal
        // to the textbook profile-information standardization exactly
        let m = small_dataset();
        let j = 1;
        let con = fit_constrained(&m, j, 0.0).unwrap();
        let t = score_test_glm(&m, j, 0.0).unwrap();
        // brute force: U_j / sqrt(I_jj - I_jl I_ll^{-1} I_lj) at the null fit
        let info = m.observed_info(&con.estimates);
        let u = m.score(&con.estimates)[j];
        let prof = info[(j, j)] - info[(j, 0)] * info[(0, j)] / info[(0, 0)];
        assert_relative_eq!(t.statistic, u / prof.sqrt(), max_relative = 1e-8);
    }

    #[test]
    fn score_statistic_variance_near_one_for_common_variant() {
        // null simulation, MAF 0.25, n=3000: empirical variance within 10% of 1
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 3000usize;
        let geno = Binomial::new(2, 0.25).unwrap();
        let norm = Normal::new(0.0, 1.0).unwrap();
        let mut stats = Vec::new();
        for _ in 0..1000 {
            let mut x = DMatrix::zeros(n, 3);
            let mut eta = Vec::with_capacity(n);
            for i in 0..n {
                let g = geno.sample(&mut rng) as f64;
                let z = norm.sample(&mut rng);
                x[(i, 0)] = 1.0;
                x[(i, 1)] = g;
                x[(i, 2)] = z;
                eta.push(-1.0 + 0.3 * z); // beta_geno = 0 under the null
            }
            let y: Vec<f64> = eta
                .iter()
                .map(|&e| {
                    if rand::Rng::random::<f64>(&mut rng) < logistic_stable(e) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let m = Logistic::new(Dataset::new(y, x).unwrap()).unwrap();
            let t = score_test_glm(&m, 1, 0.0).unwrap();
            stats.push(t.statistic);
        }
        let mean = stats.iter().sum::<f64>() / stats.len() as f64;
        let var = stats.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (stats.len() - 1) as f64;
        assert!(
            (var - 1.0).abs() < 0.10,
            "empirical score variance {var} not within 10% of 1"
        );
    }

    #[test]
    fn rare_variant_wald_se_matches_sparse_approximation() {
        // se from the full information inverse vs 1/sqrt(sum x_s P(1-P))
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 3000usize;
        let geno = Binomial::new(2, 0.02).unwrap();
        let mut x = DMatrix::zeros(n, 2);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            x[(i, 0)] = 1.0;
            x[(i, 1)] = geno.sample(&mut rng) as f64;
            let pi = logistic_stable(-3.0);
            y.push(if rand::Rng::random::<f64>(&mut rng) < pi {
                1.0
            } else {
                0.0
            });
        }
        let m = Logistic::new(Dataset::new(y, x.clone()).unwrap()).unwrap();
        let fit = fit_mle(&m).unwrap();
        let se_full = fit.se(1).unwrap();
        let pi = m.probabilities(&fit.estimates);
        let denom: f64 = (0..n).map(|i| x[(i, 1)] * pi[i] * (1.0 - pi[i])).sum();
        let se_approx = denom.sqrt().recip();
        assert!(
            (se_full - se_approx).abs() / se_full < 0.15,
            "full {se_full} vs sparse approximation {se_approx}"
        );
        let _ = wald_test(&m, 1, 0.0).unwrap();
    }
}
