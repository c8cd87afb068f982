//! Likelihood models and classical tests: gamma with known shape, logistic
//! regression, Weibull regression without censoring, and the allele-share
//! linkage tests. One damped-Newton engine fits them all, with or without a
//! pinned coefficient, and asserts likelihood ascent at every accepted step.

pub mod gamma;
pub mod linkage;
pub mod logistic;
pub mod weibull;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::edgeworth::Sidedness;
use crate::error::{Error, Result};
use crate::specialfn::sf_raw;

pub use gamma::GammaKnownShape;
pub use linkage::{linkage_tests, LinkageCounts};
pub use logistic::Logistic;
pub use weibull::WeibullRegression;

/// Response vector plus covariate matrix (column 0 is the intercept).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::Domain(format!(
                "dataset: {} responses vs {} covariate rows",
                y.len(),
                x.nrows()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("dataset contains non-finite values".into()));
        }
        if y.len() <= x.ncols() {
            return Err(Error::Domain(format!(
                "dataset: need more observations ({}) than parameters ({})",
                y.len(),
                x.ncols()
            )));
        }
        Ok(Dataset { y, x })
    }

    /// Read a dataset from CSV: header row, a `y` column, every other column
    /// a covariate; an intercept column of ones is prepended.
    pub fn from_csv_reader<R: std::io::Read>(rdr: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(rdr);
        let headers = reader.headers()?.clone();
        let y_idx = headers
            .iter()
            .position(|h| h.trim() == "y")
            .ok_or_else(|| Error::Config("dataset CSV needs a `y` column".into()))?;
        let mut y = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let mut row = Vec::with_capacity(rec.len());
            for (i, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Config(format!("dataset CSV: cannot parse `{field}` as a number"))
                })?;
                if i == y_idx {
                    y.push(v);
                } else {
                    row.push(v);
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Config("dataset CSV has no data rows".into()));
        }
        let k = rows[0].len();
        let n = rows.len();
        let mut x = DMatrix::zeros(n, k + 1);
        for (i, row) in rows.iter().enumerate() {
            x[(i, 0)] = 1.0;
            for (j, &v) in row.iter().enumerate() {
                x[(i, j + 1)] = v;
            }
        }
        Dataset::new(y, x)
    }
}

/// Result of a (possibly constrained) likelihood fit.
#[derive(Debug, Clone)]
pub struct ModelFit {
    pub estimates: DVector<f64>,
    pub loglik: f64,
    /// Full-length score vector at the fit (the pinned component is the
    /// profile score when a constraint was active).
    pub score: DVector<f64>,
    /// Observed information (negative Hessian) at the fit.
    pub observed_info: DMatrix<f64>,
    /// log det of the nuisance block, populated on constrained fits.
    pub nuisance_info_logdet: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Index pinned during the fit, if any.
    pub pinned: Option<usize>,
}

impl ModelFit {
    /// Standard error of coefficient j from the inverse observed information.
    pub fn se(&self, j: usize) -> Result<f64> {
        let inv_jj = self.inv_info_jj(j)?;
        if inv_jj <= 0.0 {
            return Err(Error::Singular(format!(
                "non-positive variance estimate for coefficient {j}"
            )));
        }
        Ok(inv_jj.sqrt())
    }

    /// (j,j) entry of the inverse observed information.
    fn inv_info_jj(&self, j: usize) -> Result<f64> {
        let chol = Cholesky::new(self.observed_info.clone()).ok_or_else(|| {
            Error::Singular("observed information is not positive definite".into())
        })?;
        let mut e = DVector::zeros(self.observed_info.nrows());
        e[j] = 1.0;
        let sol = chol.solve(&e);
        Ok(sol[j])
    }

    /// Profile observed information for coefficient j: the reciprocal of the
    /// (j,j) entry of the inverse information (Schur complement identity).
    pub fn profile_info(&self, j: usize) -> Result<f64> {
        Ok(1.0 / self.inv_info_jj(j)?)
    }

    /// log det of the information block excluding row/column j.
    pub fn nuisance_logdet(&self, j: usize) -> Result<f64> {
        let dim = self.observed_info.nrows();
        if dim == 1 {
            // no nuisance parameters: empty block, log det 0
            return Ok(0.0);
        }
        let keep: Vec<usize> = (0..dim).filter(|&i| i != j).collect();
        let block = self.observed_info.select_rows(&keep).select_columns(&keep);
        let chol = Cholesky::new(block).ok_or_else(|| {
            Error::Singular(format!(
                "nuisance information block (excluding {j}) is not positive definite"
            ))
        })?;
        Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }
}

/// Hypothesis-test outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Wald,
    Score,
    Rstar,
    Saddlepoint,
    Normal,
}

/// A log-likelihood with analytic score and observed information.
///
/// `loglik` returns −∞ outside the parameter domain; the Newton engine
/// treats that as a rejected step.
pub trait Likelihood {
    fn dim(&self) -> usize;
    fn loglik(&self, theta: &DVector<f64>) -> f64;
    fn score(&self, theta: &DVector<f64>) -> DVector<f64>;
    fn observed_info(&self, theta: &DVector<f64>) -> DMatrix<f64>;
    fn start(&self) -> DVector<f64>;

    /// Model-specific divergence check, consulted when the engine stalls.
    /// Returning a message converts the stall into `Error::Separation`.
    fn separation_signal(&self, _theta: &DVector<f64>) -> Option<String> {
        None
    }
}

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;

/// Unconstrained maximum likelihood via damped Newton with ascent checks.
pub fn fit_mle(model: &impl Likelihood) -> Result<ModelFit> {
    newton_fit(model, None)
}

/// Maximize with coefficient `j` pinned to `value`.
pub fn fit_constrained(model: &impl Likelihood, j: usize, value: f64) -> Result<ModelFit> {
    if j >= model.dim() {
        return Err(Error::Domain(format!(
            "fit_constrained: index {j} out of range for {} parameters",
            model.dim()
        )));
    }
    newton_fit(model, Some((j, value)))
}

fn newton_fit(model: &impl Likelihood, pin: Option<(usize, f64)>) -> Result<ModelFit> {
    let dim = model.dim();
    let free: Vec<usize> = (0..dim)
        .filter(|&i| pin.is_none_or(|(j, _)| i != j))
        .collect();
    let mut theta = model.start();
    if let Some((j, v)) = pin {
        theta[j] = v;
    }
    let mut cur = model.loglik(&theta);
    if !cur.is_finite() {
        return Err(Error::Domain(
            "starting point lies outside the likelihood domain".into(),
        ));
    }
    if free.is_empty() {
        // every parameter pinned: nothing to optimize
        return Ok(finish(model, theta, cur, 0, pin, true));
    }
    let free_part =
        |v: &DVector<f64>| DVector::from_iterator(free.len(), free.iter().map(|&i| v[i]));
    let mut g = model.score(&theta);
    let mut iterations = 0;
    let mut no_progress = 0usize;
    loop {
        iterations += 1;
        let gf = free_part(&g);
        let grad_norm = gf.amax();
        if grad_norm <= GRAD_TOL {
            if let Some(msg) = model.separation_signal(&theta) {
                return Err(Error::Separation(msg));
            }
            return Ok(finish(model, theta, cur, iterations, pin, true));
        }
        if iterations > MAX_ITER || no_progress >= 3 {
            if let Some(msg) = model.separation_signal(&theta) {
                return Err(Error::Separation(msg));
            }
            return Err(Error::NoConvergence(format!(
                "newton: gradient norm {grad_norm:e} after {iterations} iterations"
            )));
        }
        let info = model.observed_info(&theta);
        let info_f = info.select_rows(&free).select_columns(&free);
        let step = solve_with_ridge(&info_f, &gf)?;
        // backtracking line search. Near the optimum the Newton increment can
        // sink below the floating-point noise of the summed log-likelihood,
        // so a step that holds the log-likelihood within noise while shrinking
        // the gradient still counts as progress.
        let noise = 1e-11 * (1.0 + cur.abs());
        let mut t = 1.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand = theta.clone();
            for (r, &i) in free.iter().enumerate() {
                cand[i] += t * step[r];
            }
            let ll = model.loglik(&cand);
            if ll.is_finite() && ll >= cur - noise {
                let g_cand = model.score(&cand);
                if ll > cur || free_part(&g_cand).amax() < grad_norm {
                    theta = cand;
                    cur = cur.max(ll);
                    g = g_cand;
                    accepted = true;
                    break;
                }
            }
            t /= 2.0;
        }
        if accepted {
            no_progress = 0;
        } else {
            no_progress += 1;
            g = model.score(&theta);
        }
    }
}

/// Solve info·x = g, escalating a ridge on the diagonal if the Cholesky
/// factorization fails (info should be positive definite near an optimum).
fn solve_with_ridge(info: &DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = Cholesky::new(info.clone()) {
        return Ok(chol.solve(g));
    }
    let scale = info.diagonal().amax().max(1e-12);
    let mut ridge = 1e-10 * scale;
    for _ in 0..30 {
        let mut damped = info.clone();
        for i in 0..damped.nrows() {
            damped[(i, i)] += ridge;
        }
        if let Some(chol) = Cholesky::new(damped) {
            return Ok(chol.solve(g));
        }
        ridge *= 10.0;
    }
    Err(Error::Singular(
        "information matrix not positive definite even with ridge damping".into(),
    ))
}

fn finish(
    model: &impl Likelihood,
    theta: DVector<f64>,
    loglik: f64,
    iterations: usize,
    pin: Option<(usize, f64)>,
    converged: bool,
) -> ModelFit {
    let score = model.score(&theta);
    let observed_info = model.observed_info(&theta);
    let mut fit = ModelFit {
        estimates: theta,
        loglik,
        score,
        observed_info,
        nuisance_info_logdet: None,
        converged,
        iterations,
        pinned: pin.map(|(j, _)| j),
    };
    if let Some((j, _)) = pin {
        fit.nuisance_info_logdet = fit.nuisance_logdet(j).ok();
    }
    fit
}

/// Wald test of coefficient `j` against `psi0`, two-sided normal p-value.
pub fn wald_test(model: &impl Likelihood, j: usize, psi0: f64) -> Result<TestResult> {
    let fit = fit_mle(model)?;
    wald_from_fit(&fit, j, psi0)
}

/// Wald statistic from an existing unconstrained fit.
pub fn wald_from_fit(fit: &ModelFit, j: usize, psi0: f64) -> Result<TestResult> {
    if !fit.converged {
        return Err(Error::NoConvergence(
            "wald test needs a converged fit".into(),
        ));
    }
    let se = fit.se(j)?;
    let statistic = (fit.estimates[j] - psi0) / se;
    Ok(TestResult {
        statistic,
        p_value: two_sided_normal_p(statistic),
        method: TestMethod::Wald,
    })
}

pub(crate) fn two_sided_normal_p(statistic: f64) -> f64 {
    (2.0 * sf_raw(statistic.abs())).min(1.0)
}

pub(crate) fn normal_p(statistic: f64, sided: Sidedness) -> f64 {
    match sided {
        Sidedness::OneSided => crate::specialfn::cdf_raw(statistic),
        Sidedness::TwoSided => two_sided_normal_p(statistic),
    }
}
