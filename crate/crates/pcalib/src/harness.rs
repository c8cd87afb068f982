//! Seeded Monte Carlo harness.
//!
//! Each replication derives its own ChaCha stream from (seed, replication
//! index), so results are bit-identical for a fixed config and seed no
//! matter how many workers run the loop. Replication-level method failures
//! (separation, solver breakdowns) are recorded as exclusions, never
//! aborted on.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Normal, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulants::{calibrate, FamilySpec, TestStatCalibration};
use crate::edgeworth::{pvalue_cdf, Sidedness};
use crate::error::{Error, Result};
use crate::models::{
    self, fit_mle, linkage_tests, wald_from_fit, Dataset, GammaKnownShape, LinkageCounts, Logistic,
    WeibullRegression,
};
use crate::rstar::{rstar_pvalue_with_fits, ProfileModel};
use crate::saddlepoint::{corrected_pvalue, TailForm};

/// p-value method applied inside a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Normal,
    Saddlepoint,
    Rstar,
    Score,
    Wald,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Normal => "normal",
            Method::Saddlepoint => "saddlepoint",
            Method::Rstar => "rstar",
            Method::Score => "score",
            Method::Wald => "wald",
        }
    }
}

/// Gamma mean test: data from (shape, rate_true), statistic standardized
/// under the rate_null hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaCltConfig {
    pub shape: f64,
    pub rate_true: f64,
    pub rate_null: f64,
}

/// Allele-share linkage: multinomial cell probabilities of sharing 0/1/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkageConfig {
    pub theta: [f64; 3],
}

/// Which part of a GWAS replication is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMode {
    /// Covariates fixed across replications, labels redrawn.
    #[default]
    Labels,
    /// Labels fixed across replications, genotype column redrawn.
    Genotypes,
}

/// Case-control logistic regression with a rare genotype covariate:
/// x_s ~ Binomial(2, maf), x1 ~ Binomial(1, 0.5), x2 ~ Normal(20, 1);
/// the tested coefficient is the genotype's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticGwasConfig {
    pub maf: f64,
    pub beta0: f64,
    pub beta_s: f64,
    pub beta1: f64,
    pub beta2: f64,
    #[serde(default)]
    pub resample: ResampleMode,
}

/// Weibull regression with `covariates` pure-noise regressors; the first
/// non-intercept coefficient is tested against zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeibullConfig {
    pub covariates: usize,
    pub shape: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    GammaClt(GammaCltConfig),
    Linkage(LinkageConfig),
    LogisticGwas(LogisticGwasConfig),
    WeibullManyNuisance(WeibullConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: u64,
    pub reps: u64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub sidedness: Sidedness,
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// 0 means the global thread pool decides.
    #[serde(default)]
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        let supported: &[Method] = match &self.scenario {
            Scenario::GammaClt(c) => {
                if !(c.shape > 0.0 && c.rate_true > 0.0 && c.rate_null > 0.0) {
                    return Err(Error::Config("gamma parameters must be positive".into()));
                }
                &[Method::Normal, Method::Saddlepoint, Method::Rstar]
            }
            Scenario::Linkage(c) => {
                let s: f64 = c.theta.iter().sum();
                if c.theta.iter().any(|&p| p < 0.0) || (s - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(
                        "linkage theta must be a probability vector".into(),
                    ));
                }
                &[Method::Score, Method::Wald]
            }
            Scenario::LogisticGwas(c) => {
                if !(c.maf > 0.0 && c.maf < 1.0) {
                    return Err(Error::Config("maf must lie in (0,1)".into()));
                }
                &[Method::Wald, Method::Rstar, Method::Score]
            }
            Scenario::WeibullManyNuisance(c) => {
                if c.covariates == 0 || !(c.shape > 0.0 && c.scale > 0.0) {
                    return Err(Error::Config("weibull config invalid".into()));
                }
                if self.n <= c.covariates as u64 + 2 {
                    return Err(Error::Config(
                        "weibull scenario needs n > covariates + 2".into(),
                    ));
                }
                &[Method::Wald, Method::Rstar]
            }
        };
        for m in &self.methods {
            if !supported.contains(m) {
                return Err(Error::Config(format!(
                    "method {} is not available for this scenario",
                    m.name()
                )));
            }
        }
        Ok(())
    }
}

/// One method's p-values in replication order; `None` marks an excluded
/// replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSeries {
    pub method: Method,
    pub pvalues: Vec<Option<f64>>,
}

impl MethodSeries {
    pub fn successes(&self) -> Vec<f64> {
        self.pvalues.iter().filter_map(|p| *p).collect()
    }
    pub fn exclusions(&self) -> usize {
        self.pvalues.iter().filter(|p| p.is_none()).count()
    }
}

/// Histogram on [0, 1] with equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: usize,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn of(pvalues: &[f64], bins: usize) -> Histogram {
        let mut counts = vec![0u64; bins];
        for &p in pvalues {
            let idx = ((p * bins as f64) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Histogram { bins, counts }
    }

    /// Density estimate of bin i (uniform density = 1).
    pub fn density(&self, i: usize, total: u64) -> f64 {
        self.counts[i] as f64 * self.bins as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub series: Vec<MethodSeries>,
    /// Seconds; metadata only, excluded from determinism comparisons.
    pub wall_clock_s: f64,
}

impl ExperimentResult {
    pub fn series_for(&self, method: Method) -> Option<&MethodSeries> {
        self.series.iter().find(|s| s.method == method)
    }
}

/// Right-continuous empirical CDF evaluated on a grid.
pub fn empirical_cdf(pvalues: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if pvalues.is_empty() {
        return Err(Error::Domain("empirical_cdf: empty sample".into()));
    }
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(grid
        .iter()
        .map(|&g| {
            let idx = sorted.partition_point(|&p| p <= g);
            idx as f64 / n
        })
        .collect())
}

/// Max absolute difference of two curves on a shared grid.
pub fn ks_distance(empirical: &[f64], theoretical: &[f64]) -> Result<f64> {
    if empirical.len() != theoretical.len() {
        return Err(Error::GridMismatch(format!(
            "curve lengths differ: {} vs {}",
            empirical.len(),
            theoretical.len()
        )));
    }
    Ok(empirical
        .iter()
        .zip(theoretical)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// The four qualitative density shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Shape1,
    Shape2,
    Shape3,
    Shape4,
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Shape::Shape1 => "Shape1",
            Shape::Shape2 => "Shape2",
            Shape::Shape3 => "Shape3",
            Shape::Shape4 => "Shape4",
        };
        write!(f, "{s}")
    }
}

/// Shape decision plus the two densities it was based on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeLabel {
    pub shape: Shape,
    pub low_density: f64,
    pub high_density: f64,
}

const SHAPE_BINS: usize = 20;

/// Classify the p-value density shape from a 20-bin histogram: uniform,
/// decreasing, interior-mode or increasing, decided on 2-standard-error
/// significance of the boundary bins against density 1.
pub fn classify_shape(pvalues: &[f64]) -> Result<ShapeLabel> {
    if pvalues.len() < 1000 {
        return Err(Error::Domain(format!(
            "classify_shape: need at least 1000 p-values, got {}",
            pvalues.len()
        )));
    }
    let hist = Histogram::of(pvalues, SHAPE_BINS);
    Ok(classify_from_histogram(&hist, pvalues.len() as u64))
}

/// Same decision rule from a precomputed 20-bin histogram.
pub fn classify_from_histogram(hist: &Histogram, total: u64) -> ShapeLabel {
    assert_eq!(hist.bins, SHAPE_BINS, "shape classifier uses 20 bins");
    let dens: Vec<f64> = (0..SHAPE_BINS).map(|i| hist.density(i, total)).collect();
    let se: Vec<f64> = (0..SHAPE_BINS)
        .map(|i| {
            let p = (hist.counts[i] as f64 / total as f64).clamp(1e-12, 1.0);
            SHAPE_BINS as f64 * (p * (1.0 - p) / total as f64).sqrt()
        })
        .collect();
    let low = dens[0];
    let high = dens[SHAPE_BINS - 1];
    let sig_above = |i: usize| dens[i] - 1.0 > 2.0 * se[i];
    let sig_below = |i: usize| 1.0 - dens[i] > 2.0 * se[i];

    // Shape3 first: an interior mode beating both ends by 2 se
    let (imax, _) = dens[1..SHAPE_BINS - 1]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i + 1, *v))
        .unwrap();
    let beats =
        |i: usize, j: usize| dens[i] - dens[j] > 2.0 * (se[i].powi(2) + se[j].powi(2)).sqrt();
    let shape = if beats(imax, 0) && beats(imax, SHAPE_BINS - 1) {
        Shape::Shape3
    } else if sig_below(0) && sig_above(SHAPE_BINS - 1) {
        Shape::Shape4
    } else if sig_above(0) && !sig_above(SHAPE_BINS - 1) {
        Shape::Shape2
    } else {
        Shape::Shape1
    };
    ShapeLabel {
        shape,
        low_density: low,
        high_density: high,
    }
}

/// Rejection rate at level alpha with its binomial standard error.
pub fn type1_error(pvalues: &[f64], alpha: f64) -> (f64, f64) {
    let n = pvalues.len() as f64;
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let hits = pvalues.iter().filter(|&&p| p <= alpha).count() as f64;
    let rate = hits / n;
    (rate, (rate * (1.0 - rate) / n).sqrt())
}

fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep.wrapping_add(1));
    rng
}

fn shared_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Run a configured experiment. Deterministic in (config, seed) regardless
/// of the worker count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let start = std::time::Instant::now();
    let scenario = ScenarioRunner::prepare(config)?;
    let reps: Vec<u64> = (0..config.reps).collect();
    let run_all = || -> Vec<Vec<Option<f64>>> {
        reps.par_iter()
            .map(|&rep| scenario.run_rep(config, rep_rng(config.seed, rep)))
            .collect()
    };
    let per_rep: Vec<Vec<Option<f64>>> = if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run_all)
    } else {
        run_all()
    };
    let mut series: Vec<MethodSeries> = config
        .methods
        .iter()
        .map(|&method| MethodSeries {
            method,
            pvalues: Vec::with_capacity(config.reps as usize),
        })
        .collect();
    for rep in per_rep {
        for (k, p) in rep.into_iter().enumerate() {
            series[k].pvalues.push(p);
        }
    }
    Ok(ExperimentResult {
        config: config.clone(),
        series,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}

/// Theoretical p-value CDF a method's empirical distribution should track,
/// where one exists: the continuous expansion for the gamma mean test, the
/// lattice expansion for the linkage score test, and the correct-variance
/// continuous expansion for the linkage Wald test.
pub fn theory_curve(config: &ExperimentConfig, method: Method, grid: &[f64]) -> Option<Vec<f64>> {
    let cal = theory_calibration(config, method)?;
    grid.iter()
        .map(|&t| pvalue_cdf(&cal, t, config.sidedness).ok())
        .collect()
}

fn theory_calibration(config: &ExperimentConfig, method: Method) -> Option<TestStatCalibration> {
    match (&config.scenario, method) {
        (Scenario::GammaClt(c), Method::Normal) => {
            let fam = FamilySpec::GammaKnownShape {
                shape: c.shape,
                rate: c.rate_true,
            };
            let a_n = c.shape / c.rate_null;
            let b_n = c.shape.sqrt() / c.rate_null;
            calibrate(&fam, config.n, a_n, b_n).ok()
        }
        (Scenario::Linkage(c), Method::Score) => {
            let fam = FamilySpec::MultinomialShare { probs: c.theta };
            calibrate(&fam, config.n, 1.0, 0.5f64.sqrt()).ok()
        }
        (Scenario::Linkage(c), Method::Wald) => {
            // plug-in variance recalibrates the statistic; the matching
            // reference is the correct-variance continuous expansion
            let fam = FamilySpec::MultinomialShare { probs: c.theta };
            let sigma = fam.variance().ok()?.sqrt();
            let mut cal = calibrate(&fam, config.n, 1.0, sigma).ok()?;
            cal.lattice = None;
            Some(cal)
        }
        _ => None,
    }
}

/// Pre-drawn state shared by every replication.
enum ScenarioRunner {
    Gamma {
        cfg: GammaCltConfig,
    },
    Linkage {
        cfg: LinkageConfig,
    },
    Gwas {
        cfg: LogisticGwasConfig,
        x: DMatrix<f64>,
        pi0: Vec<f64>,
        /// fixed labels for the genotype-resampling mode
        labels: Option<Vec<f64>>,
    },
    Weibull {
        cfg: WeibullConfig,
    },
}

impl ScenarioRunner {
    fn prepare(config: &ExperimentConfig) -> Result<Self> {
        match &config.scenario {
            Scenario::GammaClt(c) => Ok(ScenarioRunner::Gamma { cfg: c.clone() }),
            Scenario::Linkage(c) => Ok(ScenarioRunner::Linkage { cfg: c.clone() }),
            Scenario::LogisticGwas(c) => {
                let n = config.n as usize;
                let mut rng = shared_rng(config.seed);
                let geno = Binomial::new(2, c.maf)
                    .map_err(|e| Error::Config(format!("genotype distribution: {e}")))?;
                let coin = Binomial::new(1, 0.5).unwrap();
                let norm = Normal::new(20.0, 1.0).unwrap();
                let mut x = DMatrix::zeros(n, 4);
                for i in 0..n {
                    x[(i, 0)] = 1.0;
                    x[(i, 1)] = geno.sample(&mut rng) as f64;
                    x[(i, 2)] = coin.sample(&mut rng) as f64;
                    x[(i, 3)] = norm.sample(&mut rng);
                }
                let pi0: Vec<f64> = (0..n)
                    .map(|i| {
                        let eta = c.beta0
                            + c.beta_s * x[(i, 1)]
                            + c.beta1 * x[(i, 2)]
                            + c.beta2 * x[(i, 3)];
                        1.0 / (1.0 + (-eta).exp())
                    })
                    .collect();
                let labels = match c.resample {
                    ResampleMode::Labels => None,
                    ResampleMode::Genotypes => Some(
                        pi0.iter()
                            .map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
                            .collect(),
                    ),
                };
                Ok(ScenarioRunner::Gwas {
                    cfg: c.clone(),
                    x,
                    pi0,
                    labels,
                })
            }
            Scenario::WeibullManyNuisance(c) => Ok(ScenarioRunner::Weibull { cfg: c.clone() }),
        }
    }

    fn run_rep(&self, config: &ExperimentConfig, mut rng: ChaCha8Rng) -> Vec<Option<f64>> {
        match self {
            ScenarioRunner::Gamma { cfg } => gamma_rep(cfg, config, &mut rng),
            ScenarioRunner::Linkage { cfg } => linkage_rep(cfg, config, &mut rng),
            ScenarioRunner::Gwas {
                cfg,
                x,
                pi0,
                labels,
            } => gwas_rep(cfg, config, x, pi0, labels.as_deref(), &mut rng),
            ScenarioRunner::Weibull { cfg } => weibull_rep(cfg, config, &mut rng),
        }
    }
}

fn gamma_rep(
    cfg: &GammaCltConfig,
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Option<f64>> {
    let n = config.n as usize;
    let dist = Gamma::new(cfg.shape, 1.0 / cfg.rate_true).expect("validated");
    let mut sum = 0.0;
    let mut sum_ln = 0.0;
    let needs_rstar = config.methods.contains(&Method::Rstar);
    for _ in 0..n {
        let x: f64 = dist.sample(rng).max(f64::MIN_POSITIVE);
        sum += x;
        if needs_rstar {
            sum_ln += x.ln();
        }
    }
    let xbar = sum / n as f64;
    let null_mean = cfg.shape / cfg.rate_null;
    let null_sd = cfg.shape.sqrt() / cfg.rate_null;
    let fam = FamilySpec::GammaKnownShape {
        shape: cfg.shape,
        rate: cfg.rate_null,
    };
    config
        .methods
        .iter()
        .map(|&method| match method {
            Method::Normal => {
                let s = (n as f64).sqrt() * (xbar - null_mean) / null_sd;
                Some(models::normal_p(s, config.sidedness))
            }
            Method::Saddlepoint => corrected_pvalue(
                &fam,
                config.n,
                xbar,
                config.sidedness,
                TailForm::LugannaniRice,
            )
            .ok(),
            Method::Rstar => GammaKnownShape::from_sufficient(cfg.shape, n, sum, sum_ln)
                .and_then(|m| crate::rstar::rstar_pvalue(&m, 0, cfg.rate_null, config.sidedness))
                .ok()
                .map(|r| r.p_value),
            _ => None,
        })
        .collect()
}

fn linkage_rep(
    cfg: &LinkageConfig,
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Option<f64>> {
    let n = config.n;
    // multinomial draw by binomial composition
    let n0 = Binomial::new(n, cfg.theta[0])
        .map(|d| d.sample(rng))
        .unwrap_or(0);
    let rest = n - n0;
    let p1 = if cfg.theta[0] < 1.0 {
        cfg.theta[1] / (1.0 - cfg.theta[0])
    } else {
        0.0
    };
    let n1 = if rest > 0 {
        Binomial::new(rest, p1.clamp(0.0, 1.0))
            .map(|d| d.sample(rng))
            .unwrap_or(0)
    } else {
        0
    };
    let counts = LinkageCounts {
        n0,
        n1,
        n2: n - n0 - n1,
    };
    let tests = linkage_tests(counts);
    config
        .methods
        .iter()
        .map(|&method| match (&tests, method) {
            (Ok((score, _)), Method::Score) => Some(score.p_value),
            (Ok((_, wald)), Method::Wald) => wald.as_ref().ok().map(|t| t.p_value),
            _ => None,
        })
        .collect()
}

fn gwas_rep(
    cfg: &LogisticGwasConfig,
    config: &ExperimentConfig,
    x0: &DMatrix<f64>,
    pi0: &[f64],
    labels: Option<&[f64]>,
    rng: &mut ChaCha8Rng,
) -> Vec<Option<f64>> {
    let n = config.n as usize;
    let (x, y) = match cfg.resample {
        ResampleMode::Labels => {
            let y: Vec<f64> = pi0
                .iter()
                .map(|&p| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
                .collect();
            (x0.clone(), y)
        }
        ResampleMode::Genotypes => {
            let mut x = x0.clone();
            let geno = Binomial::new(2, cfg.maf).expect("validated");
            for i in 0..n {
                x[(i, 1)] = geno.sample(rng) as f64;
            }
            (x, labels.expect("fixed labels prepared").to_vec())
        }
    };
    let j = 1usize; // genotype coefficient
    let model = Dataset::new(y, x).and_then(Logistic::new);
    let model = match model {
        Ok(m) => m,
        Err(_) => return vec![None; config.methods.len()],
    };
    let full = fit_mle(&model);
    config
        .methods
        .iter()
        .map(|&method| match method {
            Method::Wald => full
                .as_ref()
                .ok()
                .and_then(|f| wald_from_fit(f, j, 0.0).ok())
                .map(|t| t.p_value),
            Method::Score => models::logistic::score_test_glm(&model, j, 0.0)
                .ok()
                .map(|t| t.p_value),
            Method::Rstar => full.as_ref().ok().and_then(|f| {
                model
                    .fit_pinned(j, 0.0)
                    .and_then(|con| {
                        rstar_pvalue_with_fits(&model, f, con, j, 0.0, config.sidedness)
                    })
                    .ok()
                    .map(|r| r.p_value)
            }),
            _ => None,
        })
        .collect()
}

fn weibull_rep(
    cfg: &WeibullConfig,
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Option<f64>> {
    let n = config.n as usize;
    let k = cfg.covariates;
    let norm = Normal::new(0.0, 1.0).unwrap();
    let mut x = DMatrix::zeros(n, k + 1);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        for jj in 1..=k {
            x[(i, jj)] = norm.sample(rng);
        }
    }
    let wdist = Weibull::new(cfg.scale, cfg.shape).expect("validated");
    let y: Vec<f64> = (0..n).map(|_| wdist.sample(rng)).collect();
    let j = 1usize;
    let model = Dataset::new(y, x).and_then(WeibullRegression::new);
    let model = match model {
        Ok(m) => m,
        Err(_) => return vec![None; config.methods.len()],
    };
    let full = fit_mle(&model);
    config
        .methods
        .iter()
        .map(|&method| match method {
            Method::Wald => full
                .as_ref()
                .ok()
                .and_then(|f| wald_from_fit(f, j, 0.0).ok())
                .map(|t| t.p_value),
            Method::Rstar => full.as_ref().ok().and_then(|f| {
                model
                    .fit_pinned(j, 0.0)
                    .and_then(|con| {
                        rstar_pvalue_with_fits(&model, f, con, j, 0.0, config.sidedness)
                    })
                    .ok()
                    .map(|r| r.p_value)
            }),
            _ => None,
        })
        .collect()
}

/// The default grid summaries are reported on: 0.005, 0.010, ..., 0.995.
pub fn standard_grid() -> Vec<f64> {
    (1..200).map(|i| i as f64 * 0.005).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tiny_gamma_config(reps: u64, workers: usize) -> ExperimentConfig {
        ExperimentConfig {
            scenario: Scenario::GammaClt(GammaCltConfig {
                shape: 0.01,
                rate_true: 0.01,
                rate_null: 0.01,
            }),
            n: 100,
            reps,
            seed: 77,
            methods: vec![Method::Normal, Method::Saddlepoint],
            sidedness: Sidedness::TwoSided,
            alphas: vec![0.05],
            workers,
        }
    }

    #[test]
    fn single_replication_yields_one_p_per_method() {
        let cfg = tiny_gamma_config(1, 1);
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.series.len(), 2);
        for s in &res.series {
            assert_eq!(s.pvalues.len(), 1);
            let p = s.pvalues[0].unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let a = run_experiment(&tiny_gamma_config(64, 1)).unwrap();
        let b = run_experiment(&tiny_gamma_config(64, 4)).unwrap();
        let c = run_experiment(&tiny_gamma_config(64, 3)).unwrap();
        assert_eq!(a.series, b.series);
        assert_eq!(a.series, c.series);
    }

    #[test]
    fn exclusion_accounting_is_total() {
        let cfg = ExperimentConfig {
            scenario: Scenario::LogisticGwas(LogisticGwasConfig {
                maf: 0.01,
                beta0: -5.0, // very few cases: occasional separation
                beta_s: 0.0,
                beta1: 0.0,
                beta2: 0.0,
                resample: ResampleMode::Labels,
            }),
            n: 200,
            reps: 40,
            seed: 3,
            methods: vec![Method::Wald],
            sidedness: Sidedness::TwoSided,
            alphas: vec![],
            workers: 2,
        };
        let res = run_experiment(&cfg).unwrap();
        let s = res.series_for(Method::Wald).unwrap();
        assert_eq!(s.pvalues.len(), 40);
        assert_eq!(s.successes().len() + s.exclusions(), 40);
        assert!(s.exclusions() > 0, "expected some excluded replications");
    }

    #[test]
    fn unsupported_method_rejected_at_validation() {
        let mut cfg = tiny_gamma_config(1, 1);
        cfg.methods = vec![Method::Wald];
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn ecdf_reference_cases() {
        assert_eq!(
            empirical_cdf(&[0.5], &[0.25, 0.75]).unwrap(),
            vec![0.0, 1.0]
        );
        // rank/n at the sample points themselves (right-continuous)
        let xs = [0.1, 0.2, 0.3, 0.4];
        let v = empirical_cdf(&xs, &xs).unwrap();
        assert_eq!(v, vec![0.25, 0.5, 0.75, 1.0]);
        assert!(empirical_cdf(&[], &[0.5]).is_err());
    }

    #[test]
    fn ecdf_dkw_bound_on_uniforms() {
        use rand::Rng;
        let mut rng = rep_rng(123, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| rng.random::<f64>()).collect();
        let grid = standard_grid();
        let ecdf = empirical_cdf(&xs, &grid).unwrap();
        let sup = ecdf
            .iter()
            .zip(&grid)
            .map(|(e, g)| (e - g).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 0.002, "sup deviation {sup} above the DKW budget");
    }

    #[test]
    fn ks_distance_basics() {
        let a = vec![0.1, 0.5, 0.9];
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        let b = vec![0.11, 0.51, 0.91];
        assert_relative_eq!(ks_distance(&a, &b).unwrap(), 0.01, epsilon = 1e-12);
        assert!(ks_distance(&a, &[0.1]).is_err());
    }

    #[test]
    fn shape_classifier_reference_cases() {
        // exact uniform grid
        let uniform: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 2000.0).collect();
        assert_eq!(classify_shape(&uniform).unwrap().shape, Shape::Shape1);
        // decreasing density: p = u^2 has density spiking at 0
        let decreasing: Vec<f64> = uniform.iter().map(|u| u * u).collect();
        assert_eq!(classify_shape(&decreasing).unwrap().shape, Shape::Shape2);
        // increasing density: p = sqrt(u)
        let increasing: Vec<f64> = uniform.iter().map(|u| u.sqrt()).collect();
        assert_eq!(classify_shape(&increasing).unwrap().shape, Shape::Shape4);
        // interior mode around 0.5
        let humped: Vec<f64> = uniform
            .iter()
            .map(|u| 0.5 + 0.18 * (2.0 * (u - 0.5) + (2.0 * (u - 0.5)).powi(3)))
            .collect();
        assert_eq!(classify_shape(&humped).unwrap().shape, Shape::Shape3);
        assert!(classify_shape(&uniform[..999]).is_err());
    }

    #[test]
    fn type1_error_reference_cases() {
        let all_ones = vec![1.0; 100];
        assert_eq!(type1_error(&all_ones, 0.05), (0.0, 0.0));
        let uniform: Vec<f64> = (0..10_000).map(|i| (i as f64 + 0.5) / 10_000.0).collect();
        let (rate, se) = type1_error(&uniform, 0.05);
        assert!((rate - 0.05).abs() <= 3.0 * se.max(1e-4));
    }

    #[test]
    fn gwas_genotype_resampling_mode() {
        // fixed labels, genotype redrawn per replication: deterministic and
        // per-replication p-values still vary
        let cfg = ExperimentConfig {
            scenario: Scenario::LogisticGwas(LogisticGwasConfig {
                maf: 0.25,
                beta0: -1.0,
                beta_s: 0.0,
                beta1: 0.0,
                beta2: 0.0,
                resample: ResampleMode::Genotypes,
            }),
            n: 300,
            reps: 3,
            seed: 11,
            methods: vec![Method::Wald],
            sidedness: Sidedness::TwoSided,
            alphas: vec![],
            workers: 2,
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.series, b.series);
        let ps = a.series_for(Method::Wald).unwrap();
        assert_ne!(ps.pvalues[0], ps.pvalues[1]);
        assert_ne!(ps.pvalues[1], ps.pvalues[2]);
    }

    #[test]
    fn gwas_covariates_fixed_labels_redrawn() {
        // same seed, two reps: normal p-values differ (labels vary) but the
        // run is reproducible end to end
        let cfg = ExperimentConfig {
            scenario: Scenario::LogisticGwas(LogisticGwasConfig {
                maf: 0.25,
                beta0: -1.0,
                beta_s: 0.0,
                beta1: 0.0,
                beta2: 0.0,
                resample: ResampleMode::Labels,
            }),
            n: 300,
            reps: 2,
            seed: 11,
            methods: vec![Method::Score],
            sidedness: Sidedness::TwoSided,
            alphas: vec![],
            workers: 1,
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.series, b.series);
        let s = a.series_for(Method::Score).unwrap();
        assert_ne!(s.pvalues[0], s.pvalues[1]);
    }
}
