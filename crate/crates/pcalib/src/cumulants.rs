//! Exact cumulants, calibration of standardized mean statistics and lattice
//! geometry for the distribution families used across the crate.
//!
//! Everything is driven by the per-observation cumulant generating function
//! K(s): closed form for the gamma and normal families, log of a tilted
//! moment sum for finite-support families. Derivatives are analytic — no
//! numerical differentiation anywhere, which matters for the extremely
//! skewed settings (gamma with shape 0.01) where fourth-order finite
//! differences would be noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution family of a single observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Gamma(shape, rate) with the shape treated as known.
    GammaKnownShape {
        shape: f64,
        rate: f64,
    },
    /// Allele-share count on support {0, 1, 2} with cell probabilities
    /// (p0, p1, p2).
    MultinomialShare {
        probs: [f64; 3],
    },
    Bernoulli {
        p: f64,
    },
    /// Binomial(trials, p) on support {0, ..., trials}.
    Binomial {
        trials: u32,
        p: f64,
    },
    /// Normal(mean, sd); continuous, all higher cumulants zero.
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Arbitrary finite support with matching probabilities.
    CustomTabulated {
        support: Vec<f64>,
        probs: Vec<f64>,
    },
}

const PROB_SUM_TOL: f64 = 1e-12;
/// Tolerance for detecting a common lattice span among support gaps.
const LATTICE_TOL: f64 = 1e-9;

impl FamilySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            FamilySpec::GammaKnownShape { shape, rate } => {
                if !(*shape > 0.0 && shape.is_finite() && *rate > 0.0 && rate.is_finite()) {
                    return Err(Error::Domain(format!(
                        "gamma parameters must be strictly positive, got shape={shape}, rate={rate}"
                    )));
                }
            }
            FamilySpec::MultinomialShare { probs } => check_probs(probs)?,
            FamilySpec::Bernoulli { p } => {
                if !(*p >= 0.0 && *p <= 1.0) {
                    return Err(Error::Domain(format!("bernoulli p={p} outside [0,1]")));
                }
            }
            FamilySpec::Binomial { trials, p } => {
                if *trials == 0 {
                    return Err(Error::Domain("binomial needs at least one trial".into()));
                }
                if !(*p >= 0.0 && *p <= 1.0) {
                    return Err(Error::Domain(format!("binomial p={p} outside [0,1]")));
                }
            }
            FamilySpec::Normal { mean, sd } => {
                if !(mean.is_finite() && *sd > 0.0 && sd.is_finite()) {
                    return Err(Error::Domain(format!(
                        "normal parameters must be finite with sd>0, got mean={mean}, sd={sd}"
                    )));
                }
            }
            FamilySpec::CustomTabulated { support, probs } => {
                if support.len() != probs.len() || support.is_empty() {
                    return Err(Error::Domain(
                        "custom family needs equal-length non-empty support and probs".into(),
                    ));
                }
                if support.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Domain("custom support must be finite".into()));
                }
                check_probs(probs)?;
            }
        }
        Ok(())
    }

    /// True for families supported on finitely many points.
    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            FamilySpec::MultinomialShare { .. }
                | FamilySpec::Bernoulli { .. }
                | FamilySpec::Binomial { .. }
                | FamilySpec::CustomTabulated { .. }
        )
    }

    /// Support points with strictly positive probability, for discrete
    /// families.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        let pairs: Vec<(f64, f64)> = match self {
            FamilySpec::MultinomialShare { probs } => {
                (0..3).map(|k| (k as f64, probs[k])).collect()
            }
            FamilySpec::Bernoulli { p } => vec![(0.0, 1.0 - p), (1.0, *p)],
            FamilySpec::Binomial { trials, p } => {
                let m = *trials as usize;
                let mut out = Vec::with_capacity(m + 1);
                for k in 0..=m {
                    out.push((k as f64, binomial_pmf(m, k, *p)));
                }
                out
            }
            FamilySpec::CustomTabulated { support, probs } => {
                support.iter().copied().zip(probs.iter().copied()).collect()
            }
            _ => return None,
        };
        Some(pairs.into_iter().filter(|&(_, p)| p > 0.0).collect())
    }

    /// Convergence strip of the CGF, as (lower, upper) bounds on s.
    pub fn strip(&self) -> (f64, f64) {
        match self {
            FamilySpec::GammaKnownShape { rate, .. } => (f64::NEG_INFINITY, *rate),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn mean(&self) -> Result<f64> {
        cgf(self, 0.0, 1)
    }

    pub fn variance(&self) -> Result<f64> {
        cgf(self, 0.0, 2)
    }
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::Domain(
            "probabilities must be finite and >= 0".into(),
        ));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::Domain(format!(
            "probabilities must sum to 1 within {PROB_SUM_TOL}, got {s}"
        )));
    }
    Ok(())
}

fn binomial_pmf(m: usize, k: usize, p: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c *= (m - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((m - k) as i32)
}

/// K^(order)(s): the CGF of one observation and its first four derivatives.
///
/// `order = 0` gives K itself; orders 1..=4 are exact cumulant derivatives.
pub fn cgf(family: &FamilySpec, s: f64, order: u32) -> Result<f64> {
    family.validate()?;
    if order > 4 {
        return Err(Error::Domain(format!("cgf: order {order} outside 0..=4")));
    }
    if !s.is_finite() {
        return Err(Error::Domain(format!("cgf: non-finite s = {s}")));
    }
    let (lo, hi) = family.strip();
    if s <= lo || s >= hi {
        return Err(Error::Domain(format!(
            "cgf: s = {s} outside the convergence strip ({lo}, {hi})"
        )));
    }
    match family {
        FamilySpec::GammaKnownShape { shape, rate } => {
            let a = *shape;
            let d = rate - s;
            Ok(match order {
                // ln_1p keeps full absolute accuracy for s near 0, which the
                // saddlepoint exponent r^2 = 2n(s m - K) depends on
                0 => -a * (-s / rate).ln_1p(),
                1 => a / d,
                2 => a / (d * d),
                3 => 2.0 * a / (d * d * d),
                _ => 6.0 * a / (d * d * d * d),
            })
        }
        FamilySpec::Normal { mean, sd } => Ok(match order {
            0 => mean * s + 0.5 * sd * sd * s * s,
            1 => mean + sd * sd * s,
            2 => sd * sd,
            _ => 0.0,
        }),
        _ => {
            let atoms = self_atoms(family)?;
            Ok(finite_cgf(&atoms, s, order))
        }
    }
}

fn self_atoms(family: &FamilySpec) -> Result<Vec<(f64, f64)>> {
    family
        .atoms()
        .ok_or_else(|| Error::Domain("family has no finite support".into()))
}

/// CGF derivatives of a finite-support distribution through exponentially
/// tilted moments. The tilt is normalized by the largest exponent so large
/// |s| cannot overflow.
fn finite_cgf(atoms: &[(f64, f64)], s: f64, order: u32) -> f64 {
    let emax = atoms
        .iter()
        .map(|&(x, _)| s * x)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut m0 = 0.0;
    let mut raw = [0.0f64; 4];
    for &(x, p) in atoms {
        let w = p * (s * x - emax).exp();
        m0 += w;
        let mut xp = 1.0;
        for r in raw.iter_mut() {
            xp *= x;
            *r += w * xp;
        }
    }
    if order == 0 {
        return emax + (m0).ln();
    }
    // raw moments of the tilted law
    let m1 = raw[0] / m0;
    let m2 = raw[1] / m0;
    let m3 = raw[2] / m0;
    let m4 = raw[3] / m0;
    match order {
        1 => m1,
        2 => m2 - m1 * m1,
        3 => m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3),
        _ => m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * m1.powi(4),
    }
}

/// Mean, standard deviation and standardized third/fourth cumulants of
/// S_n = √n (X̄_n − a_n)/b_n, plus the sample size they refer to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantSet {
    /// E[S_n].
    pub mu_n: f64,
    /// Standard deviation of S_n; strictly positive.
    pub v_n: f64,
    /// Third standardized cumulant of (S_n − μ_n)/v_n.
    pub rho3: f64,
    /// Fourth standardized cumulant of (S_n − μ_n)/v_n.
    pub rho4: f64,
    pub n: u64,
}

impl CumulantSet {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_n > 0.0 && self.v_n.is_finite()) {
            return Err(Error::Degenerate(format!("v_n = {} must be > 0", self.v_n)));
        }
        // valid cumulant pair for any distribution
        if self.rho4 < self.rho3 * self.rho3 - 2.0 - 1e-9 {
            return Err(Error::Domain(format!(
                "invalid cumulant pair: rho4 = {} < rho3^2 - 2 = {}",
                self.rho4,
                self.rho3 * self.rho3 - 2.0
            )));
        }
        Ok(())
    }
}

/// Lattice of X_i − E[X_i]: support points are offset + j·span, with span
/// maximal. `b_n` records the standardization scale the statistic used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub offset: f64,
    pub span: f64,
    pub b_n: f64,
}

/// Everything the p-value CDF formulas need to know about S_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestStatCalibration {
    pub cumulants: CumulantSet,
    pub lattice: Option<LatticeSpec>,
    pub a_n: f64,
    pub b_n: f64,
}

impl TestStatCalibration {
    /// Lattice spacing of the standardized statistic (S_n − μ_n)/v_n.
    /// The product b_n·v_n is the per-observation standard deviation, so this
    /// is span/(√n·σ) regardless of how the statistic was scaled.
    pub fn standardized_span(&self) -> Option<f64> {
        let lat = self.lattice.as_ref()?;
        let sigma = self.b_n * self.cumulants.v_n;
        Some(lat.span / ((self.cumulants.n as f64).sqrt() * sigma))
    }

    /// Location of the standardized lattice: support sits at
    /// offset_std + j · standardized_span.
    pub fn standardized_offset(&self) -> Option<f64> {
        let lat = self.lattice.as_ref()?;
        let sigma = self.b_n * self.cumulants.v_n;
        Some((self.cumulants.n as f64).sqrt() * lat.offset / sigma)
    }
}

/// Calibrate S_n = √n (X̄_n − a_n)/b_n for a family: exact moments from the
/// CGF, standardized cumulants with their 1/√n and 1/n scaling, and the
/// lattice geometry for discrete families.
pub fn calibrate(family: &FamilySpec, n: u64, a_n: f64, b_n: f64) -> Result<TestStatCalibration> {
    if n == 0 {
        return Err(Error::Domain("calibrate: n must be >= 1".into()));
    }
    if !(b_n > 0.0 && b_n.is_finite()) {
        return Err(Error::Domain(format!("calibrate: b_n = {b_n} must be > 0")));
    }
    if !a_n.is_finite() {
        return Err(Error::Domain(format!(
            "calibrate: a_n = {a_n} must be finite"
        )));
    }
    let k1 = cgf(family, 0.0, 1)?;
    let k2 = cgf(family, 0.0, 2)?;
    let k3 = cgf(family, 0.0, 3)?;
    let k4 = cgf(family, 0.0, 4)?;
    if !(k2 > 0.0) {
        return Err(Error::Degenerate(format!(
            "family has zero variance (kappa2 = {k2})"
        )));
    }
    let sqrt_n = (n as f64).sqrt();
    let cumulants = CumulantSet {
        mu_n: sqrt_n * (k1 - a_n) / b_n,
        v_n: k2.sqrt() / b_n,
        rho3: k3 / (k2.powf(1.5) * sqrt_n),
        rho4: k4 / (k2 * k2 * n as f64),
        n,
    };
    cumulants.validate()?;
    let lattice = if family.is_discrete() {
        Some(lattice_of(family, k1)?)
    } else {
        None
    }
    .map(|(offset, span)| LatticeSpec { offset, span, b_n });
    Ok(TestStatCalibration {
        cumulants,
        lattice,
        a_n,
        b_n,
    })
}

/// Maximal span d and offset c with X − E[X] supported on {c + j·d}.
fn lattice_of(family: &FamilySpec, mean: f64) -> Result<(f64, f64)> {
    let atoms = self_atoms(family)?;
    if atoms.len() < 2 {
        return Err(Error::Degenerate(
            "lattice undefined: support has a single point".into(),
        ));
    }
    let x0 = atoms[0].0;
    let scale = atoms[1..]
        .iter()
        .map(|&(x, _)| (x - x0).abs())
        .fold(0.0, f64::max);
    let tol = LATTICE_TOL * scale.max(1.0);
    let mut span = 0.0f64;
    for &(x, _) in &atoms[1..] {
        span = float_gcd(span, x - x0, tol);
    }
    // incommensurable gaps drive the Euclid remainders toward zero; a span
    // below a sensible granularity means there is no lattice
    if span <= 1e-6 * scale {
        return Err(Error::Degenerate("support gaps have no common span".into()));
    }
    // every gap must be an integer multiple of the span
    for &(x, _) in &atoms[1..] {
        let k = ((x - x0) / span).round();
        if ((x - x0) - k * span).abs() > tol {
            return Err(Error::Degenerate(format!(
                "support point {x} is not on a lattice with span {span}"
            )));
        }
    }
    // offset of X - mean, reduced to [0, span)
    let c = (x0 - mean).rem_euclid(span);
    Ok((c, span))
}

fn float_gcd(a: f64, b: f64, tol: f64) -> f64 {
    let mut a = a.abs();
    let mut b = b.abs();
    while b > tol {
        let r = a % b;
        a = b;
        // guard against r sitting a rounding error below b
        b = if (b - r).abs() < tol { 0.0 } else { r };
    }
    a
}

/// Unbiased k-statistics of a sample, mapped to the `CumulantSet` of the
/// standardized mean of those n observations (μ_n = 0, v_n = 1 by
/// construction since the sample itself centers and scales the statistic).
pub fn empirical_cumulants(samples: &[f64]) -> Result<CumulantSet> {
    let n = samples.len();
    if n < 8 {
        return Err(Error::Domain(format!(
            "empirical_cumulants: need at least 8 samples, got {n}"
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain(
            "empirical_cumulants: non-finite sample".into(),
        ));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 <= 0.0 {
        return Err(Error::Degenerate(
            "empirical_cumulants: zero sample variance".into(),
        ));
    }
    // unbiased k-statistics
    let k2 = nf / (nf - 1.0) * m2;
    let k3 = nf * nf / ((nf - 1.0) * (nf - 2.0)) * m3;
    let k4 = nf * nf * ((nf + 1.0) * m4 - 3.0 * (nf - 1.0) * m2 * m2)
        / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
    let set = CumulantSet {
        mu_n: 0.0,
        v_n: 1.0,
        rho3: k3 / (k2.powf(1.5) * nf.sqrt()),
        rho4: k4 / (k2 * k2 * nf),
        n: n as u64,
    };
    set.validate()?;
    Ok(set)
}
