//! Theoretical CDF and PDF of one- and two-sided p-values for standardized
//! mean statistics, with skewness/kurtosis corrections and — for lattice
//! statistics — the sawtooth jump corrections.
//!
//! The continuous CDF used throughout is F(z) = Φ(z) + E2(z, ρ), the standard
//! second-order expansion. For lattice statistics the jump term is the
//! Euler–Maclaurin boundary correction of the support sum: a Q₁ sawtooth
//! modulated by the expansion density plus a second-order periodic-Bernoulli
//! term. Both pieces were pinned against exhaustive enumeration of the
//! allele-share family before freezing (see the oracle integration tests).

use serde::{Deserialize, Serialize};

use crate::cumulants::{LatticeSpec, TestStatCalibration};
use crate::error::{Error, Result};
use crate::specialfn::{self, hermite_raw, pdf_raw};

/// Convention: one-sided p = Φ(s) (tests H0: ψ ≥ ψ0), two-sided
/// p = 2(1 − Φ(|s|)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

/// Whether a curve came from the continuous or the lattice CDF formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuity {
    Continuous,
    Lattice,
}

/// A theoretical p-value distribution evaluated on a grid.
///
/// CDF values are stored exactly as the expansion produces them: second-order
/// expansions can leave [0, 1] in extreme tails, and those points are flagged
/// rather than clamped so comparisons against simulation stay honest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PValueCurve {
    pub grid: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Density values; `None` for lattice statistics (no density exists).
    pub pdf: Option<Vec<f64>>,
    pub out_of_range: Vec<bool>,
    pub sidedness: Sidedness,
    pub continuity: Continuity,
    pub calibration: TestStatCalibration,
}

/// Second-order continuous correction
/// E2(t, ρ) = −φ(t)·[ρ₃He₂(t)/6 + ρ₄He₃(t)/24 + ρ₃²He₅(t)/72].
pub fn e2(t: f64, rho3: f64, rho4: f64) -> Result<f64> {
    if !t.is_finite() || !rho3.is_finite() || !rho4.is_finite() {
        return Err(Error::Domain(format!(
            "e2: non-finite input (t={t}, rho3={rho3}, rho4={rho4})"
        )));
    }
    Ok(e2_raw(t, rho3, rho4))
}

#[inline]
pub(crate) fn e2_raw(t: f64, rho3: f64, rho4: f64) -> f64 {
    -pdf_raw(t)
        * (rho3 * hermite_raw(2, t) / 6.0
            + rho4 * hermite_raw(3, t) / 24.0
            + rho3 * rho3 * hermite_raw(5, t) / 72.0)
}

/// Derivative of E2 with respect to t, using (φ·He_j)' = −φ·He_{j+1}.
#[inline]
fn e2_deriv_raw(t: f64, rho3: f64, rho4: f64) -> f64 {
    pdf_raw(t)
        * (rho3 * hermite_raw(3, t) / 6.0
            + rho4 * hermite_raw(4, t) / 24.0
            + rho3 * rho3 * hermite_raw(6, t) / 72.0)
}

/// Lattice jump correction at standardized argument `z`.
///
/// With δ the standardized lattice spacing and v the phase of `z` on the
/// lattice, this is −δ·Q₁(v)·φ(z)(1 + ρ₃He₃(z)/6) − (δ²/2)·B₂({v})·z·φ(z):
/// the first- and second-order boundary terms of the Euler–Maclaurin sum
/// over support atoms. It vanishes as δ → 0.
pub fn c2(z: f64, rho3: f64, lattice: &LatticeSpec, n: u64, v_n: f64) -> Result<f64> {
    if !z.is_finite() || !rho3.is_finite() {
        return Err(Error::Domain(format!(
            "c2: non-finite input (z={z}, rho3={rho3})"
        )));
    }
    if !(lattice.span > 0.0) {
        return Err(Error::Domain(format!(
            "c2: lattice span must be > 0, got {}",
            lattice.span
        )));
    }
    if n == 0 || !(v_n > 0.0) {
        return Err(Error::Domain(format!(
            "c2: need n >= 1 and v_n > 0, got n={n}, v_n={v_n}"
        )));
    }
    let sigma = lattice.b_n * v_n;
    let sqrt_n = (n as f64).sqrt();
    let delta = lattice.span / (sqrt_n * sigma);
    let offset = sqrt_n * lattice.offset / sigma;
    Ok(c2_raw(z, rho3, delta, offset))
}

#[inline]
pub(crate) fn c2_raw(z: f64, rho3: f64, delta: f64, offset: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let v = (z - offset) / delta;
    let u = v - v.floor();
    let q1 = u - 0.5;
    let b2 = u * u - u + 1.0 / 6.0;
    let phi = pdf_raw(z);
    -delta * q1 * phi * (1.0 + rho3 * hermite_raw(3, z) / 6.0) - 0.5 * delta * delta * b2 * z * phi
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!(
            "p-value argument t must lie in (0,1), got {t}"
        )));
    }
    Ok(())
}

/// CDF of the p-value at t: P(p(S_n) < t) under the calibrated law of S_n.
pub fn pvalue_cdf(cal: &TestStatCalibration, t: f64, sided: Sidedness) -> Result<f64> {
    check_t(t)?;
    cal.cumulants.validate()?;
    let c = &cal.cumulants;
    let (delta, offset) = match (cal.standardized_span(), cal.standardized_offset()) {
        (Some(d), Some(o)) => (d, o),
        _ => (0.0, 0.0),
    };
    let f = |z: f64| {
        specialfn::cdf_raw(z) + e2_raw(z, c.rho3, c.rho4) + c2_raw(z, c.rho3, delta, offset)
    };
    match sided {
        Sidedness::OneSided => {
            let zt = specialfn::quantile_raw(t);
            Ok(f((zt - c.mu_n) / c.v_n))
        }
        Sidedness::TwoSided => {
            let zt = specialfn::quantile_raw(t / 2.0);
            let z_plus = (zt - c.mu_n) / c.v_n;
            let z_minus = (-zt - c.mu_n) / c.v_n;
            Ok(1.0 + f(z_plus) - f(z_minus))
        }
    }
}

/// Density of the p-value at t, by analytic differentiation of the
/// continuous CDF. Lattice calibrations have no density and are rejected.
pub fn pvalue_pdf(cal: &TestStatCalibration, t: f64, sided: Sidedness) -> Result<f64> {
    check_t(t)?;
    cal.cumulants.validate()?;
    if cal.lattice.is_some() {
        return Err(Error::Domain(
            "pvalue_pdf: lattice statistics have no p-value density".into(),
        ));
    }
    let c = &cal.cumulants;
    let fprime = |z: f64| pdf_raw(z) + e2_deriv_raw(z, c.rho3, c.rho4);
    match sided {
        Sidedness::OneSided => {
            let zt = specialfn::quantile_raw(t);
            let z = (zt - c.mu_n) / c.v_n;
            Ok(fprime(z) / (c.v_n * pdf_raw(zt)))
        }
        Sidedness::TwoSided => {
            let zt = specialfn::quantile_raw(t / 2.0);
            let z_plus = (zt - c.mu_n) / c.v_n;
            let z_minus = (-zt - c.mu_n) / c.v_n;
            Ok((fprime(z_plus) + fprime(z_minus)) / (2.0 * c.v_n * pdf_raw(zt)))
        }
    }
}

/// Evaluate CDF (and PDF where it exists) over a strictly increasing grid.
pub fn pvalue_curve(
    cal: &TestStatCalibration,
    grid: &[f64],
    sided: Sidedness,
) -> Result<PValueCurve> {
    if grid.is_empty() {
        return Err(Error::Domain("pvalue_curve: empty grid".into()));
    }
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Domain(format!(
                "pvalue_curve: grid must be strictly increasing (violated at index {})",
                i + 1
            )));
        }
    }
    let lattice = cal.lattice.is_some();
    let mut cdf = Vec::with_capacity(grid.len());
    let mut pdf = if lattice {
        None
    } else {
        Some(Vec::with_capacity(grid.len()))
    };
    let mut out_of_range = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        let v = pvalue_cdf(cal, t, sided)
            .map_err(|e| Error::Domain(format!("grid index {i} (t = {t}): {e}")))?;
        out_of_range.push(!(0.0..=1.0).contains(&v));
        cdf.push(v);
        if let Some(p) = pdf.as_mut() {
            p.push(pvalue_pdf(cal, t, sided)?);
        }
    }
    Ok(PValueCurve {
        grid: grid.to_vec(),
        cdf,
        pdf,
        out_of_range,
        sidedness: sided,
        continuity: if lattice {
            Continuity::Lattice
        } else {
            Continuity::Continuous
        },
        calibration: cal.clone(),
    })
}
