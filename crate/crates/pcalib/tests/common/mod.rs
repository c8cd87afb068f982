//! Shared oracles for integration tests: exhaustive enumeration of the
//! allele-share score statistic and small helpers. Everything here is
//! independent of the library's expansion/saddlepoint code paths.

use pcalib::cumulants::{calibrate, FamilySpec, TestStatCalibration};
use pcalib::specialfn::normal_sf;

/// Exact CDF of the two-sided score-test p-value for n allele-share pairs
/// with cell probabilities theta, by enumerating all (n0, n1, n2) outcomes.
/// Returns (achievable p, P(p-value <= p)) sorted ascending; p-values equal
/// to 12 digits are merged (symmetric outcomes produce the same p up to
/// rounding).
pub fn enumerate_linkage_pvalue_cdf(theta: [f64; 3], n: u64) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let mut mass_by_p: Vec<(f64, f64)> = Vec::new();
    for n0 in 0..=n {
        for n1 in 0..=(n - n0) {
            let n2 = n - n0 - n1;
            let xbar = (n1 + 2 * n2) as f64 / nf;
            let s = nf.sqrt() * (xbar - 1.0) / 0.5f64.sqrt();
            let p = (2.0 * normal_sf(s.abs()).unwrap()).min(1.0);
            let mass = multinomial_pmf(n, n0, n1, n2, theta);
            mass_by_p.push((p, mass));
        }
    }
    mass_by_p.sort_by(|a, b| a.0.total_cmp(&b.0));
    // merge float-level ties
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (p, m) in mass_by_p {
        match merged.last_mut() {
            Some((lp, lm)) if (p - *lp).abs() <= 1e-12 * p.max(1e-300) => *lm += m,
            _ => merged.push((p, m)),
        }
    }
    let mut acc = 0.0;
    merged
        .into_iter()
        .map(|(p, m)| {
            acc += m;
            (p, acc)
        })
        .collect()
}

fn multinomial_pmf(n: u64, n0: u64, n1: u64, n2: u64, theta: [f64; 3]) -> f64 {
    let ln = ln_factorial(n) - ln_factorial(n0) - ln_factorial(n1) - ln_factorial(n2)
        + n0 as f64 * ln_or_neg_inf(theta[0])
        + n1 as f64 * ln_or_neg_inf(theta[1])
        + n2 as f64 * ln_or_neg_inf(theta[2]);
    ln.exp()
}

fn ln_or_neg_inf(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Score-test calibration of the linkage statistic S = √n(x̄−1)/√0.5.
pub fn linkage_calibration(theta: [f64; 3], n: u64) -> TestStatCalibration {
    calibrate(
        &FamilySpec::MultinomialShare { probs: theta },
        n,
        1.0,
        0.5f64.sqrt(),
    )
    .expect("valid linkage calibration")
}

/// Sup distance between the theory curve and the enumerated CDF, with the
/// theory evaluated just right of each jump (matching the inclusive CDF).
pub fn lattice_sup_error(theta: [f64; 3], n: u64) -> f64 {
    use pcalib::edgeworth::{pvalue_cdf, Sidedness};
    let cal = linkage_calibration(theta, n);
    let exact = enumerate_linkage_pvalue_cdf(theta, n);
    let mut sup: f64 = 0.0;
    for (p, cdf) in exact {
        if !(1e-8..1.0).contains(&p) {
            continue;
        }
        let t = (p * (1.0 + 1e-9)).min(1.0 - 1e-16);
        let theory = pvalue_cdf(&cal, t, Sidedness::TwoSided).unwrap();
        sup = sup.max((theory - cdf).abs());
    }
    sup
}
