//! Non-parametric allele-sharing linkage tests for affected sibling pairs.
//!
//! Counts (n0, n1, n2) of pairs sharing 0/1/2 alleles. The score-type test
//! standardizes by the segregation-null variance 1/2; the Wald-type test
//! plugs in the multinomial MLE variance.

use super::{two_sided_normal_p, TestMethod, TestResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkageCounts {
    pub n0: u64,
    pub n1: u64,
    pub n2: u64,
}

impl LinkageCounts {
    pub fn total(&self) -> u64 {
        self.n0 + self.n1 + self.n2
    }

    pub fn mean_share(&self) -> f64 {
        (self.n1 + 2 * self.n2) as f64 / self.total() as f64
    }

    /// Multinomial MLE variance of the share count.
    pub fn mle_variance(&self) -> f64 {
        let n = self.total() as f64;
        let m = self.mean_share();
        (self.n0 as f64 * (0.0 - m).powi(2)
            + self.n1 as f64 * (1.0 - m).powi(2)
            + self.n2 as f64 * (2.0 - m).powi(2))
            / n
    }
}

/// Score test (null variance 1/2 from Mendelian segregation) and Wald test
/// (MLE plug-in variance) of H0: mean share = 1.
pub fn linkage_tests(counts: LinkageCounts) -> Result<(TestResult, Result<TestResult>)> {
    let n = counts.total();
    if n < 2 {
        return Err(Error::Domain(format!(
            "linkage test needs at least 2 sibling pairs, got {n}"
        )));
    }
    let nf = n as f64;
    let xbar = counts.mean_share();
    let score_stat = nf.sqrt() * (xbar - 1.0) / 0.5f64.sqrt();
    let score = TestResult {
        statistic: score_stat,
        p_value: two_sided_normal_p(score_stat),
        method: TestMethod::Score,
    };
    let var = counts.mle_variance();
    let wald = if var > 0.0 {
        let stat = nf.sqrt() * (xbar - 1.0) / var.sqrt();
        Ok(TestResult {
            statistic: stat,
            p_value: two_sided_normal_p(stat),
            method: TestMethod::Wald,
        })
    } else {
        Err(Error::Degenerate(
            "all pairs share the same allele count; Wald variance is zero".into(),
        ))
    };
    Ok((score, wald))
}
