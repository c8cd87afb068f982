//! Rare-variant association testing: Wald vs the modified likelihood root.
//!
//! Simulates a case-control study with a sparse genotype (MAF 2.5%, ~4.6%
//! cases) under the null that the genotype has no effect, then compares the
//! calibration of the Wald test and the r* correction.
//!
//! ```bash
//! cargo run --release --example logistic_gwas -- 500
//! ```

use pcalib::edgeworth::Sidedness;
use pcalib::harness::{
    empirical_cdf, ks_distance, run_experiment, standard_grid, type1_error, ExperimentConfig,
    LogisticGwasConfig, Method, ResampleMode, Scenario,
};

fn main() -> pcalib::Result<()> {
    let reps: u64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(300);
    let config = ExperimentConfig {
        scenario: Scenario::LogisticGwas(LogisticGwasConfig {
            maf: 0.025,
            beta0: -3.5,
            beta_s: 0.0,
            beta1: 0.02,
            beta2: 0.02,
            resample: ResampleMode::Labels,
        }),
        n: 3000,
        reps,
        seed: 20260809,
        methods: vec![Method::Wald, Method::Rstar, Method::Score],
        sidedness: Sidedness::TwoSided,
        alphas: vec![0.05],
        workers: 0,
    };
    let result = run_experiment(&config)?;
    let grid = standard_grid();
    println!("method   rejections@0.05   KS vs uniform   excluded");
    for method in [Method::Wald, Method::Score, Method::Rstar] {
        let series = result.series_for(method).unwrap();
        let ps = series.successes();
        let (rate, _) = type1_error(&ps, 0.05);
        let ks = ks_distance(&empirical_cdf(&ps, &grid)?, &grid)?;
        println!(
            "{:7}  {rate:15.4}   {ks:13.4}   {}",
            method.name(),
            series.exclusions()
        );
    }
    println!(
        "\n{} replications in {:.1}s. The sparse genotype makes the Wald test",
        reps, result.wall_clock_s
    );
    println!("conservative near 0.05; the r* correction restores uniformity.");
    Ok(())
}
