//! Many nuisance parameters inflate the Wald test; r* repairs it.
//!
//! Weibull regression with 50 pure-noise covariates and only 200
//! observations: testing one coefficient with the Wald statistic rejects
//! far too often under the null, while the modified likelihood root stays at
//! the nominal level.
//!
//! ```bash
//! cargo run --release --example weibull_many_nuisance -- 500
//! ```

use pcalib::edgeworth::Sidedness;
use pcalib::harness::{
    run_experiment, type1_error, ExperimentConfig, Method, Scenario, WeibullConfig,
};

fn main() -> pcalib::Result<()> {
    let reps: u64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(300);
    let config = ExperimentConfig {
        scenario: Scenario::WeibullManyNuisance(WeibullConfig {
            covariates: 50,
            shape: 1.0,
            scale: 2.0,
        }),
        n: 200,
        reps,
        seed: 20260809,
        methods: vec![Method::Wald, Method::Rstar],
        sidedness: Sidedness::TwoSided,
        alphas: vec![0.05],
        workers: 0,
    };
    let result = run_experiment(&config)?;
    let se = (0.05f64 * 0.95 / reps as f64).sqrt();
    println!("nominal level 0.05 (mc se {se:.4}):");
    for method in [Method::Wald, Method::Rstar] {
        let series = result.series_for(method).unwrap();
        let (rate, _) = type1_error(&series.successes(), 0.05);
        println!(
            "  {:5}  rejection rate {rate:.4}   excluded {}",
            method.name(),
            series.exclusions()
        );
    }
    println!(
        "\n{} replications in {:.1}s: 51 estimated coefficients from 200",
        reps, result.wall_clock_s
    );
    println!("observations leave the profile curvature overstated; the determinant");
    println!("ratio inside r* absorbs exactly that.");
    Ok(())
}
