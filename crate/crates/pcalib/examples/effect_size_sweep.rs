//! How the alternative p-value distribution changes with effect size.
//!
//! Sweeps three alternatives of the gamma mean test. The uncorrected
//! p-values behave oddly for small effects (mass pushed away from 0); the
//! saddlepoint-corrected ones are front-loaded for every effect size.
//!
//! ```bash
//! cargo run --release --example effect_size_sweep -- 50000
//! ```

use pcalib::edgeworth::Sidedness;
use pcalib::harness::{
    classify_shape, run_experiment, type1_error, ExperimentConfig, GammaCltConfig, Method, Scenario,
};

fn main() -> pcalib::Result<()> {
    let reps: u64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(20_000);
    println!("effect   P(p_norm<=0.05)  P(p_corr<=0.05)  shape(norm)  shape(corr)");
    for (label, scale) in [("1.025", 1.025), ("1.05", 1.05), ("1.1", 1.1)] {
        let config = ExperimentConfig {
            scenario: Scenario::GammaClt(GammaCltConfig {
                shape: 0.01,
                rate_true: 0.01 / scale,
                rate_null: 0.01,
            }),
            n: 750,
            reps,
            seed: 20260809,
            methods: vec![Method::Normal, Method::Saddlepoint],
            sidedness: Sidedness::TwoSided,
            alphas: vec![0.05],
            workers: 0,
        };
        let result = run_experiment(&config)?;
        let normal = result.series_for(Method::Normal).unwrap().successes();
        let corrected = result.series_for(Method::Saddlepoint).unwrap().successes();
        println!(
            "{label:6}  {:15.4}  {:15.4}  {:>11}  {:>11}",
            type1_error(&normal, 0.05).0,
            type1_error(&corrected, 0.05).0,
            classify_shape(&normal)?.shape.to_string(),
            classify_shape(&corrected)?.shape.to_string(),
        );
    }
    println!("\nPower grows with the effect size in both columns, but only the");
    println!("corrected p-values keep the canonical decreasing-density shape.");
    Ok(())
}
