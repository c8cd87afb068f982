//! Anatomy of the r* correction on one dataset.
//!
//! Fits a logistic regression, scans the pinned coefficient across
//! ψ̂ ± 4 se, and prints the likelihood root r, the correction factor Q and
//! the modified root r* along the scan — including the bridged region around
//! the MLE where the raw ratio log(Q/r)/r would be numerically unusable.
//!
//! ```bash
//! cargo run --release --example rstar_profile
//! ```

use nalgebra::DMatrix;
use pcalib::edgeworth::Sidedness;
use pcalib::models::{fit_mle, Dataset, Logistic};
use pcalib::rstar::rstar_pvalue;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

fn main() -> pcalib::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 800usize;
    let geno = Binomial::new(2, 0.05).unwrap();
    let mut x = DMatrix::zeros(n, 2);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = geno.sample(&mut rng) as f64;
        let eta: f64 = -2.0 + 0.3 * x[(i, 1)];
        y.push(if rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()) {
            1.0
        } else {
            0.0
        });
    }
    let model = Logistic::new(Dataset::new(y, x)?)?;
    let full = fit_mle(&model)?;
    let psi_hat = full.estimates[1];
    let se = full.se(1)?;
    println!("fitted genotype coefficient {psi_hat:.4} (se {se:.4})\n");
    println!("   psi0        r          Q         r*     two-sided p   bridged");
    for k in -8..=8 {
        let psi0 = psi_hat + 0.5 * k as f64 * se;
        let res = rstar_pvalue(&model, 1, psi0, Sidedness::TwoSided)?;
        println!(
            "{psi0:8.4}  {:8.4}  {:8.4}  {:8.4}  {:11.5}   {}",
            res.r,
            res.q,
            res.r_star,
            res.p_value,
            if res.patched { "yes" } else { "" }
        );
    }
    println!("\nr* runs slightly offset from r: that offset is the higher-order");
    println!("location-and-curvature adjustment the plain root ignores.");
    Ok(())
}
