//! Checks the SNR sampler against the exact distribution.

use malaga_sum::channel::{exact_cdf, exact_moment, MalagaParams};
use malaga_sum::monte_carlo::{ks_distance, sample_branch, EmpiricalStats, SampleConfig, TabulatedCdf};

fn main() -> malaga_sum::Result<()> {
    let cfg = SampleConfig::new(400_000, 11);
    for p in [
        MalagaParams::baseline(1.0),
        MalagaParams { alpha: 4.2, beta: 3, xi: 1.1, ..MalagaParams::baseline(1.0) },
    ] {
        let xs = sample_branch(&cfg, &p, 0)?;
        let table = TabulatedCdf::new(|x| exact_cdf(x, &p), 1e-4, 200.0, 800)?;
        let ks = ks_distance(&xs, |x| table.eval(x))?;
        // 1.36/sqrt(n) is the 5% critical value
        println!(
            "alpha {} beta {} xi {}: KS {:.5} (5% critical {:.5})",
            p.alpha,
            p.beta,
            p.xi,
            ks,
            1.36 / (xs.len() as f64).sqrt()
        );
        let stats = EmpiricalStats::new(&xs, 50, 5.0, None::<fn(f64) -> f64>)?;
        for i in 1..=4 {
            println!("  moment {i}: sampled {:.5}  exact {:.5}", stats.sample_moments[i], exact_moment(i, &p)?);
        }
    }
    Ok(())
}
