//! Moment-matched fit of the approximate density for one link.
//!
//! Prints the six parameters, the intermediates that produced them and the
//! relative error on each matched moment.
//!
//!     cargo run --example fit_approximation -- 10

use malaga_sum::channel::{moment_vector, MalagaParams};
use malaga_sum::fit::{fit_channel, FitReport};

fn main() -> malaga_sum::Result<()> {
    let db: f64 = std::env::args().nth(1).map(|a| a.parse().expect("SNR in dB")).unwrap_or(0.0);
    let p = MalagaParams::baseline(1.0).with_mu1_db(db);
    let (fit, inter) = fit_channel(&p)?;
    let moments = moment_vector(&p)?;
    let report = FitReport::new(&fit, &inter, &moments)?;

    println!("link: alpha {} beta {} xi {} at {db} dB", p.alpha, p.beta, p.xi);
    println!("ln a1 = {:.6}", fit.ln_a1);
    println!("a2    = {:.6}", fit.a2);
    println!("a3    = {:.6}", fit.a3);
    println!("a4    = {:.6}", fit.a4);
    println!("a5    = {:.6}", fit.a5);
    println!("a6    = {:.6}", fit.a6);
    println!("conjugate upper pair: {}", fit.has_complex_upper());
    println!("a4 discriminant {:.4e}, lower discriminant {:.4e}", inter.a4_discriminant, inter.lower_discriminant);
    for (i, (m, r)) in report.moments.iter().zip(&report.moment_residuals).enumerate() {
        println!("  moment {i}: {m:>14.6e}  rel. error {r:.1e}");
    }

    // only a1 and a2 carry the SNR
    let (louder, _) = fit_channel(&p.with_mu1_db(db + 20.0))?;
    println!("+20 dB: a2 x {:.3}, a5 unchanged: {}", louder.a2 / fit.a2, louder.a5 == fit.a5);
    Ok(())
}
