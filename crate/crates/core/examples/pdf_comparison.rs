//! Exact and approximate density and distribution on a linear grid.

use malaga_sum::channel::{exact_cdf, exact_pdf, MalagaParams};
use malaga_sum::fit::{approx_cdf, approx_pdf, fit_channel};

fn main() -> malaga_sum::Result<()> {
    for db in [0.0, 10.0] {
        let p = MalagaParams::baseline(1.0).with_mu1_db(db);
        let (f, _) = fit_channel(&p)?;
        println!("mu1 = {db} dB");
        println!("{:>10} {:>12} {:>12} {:>10} {:>10}", "x/mu1", "exact pdf", "approx pdf", "exact cdf", "approx cdf");
        for u in [0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0] {
            let x = u * p.mu1;
            println!(
                "{u:>10} {:>12.5e} {:>12.5e} {:>10.6} {:>10.6}",
                exact_pdf(x, &p)?,
                approx_pdf(x, &f)?,
                exact_cdf(x, &p)?,
                approx_cdf(x, &f)?
            );
        }
        println!();
    }
    Ok(())
}
