//! The special-function layer on its own: Meijer-G by residues and by a
//! Mellin-Barnes contour, log-gamma and Gauss-Legendre quadrature.

use malaga_sum::special::gamma::{log_gamma, q_function};
use malaga_sum::special::meijer::{meijer_g, mellin_barnes, GParams, SeriesControl};
use malaga_sum::special::quadrature::GaussLegendre;

fn main() -> malaga_sum::Result<()> {
    let control = SeriesControl::default();

    // G^{2,0}_{0,2}(z | a, b) = 2 z^{(a+b)/2} K_{a-b}(2 sqrt z)
    let g = GParams::new(2, 0, &[], &[0.5, 0.0], 1.0)?;
    let v = meijer_g(&g, &control)?;
    println!("G20_02(1 | 1/2, 0) = {:.15}  (sqrt(pi) e^-2 = {:.15})", v.value, std::f64::consts::PI.sqrt() * (-2.0f64).exp());

    for z in [0.1, 1.0, 5.0] {
        let g = GParams::new(2, 1, &[0.0, 1.3], &[0.4, 2.1], z)?;
        let series = meijer_g(&g, &control)?.value;
        let contour = mellin_barnes(&g, 1e-10)?.value;
        println!("G21_22({z}): residues {series:.12e}  contour {contour:.12e}");
    }

    // a pole collision is shifted and reported
    let g = GParams::new(2, 0, &[], &[1.0, 2.0], 0.7)?;
    let v = meijer_g(&g, &control)?;
    println!("integer-spaced lower pair: {:.10e}, perturbations {:?}", v.value, v.perturbations);

    println!("ln Gamma(0.5) = {:.15}", log_gamma(0.5)?);
    println!("ln Gamma(171.5) = {:.10}", log_gamma(171.5)?);
    println!("Q(3) = {:.6e}", q_function(3.0));

    let rule = GaussLegendre::new(20)?;
    let erf_like = rule.integrate_adaptive(|t| (-t * t).exp(), 0.0, 6.0, 1e-14)?;
    println!("int_0^6 exp(-t^2) dt = {erf_like:.15} (sqrt(pi)/2 = {:.15})", std::f64::consts::PI.sqrt() / 2.0);
    Ok(())
}
