//! Six-moment fit of the approximate density
//!
//! ```text
//! f(x) ≈ a₁ G^{2,0}_{2,2}(x/a₂ | a₃, a₄; a₅, a₆),
//! ```
//!
//! whose Mellin transform gives `μ_i = a₁ a₂^{i+1} Γ(a₅+i+1)Γ(a₆+i+1) / (Γ(a₃+i+1)Γ(a₄+i+1))`.
//! Matching `μ₀ … μ₅` is solved in closed form from the ratios
//! `φ_i = μ_i/μ_{i-1}`: a quadratic for `a₄`, then `a₃`, `a₂`, the pair
//! `a₅ ≤ a₆` and finally `a₁` from normalisation.
//!
//! The quadratic for `a₄` may have a negative discriminant. The roots are
//! then a complex-conjugate pair `a₃ = ā₄`; `Γ(a₃+x)Γ(a₄+x) = |Γ(a₃+x)|²` is
//! still real and positive, so the fit remains a valid real model and is
//! carried through with complex `a₃`, `a₄`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{moment_vector, MalagaParams, MomentVector, FIT_MOMENTS};
use crate::error::{Error, Result};
use crate::special::gamma::{ln_gamma_complex, ln_gamma_pos};
use crate::special::meijer::{meijer_g_scaled, residue_series, GParams, SeriesControl};
use crate::special::quadrature::GaussLegendre;

/// Largest accepted relative moment error of a fit.
pub const DEFAULT_RESIDUAL_LIMIT: f64 = 1e-6;

/// Parameters of the approximate density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedApprox {
    /// `ln a₁`; `a₁` itself routinely underflows for strong turbulence.
    pub ln_a1: f64,
    pub a2: f64,
    pub a3: Complex64,
    pub a4: Complex64,
    pub a5: f64,
    pub a6: f64,
}

/// Every quantity computed on the way to the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitIntermediates {
    /// `φ₁ … φ₅`.
    pub phi_ratios: Vec<f64>,
    /// `ℒ₁ … ℒ₄`, `ℒ_i = φ_i (a₃+i)(a₄+i)`.
    pub l_vals: Vec<f64>,
    /// `𝒢₁ … 𝒢₄`, `𝒢_i = φ_i (a₄+i)`.
    pub g_vals: Vec<Complex64>,
    pub phi: f64,
    pub lambda_: f64,
    pub p_: f64,
    pub s_: f64,
    pub sigma_: f64,
    pub r_: f64,
    pub delta_: f64,
    pub q_: f64,
    pub kappa_: f64,
    pub eta_: f64,
    /// Discriminant of the `a₄` quadratic; negative for a conjugate pair.
    pub a4_discriminant: f64,
    /// `κ² - 4η`.
    pub lower_discriminant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Take the `+` root of the `a₄` quadratic. With both roots admissible
    /// this only exchanges `a₃` and `a₄`.
    pub plus_root: bool,
    pub residual_limit: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            plus_root: false,
            residual_limit: DEFAULT_RESIDUAL_LIMIT,
        }
    }
}

impl FittedApprox {
    /// Builds a density from explicit parameters, with `a₁` fixed by
    /// normalisation.
    pub fn normalised(a2: f64, a3: Complex64, a4: Complex64, a5: f64, a6: f64) -> Result<Self> {
        if !(a2 > 0.0) || !a2.is_finite() {
            return Err(Error::parameter("a2", format!("{a2} must be positive")));
        }
        if !(a5 > -1.0 && a6 > -1.0) {
            return Err(Error::parameter("a5", format!("lower parameters ({a5}, {a6}) must exceed -1")));
        }
        if (a3.im != 0.0 || a4.im != 0.0) && (a3 - a4.conj()).norm() > 1e-12 * a3.norm().max(1.0) {
            return Err(Error::parameter("a3", "complex upper parameters must be conjugate"));
        }
        let (ln_num, sign) = ln_gamma_upper(a3, a4, 1.0)?;
        if sign < 0.0 {
            return Err(Error::parameter("a1", "Γ(a₃+1)Γ(a₄+1) is negative"));
        }
        let ln_a1 = ln_num - a2.ln() - ln_gamma_pos(a5 + 1.0) - ln_gamma_pos(a6 + 1.0);
        Ok(FittedApprox {
            ln_a1,
            a2,
            a3,
            a4,
            a5: a5.min(a6),
            a6: a5.max(a6),
        })
    }

    pub fn a1(&self) -> f64 {
        self.ln_a1.exp()
    }

    /// `τ = a₁a₂ = Γ(a₃+1)Γ(a₄+1)/(Γ(a₅+1)Γ(a₆+1))`.
    pub fn ln_tau(&self) -> f64 {
        self.ln_a1 + self.a2.ln()
    }

    pub fn has_complex_upper(&self) -> bool {
        self.a3.im != 0.0
    }

    /// `a₁a₂Γ(a₅+1)Γ(a₆+1)/(Γ(a₃+1)Γ(a₄+1))`, one by construction.
    pub fn normalisation(&self) -> Result<f64> {
        approx_moment(0, self)
    }

    /// Same shape at a different mean SNR: `a₂ ∝ μ₁`, `a₁ ∝ 1/μ₁`.
    pub fn rescaled(&self, factor: f64) -> Self {
        FittedApprox {
            ln_a1: self.ln_a1 - factor.ln(),
            a2: self.a2 * factor,
            ..*self
        }
    }
}

/// `ln |Γ(a₃+x)Γ(a₄+x)|` and the sign of the product.
pub(crate) fn ln_gamma_upper(a3: Complex64, a4: Complex64, x: f64) -> Result<(f64, f64)> {
    let g = ln_gamma_complex(a3 + x) + ln_gamma_complex(a4 + x);
    if !g.re.is_finite() {
        return Err(Error::domain("gamma", format!("pole at a₃+{x} or a₄+{x}")));
    }
    let phase = g.im.rem_euclid(2.0 * std::f64::consts::PI);
    let sign = if phase.cos() >= 0.0 { 1.0 } else { -1.0 };
    Ok((g.re, sign))
}

/// `Σ a_i b_i` with error-free products and Neumaier summation.
fn dot(terms: &[(f64, f64)]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut add = |x: f64| {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    };
    for &(a, b) in terms {
        let p = a * b;
        let e = a.mul_add(b, -p);
        add(p);
        add(e);
    }
    sum + comp
}

/// Fit of the approximate density to the exact moments of a branch.
pub fn fit_channel(p: &MalagaParams) -> Result<(FittedApprox, FitIntermediates)> {
    fit_channel_with(p, &FitOptions::default())
}

pub fn fit_channel_with(p: &MalagaParams, options: &FitOptions) -> Result<(FittedApprox, FitIntermediates)> {
    // The shape does not depend on μ₁; fit at unit mean and rescale exactly.
    let (unit, inter) = fit_from_moments_with(&moment_vector(&p.with_mu1(1.0))?, options)?;
    Ok((unit.rescaled(p.mu1), inter.rescaled(p.mu1)))
}

pub fn fit_from_moments(m: &MomentVector) -> Result<(FittedApprox, FitIntermediates)> {
    fit_from_moments_with(m, &FitOptions::default())
}

pub fn fit_from_moments_with(m: &MomentVector, options: &FitOptions) -> Result<(FittedApprox, FitIntermediates)> {
    let mean = m.mean();
    let unit: Vec<f64> = m.as_slice().iter().enumerate().map(|(i, v)| v / mean.powi(i as i32)).collect();
    let (fit, inter) = fit_unit_mean(&unit, options)?;
    let fit = fit.rescaled(mean);
    let residual = moment_residual(&fit, m)?;
    if !(residual <= options.residual_limit) {
        return Err(Error::FitResidual {
            residual,
            limit: options.residual_limit,
        });
    }
    Ok((fit, inter.rescaled(mean)))
}

fn fit_unit_mean(mu: &[f64], options: &FitOptions) -> Result<(FittedApprox, FitIntermediates)> {
    // φ[i] = φ_i, index 0 unused
    let mut phi = [0.0f64; FIT_MOMENTS];
    for i in 1..FIT_MOMENTS {
        phi[i] = mu[i] / mu[i - 1];
    }
    let (f1, f2, f3, f4, f5) = (phi[1], phi[2], phi[3], phi[4], phi[5]);

    let lambda = dot(&[(5.0, f5), (-12.0, f4), (9.0, f3), (-2.0, f2)]);
    let p_ = dot(&[(-4.0, f4), (9.0, f3), (-6.0, f2), (1.0, f1)]);
    let s_ = -p_;
    let sigma = dot(&[(25.0, f5), (-48.0, f4), (27.0, f3), (-4.0, f2)]);
    let r_ = dot(&[(1.0, f4), (-3.0, f3), (3.0, f2), (-1.0, f1)]);
    let delta = dot(&[(1.0, f5), (-3.0, f4), (3.0, f3), (-1.0, f2)]);
    let q_ = dot(&[(1.0, f1), (-16.0, f4), (27.0, f3), (-12.0, f2)]);
    let big_phi = dot(&[(lambda, p_ + s_), (sigma, r_), (delta, q_)]);

    // a₄ from the quadratic (δp+λr) a₄² + Φ a₄ + (λq+σs) = 0
    let lead = dot(&[(delta, p_), (lambda, r_)]);
    let constant = dot(&[(lambda, q_), (sigma, s_)]);
    let scale = (delta * p_).abs() + (lambda * r_).abs() + (big_phi / f1).abs() * f1.abs();
    if lead.abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE) || lead == 0.0 {
        return Err(Error::DegenerateMoments {
            detail: "leading coefficient of the a₄ quadratic vanishes".into(),
        });
    }
    let disc = big_phi * big_phi - 4.0 * lead * constant;
    let root = if disc >= 0.0 {
        Complex64::new(disc.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-disc).sqrt())
    };
    let signed = if options.plus_root { root } else { -root };
    let a4 = (signed - big_phi) / (2.0 * lead);

    // a₃ from the 𝒢 combination
    let g: Vec<Complex64> = (1..=4).map(|i| (a4 + i as f64) * phi[i]).collect();
    let g_den = g[3] - 3.0 * g[2] + 3.0 * g[1] - g[0];
    let g_num = -4.0 * g[3] + 9.0 * g[2] - 6.0 * g[1] + g[0];
    if g_den.norm() <= 1e-13 * (g[3].norm() + 3.0 * g[2].norm() + 3.0 * g[1].norm() + g[0].norm()) {
        return Err(Error::DegenerateMoments {
            detail: "𝒢₄ - 3𝒢₃ + 3𝒢₂ - 𝒢₁ vanishes".into(),
        });
    }
    let mut a3 = g_num / g_den;
    let mut a4 = a4;
    if disc < 0.0 {
        // Enforce exact conjugacy; a₃ only agrees with ā₄ to rounding.
        let mid = 0.5 * (a3 + a4.conj());
        a3 = mid;
        a4 = mid.conj();
    }

    // ℒ_i = φ_i (a₃+i)(a₄+i); for a conjugate pair these are real
    let u = (a3 * a4).re;
    let v = (a3 + a4).re;
    let l: Vec<f64> = (1..=4)
        .map(|i| {
            let fi = i as f64;
            phi[i] * (u + fi * v + fi * fi)
        })
        .collect();
    let a2 = dot(&[(0.5, l[3]), (-1.0, l[2]), (0.5, l[1])]);

    let mut intermediates = FitIntermediates {
        phi_ratios: phi[1..].to_vec(),
        l_vals: l.clone(),
        g_vals: g,
        phi: big_phi,
        lambda_: lambda,
        p_,
        s_,
        sigma_: sigma,
        r_,
        delta_: delta,
        q_,
        kappa_: f64::NAN,
        eta_: f64::NAN,
        a4_discriminant: disc,
        lower_discriminant: f64::NAN,
    };

    if !(a2 > 0.0) || !a2.is_finite() {
        return Err(Error::FitInfeasible {
            stage: "a2",
            discriminant: a2,
        });
    }
    let kappa = (l[1] - l[0]) / a2 - 1.0;
    let eta = l[0] / a2;
    let lower_disc = kappa * kappa - 4.0 * eta;
    intermediates.kappa_ = kappa;
    intermediates.eta_ = eta;
    intermediates.lower_discriminant = lower_disc;
    if lower_disc < 0.0 {
        return Err(Error::FitInfeasible {
            stage: "a5/a6",
            discriminant: lower_disc,
        });
    }
    let sq = lower_disc.sqrt();
    let a5 = 0.5 * (kappa - sq) - 1.0;
    let a6 = 0.5 * (kappa + sq) - 1.0;
    if !(a5 > -1.0) {
        return Err(Error::FitInfeasible {
            stage: "a5",
            discriminant: a5 + 1.0,
        });
    }
    let fit = FittedApprox::normalised(a2, a3, a4, a5, a6).map_err(|_| Error::FitInfeasible {
        stage: "a1",
        discriminant: -1.0,
    })?;
    Ok((fit, intermediates))
}

/// Largest relative error of the fitted moments `μ₀ … μ₅`.
pub fn moment_residual(fit: &FittedApprox, m: &MomentVector) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, &want) in m.as_slice().iter().enumerate().take(FIT_MOMENTS) {
        let got = approx_moment(i, fit)?;
        worst = worst.max((got / want - 1.0).abs());
    }
    Ok(worst)
}

/// `a₁ a₂^{i+1} Γ(a₅+i+1)Γ(a₆+i+1) / (Γ(a₃+i+1)Γ(a₄+i+1))`.
pub fn approx_moment(i: usize, f: &FittedApprox) -> Result<f64> {
    let x = i as f64 + 1.0;
    if !(f.a5 + x > 0.0) {
        return Err(Error::domain("approx_moment", format!("Γ(a₅+{x}) has a pole")));
    }
    let (ln_den, sign) = ln_gamma_upper(f.a3, f.a4, x)?;
    let ln = f.ln_a1 + x * f.a2.ln() + ln_gamma_pos(f.a5 + x) + ln_gamma_pos(f.a6 + x) - ln_den;
    Ok(sign * ln.exp())
}

fn approx_kernel(f: &FittedApprox, z: f64) -> Result<GParams> {
    GParams::from_complex(
        2,
        0,
        vec![f.a3, f.a4],
        vec![Complex64::new(f.a5, 0.0), Complex64::new(f.a6, 0.0)],
        z,
    )
}

/// Approximate density. Its support is `(0, a₂)`.
pub fn approx_pdf(x: f64, f: &FittedApprox) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("approx_pdf", format!("x = {x} must be positive")));
    }
    let z = x / f.a2;
    if z >= 1.0 {
        return Ok(0.0);
    }
    let g = meijer_g_scaled(&approx_kernel(f, z)?, &SeriesControl::default(), f.ln_a1)?;
    Ok(g.value)
}

/// Approximate CDF, `a₁a₂ G^{2,1}_{3,3}(x/a₂ | 1, a₃+1, a₄+1; a₅+1, a₆+1, 0)`.
///
/// The residue series of that function cancels once `|a₃|² x/a₂` is large;
/// from the last point where it is reliable the density is integrated
/// instead.
pub fn approx_cdf(x: f64, f: &FittedApprox) -> Result<f64> {
    if !(x >= 0.0) || x.is_nan() {
        return Err(Error::domain("approx_cdf", format!("x = {x} must be non-negative")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x >= f.a2 {
        return Ok(1.0);
    }
    let control = SeriesControl::default();
    let mut anchor = x;
    loop {
        let params = cdf_kernel(f, anchor / f.a2)?;
        let s = residue_series(&params, &control, f.ln_tau());
        if s.converged && s.cancellation <= 1e4 {
            let mut value = s.value;
            if anchor < x {
                let rule = GaussLegendre::new(20)?;
                value += rule.integrate_adaptive(|t| approx_pdf(t, f).unwrap_or(f64::NAN), anchor, x, 1e-10)?;
            }
            return Ok(value.clamp(0.0, 1.0));
        }
        anchor *= 0.5;
        if anchor < 1e-12 * f.a2 {
            return Err(Error::Convergence {
                context: "approximate CDF".into(),
                partial: s.value,
                terms: s.terms_used,
            });
        }
    }
}

fn cdf_kernel(f: &FittedApprox, z: f64) -> Result<GParams> {
    let one = Complex64::new(1.0, 0.0);
    GParams::from_complex(
        2,
        1,
        vec![one, f.a3 + 1.0, f.a4 + 1.0],
        vec![Complex64::new(f.a5 + 1.0, 0.0), Complex64::new(f.a6 + 1.0, 0.0), Complex64::new(0.0, 0.0)],
        z,
    )
}

/// Serialisable summary of a fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub a1: f64,
    pub ln_a1: f64,
    pub a2: f64,
    pub a3: [f64; 2],
    pub a4: [f64; 2],
    pub a5: f64,
    pub a6: f64,
    pub complex_upper: bool,
    pub intermediates: Option<FitIntermediates>,
    pub moments: Vec<f64>,
    pub moment_residuals: Vec<f64>,
    pub max_residual: f64,
    pub infeasible: Option<String>,
}

impl FitReport {
    pub fn new(fit: &FittedApprox, intermediates: &FitIntermediates, m: &MomentVector) -> Result<Self> {
        let residuals = m
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &want)| Ok((approx_moment(i, fit)? / want - 1.0).abs()))
            .collect::<Result<Vec<_>>>()?;
        Ok(FitReport {
            a1: fit.a1(),
            ln_a1: fit.ln_a1,
            a2: fit.a2,
            a3: [fit.a3.re, fit.a3.im],
            a4: [fit.a4.re, fit.a4.im],
            a5: fit.a5,
            a6: fit.a6,
            complex_upper: fit.has_complex_upper(),
            intermediates: Some(intermediates.clone()),
            moments: m.as_slice().to_vec(),
            max_residual: residuals.iter().cloned().fold(0.0, f64::max),
            moment_residuals: residuals,
            infeasible: None,
        })
    }

    pub fn infeasible(m: &MomentVector, error: &Error) -> Self {
        FitReport {
            a1: f64::NAN,
            ln_a1: f64::NAN,
            a2: f64::NAN,
            a3: [f64::NAN; 2],
            a4: [f64::NAN; 2],
            a5: f64::NAN,
            a6: f64::NAN,
            complex_upper: false,
            intermediates: None,
            moments: m.as_slice().to_vec(),
            moment_residuals: Vec::new(),
            max_residual: f64::NAN,
            infeasible: Some(error.to_string()),
        }
    }
}

impl FitIntermediates {
    /// Intermediates of the same fit at mean `factor` times larger.
    pub fn rescaled(&self, factor: f64) -> Self {
        let c = factor;
        FitIntermediates {
            phi_ratios: self.phi_ratios.iter().map(|v| v * c).collect(),
            l_vals: self.l_vals.iter().map(|v| v * c).collect(),
            g_vals: self.g_vals.iter().map(|v| v * c).collect(),
            phi: self.phi * c * c,
            lambda_: self.lambda_ * c,
            p_: self.p_ * c,
            s_: self.s_ * c,
            sigma_: self.sigma_ * c,
            r_: self.r_ * c,
            delta_: self.delta_ * c,
            q_: self.q_ * c,
            a4_discriminant: self.a4_discriminant * c.powi(4),
            ..self.clone()
        }
    }

    /// `(ℒ_i - 2ℒ_{i-1} + ℒ_{i-2}) / (2a₂) - 1` for `i ∈ {3, 4}`.
    pub fn second_difference_residual(&self, i: usize, a2: f64) -> f64 {
        assert!((3..=4).contains(&i), "defined for i = 3, 4");
        let l = &self.l_vals;
        (l[i - 1] - 2.0 * l[i - 2] + l[i - 3]) / (2.0 * a2) - 1.0
    }

    /// `(a₃a₄δ + (a₃+a₄)λ + σ) / |a₃a₄δ|`.
    pub fn upper_pair_residual(&self, fit: &FittedApprox) -> f64 {
        let u = (fit.a3 * fit.a4).re;
        let v = (fit.a3 + fit.a4).re;
        (u * self.delta_ + v * self.lambda_ + self.sigma_) / (u * self.delta_).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{db_to_linear, exact_moment, exact_pdf};
    use crate::special::quadrature::GaussLegendre;
    use approx::assert_relative_eq;

    // Closed-form fit at the baseline link, μ₁ = 1, from a 40-digit evaluation
    // of the same equations.
    const A2: f64 = 173.450_613_026;
    const A3: (f64, f64) = (-9.423_927_716_52, 26.893_233_045_2);
    const A5: f64 = 0.441_133_678_008;
    const A6: f64 = 2.177_272_377_83;

    #[test]
    fn baseline_fit_frozen() {
        let (fit, inter) = fit_channel(&MalagaParams::baseline(1.0)).unwrap();
        assert!(inter.a4_discriminant < 0.0);
        assert_relative_eq!(fit.a2, A2, max_relative = 1e-9);
        assert_relative_eq!(fit.a3.re, A3.0, max_relative = 1e-9);
        assert_relative_eq!(fit.a3.im.abs(), A3.1, max_relative = 1e-9);
        assert_eq!(fit.a4, fit.a3.conj());
        assert_relative_eq!(fit.a5, A5, max_relative = 1e-9);
        assert_relative_eq!(fit.a6, A6, max_relative = 1e-9);
        assert_relative_eq!(fit.normalisation().unwrap(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn moments_reproduced() {
        let p = MalagaParams::baseline(db_to_linear(10.0));
        let m = moment_vector(&p).unwrap();
        let (fit, _) = fit_from_moments(&m).unwrap();
        for i in 0..6 {
            assert_relative_eq!(approx_moment(i, &fit).unwrap(), m.as_slice()[i], max_relative = 1e-8);
        }
        // not matched, only finite
        let m6 = approx_moment(6, &fit).unwrap();
        assert!(m6.is_finite() && m6 > 0.0);
        assert!(exact_moment(6, &p).unwrap() > 0.0);
    }

    #[test]
    fn exponential_moments_are_degenerate() {
        let m = MomentVector::new(vec![1.0, 1.0, 2.0, 6.0, 24.0, 120.0]).unwrap();
        assert!(matches!(fit_from_moments(&m), Err(Error::DegenerateMoments { .. })));
    }

    #[test]
    fn scaling_with_mean() {
        let (a, _) = fit_channel(&MalagaParams::baseline(1.0)).unwrap();
        let (b, _) = fit_channel(&MalagaParams::baseline(37.0)).unwrap();
        assert_relative_eq!(b.a2 / a.a2, 37.0, max_relative = 1e-9);
        assert_relative_eq!((b.ln_a1 - a.ln_a1).exp(), 1.0 / 37.0, max_relative = 1e-9);
        for (x, y) in [(a.a3, b.a3), (a.a4, b.a4)] {
            assert!((x - y).norm() <= 1e-9 * x.norm());
        }
        assert_relative_eq!(a.a5, b.a5, max_relative = 1e-9);
        assert_relative_eq!(a.a6, b.a6, max_relative = 1e-9);
    }

    #[test]
    fn plus_root_swaps_upper_pair() {
        let m = moment_vector(&MalagaParams::baseline(1.0)).unwrap();
        let (minus, _) = fit_from_moments(&m).unwrap();
        let opts = FitOptions {
            plus_root: true,
            ..FitOptions::default()
        };
        let (plus, _) = fit_from_moments_with(&m, &opts).unwrap();
        assert!((plus.a3 - minus.a4).norm() < 1e-9 * minus.a4.norm());
        assert_relative_eq!(plus.a2, minus.a2, max_relative = 1e-12);
    }

    #[test]
    fn intermediate_identities() {
        let (fit, inter) = fit_channel(&MalagaParams::baseline(1.0)).unwrap();
        for i in [3, 4] {
            assert!(inter.second_difference_residual(i, fit.a2).abs() < 1e-9);
        }
        assert!(inter.upper_pair_residual(&fit).abs() < 1e-7);
    }

    #[test]
    fn pdf_normalised_and_close_to_exact() {
        let p = MalagaParams::baseline(1.0);
        let (fit, _) = fit_channel(&p).unwrap();
        let rule = GaussLegendre::new(20).unwrap();
        // The formal density is singular at x = a₂; all mass sits far below.
        let mass = rule.integrate_adaptive(|x| approx_pdf(x, &fit).unwrap(), 1e-14, 0.5 * fit.a2, 1e-10).unwrap();
        assert_relative_eq!(mass, 1.0, max_relative = 1e-6);
        let mean = rule.integrate_adaptive(|x| x * approx_pdf(x, &fit).unwrap(), 1e-14, 0.5 * fit.a2, 1e-10).unwrap();
        assert_relative_eq!(mean, 1.0, max_relative = 1e-6);
        assert_relative_eq!(approx_pdf(1.0, &fit).unwrap(), 0.353_73, max_relative = 1e-4);
        assert_relative_eq!(exact_pdf(1.0, &p).unwrap(), 0.354_14, max_relative = 1e-4);
    }

    #[test]
    fn cdf_is_integral_of_pdf() {
        let (fit, _) = fit_channel(&MalagaParams::baseline(1.0)).unwrap();
        let rule = GaussLegendre::new(20).unwrap();
        for x in [0.2, 1.0, 3.0, 12.0, 40.0] {
            let integral = rule.integrate_adaptive(|t| approx_pdf(t, &fit).unwrap(), 1e-14, x, 1e-11).unwrap();
            assert_relative_eq!(approx_cdf(x, &fit).unwrap(), integral, max_relative = 1e-7);
        }
    }

    #[test]
    fn dot_is_compensated() {
        assert_eq!(dot(&[(1e16, 1.0), (1.0, 1.0), (-1e16, 1.0)]), 1.0);
    }
}
