//! Málaga-ℳ turbulence with pointing error for a single branch.
//!
//! The SNR density is a finite mixture of `G^{3,0}_{1,3}` kernels,
//!
//! ```text
//! f(x) = ξ²A/(2x) Σ_{m=1}^{β} b_m G^{3,0}_{1,3}(Bx/μ₁ | ξ²+1; ξ², α, m),
//! ```
//!
//! whose Mellin transform gives every moment in closed form. Equivalently
//! `γ = (μ₁/B)·X_α·X_m·H` with unit-scale Gamma variates `X_α`, `X_m`, a
//! power-law gain `H` on `(0, 1)` and a mixture index `m` weighted by
//! `A b_m Γ(α) Γ(m) / 2`.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use crate::error::{Error, Result};
use crate::special::gamma::{ln_gamma_pos, log_gamma};
use crate::special::meijer::{meijer_g_scaled, GParams, SeriesControl};

/// Largest moment order exposed; orders 6..8 are diagnostic only.
pub const MAX_MOMENT_ORDER: usize = 8;
/// Number of moments matched by the fit.
pub const FIT_MOMENTS: usize = 6;

/// Physical parameters of one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MalagaParams {
    pub alpha: f64,
    pub beta: u32,
    pub xi: f64,
    pub omega: f64,
    pub eps: f64,
    pub d0: f64,
    pub phase_delta: f64,
    /// Mean SNR, linear.
    pub mu1: f64,
}

impl MalagaParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(alpha: f64, beta: u32, xi: f64, omega: f64, eps: f64, d0: f64, phase_delta: f64, mu1: f64) -> Result<Self> {
        let p = MalagaParams {
            alpha,
            beta,
            xi,
            omega,
            eps,
            d0,
            phase_delta,
            mu1,
        };
        p.validate()?;
        Ok(p)
    }

    /// The reference link: α = 2.296, β = 2, ξ = 2.553, Ω = 1.3265,
    /// ε = 0.596, d₀ = 0.1079, phase offset π/2.
    pub fn baseline(mu1: f64) -> Self {
        MalagaParams {
            alpha: 2.296,
            beta: 2,
            xi: 2.553,
            omega: 1.3265,
            eps: 0.596,
            d0: 0.1079,
            phase_delta: FRAC_PI_2,
            mu1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::parameter(field, format!("{v} must be positive and finite")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("xi", self.xi)?;
        positive("d0", self.d0)?;
        positive("mu1", self.mu1)?;
        if self.beta == 0 {
            return Err(Error::parameter("beta", "must be an integer ≥ 1"));
        }
        if !(self.omega >= 0.0) || !self.omega.is_finite() {
            return Err(Error::parameter("omega", format!("{} must be non-negative", self.omega)));
        }
        if !(0.0..1.0).contains(&self.eps) {
            // eps = 1 leaves no scattered power (h = 0) and A is undefined.
            return Err(Error::parameter("eps", format!("{} is not in [0, 1)", self.eps)));
        }
        if !(self.phase_delta.abs() <= std::f64::consts::PI) {
            return Err(Error::parameter("phase_delta", format!("{} is not in [-π, π]", self.phase_delta)));
        }
        Ok(())
    }

    pub fn with_mu1(&self, mu1: f64) -> Self {
        MalagaParams { mu1, ..*self }
    }

    pub fn with_mu1_db(&self, mu1_db: f64) -> Self {
        self.with_mu1(db_to_linear(mu1_db))
    }

    pub fn mu1_db(&self) -> f64 {
        linear_to_db(self.mu1)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Constants of the density derived from [`MalagaParams`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub big_a: f64,
    pub big_b: f64,
    pub h: f64,
    pub omega_prime: f64,
    /// `b_m`, `m = 1..=β`. Zero for `m ≥ 2` when `Ω′ = 0`.
    pub b_weights: Vec<f64>,
    /// Mixture probabilities `A b_m Γ(α) Γ(m) / 2`; they sum to one.
    pub mixture: Vec<f64>,
}

pub fn derive_constants(p: &MalagaParams) -> Result<DerivedConstants> {
    p.validate()?;
    let (alpha, beta) = (p.alpha, p.beta as f64);
    let h = 2.0 * p.d0 * (1.0 - p.eps);
    let omega_prime =
        (p.omega + 2.0 * p.d0 * p.eps + 2.0 * (2.0 * p.d0 * p.eps * p.omega).sqrt() * p.phase_delta.cos()).max(0.0);
    let ratio = omega_prime / h;
    let xi2 = p.xi * p.xi;

    let ln_a = 2f64.ln() + 0.5 * alpha * alpha.ln() - (1.0 + 0.5 * alpha) * h.ln() - log_gamma(alpha)?
        + (beta + 0.5 * alpha) * (beta / (beta + ratio)).ln();
    let big_b = xi2 * alpha * beta * (h + omega_prime) / ((xi2 + 1.0) * (h * beta + omega_prime));

    let mut b_weights = Vec::with_capacity(p.beta as usize);
    let mut mixture = Vec::with_capacity(p.beta as usize);
    for m in 1..=p.beta {
        let mf = m as f64;
        let ln_binom = ln_gamma_pos(beta) - ln_gamma_pos(mf) - ln_gamma_pos(beta - mf + 1.0);
        let ln_ratio_pow = if m == 1 {
            0.0
        } else if ratio == 0.0 {
            f64::NEG_INFINITY
        } else {
            (mf - 1.0) * ratio.ln()
        };
        let ln_b = ln_binom + (1.0 + 0.5 * alpha) * (h * beta + omega_prime).ln() - ln_gamma_pos(mf) + ln_ratio_pow
            - (0.5 * alpha + mf) * beta.ln()
            - 0.5 * alpha * alpha.ln();
        b_weights.push(ln_b.exp());
        mixture.push((ln_a + ln_b + ln_gamma_pos(alpha) + ln_gamma_pos(mf) - 2f64.ln()).exp());
    }
    let big_a = ln_a.exp();
    if !big_a.is_finite() || !big_b.is_finite() || big_b <= 0.0 || b_weights.iter().any(|b| !b.is_finite()) {
        return Err(Error::parameter("parameters", "derived constants are not finite"));
    }
    if b_weights[0] <= 0.0 {
        return Err(Error::parameter("parameters", "leading mixture weight vanishes"));
    }
    Ok(DerivedConstants {
        big_a,
        big_b,
        h,
        omega_prime,
        b_weights,
        mixture,
    })
}

fn pdf_kernel(p: &MalagaParams, m: u32, z: f64) -> Result<GParams> {
    let xi2 = p.xi * p.xi;
    GParams::new(3, 0, &[xi2 + 1.0], &[xi2, p.alpha, m as f64], z)
}

/// Exact SNR density.
pub fn exact_pdf(x: f64, p: &MalagaParams) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("exact_pdf", format!("x = {x} must be positive")));
    }
    let c = derive_constants(p)?;
    let xi2 = p.xi * p.xi;
    let z = c.big_b * x / p.mu1;
    let control = SeriesControl::default();
    let mut total = 0.0;
    for (i, &b) in c.b_weights.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let m = i as u32 + 1;
        let ln_scale = (0.5 * xi2 * c.big_a * b / x).ln();
        let g = meijer_g_scaled(&pdf_kernel(p, m, z)?, &control, ln_scale).map_err(|e| with_branch(e, m))?;
        total += g.value;
    }
    Ok(total.max(0.0))
}

/// Exact CDF, `(ξ²A/2) Σ b_m G^{3,1}_{2,4}(Bx/μ₁ | 1, ξ²+1; ξ², α, m, 0)`.
pub fn exact_cdf(x: f64, p: &MalagaParams) -> Result<f64> {
    if !(x >= 0.0) || x.is_nan() {
        return Err(Error::domain("exact_cdf", format!("x = {x} must be non-negative")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let c = derive_constants(p)?;
    let xi2 = p.xi * p.xi;
    let z = c.big_b * x / p.mu1;
    let control = SeriesControl::default();
    let mut total = 0.0;
    for (i, &b) in c.b_weights.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let m = i as u32 + 1;
        let params = GParams::new(3, 1, &[1.0, xi2 + 1.0], &[xi2, p.alpha, m as f64, 0.0], z)?;
        let g = meijer_g_scaled(&params, &control, (0.5 * xi2 * c.big_a * b).ln()).map_err(|e| with_branch(e, m))?;
        total += g.value;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Exact MGF, `(ξ²A/2) Σ b_m G^{3,1}_{2,3}(B/(sμ₁) | 1, ξ²+1; ξ², α, m)`.
pub fn exact_mgf(s: f64, p: &MalagaParams) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::domain("exact_mgf", format!("s = {s} must be non-negative")));
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    let c = derive_constants(p)?;
    let xi2 = p.xi * p.xi;
    let z = c.big_b / (s * p.mu1);
    let control = SeriesControl::default();
    let mut total = 0.0;
    for (i, &b) in c.b_weights.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let m = i as u32 + 1;
        let params = GParams::new(3, 1, &[1.0, xi2 + 1.0], &[xi2, p.alpha, m as f64], z)?;
        let g = meijer_g_scaled(&params, &control, (0.5 * xi2 * c.big_a * b).ln()).map_err(|e| with_branch(e, m))?;
        total += g.value;
    }
    Ok(total.clamp(0.0, 1.0))
}

fn with_branch(e: Error, m: u32) -> Error {
    match e {
        Error::Convergence { context, partial, terms } => Error::Convergence {
            context: format!("mixture term m = {m}: {context}"),
            partial,
            terms,
        },
        other => other,
    }
}

/// `E[γ^i]` from the Mellin transform of the density.
pub fn exact_moment(i: usize, p: &MalagaParams) -> Result<f64> {
    if i > MAX_MOMENT_ORDER {
        return Err(Error::domain("exact_moment", format!("order {i} exceeds {MAX_MOMENT_ORDER}")));
    }
    let c = derive_constants(p)?;
    let xi2 = p.xi * p.xi;
    let fi = i as f64;
    let ln_front = (0.5 * xi2 * c.big_a).ln() + fi * (p.mu1 / c.big_b).ln();
    let mut total = 0.0;
    for (k, &b) in c.b_weights.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let m = (k + 1) as f64;
        let ln_term = ln_front + b.ln() + ln_gamma_pos(xi2 + fi) + ln_gamma_pos(p.alpha + fi) + ln_gamma_pos(m + fi)
            - ln_gamma_pos(xi2 + 1.0 + fi);
        total += ln_term.exp();
    }
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::domain("exact_moment", format!("order {i} overflows")));
    }
    Ok(total)
}

/// `μ₀ … μ_{K-1}` of a positive variate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    moments: Vec<f64>,
}

impl MomentVector {
    /// Checks normalisation, positivity and log-convexity.
    pub fn new(moments: Vec<f64>) -> Result<Self> {
        if moments.len() < FIT_MOMENTS {
            return Err(Error::parameter("moments", format!("need {FIT_MOMENTS} moments, got {}", moments.len())));
        }
        if (moments[0] - 1.0).abs() > 1e-10 {
            return Err(Error::parameter("moments", format!("μ₀ = {} is not 1", moments[0])));
        }
        if let Some(bad) = moments.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
            return Err(Error::parameter("moments", format!("{bad} is not positive and finite")));
        }
        for i in 1..moments.len() - 1 {
            let lhs = moments[i - 1] * moments[i + 1];
            let rhs = moments[i] * moments[i];
            if lhs < rhs * (1.0 - 1e-12) {
                return Err(Error::parameter("moments", format!("sequence is not log-convex at order {i}")));
            }
        }
        Ok(MomentVector { moments })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.moments
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.moments[1]
    }
}

pub fn moment_vector(p: &MalagaParams) -> Result<MomentVector> {
    let moments = (0..FIT_MOMENTS).map(|i| exact_moment(i, p)).collect::<Result<Vec<_>>>()?;
    MomentVector::new(moments)
}

/// On-disk channel description. SNR is given in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub alpha: f64,
    pub beta: f64,
    pub xi: f64,
    pub omega: f64,
    pub eps: f64,
    pub d0: f64,
    pub phase_delta: f64,
    pub mu1_db: f64,
}

impl ChannelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Input(format!("channel file line {} column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_params(&self) -> Result<MalagaParams> {
        if !(self.beta >= 1.0) || self.beta.fract() != 0.0 || self.beta > u32::MAX as f64 {
            return Err(Error::parameter("beta", format!("{} must be an integer ≥ 1", self.beta)));
        }
        if !self.mu1_db.is_finite() {
            return Err(Error::parameter("mu1_db", "must be finite"));
        }
        MalagaParams::new(
            self.alpha,
            self.beta as u32,
            self.xi,
            self.omega,
            self.eps,
            self.d0,
            self.phase_delta,
            db_to_linear(self.mu1_db),
        )
    }
}

impl From<&MalagaParams> for ChannelFile {
    fn from(p: &MalagaParams) -> Self {
        ChannelFile {
            alpha: p.alpha,
            beta: p.beta as f64,
            xi: p.xi,
            omega: p.omega,
            eps: p.eps,
            d0: p.d0,
            phase_delta: p.phase_delta,
            mu1_db: p.mu1_db(),
        }
    }
}
