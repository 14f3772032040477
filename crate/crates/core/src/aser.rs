//! Average symbol error rate of an N-branch maximal-ratio combiner.
//!
//! Coherent modulations whose conditional error rate has the Craig form
//! `P(γ) = (2ρ/π) ∫₀^{π/2} exp(-θγ/sin²φ) dφ` average to
//! `(2ρ/π) ∫₀^{π/2} M(θ/sin²φ) dφ`. Applied term by term to the residue
//! expansion of the sum MGF, every `s^{-E}` becomes
//! `(ρ/π) (4/θ)^E B(E+½, E+½)`, which gives the series form. The leading
//! term of that series is the high-SNR asymptote.

use serde::Serialize;
use std::cell::Cell;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fit::FittedApprox;
use crate::mgf::{branch_coeffs, sum_mgf_product, BranchSet, SumExpansion};
use crate::special::gamma::ln_beta;
use crate::special::meijer::{SeriesControl, COLLISION_TOL};
use crate::special::quadrature::GaussLegendre;

/// Craig-form parameters of a coherent modulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulationSpec {
    pub name: String,
    pub rho: f64,
    pub theta: f64,
}

impl ModulationSpec {
    pub fn new(name: impl Into<String>, rho: f64, theta: f64) -> Result<Self> {
        if !(rho > 0.0) || !(theta > 0.0) || !rho.is_finite() || !theta.is_finite() {
            return Err(Error::parameter("modulation", format!("need rho, theta > 0, got {rho}, {theta}")));
        }
        Ok(ModulationSpec {
            name: name.into(),
            rho,
            theta,
        })
    }

    /// Conditional error rate `2ρ Q(√(2θγ))` at instantaneous SNR `γ`.
    pub fn conditional_ser(&self, gamma: f64) -> f64 {
        2.0 * self.rho * crate::special::q_function((2.0 * self.theta * gamma.max(0.0)).sqrt())
    }
}

/// Names accepted by [`modulation_table`].
pub const MODULATIONS: [&str; 3] = ["bpsk", "bfsk", "qpsk-approx"];

/// `bpsk`: `Q(√(2γ))`; `bfsk`: `Q(√γ)`; `qpsk-approx`: `2Q(√γ)`, the
/// nearest-neighbour bound on Gray-mapped QPSK symbol errors.
pub fn modulation_table(name: &str) -> Result<ModulationSpec> {
    let (rho, theta) = match name {
        "bpsk" => (0.5, 1.0),
        "bfsk" => (0.5, 0.5),
        "qpsk-approx" => (1.0, 0.5),
        other => return Err(Error::UnknownModulation(other.to_string())),
    };
    ModulationSpec::new(name, rho, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AserMethod {
    Series,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AserValue {
    pub value: f64,
    pub method: AserMethod,
    pub terms_used: usize,
    /// The series left `[0, 1]` and was clamped.
    pub clamped: bool,
}

impl AserValue {
    /// `series`, `quadrature_fallback`, optionally `+clamped`.
    pub fn flags(&self) -> String {
        let mut s = match self.method {
            AserMethod::Series => "series".to_string(),
            AserMethod::Quadrature => "quadrature_fallback".to_string(),
        };
        if self.clamped {
            s.push_str("+clamped");
        }
        s
    }
}

/// Series ASER of `n` i.i.d. branches, falling back to quadrature.
pub fn aser_iid(m: &ModulationSpec, f: &FittedApprox, n: usize, control: &SeriesControl) -> Result<AserValue> {
    control.validate()?;
    let expansion = SumExpansion::iid(f, n, control.max_terms)?;
    series_or_quadrature(m, &expansion, &BranchSet::iid(*f, n)?, control)
}

/// Series ASER of independent branches over all `2^N` family choices.
pub fn aser_inid(m: &ModulationSpec, set: &BranchSet, control: &SeriesControl) -> Result<AserValue> {
    control.validate()?;
    let expansion = SumExpansion::inid(set, control.max_terms)?;
    series_or_quadrature(m, &expansion, set, control)
}

/// Term-by-term image of a sum-MGF expansion.
pub fn aser_from_expansion(m: &ModulationSpec, expansion: &SumExpansion, control: &SeriesControl) -> crate::mgf::SeriesSum {
    let ln_x = (4.0 / (m.theta * expansion.scale)).ln();
    let pre = m.rho / PI;
    expansion.sum_terms(control, |e| pre * (e * ln_x + ln_beta(e + 0.5, e + 0.5).unwrap_or(f64::NEG_INFINITY)).exp())
}

fn series_or_quadrature(m: &ModulationSpec, expansion: &SumExpansion, set: &BranchSet, control: &SeriesControl) -> Result<AserValue> {
    let sum = aser_from_expansion(m, expansion, control);
    if sum.converged {
        let clamped = !(0.0..=1.0).contains(&sum.value);
        return Ok(AserValue {
            value: sum.value.clamp(0.0, 1.0),
            method: AserMethod::Series,
            terms_used: sum.terms_used,
            clamped,
        });
    }
    Ok(AserValue {
        value: aser_quadrature(m, set)?,
        method: AserMethod::Quadrature,
        terms_used: sum.terms_used,
        clamped: false,
    })
}

/// `(2ρ/π) ∫₀^{π/2} Π_j M_j(θ/sin²φ) dφ` with closed-form branch MGFs.
pub fn aser_quadrature(m: &ModulationSpec, set: &BranchSet) -> Result<f64> {
    aser_quadrature_mgf(m, |s| sum_mgf_product(s, set).map(|v| v.value))
}

/// The same integral for an arbitrary MGF.
pub fn aser_quadrature_mgf<F>(m: &ModulationSpec, mut mgf: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let failure: Cell<Option<(f64, Error)>> = Cell::new(None);
    let rule = GaussLegendre::new(20)?;
    let integral = rule.integrate_adaptive(
        |phi| {
            let sin = phi.sin();
            if sin == 0.0 {
                return 0.0;
            }
            match mgf(m.theta / (sin * sin)) {
                Ok(v) => v,
                Err(e) => {
                    let prev = failure.take();
                    failure.set(prev.or(Some((phi, e))));
                    f64::NAN
                }
            }
        },
        0.0,
        0.5 * PI,
        1e-9,
    );
    if let Some((phi, e)) = failure.take() {
        return Err(Error::QuadratureNode {
            angle: phi,
            detail: e.to_string(),
        });
    }
    Ok(2.0 * m.rho / PI * integral?)
}

/// High-SNR behaviour `P ~ Gc a₂^{-Gd}` of the i.i.d. combiner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticIID {
    pub gc: f64,
    pub ln_gc: f64,
    pub gd: f64,
    /// 1 when `a₅ < a₆`, 2 otherwise.
    pub m_branch: u8,
    pub tau: f64,
    pub a2: f64,
}

impl AsymptoticIID {
    /// Asymptote at the fit's own scale.
    pub fn value(&self) -> f64 {
        (self.ln_gc - self.gd * self.a2.ln()).exp()
    }

    /// Asymptote when the branch scale is `a₂`.
    pub fn at_scale(&self, a2: f64) -> f64 {
        (self.ln_gc - self.gd * a2.ln()).exp()
    }
}

fn check_tie(f: &FittedApprox, branch: usize) -> Result<()> {
    if (f.a5 - f.a6).abs() < COLLISION_TOL {
        return Err(Error::Tie {
            a5: f.a5,
            a6: f.a6,
            branch,
        });
    }
    Ok(())
}

pub fn asymptotic_iid(m: &ModulationSpec, f: &FittedApprox, n: usize) -> Result<AsymptoticIID> {
    if n == 0 {
        return Err(Error::parameter("branches", "need at least one branch"));
    }
    check_tie(f, 0)?;
    let k = usize::from(f.a5 >= f.a6);
    let c = branch_coeffs(f, 0)?;
    let a = c.exponents[k];
    // β₀ = τ b₀ is the leading residue coefficient of the chosen family
    let b0 = c.beta[k][0];
    if !(b0 > 0.0) {
        return Err(Error::Coefficient { index: 0 });
    }
    let nf = n as f64;
    let e = nf * (a + 1.0);
    let ln_gc = (m.rho / PI).ln() + nf * ((a + 1.0) * (4.0 / m.theta).ln() + b0.ln()) + ln_beta(e + 0.5, e + 0.5)?;
    Ok(AsymptoticIID {
        gc: ln_gc.exp(),
        ln_gc,
        gd: e,
        m_branch: k as u8 + 1,
        tau: f.ln_tau().exp(),
        a2: f.a2,
    })
}

/// High-SNR behaviour of independent, non-identical branches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticINID {
    /// `Σ_j min(a₅ⱼ, a₆ⱼ)`.
    pub zeta: f64,
    pub g_indices: Vec<u8>,
    /// `Π_j β₀ⱼ a₂ⱼ^{-min-1}`.
    pub prefactor: f64,
    pub ln_prefactor: f64,
    /// Full asymptote including the modulation factor.
    pub value: f64,
    pub ln_value: f64,
}

pub fn asymptotic_inid(m: &ModulationSpec, set: &BranchSet) -> Result<AsymptoticINID> {
    let n = set.len() as f64;
    let mut zeta = 0.0;
    let mut g = Vec::with_capacity(set.len());
    let mut ln_pre = 0.0;
    for (j, f) in set.fits().iter().enumerate() {
        check_tie(f, j)?;
        let k = usize::from(f.a5 >= f.a6);
        let c = branch_coeffs(f, 0)?;
        let a = c.exponents[k];
        let b0 = c.beta[k][0];
        if !(b0 > 0.0) {
            return Err(Error::Coefficient { index: 0 });
        }
        zeta += a;
        g.push(k as u8 + 1);
        ln_pre += b0.ln() - (a + 1.0) * f.a2.ln();
    }
    let e = zeta + n;
    let ln_value = (m.rho / PI).ln() + ln_beta(e + 0.5, e + 0.5)? + e * (4.0 / m.theta).ln() + ln_pre;
    Ok(AsymptoticINID {
        zeta,
        g_indices: g,
        prefactor: ln_pre.exp(),
        ln_prefactor: ln_pre,
        value: ln_value.exp(),
        ln_value,
    })
}
