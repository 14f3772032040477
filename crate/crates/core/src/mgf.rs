//! Moment-generating functions of one fitted variate and of sums of them.
//!
//! A single variate has
//!
//! ```text
//! M(s) = (a₁/s) G^{2,1}_{3,2}(1/(s a₂) | 0, a₃, a₄; a₅, a₆)
//!      = Σ_{k=1,2} (s a₂)^{-1-a_{k+4}} Σ_l β_l^{(k)} (s a₂)^{-l},
//! ```
//!
//! the second line being the residue sum over the two left pole families.
//! The unitless coefficients `β_l^{(k)} = τ b_l^{(k)} a₂^l` (with `τ = a₁a₂`)
//! are what the crate stores; the conventional `b_l^{(k)}` carry `a₂^{-l}`
//! and `a₁` separately and overflow easily.
//!
//! Sums of independent branches multiply MGFs. Expanding the product gives a
//! finite set of groups, each a power series in `y = s·a_ref`:
//! `Σ_g e^{ln w_g} y^{-E_g} Σ_l d_{g,l} y^{-l}`. The i.i.d case has `N+1`
//! groups (binomial in the family counts, series powers by the classical
//! power recurrence); the i.n.i.d case enumerates all `2^N` family choices.
//! These expansions are asymptotic in `1/y`; where they stop converging the
//! product of closed-form single-branch MGFs is used instead.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fit::{approx_pdf, FittedApprox};
use crate::special::gamma::{ln_gamma_complex, ln_gamma_pos};
use crate::special::meijer::{meijer_g_scaled, GParams, SeriesControl, COLLISION_SHIFT, COLLISION_TOL};
use crate::special::quadrature::GaussLegendre;

/// Largest branch count accepted by the `2^N` enumeration.
pub const MAX_INID_BRANCHES: usize = 20;

/// Largest accepted ratio of the biggest term level to the sum.
pub const SUM_CANCELLATION_LIMIT: f64 = 1e5;

/// Fitted branches of a combiner.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    fits: Vec<FittedApprox>,
    iid: bool,
}

impl BranchSet {
    /// `n` copies of one fit.
    pub fn iid(fit: FittedApprox, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::parameter("branches", "need at least one branch"));
        }
        Ok(BranchSet { fits: vec![fit; n], iid: true })
    }

    /// Arbitrary fits; flagged i.i.d when they are all equal.
    pub fn inid(fits: Vec<FittedApprox>) -> Result<Self> {
        if fits.is_empty() {
            return Err(Error::parameter("branches", "need at least one branch"));
        }
        let iid = fits.iter().all(|f| *f == fits[0]);
        Ok(BranchSet { fits, iid })
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }

    pub fn is_iid(&self) -> bool {
        self.iid
    }

    pub fn fits(&self) -> &[FittedApprox] {
        &self.fits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MgfMethod {
    ClosedForm,
    ResidueSeries,
    Quadrature,
}

impl MgfMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            MgfMethod::ClosedForm => "closed_form",
            MgfMethod::ResidueSeries => "residue_series",
            MgfMethod::Quadrature => "quadrature",
        }
    }
}

/// An MGF value with its provenance. `converged` refers to the residue
/// series; it is false whenever a fallback produced the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MgfValue {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
    pub method: MgfMethod,
}

/// Unitless residue coefficients `β_l^{(k)}`, `k ∈ {1, 2}`, of one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchCoeffs {
    /// `a₅`, `a₆` after any pole-collision shift.
    pub exponents: [f64; 2],
    pub beta: [Vec<f64>; 2],
    pub perturbed: bool,
}

/// Residue coefficients of every branch of a set.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoeffs {
    pub branches: Vec<BranchCoeffs>,
    pub order: usize,
}

impl SeriesCoeffs {
    pub fn new(set: &BranchSet, order: usize) -> Result<Self> {
        let branches = if set.iid {
            vec![branch_coeffs(&set.fits[0], order)?]
        } else {
            set.fits.iter().map(|f| branch_coeffs(f, order)).collect::<Result<_>>()?
        };
        Ok(SeriesCoeffs { branches, order })
    }
}

/// `β_l^{(k)}` for `l = 0..=order`.
pub fn branch_coeffs(f: &FittedApprox, order: usize) -> Result<BranchCoeffs> {
    let (mut a5, a6) = (f.a5, f.a6);
    let d = a6 - a5;
    let mut perturbed = false;
    if (d - d.round()).abs() < COLLISION_TOL {
        a5 += COLLISION_SHIFT;
        perturbed = true;
    }
    let exps = [a5, a6];
    let ln_tau = f.ln_tau();
    let mut beta = [Vec::with_capacity(order + 1), Vec::with_capacity(order + 1)];
    for k in 0..2 {
        let e = exps[k];
        let other = exps[1 - k];
        for l in 0..=order {
            let lf = l as f64;
            let num = ln_gamma_complex(Complex64::new(1.0 + e + lf, 0.0)) + ln_gamma_complex(Complex64::new(other - e - lf, 0.0));
            if !num.re.is_finite() {
                return Err(Error::Coefficient { index: l });
            }
            let den = ln_gamma_complex(f.a3 - e - lf) + ln_gamma_complex(f.a4 - e - lf);
            if den.re == f64::INFINITY {
                beta[k].push(0.0);
                continue;
            }
            let ln = num - den + Complex64::new(ln_tau - ln_gamma_pos(lf + 1.0), PI * (l % 2) as f64);
            let v = ln.exp().re;
            if !v.is_finite() {
                if l == 0 {
                    return Err(Error::Coefficient { index: l });
                }
                // the series is asymptotic; terms this large are never used
                break;
            }
            beta[k].push(v);
        }
    }
    let len = beta[0].len().min(beta[1].len());
    beta[0].truncate(len);
    beta[1].truncate(len);
    Ok(BranchCoeffs {
        exponents: exps,
        beta,
        perturbed,
    })
}

/// The conventional coefficients
/// `b_l^{(k)} = (-1)^l Γ(1+a_{k+4}+l) Γ(±(a₆-a₅)-l) / (l! Γ(a₃-a_{k+4}-l) Γ(a₄-a_{k+4}-l)) · a₂^{-l}`,
/// so that `M(s) = (a₁/s) Σ_k (s a₂)^{-a_{k+4}} Σ_l b_l^{(k)} s^{-l}`.
pub fn bl_coefficients(f: &FittedApprox, k: usize, order: usize) -> Result<Vec<f64>> {
    if !(1..=2).contains(&k) {
        return Err(Error::parameter("k", format!("{k} is not 1 or 2")));
    }
    let c = branch_coeffs(f, order)?;
    let ln_a2 = f.a2.ln();
    Ok(c.beta[k - 1]
        .iter()
        .enumerate()
        .map(|(l, b)| b * (-f.ln_tau() - l as f64 * ln_a2).exp())
        .collect())
}

/// Coefficients of `(Σ b_l x^l)^k` up to the length of `b`.
pub fn cm_recurrence(b: &[f64], k: u32) -> Result<Vec<f64>> {
    if b.is_empty() {
        return Ok(Vec::new());
    }
    if k == 0 {
        let mut c = vec![0.0; b.len()];
        c[0] = 1.0;
        return Ok(c);
    }
    if b[0] == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let kf = k as f64;
    let mut c = Vec::with_capacity(b.len());
    c.push(b[0].powi(k as i32));
    for m in 1..b.len() {
        let mf = m as f64;
        let mut acc = 0.0;
        for l in 1..=m {
            let lf = l as f64;
            acc += (lf * kf - mf + lf) * b[l] * c[m - l];
        }
        c.push(acc / (mf * b[0]));
    }
    Ok(c)
}

/// Truncated product of two power series.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n).map(|l| (0..=l).map(|q| a[q] * b[l - q]).sum()).collect()
}

/// One term group `e^{ln_weight} y^{-exponent} Σ_l coeffs[l] y^{-l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesGroup {
    pub ln_weight: f64,
    pub exponent: f64,
    pub coeffs: Vec<f64>,
}

/// A sum MGF expanded in `y = s·scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumExpansion {
    pub scale: f64,
    pub groups: Vec<SeriesGroup>,
    pub branches: usize,
}

/// Outcome of summing an expansion in lockstep over `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
}

impl SumExpansion {
    pub fn iid(f: &FittedApprox, n: usize, order: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::parameter("branches", "need at least one branch"));
        }
        let c = branch_coeffs(f, order)?;
        let mut groups = Vec::with_capacity(n + 1);
        let nf = n as f64;
        for k1 in 0..=n {
            let k2 = n - k1;
            let p1 = cm_recurrence(&c.beta[0], k1 as u32)?;
            let p2 = cm_recurrence(&c.beta[1], k2 as u32)?;
            groups.push(SeriesGroup {
                ln_weight: ln_gamma_pos(nf + 1.0) - ln_gamma_pos(k1 as f64 + 1.0) - ln_gamma_pos(k2 as f64 + 1.0),
                exponent: nf + k1 as f64 * c.exponents[0] + k2 as f64 * c.exponents[1],
                coeffs: convolve(&p1, &p2),
            });
        }
        Ok(SumExpansion {
            scale: f.a2,
            groups,
            branches: n,
        })
    }

    pub fn inid(set: &BranchSet, order: usize) -> Result<Self> {
        let n = set.len();
        if n > MAX_INID_BRANCHES {
            return Err(Error::TooManyBranches(n));
        }
        // geometric mean keeps every (scale/a₂ⱼ)^l moderate
        let scale = (set.fits.iter().map(|f| f.a2.ln()).sum::<f64>() / n as f64).exp();
        let per_branch: Vec<(BranchCoeffs, f64)> = set
            .fits
            .iter()
            .map(|f| Ok((branch_coeffs(f, order)?, (scale / f.a2).ln())))
            .collect::<Result<_>>()?;
        // β_l (scale/a₂ⱼ)^l per branch and family
        let scaled: Vec<[Vec<f64>; 2]> = per_branch
            .iter()
            .map(|(c, ln_r)| {
                let sc = |v: &Vec<f64>| v.iter().enumerate().map(|(l, b)| b * (l as f64 * ln_r).exp()).collect::<Vec<_>>();
                [sc(&c.beta[0]), sc(&c.beta[1])]
            })
            .collect();
        let mut groups = Vec::with_capacity(1 << n);
        for mask in 0..(1usize << n) {
            let mut ln_weight = 0.0;
            let mut exponent = n as f64;
            let mut coeffs: Option<Vec<f64>> = None;
            for (j, ((c, ln_r), sc)) in per_branch.iter().zip(&scaled).enumerate() {
                let k = (mask >> j) & 1;
                let e = c.exponents[k];
                exponent += e;
                ln_weight += (1.0 + e) * ln_r;
                coeffs = Some(match coeffs {
                    None => sc[k].clone(),
                    Some(acc) => convolve(&acc, &sc[k]),
                });
            }
            groups.push(SeriesGroup {
                ln_weight,
                exponent,
                coeffs: coeffs.unwrap_or_default(),
            });
        }
        Ok(SumExpansion { scale, groups, branches: n })
    }

    /// Sums `Σ_g w_g T_g(l)` in lockstep over `l`, where `T_g(l)` is the
    /// caller's image of the term `coeffs[l] y^{-(exponent+l)}`.
    pub fn sum_terms<F>(&self, control: &SeriesControl, mut image: F) -> SeriesSum
    where
        F: FnMut(f64) -> f64,
    {
        let order = self.groups.iter().map(|g| g.coeffs.len()).min().unwrap_or(0).min(control.max_terms);
        let mut total = 0.0;
        let mut small = 0;
        let mut rising = 0;
        let mut peak: f64 = 0.0;
        let mut prev = f64::INFINITY;
        // an initial hump is normal; divergence only counts once the terms
        // have started to fall
        let mut past_peak = false;
        let done = |total: f64, l: usize, converged: bool| SeriesSum {
            value: total,
            terms_used: l + 1,
            converged,
        };
        for l in 0..order {
            let mut level = 0.0;
            let mut level_abs = 0.0;
            for g in &self.groups {
                let c = g.coeffs[l];
                if c == 0.0 {
                    continue;
                }
                let t = c * image(g.exponent + l as f64) * g.ln_weight.exp();
                level += t;
                level_abs += t.abs();
            }
            total += level;
            peak = peak.max(level_abs);
            if !total.is_finite() {
                return done(total, l, false);
            }
            if level_abs <= control.rel_tol * total.abs() {
                small += 1;
                if small >= 3 {
                    let clean = peak <= SUM_CANCELLATION_LIMIT * total.abs();
                    return done(total, l, clean);
                }
            } else {
                small = 0;
            }
            if level_abs < prev {
                past_peak = true;
                rising = 0;
            } else if past_peak && level_abs > 0.0 {
                rising += 1;
                if rising >= control.divergence_window {
                    return done(total, l, false);
                }
            }
            prev = level_abs;
        }
        SeriesSum {
            value: total,
            terms_used: order,
            converged: false,
        }
    }

    /// Value of the expansion at `s`.
    pub fn evaluate(&self, s: f64, control: &SeriesControl) -> SeriesSum {
        let ln_y = (s * self.scale).ln();
        self.sum_terms(control, |e| (-e * ln_y).exp())
    }
}

/// `M(s)` of one fitted variate via its Meijer-G form, falling back to
/// quadrature of `∫ e^{-sx} f(x) dx`.
pub fn single_mgf_closed(s: f64, f: &FittedApprox) -> Result<MgfValue> {
    check_s(s)?;
    let params = GParams::from_complex(
        2,
        1,
        vec![Complex64::new(0.0, 0.0), f.a3, f.a4],
        vec![Complex64::new(f.a5, 0.0), Complex64::new(f.a6, 0.0)],
        1.0 / (s * f.a2),
    )?;
    match meijer_g_scaled(&params, &SeriesControl::default(), f.ln_a1 - s.ln()) {
        Ok(g) => Ok(MgfValue {
            value: g.value,
            terms_used: g.terms_used,
            converged: true,
            method: MgfMethod::ClosedForm,
        }),
        Err(_) => Ok(MgfValue {
            value: mgf_quadrature(s, f)?,
            terms_used: 0,
            converged: false,
            method: MgfMethod::Quadrature,
        }),
    }
}

/// `∫₀^{a₂/2} e^{-sx} f(x) dx`; the fitted density carries no mass beyond.
pub fn mgf_quadrature(s: f64, f: &FittedApprox) -> Result<f64> {
    check_s(s)?;
    let rule = GaussLegendre::new(20)?;
    let hi = 0.5 * f.a2;
    let integrand = |x: f64| (-s * x).exp() * approx_pdf(x, f).unwrap_or(f64::NAN);
    // split where the exponential has decayed
    let knee = (40.0 / s).min(hi);
    let mut total = rule.integrate_adaptive(integrand, 0.0, knee, 1e-10)?;
    if knee < hi {
        total += rule.integrate_adaptive(integrand, knee, hi, 1e-10)?;
    }
    Ok(total)
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain("mgf", format!("s = {s} must be positive")));
    }
    Ok(())
}

/// `Π_j M_j(s)` from the closed forms.
pub fn sum_mgf_product(s: f64, set: &BranchSet) -> Result<MgfValue> {
    if set.iid {
        let one = single_mgf_closed(s, &set.fits[0])?;
        return Ok(MgfValue {
            value: one.value.powi(set.len() as i32),
            ..one
        });
    }
    let mut value = 1.0;
    let mut terms = 0;
    let mut method = MgfMethod::ClosedForm;
    let mut converged = true;
    for f in &set.fits {
        let m = single_mgf_closed(s, f)?;
        value *= m.value;
        terms += m.terms_used;
        if m.method == MgfMethod::Quadrature {
            method = MgfMethod::Quadrature;
            converged = false;
        }
    }
    Ok(MgfValue {
        value,
        terms_used: terms,
        converged,
        method,
    })
}

fn series_or_product(s: f64, expansion: &SumExpansion, set: &BranchSet, control: &SeriesControl) -> Result<MgfValue> {
    let series = expansion.evaluate(s, control);
    if series.converged && series.value > 0.0 && series.value < 1.0 {
        return Ok(MgfValue {
            value: series.value,
            terms_used: series.terms_used,
            converged: true,
            method: MgfMethod::ResidueSeries,
        });
    }
    let product = sum_mgf_product(s, set)?;
    Ok(MgfValue {
        converged: false,
        terms_used: series.terms_used,
        ..product
    })
}

/// MGF of the sum of `n` i.i.d. branches.
pub fn sum_mgf_iid(s: f64, f: &FittedApprox, n: usize, control: &SeriesControl) -> Result<MgfValue> {
    check_s(s)?;
    control.validate()?;
    let expansion = SumExpansion::iid(f, n, control.max_terms)?;
    series_or_product(s, &expansion, &BranchSet::iid(*f, n)?, control)
}

/// MGF of the sum of independent, not necessarily identical branches.
pub fn sum_mgf_inid(s: f64, set: &BranchSet, control: &SeriesControl) -> Result<MgfValue> {
    check_s(s)?;
    control.validate()?;
    let expansion = SumExpansion::inid(set, control.max_terms)?;
    series_or_product(s, &expansion, set, control)
}
