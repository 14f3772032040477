//! Meijer G-function evaluation for real positive arguments.
//!
//! With the Mellin-Barnes convention
//!
//! ```text
//! G^{m,n}_{p,q}(z | a; b) = 1/(2πi) ∫ ∏_{j≤m} Γ(b_j+s) ∏_{j≤n} Γ(1-a_j-s)
//!                                 / (∏_{j>m} Γ(1-b_j-s) ∏_{j>n} Γ(a_j+s)) z^{-s} ds
//! ```
//!
//! the primary evaluation sums the residues at the left poles `s = -b_h - k`
//! (`h ≤ m`), each family being a power series in `z`. Consecutive terms are
//! produced by their rational ratio; only the leading term of a family (and
//! terms that follow a vanishing one) go through `ln Γ`. When that series
//! diverges, stalls, or cancels catastrophically, the contour integral is
//! evaluated directly on a vertical line.
//!
//! Parameters may be complex provided every group (`b_1..b_m`, `b_{m+1}..b_q`,
//! `a_1..a_n`, `a_{n+1}..a_p`) is closed under conjugation, which keeps the
//! function real on the positive axis.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::gamma::{ln_gamma_complex, near_nonpositive_integer};
use super::quadrature::GaussLegendre;
use crate::error::{Error, Result};

/// Distance to an integer below which two left poles are treated as colliding.
pub const COLLISION_TOL: f64 = 1e-9;
/// Shift applied to the smaller of two colliding lower parameters.
pub const COLLISION_SHIFT: f64 = 1e-6;
/// Ratio `max|term| / |sum|` above which a converged series is distrusted.
const CANCELLATION_LIMIT: f64 = 1e5;
/// Cancellation above which `G^{2,0}_{2,2}` switches to the unit expansion.
const UNIT_SWITCH: f64 = 1e3;
const POLE_TOL: f64 = 1e-10;

/// Truncation policy shared by every residue series in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub rel_tol: f64,
    /// Consecutive non-decreasing terms that mark a series as divergent.
    pub divergence_window: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            max_terms: 200,
            rel_tol: 1e-12,
            divergence_window: 5,
        }
    }
}

impl SeriesControl {
    /// Truncation used for the MGF and error-rate sums.
    pub fn residue_sums() -> Self {
        SeriesControl {
            max_terms: 60,
            rel_tol: 1e-10,
            divergence_window: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::parameter("rel_tol", format!("{} is not in (0, 1)", self.rel_tol)));
        }
        if self.max_terms < 10 {
            return Err(Error::parameter("max_terms", format!("{} < 10", self.max_terms)));
        }
        if self.divergence_window == 0 {
            return Err(Error::parameter("divergence_window", "must be positive"));
        }
        Ok(())
    }
}

/// Shape, parameters and argument of one G-function evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GParams {
    m: usize,
    n: usize,
    upper: Vec<Complex64>,
    lower: Vec<Complex64>,
    argument: f64,
    perturbations: Vec<Perturbation>,
}

/// A lower parameter moved off an integer pole collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub index: usize,
    pub original: f64,
    pub shifted: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GMethod {
    ResidueSeries,
    ContourQuadrature,
    /// `G^{2,0}_{2,2}` through its hypergeometric expansion about `z = 1`.
    UnitExpansion,
    /// `p = q`, `n = 0`, `m = q` and `z > 1`: the function is identically zero.
    Vanishing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GValue {
    pub value: f64,
    pub terms_used: usize,
    pub method: GMethod,
    pub perturbations: Vec<Perturbation>,
}

impl GParams {
    /// Real parameters.
    pub fn new(m: usize, n: usize, upper: &[f64], lower: &[f64], argument: f64) -> Result<Self> {
        Self::from_complex(
            m,
            n,
            upper.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
            lower.iter().map(|&b| Complex64::new(b, 0.0)).collect(),
            argument,
        )
    }

    pub fn from_complex(
        m: usize,
        n: usize,
        upper: Vec<Complex64>,
        lower: Vec<Complex64>,
        argument: f64,
    ) -> Result<Self> {
        let (p, q) = (upper.len(), lower.len());
        if m > q || n > p {
            return Err(Error::parameter("shape", format!("need m ≤ q and n ≤ p, got m={m}, n={n}, p={p}, q={q}")));
        }
        if m == 0 {
            return Err(Error::parameter("shape", "residue evaluation needs m ≥ 1"));
        }
        if !(argument > 0.0) || !argument.is_finite() {
            return Err(Error::domain("meijer_g", format!("argument {argument} must be positive and finite")));
        }
        if upper.iter().chain(&lower).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::parameter("parameters", "non-finite entry"));
        }
        for (name, group) in [
            ("b_1..b_m", &lower[..m]),
            ("b_m+1..b_q", &lower[m..]),
            ("a_1..a_n", &upper[..n]),
            ("a_n+1..a_p", &upper[n..]),
        ] {
            if !conjugate_closed(group) {
                return Err(Error::parameter(name, "complex parameters must appear in conjugate pairs"));
            }
        }
        let mut params = GParams {
            m,
            n,
            upper,
            lower,
            argument,
            perturbations: Vec::new(),
        };
        params.separate_left_poles();
        for j in 0..n {
            for h in 0..m {
                let d = params.upper[j] - params.lower[h];
                if d.im.abs() < POLE_TOL && d.re > 0.5 && (d.re - d.re.round()).abs() < POLE_TOL {
                    return Err(Error::parameter(
                        "parameters",
                        format!("a_{} - b_{} is a positive integer; left and right poles overlap", j + 1, h + 1),
                    ));
                }
            }
        }
        Ok(params)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> usize {
        self.upper.len()
    }
    pub fn q(&self) -> usize {
        self.lower.len()
    }
    pub fn argument(&self) -> f64 {
        self.argument
    }
    pub fn upper(&self) -> &[Complex64] {
        &self.upper
    }
    pub fn lower(&self) -> &[Complex64] {
        &self.lower
    }
    pub fn perturbations(&self) -> &[Perturbation] {
        &self.perturbations
    }

    /// Same parameters at a different argument.
    pub fn with_argument(&self, argument: f64) -> Result<Self> {
        if !(argument > 0.0) || !argument.is_finite() {
            return Err(Error::domain("meijer_g", format!("argument {argument} must be positive and finite")));
        }
        let mut p = self.clone();
        p.argument = argument;
        Ok(p)
    }

    /// Shift real lower parameters among the first `m` until no two differ by
    /// an integer.
    fn separate_left_poles(&mut self) {
        for _ in 0..16 {
            let mut moved = false;
            for i in 0..self.m {
                for j in (i + 1)..self.m {
                    let d = self.lower[i] - self.lower[j];
                    if d.im.abs() > COLLISION_TOL || (d.re - d.re.round()).abs() > COLLISION_TOL {
                        continue;
                    }
                    let k = if self.lower[i].re <= self.lower[j].re { i } else { j };
                    let original = self.lower[k].re;
                    self.lower[k].re += COLLISION_SHIFT;
                    self.perturbations.push(Perturbation {
                        index: k,
                        original,
                        shifted: self.lower[k].re,
                    });
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }
}

fn conjugate_closed(group: &[Complex64]) -> bool {
    let tol = 1e-12;
    let mut used = vec![false; group.len()];
    for i in 0..group.len() {
        if used[i] {
            continue;
        }
        let c = group[i];
        if c.im.abs() <= tol * c.norm().max(1.0) {
            used[i] = true;
            continue;
        }
        let partner = (0..group.len()).find(|&j| j != i && !used[j] && (group[j] - c.conj()).norm() <= tol * c.norm().max(1.0));
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return false,
        }
    }
    true
}

/// Outcome of the left-pole residue sum.
#[derive(Debug, Clone, Copy)]
pub struct SeriesOutcome {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
    pub diverged: bool,
    /// `max|term| / |sum|`.
    pub cancellation: f64,
}

/// `G^{m,n}_{p,q}(z)`.
pub fn meijer_g(params: &GParams, control: &SeriesControl) -> Result<GValue> {
    meijer_g_scaled(params, control, 0.0)
}

/// `e^{ln_scale} · G^{m,n}_{p,q}(z)`, with the scale folded into every term so
/// that huge prefactors and tiny functions (or the reverse) do not overflow.
pub fn meijer_g_scaled(params: &GParams, control: &SeriesControl, ln_scale: f64) -> Result<GValue> {
    control.validate()?;
    let (p, q) = (params.p(), params.q());
    if p == q && params.n == 0 && params.m == q && params.argument > 1.0 {
        return Ok(GValue {
            value: 0.0,
            terms_used: 0,
            method: GMethod::Vanishing,
            perturbations: params.perturbations.clone(),
        });
    }
    let series = residue_series(params, control, ln_scale);
    let unit_shape = (params.m, params.n, p, q) == (2, 0, 2, 2);
    // The unit expansion is cheap and clean wherever the series starts to
    // cancel, so the series is only trusted when nearly cancellation-free.
    let limit = if unit_shape { UNIT_SWITCH } else { CANCELLATION_LIMIT };
    if series.converged && series.cancellation <= limit {
        return Ok(GValue {
            value: series.value,
            terms_used: series.terms_used,
            method: GMethod::ResidueSeries,
            perturbations: params.perturbations.clone(),
        });
    }
    if unit_shape {
        if let Ok(value) = unit_expansion(params, control.rel_tol, ln_scale) {
            return Ok(GValue {
                value,
                terms_used: 0,
                method: GMethod::UnitExpansion,
                perturbations: params.perturbations.clone(),
            });
        }
    }
    match mellin_barnes_scaled(params, control.rel_tol.max(1e-13), ln_scale) {
        Ok(v) => Ok(v),
        // A converged series that merely lost some digits beats no answer.
        Err(_) if series.converged && series.cancellation * 1e-16 < 1e-6 => Ok(GValue {
            value: series.value,
            terms_used: series.terms_used,
            method: GMethod::ResidueSeries,
            perturbations: params.perturbations.clone(),
        }),
        Err(e) => Err(Error::Convergence {
            context: format!(
                "G^{{{},{}}}_{{{},{}}}({}) series and contour fallback ({e})",
                params.m,
                params.n,
                p,
                q,
                params.argument
            ),
            partial: series.value,
            terms: series.terms_used,
        }),
    }
}

/// Sum of residues at the left poles, truncated per `control`.
pub fn residue_series(params: &GParams, control: &SeriesControl, ln_scale: f64) -> SeriesOutcome {
    let (p, q) = (params.p(), params.q());
    let z = params.argument;
    let ln_z = z.ln();
    // Divergence by stalling terms is only meaningful where the series is not
    // known to converge.
    let may_diverge = p > q || (p == q && z >= 1.0);

    let mut total = Complex64::new(0.0, 0.0);
    let mut max_abs = 0.0f64;
    let mut terms_used = 0;
    let mut converged = true;
    let mut diverged = false;

    for h in 0..params.m {
        let mut family = Complex64::new(0.0, 0.0);
        let mut prev: Option<Complex64> = None;
        let mut small_run = 0;
        let mut rise_run = 0;
        let mut prev_abs = f64::INFINITY;
        let mut family_done = false;
        for k in 0..control.max_terms {
            let term = match prev {
                Some(t) => match term_ratio(params, h, k - 1) {
                    Some(r) => Some(t * r * z),
                    None => direct_term(params, h, k, ln_scale, ln_z),
                },
                None => direct_term(params, h, k, ln_scale, ln_z),
            };
            terms_used += 1;
            let abs = term.map_or(0.0, |t| t.norm());
            if let Some(t) = term {
                family += t;
            }
            prev = term.filter(|t| t.norm() > 0.0);
            max_abs = max_abs.max(abs);
            if !abs.is_finite() || !family.re.is_finite() {
                diverged = true;
                break;
            }
            if abs <= control.rel_tol * family.norm() || (abs == 0.0 && family.norm() == 0.0 && k > 0) {
                small_run += 1;
                if small_run >= 3 {
                    family_done = true;
                    break;
                }
            } else {
                small_run = 0;
            }
            if may_diverge && k > 0 {
                if abs >= prev_abs && abs > 0.0 {
                    rise_run += 1;
                    if rise_run >= control.divergence_window {
                        diverged = true;
                        break;
                    }
                } else {
                    rise_run = 0;
                }
            }
            prev_abs = abs;
            // A family whose terms vanish identically from here on is complete.
            if term.is_none() && family_vanishes_from(params, h, k) {
                family_done = true;
                break;
            }
        }
        if !family_done {
            converged = false;
        }
        total += family;
        if diverged {
            break;
        }
    }
    let value = total.re;
    SeriesOutcome {
        value,
        terms_used,
        converged: converged && !diverged,
        diverged,
        cancellation: if value != 0.0 { max_abs / value.abs() } else if max_abs == 0.0 { 1.0 } else { f64::INFINITY },
    }
}

/// Residue of the `k`-th pole of family `h`, or `None` when a reciprocal
/// gamma factor vanishes there.
fn direct_term(params: &GParams, h: usize, k: usize, ln_scale: f64, ln_z: f64) -> Option<Complex64> {
    let bh = params.lower[h];
    let kf = k as f64;
    let one = Complex64::new(1.0, 0.0);
    let mut ln = Complex64::new(ln_scale - ln_gamma_real(kf + 1.0), PI * (k % 2) as f64);
    for (j, &bj) in params.lower.iter().enumerate() {
        if j < params.m {
            if j != h {
                ln += ln_gamma_complex(bj - bh - kf);
            }
        } else {
            let arg = one - bj + bh + kf;
            if near_nonpositive_integer(arg, POLE_TOL) {
                return None;
            }
            ln -= ln_gamma_complex(arg);
        }
    }
    for (j, &aj) in params.upper.iter().enumerate() {
        if j < params.n {
            ln += ln_gamma_complex(one - aj + bh + kf);
        } else {
            let arg = aj - bh - kf;
            if near_nonpositive_integer(arg, POLE_TOL) {
                return None;
            }
            ln -= ln_gamma_complex(arg);
        }
    }
    ln += (bh + kf) * ln_z;
    Some(ln.exp())
}

fn ln_gamma_real(x: f64) -> f64 {
    super::gamma::ln_gamma_pos(x)
}

/// `term_{k+1} / (z · term_k)`, or `None` if a denominator factor vanishes.
fn term_ratio(params: &GParams, h: usize, k: usize) -> Option<Complex64> {
    let bh = params.lower[h];
    let kf = k as f64;
    let one = Complex64::new(1.0, 0.0);
    let mut num = Complex64::new(-1.0, 0.0);
    let mut den = Complex64::new(kf + 1.0, 0.0);
    for (j, &bj) in params.lower.iter().enumerate() {
        if j < params.m {
            if j != h {
                den *= bj - bh - kf - 1.0;
            }
        } else {
            den *= one - bj + bh + kf;
        }
    }
    for (j, &aj) in params.upper.iter().enumerate() {
        if j < params.n {
            num *= one - aj + bh + kf;
        } else {
            num *= aj - bh - kf - 1.0;
        }
    }
    if den.norm() <= POLE_TOL * (1.0 + kf) {
        return None;
    }
    Some(num / den)
}

/// True when some `1/Γ(a_j - b_h - k')` factor is zero for every `k' ≥ k`.
fn family_vanishes_from(params: &GParams, h: usize, k: usize) -> bool {
    let bh = params.lower[h];
    params.upper[params.n..].iter().any(|&aj| {
        let arg = aj - bh - k as f64;
        near_nonpositive_integer(arg, POLE_TOL)
    })
}

/// `G^{2,0}_{2,2}(z | a₁,a₂; b₁,b₂)` for `0 < z < 1` as
/// `z^{b₁}(1-z)^{c-1}/Γ(c) · ₂F₁(a₂-b₂, a₁-b₂; c; 1-z)`, `c = a₁+a₂-b₁-b₂`.
///
/// The residue series cancels badly once `|a_j|² z` is large; this form
/// does not, at the price of slow convergence for small `z`.
pub fn unit_expansion(params: &GParams, rel_tol: f64, ln_scale: f64) -> Result<f64> {
    const MAX_TERMS: usize = 500_000;
    let z = params.argument;
    if (params.m, params.n, params.p(), params.q()) != (2, 0, 2, 2) || !(z < 1.0) {
        return Err(Error::domain("unit_expansion", "needs G^{2,0}_{2,2} with 0 < z < 1"));
    }
    let (a1, a2) = (params.upper[0], params.upper[1]);
    let (b1, b2) = (params.lower[0], params.lower[1]);
    let c = a1 + a2 - b1 - b2;
    if near_nonpositive_integer(c, POLE_TOL) {
        return Err(Error::domain("unit_expansion", "a₁+a₂-b₁-b₂ is a non-positive integer"));
    }
    let x = 1.0 - z;
    let (a, b) = (a2 - b2, a1 - b2);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut small = 0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        sum += term;
        if !sum.re.is_finite() {
            return Err(Error::domain("unit_expansion", "partial sum overflowed"));
        }
        if term.norm() <= rel_tol * sum.norm() {
            small += 1;
            if small >= 3 {
                let ln_front = Complex64::new(ln_scale, 0.0) + b1 * z.ln() + (c - 1.0) * x.ln() - ln_gamma_complex(c);
                return Ok((ln_front.exp() * sum).re);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Convergence {
        context: "unit expansion of G^{2,0}_{2,2}".into(),
        partial: f64::NAN,
        terms: MAX_TERMS,
    })
}

/// Direct numerical evaluation of the Mellin-Barnes integral.
pub fn mellin_barnes(params: &GParams, rel_tol: f64) -> Result<GValue> {
    mellin_barnes_scaled(params, rel_tol, 0.0)
}

fn ln_integrand(params: &GParams, s: Complex64, ln_scale: f64, ln_z: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let mut ln = Complex64::new(ln_scale, 0.0) - s * ln_z;
    for (j, &bj) in params.lower.iter().enumerate() {
        if j < params.m {
            ln += ln_gamma_complex(bj + s);
        } else {
            ln -= ln_gamma_complex(one - bj - s);
        }
    }
    for (j, &aj) in params.upper.iter().enumerate() {
        if j < params.n {
            ln += ln_gamma_complex(one - aj - s);
        } else {
            ln -= ln_gamma_complex(aj + s);
        }
    }
    ln
}

/// Position of the vertical contour.
///
/// With both pole families present the line sits midway between them.
/// Without right poles the strip is unbounded and the line is moved to the
/// minimum of the integrand on the real axis, its saddle point, which keeps
/// the integrand from oscillating where it is largest.
pub fn contour_abscissa(params: &GParams, ln_scale: f64) -> f64 {
    let left = params.lower[..params.m]
        .iter()
        .map(|b| -b.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if params.n > 0 {
        let right = params.upper[..params.n]
            .iter()
            .map(|a| 1.0 - a.re)
            .fold(f64::INFINITY, f64::min);
        return 0.5 * (left + right);
    }
    let ln_z = params.argument.ln();
    let f = |c: f64| ln_integrand(params, Complex64::new(c, 0.0), ln_scale, ln_z).re;
    // coarse geometric scan, then golden-section refinement
    let lo = left + 0.05;
    let mut best = lo + 0.45;
    let mut best_val = f(best);
    let mut step = 0.5;
    let mut c = lo;
    while step < 1e4 {
        c = lo + step;
        let v = f(c);
        if v.is_finite() && v < best_val {
            best = c;
            best_val = v;
        } else if v > best_val + 50.0 {
            break;
        }
        step *= 1.5;
    }
    let (mut a, mut b) = ((best - 0.5 * (best - lo)).max(lo), (best + (c - best).max(1.0)).max(best + 0.5));
    let g = 0.618_033_988_749_895;
    for _ in 0..80 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1) < f(x2) {
            b = x2;
        } else {
            a = x1;
        }
        if b - a < 1e-6 * (1.0 + a.abs()) {
            break;
        }
    }
    let c = 0.5 * (a + b);
    if c > lo { c } else { lo }
}

/// Exponential and algebraic decay of `|integrand(c + it)|` as `|t| → ∞`:
/// `|t|^{rho} e^{-π δ |t| / 2}`.
fn decay_exponents(params: &GParams, c: f64) -> (f64, f64) {
    let (m, n, p, q) = (params.m as f64, params.n as f64, params.p() as f64, params.q() as f64);
    let delta = 2.0 * (m + n) - p - q;
    let sum_b: f64 = params.lower.iter().map(|b| b.re).sum();
    let sum_a: f64 = params.upper.iter().map(|a| a.re).sum();
    let rho = sum_b - sum_a + c * (q - p) + 0.5 * (p - q);
    (delta, rho)
}

fn mellin_barnes_scaled(params: &GParams, rel_tol: f64, ln_scale: f64) -> Result<GValue> {
    let c = contour_abscissa(params, ln_scale);
    let (delta, rho) = decay_exponents(params, c);
    let context = || format!("Mellin-Barnes G^{{{},{}}}_{{{},{}}}", params.m, params.n, params.p(), params.q());
    if delta < 0.0 || (delta == 0.0 && rho >= -1.0) {
        return Err(Error::Convergence {
            context: format!("{}: contour integral diverges (δ={delta}, ρ={rho:.3})", context()),
            partial: f64::NAN,
            terms: 0,
        });
    }
    let ln_z = params.argument.ln();
    let rule = GaussLegendre::new(20)?;
    let integrand = |t: f64| ln_integrand(params, Complex64::new(c, t), ln_scale, ln_z).exp().re;
    let envelope = |t: f64| ln_integrand(params, Complex64::new(c, t), ln_scale, ln_z).re.exp();

    let imag_extent = params
        .upper
        .iter()
        .chain(&params.lower)
        .map(|v| v.im.abs())
        .fold(0.0, f64::max);
    let t_min = imag_extent + 8.0;
    let t_max = if delta > 0.0 { imag_extent + 2.0e3 } else { 1.0e5 };
    let width = 2.0;

    let mut total = 0.0;
    let mut scale = 0.0f64;
    let mut t = 0.0;
    let mut quiet = 0;
    let mut panels = 0;
    while t < t_max {
        let piece = rule.integrate_adaptive_abs(integrand, t, t + width, rel_tol, 0.1 * rel_tol * scale)?;
        total += piece;
        t += width;
        panels += 1;
        scale = scale.max(total.abs());
        if t < t_min {
            continue;
        }
        let env = envelope(t);
        let tail = if delta > 0.0 {
            env * (2.0 / (PI * delta) + if rho > -1.0 { t / 1.0 } else { 0.0 })
        } else {
            env * t / (-rho - 1.0)
        };
        if piece.abs() + tail <= rel_tol * scale.max(f64::MIN_POSITIVE) {
            quiet += 1;
            if quiet >= 3 {
                return Ok(GValue {
                    value: total / PI,
                    terms_used: panels * rule.order(),
                    method: GMethod::ContourQuadrature,
                    perturbations: params.perturbations.clone(),
                });
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::Convergence {
        context: format!("{}: tail not resolved by t = {t_max}", context()),
        partial: total / PI,
        terms: panels * rule.order(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    #[test]
    fn exponential_reduction() {
        // G^{1,0}_{0,1}(x | -; b) = x^b e^{-x}
        let g = meijer_g(&GParams::new(1, 0, &[], &[0.0], 1.0).unwrap(), &ctl()).unwrap();
        assert_relative_eq!(g.value, (-1f64).exp(), max_relative = 1e-14);
        let g = meijer_g(&GParams::new(1, 0, &[], &[1.5], 3.2).unwrap(), &ctl()).unwrap();
        assert_relative_eq!(g.value, 3.2f64.powf(1.5) * (-3.2f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn bessel_k_reduction_with_collision() {
        // G^{2,0}_{0,2}(1 | -; 0, 0) = 2 K_0(2); the double pole is split.
        let params = GParams::new(2, 0, &[], &[0.0, 0.0], 1.0).unwrap();
        assert_eq!(params.perturbations().len(), 1);
        let g = meijer_g(&params, &ctl()).unwrap();
        let two_k0_2 = 2.0 * 0.113_893_872_749_533_44;
        assert_relative_eq!(g.value, two_k0_2, max_relative = 1e-5);
        assert!(!g.perturbations.is_empty());
    }

    #[test]
    fn frozen_g2022_value() {
        // 30-digit reference for G^{2,0}_{2,2}(0.7 | 3.1, 4.2; 1.3, 2.05).
        let params = GParams::new(2, 0, &[3.1, 4.2], &[1.3, 2.05], 0.7).unwrap();
        let series = meijer_g(&params, &ctl()).unwrap();
        assert_eq!(series.method, GMethod::ResidueSeries);
        let contour = mellin_barnes(&params, 1e-10).unwrap();
        assert_relative_eq!(series.value, G2022_REF, max_relative = 1e-9);
        assert_relative_eq!(contour.value, G2022_REF, max_relative = 1e-8);
    }
    const G2022_REF: f64 = 3.885_194_071_406_149_5e-3;

    #[test]
    fn vanishing_beyond_unit_argument() {
        let params = GParams::new(2, 0, &[3.1, 4.2], &[1.3, 2.05], 1.4).unwrap();
        let g = meijer_g(&params, &ctl()).unwrap();
        assert_eq!(g.method, GMethod::Vanishing);
        assert_eq!(g.value, 0.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(GParams::new(3, 0, &[], &[1.0, 2.0], 1.0).is_err());
        assert!(GParams::new(1, 0, &[], &[1.0], 0.0).is_err());
        assert!(GParams::new(1, 0, &[], &[1.0], -1.0).is_err());
        let lonely = vec![Complex64::new(1.0, 2.0), Complex64::new(3.0, 0.0)];
        assert!(GParams::from_complex(1, 0, lonely, vec![Complex64::new(0.5, 0.0)], 0.5).is_err());
    }

    #[test]
    fn large_argument_falls_back_to_contour() {
        // G^{3,0}_{1,3}(z | 7.5; 6.5, 2.3, 1): at z = 150 the residue series
        // cancels catastrophically. Reference from a 30-digit evaluation.
        let params = GParams::new(3, 0, &[7.517_809], &[6.517_809, 2.296, 1.0], 150.0).unwrap();
        let g = meijer_g(&params, &ctl()).unwrap();
        assert_eq!(g.method, GMethod::ContourQuadrature);
        assert_relative_eq!(g.value, G3013_REF, max_relative = 1e-8);
    }
    const G3013_REF: f64 = 2.609_067_198_658_2e-9;

    #[test]
    fn series_and_contour_agree_for_mgf_shape() {
        let params = GParams::new(2, 1, &[0.0, 3.1, 4.2], &[1.3, 2.05], 0.05).unwrap();
        let s = residue_series(&params, &ctl(), 0.0);
        assert!(s.converged);
        let c = mellin_barnes(&params, 1e-11).unwrap();
        assert_relative_eq!(s.value, c.value, max_relative = 1e-6);
    }

    #[test]
    fn unit_expansion_beats_cancellation() {
        // Conjugate upper pair with large modulus: the residue series loses
        // every digit at z = 0.3. Reference from a 60-digit evaluation.
        let a3 = Complex64::new(-9.423_927_716_52, 26.893_233_045_2);
        let lower = vec![Complex64::new(0.441_133_678_008, 0.0), Complex64::new(2.177_272_377_83, 0.0)];
        let params = GParams::from_complex(2, 0, vec![a3, a3.conj()], lower, 0.3).unwrap();
        let g = meijer_g_scaled(&params, &ctl(), -54.0 * 10f64.ln()).unwrap();
        assert_eq!(g.method, GMethod::UnitExpansion);
        assert_relative_eq!(g.value, 1.676_299_351, max_relative = 1e-9);
        let small = params.with_argument(0.01).unwrap();
        let series = meijer_g_scaled(&small, &ctl(), -63.0 * 10f64.ln()).unwrap();
        let unit = unit_expansion(&small, 1e-13, -63.0 * 10f64.ln()).unwrap();
        assert_relative_eq!(series.value, 1.962_921_118, max_relative = 1e-8);
        assert_relative_eq!(unit, 1.962_921_118, max_relative = 1e-9);
    }

    #[test]
    fn control_validation() {
        let bad = SeriesControl { max_terms: 5, ..SeriesControl::default() };
        assert!(bad.validate().is_err());
        let bad = SeriesControl { rel_tol: 1.5, ..SeriesControl::default() };
        assert!(bad.validate().is_err());
    }
}
