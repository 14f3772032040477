//! Gauss-Legendre quadrature with adaptive interval bisection.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::parameter("nodes", format!("need at least 2 nodes, got {n}")));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Fixed-order estimate of `∫_lo^hi f`.
    pub fn integrate<F>(&self, mut f: F, lo: f64, hi: f64) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let abscissa = mid + half * x;
            let value = f(abscissa);
            if !value.is_finite() {
                return Err(Error::Evaluation { abscissa, value });
            }
            acc += w * value;
        }
        Ok(acc * half)
    }

    /// Bisects `[lo, hi]` until each panel's estimate agrees with the sum of
    /// its two halves to `rel_tol` of the running total.
    pub fn integrate_adaptive<F>(&self, f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        self.integrate_adaptive_abs(f, lo, hi, rel_tol, 0.0)
    }

    /// As [`integrate_adaptive`](Self::integrate_adaptive), but panels whose
    /// refinement changes by less than `abs_tol` (pro rata) are accepted.
    pub fn integrate_adaptive_abs<F>(&self, mut f: F, lo: f64, hi: f64, rel_tol: f64, abs_tol: f64) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        const MAX_DEPTH: u32 = 30;
        const MAX_PANELS: usize = 20_000;
        let whole = self.integrate(&mut f, lo, hi)?;
        let mut total = 0.0;
        let mut scale = whole.abs();
        let mut stack = vec![(lo, hi, whole, 0u32)];
        let mut panels = 0;
        while let Some((a, b, est, depth)) = stack.pop() {
            let m = 0.5 * (a + b);
            let left = self.integrate(&mut f, a, m)?;
            let right = self.integrate(&mut f, m, b)?;
            let refined = left + right;
            panels += 1;
            scale = scale.max(refined.abs());
            let width_share = (b - a) / (hi - lo);
            let tol = (rel_tol * scale.max(f64::MIN_POSITIVE)).max(abs_tol) * width_share.max(1e-6);
            if (refined - est).abs() <= tol || depth >= MAX_DEPTH || panels >= MAX_PANELS {
                total += refined;
            } else {
                stack.push((m, b, right, depth + 1));
                stack.push((a, m, left, depth + 1));
            }
        }
        Ok(total)
    }

    /// `∫_lo^∞ f` through the map `x = lo + scale·t/(1-t)`.
    ///
    /// `f` must decay faster than `1/x` and `scale` should be of the order of
    /// the integrand's width.
    pub fn integrate_to_infinity<F>(&self, mut f: F, lo: f64, scale: f64, rel_tol: f64) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        let g = |t: f64| {
            let one_minus = 1.0 - t;
            let x = lo + scale * t / one_minus;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * scale / (one_minus * one_minus)
            }
        };
        self.integrate_adaptive(g, 0.0, 1.0, rel_tol)
    }
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive Gauss-Legendre estimate of `∫_lo^hi f` to relative accuracy `1e-12`.
pub fn gauss_legendre<F>(f: F, lo: f64, hi: f64, nodes: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    GaussLegendre::new(nodes)?.integrate_adaptive(f, lo, hi, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma::beta;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn trivial_integrals() {
        let v = gauss_legendre(|x| x.sin().powi(2), 0.0, PI / 2.0, 8).unwrap();
        assert_relative_eq!(v, PI / 4.0, max_relative = 1e-13);
        let one = gauss_legendre(|_| 1.0, 0.0, 1.0, 2).unwrap();
        assert_relative_eq!(one, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn sin_fourth_power_is_half_beta() {
        let v = gauss_legendre(|x| x.sin().powi(4), 0.0, PI / 2.0, 10).unwrap();
        assert_relative_eq!(v, 0.5 * beta(2.5, 0.5).unwrap(), max_relative = 1e-13);
        assert_relative_eq!(v, 3.0 * PI / 16.0, max_relative = 1e-13);
    }

    #[test]
    fn too_few_nodes() {
        assert!(GaussLegendre::new(1).is_err());
    }

    #[test]
    fn non_finite_sample_reports_abscissa() {
        let rule = GaussLegendre::new(4).unwrap();
        let err = rule.integrate(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0).unwrap_err();
        match err {
            Error::Evaluation { abscissa, .. } => assert!(abscissa > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [2, 5, 20, 64] {
            let rule = GaussLegendre::new(n).unwrap();
            let s: f64 = rule.weights().iter().sum();
            assert_relative_eq!(s, 2.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn semi_infinite_exponential() {
        let rule = GaussLegendre::new(20).unwrap();
        let v = rule.integrate_to_infinity(|x| (-x).exp(), 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-11);
    }

    proptest! {
        #[test]
        fn exact_on_polynomials(n in 2usize..24, coeffs in prop::collection::vec(-3.0f64..3.0, 1..48)) {
            let degree = (2 * n - 1).min(coeffs.len() - 1);
            let c = &coeffs[..=degree];
            let rule = GaussLegendre::new(n).unwrap();
            let poly = |x: f64| c.iter().rev().fold(0.0, |acc, a| acc * x + a);
            let got = rule.integrate(poly, -0.5, 1.5).unwrap();
            // exact antiderivative
            let anti = |x: f64| c.iter().enumerate().map(|(k, a)| a * x.powi(k as i32 + 1) / (k as f64 + 1.0)).sum::<f64>();
            let want = anti(1.5) - anti(-0.5);
            let scale = c.iter().enumerate().map(|(k, a)| a.abs() * 1.5f64.powi(k as i32 + 1)).sum::<f64>();
            prop_assert!((got - want).abs() <= 1e-12 * scale.max(1.0), "got {got} want {want}");
        }
    }
}
