//! Probing signal from heat-equation motion planning.
//!
//! The field
//!
//! ```text
//! β(x, t) = Σ_{i≥1} 1/(2i)! · ∂ᵢ/∂tⁱ [x − ξ(t)]²ⁱ,     ξ(t) = a sin(ω t)
//! ```
//!
//! solves `β_t = β_xx` with `β(ξ, t) = 0` and `β_x(ξ, t) = −ξ̇(t)`, so a wall
//! flux of `−β_x(0, t)` makes a sinusoid appear at the far end of the
//! diffusion. Time derivatives are taken with [`TimeJet`] arithmetic and the
//! series is truncated once terms fall below a relative tolerance.

use crate::error::{Error, Result};
use crate::jet::{factorial, TimeJet};

#[derive(Debug, Clone, PartialEq)]
pub struct DitherConfig {
    /// Perturbation amplitude `a`.
    pub a: f64,
    /// Perturbation frequency `ω` [rad/s].
    pub omega: f64,
    /// Time advance applied to every evaluation (the input delay in
    /// delay-compensated loops, zero otherwise).
    pub advance: f64,
    /// Largest series index evaluated before giving up.
    pub max_order: usize,
    /// Relative size below which a term ends the series.
    pub term_tol: f64,
}

impl Default for DitherConfig {
    fn default() -> Self {
        Self { a: 0.1, omega: 10.0, advance: 0.0, max_order: 30, term_tol: 1e-10 }
    }
}

impl DitherConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::Config(format!("dither amplitude must be non-negative, got {}", self.a)));
        }
        if !(self.omega > 0.0) {
            return Err(Error::Config(format!("dither frequency must be positive, got {}", self.omega)));
        }
        if !(self.advance >= 0.0) {
            return Err(Error::Config(format!("dither advance must be non-negative, got {}", self.advance)));
        }
        if self.max_order < 2 {
            return Err(Error::Config("dither max_order must be at least 2".into()));
        }
        if !(self.term_tol > 0.0) {
            return Err(Error::Config("dither term_tol must be positive".into()));
        }
        Ok(())
    }

    /// `a·ω`; the series is only known to converge comfortably when this is ≲ 1.
    pub fn excitation_product(&self) -> f64 {
        self.a * self.omega
    }
}

/// Evaluates the reference trajectory, the planned field and the wall flux.
#[derive(Debug, Clone)]
pub struct DitherGenerator {
    cfg: DitherConfig,
}

impl DitherGenerator {
    pub fn new(cfg: DitherConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &DitherConfig {
        &self.cfg
    }

    /// Same generator with the time advance removed.
    pub fn without_advance(&self) -> Self {
        Self { cfg: DitherConfig { advance: 0.0, ..self.cfg.clone() } }
    }

    fn phase_time(&self, t: f64) -> f64 {
        t + self.cfg.advance
    }

    pub fn xi(&self, t: f64) -> f64 {
        self.cfg.a * (self.cfg.omega * self.phase_time(t)).sin()
    }

    /// Exact derivatives of `ξ` through `order`.
    pub fn xi_jet(&self, t: f64, order: usize) -> TimeJet {
        TimeJet::from_taylor(self.xi_taylor(self.phase_time(t), order))
    }

    fn xi_taylor(&self, tau: f64, order: usize) -> Vec<f64> {
        let DitherConfig { a, omega, .. } = self.cfg;
        let phase = omega * tau;
        let mut scale = a;
        (0..=order)
            .map(|k| {
                if k > 0 {
                    scale *= omega / k as f64;
                }
                scale * (phase + k as f64 * std::f64::consts::FRAC_PI_2).sin()
            })
            .collect()
    }

    /// `i`-th term of the series and of its x-derivative at `(x, tau)`,
    /// computed by raising the jet of `x − ξ` to the power `2i`.
    fn term_direct(&self, x: f64, tau: f64, i: usize) -> (f64, f64) {
        let xi = TimeJet::from_taylor(self.xi_taylor(tau, i));
        let z = &TimeJet::constant(x, i) - &xi;
        let value = z.powi(2 * i as u32).derivative(i) / factorial(2 * i);
        let slope = if i == 0 { 0.0 } else { z.powi(2 * i as u32 - 1).derivative(i) / factorial(2 * i - 1) };
        (value, slope)
    }

    fn sum_series(&self, mut term: impl FnMut(usize) -> f64) -> Result<f64> {
        let tol = self.cfg.term_tol;
        let mut sum = 0.0;
        let mut small_run = 0;
        let mut last = 0.0;
        for i in 1..=self.cfg.max_order {
            let t = term(i);
            sum += t;
            last = t;
            if t.abs() <= tol * sum.abs() {
                small_run += 1;
                // two consecutive small terms guard against a term that
                // vanishes only because of the current phase
                if small_run == 2 {
                    return Ok(sum);
                }
            } else {
                small_run = 0;
            }
        }
        Err(Error::Truncation { order: self.cfg.max_order, last_term: last })
    }

    /// Truncated series value `β(x, t)`.
    pub fn beta_eval(&self, x: f64, t: f64) -> Result<f64> {
        let tau = self.phase_time(t);
        self.sum_series(|i| self.term_direct(x, tau, i).0)
    }

    /// Truncated series value of `∂β/∂x (x, t)`.
    pub fn beta_x_eval(&self, x: f64, t: f64) -> Result<f64> {
        let tau = self.phase_time(t);
        self.sum_series(|i| self.term_direct(x, tau, i).1)
    }

    /// Wall flux `S(t) = −β_x(0, t + advance)`.
    pub fn dither_signal(&self, t: f64) -> Result<f64> {
        Ok(-self.beta_x_eval(0.0, t)?)
    }

    /// Wall flux with the series cut after index `order` (no tolerance check).
    pub fn dither_signal_truncated(&self, t: f64, order: usize) -> f64 {
        let tau = self.phase_time(t);
        -(1..=order).map(|i| self.term_direct(0.0, tau, i).1).sum::<f64>()
    }

    /// Coefficients `a₀ … a_{n−1}` of `β = Σ aᵢ (x − ξ)ⁱ / i!` from the
    /// recursion `aᵢ = ȧᵢ₋₂ − aᵢ₋₁ ξ̇`.
    pub fn series_coefficients(&self, t: f64, count: usize) -> Vec<f64> {
        assert!(count >= 2, "at least a₀ and a₁ are required");
        let tau = self.phase_time(t);
        let order = 2 * count;
        let xi_dot = TimeJet::from_taylor(self.xi_taylor(tau, order + 1)).differentiate();
        let mut coeffs: Vec<TimeJet> = Vec::with_capacity(count);
        coeffs.push(TimeJet::zero(order));
        coeffs.push(-&xi_dot);
        for i in 2..count {
            let next = &coeffs[i - 2].differentiate() - &(&coeffs[i - 1] * &xi_dot);
            coeffs.push(next);
        }
        coeffs.iter().map(TimeJet::value).collect()
    }

    /// Polynomial form of the field at a fixed time, for evaluating `β` on a
    /// whole grid at once.
    pub fn beta_profile(&self, t: f64) -> BetaProfile {
        let tau = self.phase_time(t);
        let m = self.cfg.max_order;
        // δ(h) = x − ξ(τ + h) − (x − ξ(τ)) = −(ξ(τ + h) − ξ(τ))
        let mut delta = self.xi_taylor(tau, m);
        delta[0] = 0.0;
        let delta = TimeJet::from_taylor(delta).scale(-1.0);
        // powers[j] = δʲ
        let mut powers = vec![TimeJet::constant(1.0, m)];
        for j in 1..=m {
            let next = &powers[j - 1] * &delta;
            powers.push(next);
        }
        // term i = i!/(2i)! Σ_{j≤i} C(2i, j) [hⁱ]δʲ z^{2i−j}
        let terms = (1..=m)
            .map(|i| {
                let mut poly = vec![0.0; 2 * i + 1];
                let pre = factorial(i) / factorial(2 * i);
                for (j, pw) in powers.iter().enumerate().take(i + 1) {
                    poly[2 * i - j] = pre * binomial(2 * i, j) * pw.taylor()[i];
                }
                poly
            })
            .collect();
        BetaProfile { xi: self.cfg.a * (self.cfg.omega * tau).sin(), terms, term_tol: self.cfg.term_tol }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// The truncated field at one instant as polynomials in `z = x − ξ(t)`.
#[derive(Debug, Clone)]
pub struct BetaProfile {
    xi: f64,
    /// `terms[i-1][p]` multiplies `zᵖ` in series term `i`.
    terms: Vec<Vec<f64>>,
    term_tol: f64,
}

impl BetaProfile {
    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let z = x - self.xi;
        let mut sum = 0.0;
        let mut small_run = 0;
        let mut last = 0.0;
        for poly in &self.terms {
            let t = poly.iter().rev().fold(0.0, |acc, c| acc * z + c);
            sum += t;
            last = t;
            if t.abs() <= self.term_tol * sum.abs() {
                small_run += 1;
                if small_run == 2 {
                    return Ok(sum);
                }
            } else {
                small_run = 0;
            }
        }
        Err(Error::Truncation { order: self.terms.len(), last_term: last })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn default_gen() -> DitherGenerator {
        DitherGenerator::new(DitherConfig::default()).unwrap()
    }

    #[test]
    fn xi_values() {
        let g = default_gen();
        assert_eq!(g.xi(0.0), 0.0);
        assert_relative_eq!(g.xi(PI / 20.0), 0.1, epsilon = 1e-15);
        let flat = DitherGenerator::new(DitherConfig { a: 0.0, ..DitherConfig::default() }).unwrap();
        assert_eq!(flat.xi(1.3), 0.0);
    }

    #[test]
    fn xi_jet_low_orders() {
        let g = default_gen();
        let j = g.xi_jet(0.0, 2).derivatives();
        assert_relative_eq!(j[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(j[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(j[2], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn xi_jet_matches_finite_differences() {
        let g = default_gen();
        let t = 0.731;
        let d = g.xi_jet(t, 4).derivatives();
        for (k, dk) in d.iter().enumerate() {
            let closed = 0.1 * 10f64.powi(k as i32) * (10.0 * t + k as f64 * PI / 2.0).sin();
            assert_relative_eq!(*dk, closed, max_relative = 1e-12);
        }
        let h = 1e-5;
        let fd1 = (g.xi(t + h) - g.xi(t - h)) / (2.0 * h);
        let fd2 = (g.xi(t + h) - 2.0 * g.xi(t) + g.xi(t - h)) / (h * h);
        assert_relative_eq!(d[1], fd1, max_relative = 1e-8);
        assert_relative_eq!(d[2], fd2, max_relative = 1e-4);
    }

    #[test]
    fn zero_amplitude_is_silent() {
        let g = DitherGenerator::new(DitherConfig { a: 0.0, ..DitherConfig::default() }).unwrap();
        for &(x, t) in &[(0.0, 0.0), (0.4, 1.2), (0.9, 3.3)] {
            assert_eq!(g.beta_eval(x, t).unwrap(), 0.0);
            assert_eq!(g.dither_signal(t).unwrap(), 0.0);
            assert_eq!(g.beta_profile(t).eval(x).unwrap(), 0.0);
        }
    }

    #[test]
    fn first_order_signal_is_cosine() {
        let g = default_gen();
        for &t in &[0.0, 0.1, 0.77, 2.5] {
            assert_relative_eq!(g.dither_signal_truncated(t, 1), (10.0 * t).cos(), epsilon = 1e-13);
        }
    }

    #[test]
    fn low_order_coefficients() {
        let g = default_gen();
        let c = g.series_coefficients(0.0, 4);
        assert_eq!(c[0], 0.0);
        assert_relative_eq!(c[1], -1.0, epsilon = 1e-14);
        assert_relative_eq!(c[2], 1.0, epsilon = 1e-13);
    }

    #[test]
    fn third_coefficient_closed_form() {
        // a₃ = ȧ₁ − a₂ ξ̇ = −ξ̈ − ξ̇³
        let g = default_gen();
        let mut t = 0.0;
        for _ in 0..100 {
            t += 0.0937;
            let d = g.xi_jet(t, 2).derivatives();
            let c = g.series_coefficients(t, 5);
            assert_relative_eq!(c[1], -d[1], epsilon = 1e-12);
            assert_relative_eq!(c[2], d[1] * d[1], epsilon = 1e-12);
            assert_relative_eq!(c[3], -d[2] - d[1].powi(3), epsilon = 1e-10);
        }
    }

    #[test]
    fn beta_vanishes_on_reference_trajectory() {
        let g = default_gen();
        for k in 0..50 {
            let t = k as f64 * 0.0413;
            let xi = g.xi(t);
            assert!(g.beta_eval(xi, t).unwrap().abs() <= 1e-8);
            let slope = g.beta_x_eval(xi, t).unwrap();
            assert!((slope + (10.0 * t).cos()).abs() <= 1e-6);
        }
    }

    #[test]
    fn profile_matches_direct_evaluation() {
        let g = DitherGenerator::new(DitherConfig { advance: 0.5, ..DitherConfig::default() }).unwrap();
        for k in 0..20 {
            let t = 0.05 * k as f64;
            let p = g.beta_profile(t);
            for j in 0..=10 {
                let x = 0.1 * j as f64;
                let direct = g.beta_eval(x, t).unwrap();
                assert_relative_eq!(p.eval(x).unwrap(), direct, epsilon = 1e-12, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn cap_reached_reports_truncation() {
        let g = DitherGenerator::new(DitherConfig { a: 1.0, omega: 30.0, max_order: 3, ..DitherConfig::default() })
            .unwrap();
        assert!(matches!(g.beta_eval(2.0, 0.1), Err(Error::Truncation { .. })));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(DitherGenerator::new(DitherConfig { omega: 0.0, ..DitherConfig::default() }).is_err());
        assert!(DitherGenerator::new(DitherConfig { a: -0.1, ..DitherConfig::default() }).is_err());
        assert!(DitherGenerator::new(DitherConfig { max_order: 1, ..DitherConfig::default() }).is_err());
    }
}
