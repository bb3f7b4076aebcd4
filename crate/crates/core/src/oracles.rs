//! Reference solutions used to validate the solvers.
//!
//! The classical one-phase similarity solution under constant boundary
//! temperature `T_b` has the front `s(t) = 2λ√(α t)` with `λ` the root of
//! `λ e^{λ²} erf(λ) = St/√π`, `St = (β/α)(T_b − T_m)`. A time offset lets the
//! front start at any `s₀ > 0`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LAMBDA_LO: f64 = 1e-8;
const LAMBDA_HI: f64 = 5.0;
const LAMBDA_TOL: f64 = 1e-12;
/// Central-difference step for [`fd_residual`] in both x and t.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilaritySpec {
    pub stefan_number: f64,
    pub lambda: f64,
    pub t_offset: f64,
    pub alpha: f64,
    pub t_boundary: f64,
    pub t_melt: f64,
}

impl SimilaritySpec {
    /// Spec whose front sits at `s0` at `t = 0`.
    pub fn new(alpha: f64, beta_phys: f64, t_boundary: f64, t_melt: f64, s0: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta_phys > 0.0 && s0 > 0.0) {
            return Err(Error::Config("similarity spec needs positive α, β and s₀".into()));
        }
        let stefan_number = beta_phys / alpha * (t_boundary - t_melt);
        let lambda = similarity_lambda(stefan_number)?;
        let t_offset = s0 * s0 / (4.0 * lambda * lambda * alpha);
        Ok(Self { stefan_number, lambda, t_offset, alpha, t_boundary, t_melt })
    }

    /// Temperature of the similarity solution, `T_m` beyond the front.
    pub fn temperature(&self, x: f64, t: f64) -> f64 {
        let tau = t + self.t_offset;
        if x >= similarity_interface(t, self) {
            return self.t_melt;
        }
        let z = x / (2.0 * (self.alpha * tau).sqrt());
        self.t_boundary - (self.t_boundary - self.t_melt) * libm::erf(z) / libm::erf(self.lambda)
    }
}

fn transcendental(lambda: f64) -> f64 {
    lambda * (lambda * lambda).exp() * libm::erf(lambda)
}

/// Root of `λ e^{λ²} erf(λ) = St/√π` by bisection on `[1e−8, 5]`.
pub fn similarity_lambda(stefan_number: f64) -> Result<f64> {
    let target = stefan_number / PI.sqrt();
    let f = |l: f64| transcendental(l) - target;
    let (mut lo, mut hi) = (LAMBDA_LO, LAMBDA_HI);
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return Err(Error::Bracket(stefan_number));
    }
    // halve down to adjacent floats; the interval tolerance alone leaves a
    // residual of a few 1e−12 where the curve is steep
    while hi - lo > LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// Residual `λ e^{λ²} erf(λ) − St/√π`.
pub fn similarity_residual(lambda: f64, stefan_number: f64) -> f64 {
    transcendental(lambda) - stefan_number / PI.sqrt()
}

pub fn similarity_interface(t: f64, spec: &SimilaritySpec) -> f64 {
    2.0 * spec.lambda * (spec.alpha * (t + spec.t_offset)).max(0.0).sqrt()
}

/// Largest `|f_t − f_xx|` over `points`, by fourth-order central
/// differences.
///
/// The three-point stencils at this step carry an `h²` error of a few 1e−6
/// on the dither field (its harmonics reach several times ω), which would
/// swamp the residual being measured.
pub fn fd_residual(f: impl Fn(f64, f64) -> f64, points: &[(f64, f64)]) -> f64 {
    let (hx, ht) = (FD_STEP, FD_STEP);
    points
        .iter()
        .map(|&(x, t)| {
            let f_t =
                (-f(x, t + 2.0 * ht) + 8.0 * f(x, t + ht) - 8.0 * f(x, t - ht) + f(x, t - 2.0 * ht)) / (12.0 * ht);
            let f_xx = (-f(x + 2.0 * hx, t) + 16.0 * f(x + hx, t) - 30.0 * f(x, t) + 16.0 * f(x - hx, t)
                - f(x - 2.0 * hx, t))
                / (12.0 * hx * hx);
            (f_t - f_xx).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lambda_small_stefan_asymptote() {
        let l = similarity_lambda(1e-6).unwrap();
        assert_relative_eq!(l, (0.5e-6f64).sqrt(), max_relative = 0.05);
    }

    #[test]
    fn lambda_unit_stefan() {
        let l = similarity_lambda(1.0).unwrap();
        assert!((l - 0.620).abs() < 0.005, "λ = {l}");
        assert!(similarity_residual(l, 1.0).abs() <= 1e-12);
    }

    #[test]
    fn lambda_monotone() {
        let ls: Vec<f64> = (0..=19).map(|k| similarity_lambda(0.1 + 0.1 * k as f64).unwrap()).collect();
        assert!(ls.windows(2).all(|w| w[1] > w[0]));
        for (k, l) in ls.iter().enumerate() {
            assert!(similarity_residual(*l, 0.1 + 0.1 * k as f64).abs() <= 1e-12);
        }
    }

    #[test]
    fn bracket_failures() {
        assert!(matches!(similarity_lambda(0.0), Err(Error::Bracket(_))));
        assert!(matches!(similarity_lambda(-1.0), Err(Error::Bracket(_))));
        assert!(matches!(similarity_lambda(1e12), Err(Error::Bracket(_))));
    }

    #[test]
    fn interface_law() {
        let spec = SimilaritySpec::new(1.0, 1.0, 101.0, 100.0, 0.12).unwrap();
        assert_eq!(similarity_interface(-spec.t_offset, &spec), 0.0);
        assert_relative_eq!(similarity_interface(0.0, &spec), 0.12, max_relative = 1e-14);
        let t1 = 0.3;
        let t2 = 2.0 * (t1 + spec.t_offset) - spec.t_offset;
        assert_relative_eq!(
            similarity_interface(t2, &spec),
            2f64.sqrt() * similarity_interface(t1, &spec),
            max_relative = 1e-14
        );
    }

    #[test]
    fn similarity_profile_endpoints_and_heat_equation() {
        let spec = SimilaritySpec::new(1.0, 1.0, 100.5, 100.0, 0.12).unwrap();
        assert_relative_eq!(spec.temperature(0.0, 0.0), 100.5, epsilon = 1e-12);
        assert_relative_eq!(spec.temperature(0.12 * (1.0 - 1e-12), 0.0), 100.0, epsilon = 1e-9);
        // Stefan condition at the front: ṡ = −β T_x(s)
        let t = 0.4;
        let s = similarity_interface(t, &spec);
        let h = 1e-6;
        let grad = (spec.temperature(s - h, t) - spec.temperature(s - 2.0 * h, t)) / h;
        let sdot = spec.lambda * spec.alpha / (spec.alpha * (t + spec.t_offset)).sqrt();
        assert_relative_eq!(-grad, sdot, max_relative = 1e-4);
        let pts: Vec<(f64, f64)> = (1..10).map(|k| (0.05 * k as f64 * s / 0.5, t)).collect();
        assert!(fd_residual(|x, t| spec.temperature(x, t), &pts) < 1e-5);
    }

    #[test]
    fn fd_residual_on_heat_polynomials() {
        let pts = [(0.1, 0.2), (0.5, 1.0), (-0.3, 2.0)];
        assert!(fd_residual(|x, _| x, &pts) < 1e-7);
        assert_eq!(fd_residual(|_, _| 2.5, &pts), 0.0);
        // only roundoff survives: ε·|f|/h² is a few 1e−7 for |f| ≈ 4
        assert!(fd_residual(|x, t| x * x + 2.0 * t, &pts) < 2e-6);
        assert!(fd_residual(|x, t| x * x + t, &pts) > 0.5);
    }
}
