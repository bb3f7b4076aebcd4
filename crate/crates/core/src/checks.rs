//! Oracle comparisons reported by the `validate` and `transform-check`
//! commands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{decay_constants, forward_transform, inverse_transform, phi, KernelSpec};
use crate::dither::{DitherConfig, DitherGenerator};
use crate::error::Result;
use crate::jet::factorial;
use crate::oracles::{fd_residual, similarity_interface, SimilaritySpec};
use crate::plant::{BoundaryMode, PlantConfig, StefanPlant};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self { name, value, limit, passed: value <= limit }
    }

    fn within(name: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Self { name, value, limit: hi, passed: (lo..=hi).contains(&value) }
    }

    fn failed(name: &'static str) -> Self {
        Self { name, value: f64::NAN, limit: f64::NAN, passed: false }
    }
}

/// Wall temperature of the Dirichlet oracle; keeps the front inside the unit
/// slab up to `t = 1`.
pub const ORACLE_WALL_TEMPERATURE: f64 = 100.5;

/// Relative front error of a Dirichlet-mode run against the similarity
/// solution at `t_end`.
pub fn dirichlet_front_error(grid_n: usize, t_end: f64) -> Result<f64> {
    let base = PlantConfig::default();
    let spec = SimilaritySpec::new(base.alpha, base.beta_phys, ORACLE_WALL_TEMPERATURE, base.t_melt, base.s0)?;
    let cfg = PlantConfig {
        grid_n,
        bc_mode: BoundaryMode::DirichletTemperature,
        t_init: ORACLE_WALL_TEMPERATURE,
        ..base.clone()
    };
    let mut plant = StefanPlant::new(cfg)?;
    let mut st = plant.state_from_profile(base.s0, 0.0, |x| spec.temperature(x, 0.0))?;
    let dt = 0.005;
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        plant.step(&mut st, ORACLE_WALL_TEMPERATURE, dt)?;
    }
    let exact = similarity_interface(st.t, &spec);
    Ok((st.s - exact).abs() / exact)
}

/// `β` rebuilt from the recursion coefficients, `Σ aᵢ (x − ξ)ⁱ / i!`.
pub fn beta_from_coefficients(gen: &DitherGenerator, x: f64, t: f64, count: usize) -> f64 {
    let z = x - gen.xi(t);
    gen.series_coefficients(t, count).iter().enumerate().map(|(i, a)| a * z.powi(i as i32) / factorial(i)).sum()
}

/// Dither boundary conditions, heat residual and the coefficient cross-check.
pub fn dither_checks(cfg: &DitherConfig) -> Vec<Check> {
    let gen = match DitherGenerator::new(cfg.clone()) {
        Ok(g) => g,
        Err(_) => return vec![Check::failed("dither configuration")],
    };
    let ts: Vec<f64> = (0..200).map(|k| k as f64 * 0.0157).collect();
    let mut bc_value = 0.0f64;
    let mut bc_flux = 0.0f64;
    for &t in &ts {
        let xi = gen.xi(t);
        let xi_dot = cfg.a * cfg.omega * (cfg.omega * (t + cfg.advance)).cos();
        match (gen.beta_eval(xi, t), gen.beta_x_eval(xi, t)) {
            (Ok(b), Ok(bx)) => {
                bc_value = bc_value.max(b.abs());
                bc_flux = bc_flux.max((bx + xi_dot).abs());
            }
            _ => return vec![Check::failed("dither series convergence")],
        }
    }
    let grid: Vec<(f64, f64)> =
        (0..=10).flat_map(|i| (0..=10).map(move |j| (0.05 * i as f64, 0.1 * j as f64))).collect();
    let residual = fd_residual(|x, t| gen.beta_eval(x, t).unwrap_or(f64::NAN), &grid);

    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut recon = 0.0f64;
    for _ in 0..100 {
        let t = rng.gen_range(0.0..5.0);
        let x = gen.xi(t) + rng.gen_range(-0.3..0.3);
        let direct = gen.beta_eval(x, t).unwrap_or(f64::NAN);
        recon = recon.max((beta_from_coefficients(&gen, x, t, 40) - direct).abs());
    }
    vec![
        Check::at_most("dither |β(ξ,t)|", bc_value, 1e-8),
        Check::at_most("dither |β_x(ξ,t) + ξ̇|", bc_flux, 1e-6),
        Check::at_most("dither heat residual", nan_max(residual), 1e-6),
        Check::at_most("dither coefficient reconstruction", nan_max(recon), 1e-8),
    ]
}

fn nan_max(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Relative `max|inverse(forward(u)) − u| / max|u|` for a smooth test
/// profile vanishing at the front.
pub fn round_trip_error(spec: &KernelSpec, grid_n: usize, v_theta: f64) -> f64 {
    let s = spec.s_star;
    let u: Vec<f64> = (0..=grid_n)
        .map(|j| {
            let x = j as f64 / grid_n as f64 * s;
            (3.0 * x).sin() * (s - x) + 0.3 * (x * x - s * s) + (x - s) * (2.0 * x).cos()
        })
        .collect();
    let w = forward_transform(&u, v_theta, s, spec);
    let back = inverse_transform(&w, v_theta, s, spec);
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    u.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

/// `max |φ'' + K̄ φ|` by central differences with step `1e−4`.
pub fn kernel_residual(spec: &KernelSpec) -> f64 {
    let h = 1e-4;
    (0..100)
        .map(|k| -2.0 + 4.0 * k as f64 / 99.0)
        .map(|x| {
            let d2 = (phi(x + h, spec) - 2.0 * phi(x, spec) + phi(x - h, spec)) / (h * h);
            (d2 + spec.k_bar * phi(x, spec)).abs()
        })
        .fold(0.0, f64::max)
}

pub fn transform_checks(spec: &KernelSpec) -> Vec<Check> {
    let h = 1e-7;
    let slope = (phi(h, spec) - phi(-h, spec)) / (2.0 * h);
    let (m, n) = decay_constants(spec);
    vec![
        Check::at_most("kernel φ''+K̄φ residual", kernel_residual(spec), 1e-6),
        Check::at_most("kernel φ(0)", phi(0.0, spec).abs(), 1e-15),
        Check::at_most("kernel φ'(0) − K̄", (slope - spec.k_bar).abs(), 1e-8),
        Check::at_most("transform round trip ϑ=0", round_trip_error(spec, 200, 0.0), 1e-8),
        Check::at_most("transform round trip ϑ=0.3", round_trip_error(spec, 200, 0.3), 1e-8),
        Check::within("decay constant m", m, 0.0, f64::INFINITY),
        Check::within("decay constant n", n, 1.0, f64::INFINITY),
    ]
}

pub fn plant_checks() -> Vec<Check> {
    match (dirichlet_front_error(100, 1.0), dirichlet_front_error(200, 1.0)) {
        (Ok(e100), Ok(e200)) => vec![
            Check::at_most("plant front error vs similarity (n=200)", e200, 0.01),
            Check::within("plant refinement ratio (n=100/200)", e100 / e200, 3.0, 5.0),
        ],
        _ => vec![Check::failed("plant Dirichlet run")],
    }
}

/// Everything `validate` reports, for the default dither and gains.
pub fn validation_suite() -> Vec<Check> {
    let mut out = plant_checks();
    out.extend(dither_checks(&DitherConfig::default()));
    if let Ok(spec) = KernelSpec::new(0.1, 0.8) {
        out.extend(transform_checks(&spec));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_for_defaults() {
        let checks = validation_suite();
        for c in &checks {
            assert!(c.passed, "{} = {} (limit {})", c.name, c.value, c.limit);
        }
        assert!(checks.len() >= 10);
    }

    #[test]
    fn broken_dither_is_reported() {
        let cfg = DitherConfig { max_order: 2, ..DitherConfig::default() };
        let checks = dither_checks(&cfg);
        assert!(checks.iter().any(|c| !c.passed));
    }
}
