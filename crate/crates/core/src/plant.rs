//! One-phase Stefan plant on an immobilized grid.
//!
//! The liquid domain `[0, s(t)]` is mapped onto `η ∈ [0, 1]` with `x = η s`.
//! In that frame the deviation field `u = T − T_m` obeys
//!
//! ```text
//! u_t = (α / s²) u_ηη + η (ṡ / s) u_η,     u(1) = 0,
//! ṡ   = −(β / s) u_η(1),
//! ```
//!
//! with either a Neumann flux `−k u_η(0) / s = q_c` or a fixed boundary
//! temperature at `η = 0`. Time integration uses explicit Euler substeps whose
//! size is re-evaluated from the diffusion and advection limits each substep.

use crate::error::{Error, Result};

/// Interfaces closer than this to the actuated wall freeze the front.
pub const DEGENERATE_FRONT: f64 = 1e-6;

/// Upper bound on explicit substeps within one macro step. A collapsing
/// liquid layer drives the stable step towards zero; past this budget the
/// integration is reported as failed instead of stalling.
pub const MAX_SUBSTEPS: usize = 2_000_000;

/// Boundary condition applied at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Heat flux `q_c` enters at the wall (the actuated configuration).
    NeumannFlux,
    /// The wall temperature is prescribed. Only used by the similarity oracle.
    DirichletTemperature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantConfig {
    /// Thermal diffusivity.
    pub alpha: f64,
    /// Stefan gain in `ṡ = −β T_x(s)`.
    pub beta_phys: f64,
    /// Thermal conductivity.
    pub k_cond: f64,
    /// Melting temperature [°C].
    pub t_melt: f64,
    /// Wall temperature of the initial profile [°C].
    pub t_init: f64,
    /// Initial interface position.
    pub s0: f64,
    /// Length of the material slab.
    pub length: f64,
    /// Number of intervals on the immobilized coordinate.
    pub grid_n: usize,
    pub cfl_safety: f64,
    pub bc_mode: BoundaryMode,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta_phys: 1.0,
            k_cond: 1.0,
            t_melt: 100.0,
            t_init: 110.0,
            s0: 0.12,
            length: 1.0,
            grid_n: 100,
            cfl_safety: 0.9,
            bc_mode: BoundaryMode::NeumannFlux,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.alpha > 0.0 && self.beta_phys > 0.0 && self.k_cond > 0.0) {
            return bad("alpha, beta_phys and k_cond must be positive".into());
        }
        if !(self.s0 > 0.0) {
            return bad(format!("s0 must be positive, got {}", self.s0));
        }
        if !(self.s0 < self.length) {
            return bad(format!("s0 = {} must lie inside the slab of length {}", self.s0, self.length));
        }
        if !(self.t_init >= self.t_melt) {
            return bad(format!("initial temperature {} is below the melting point {}", self.t_init, self.t_melt));
        }
        if self.grid_n < 8 {
            return bad(format!("grid_n must be at least 8, got {}", self.grid_n));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return bad(format!("cfl_safety must lie in (0, 1), got {}", self.cfl_safety));
        }
        Ok(())
    }

    pub fn d_eta(&self) -> f64 {
        1.0 / self.grid_n as f64
    }
}

/// Temperature samples `T(η s, t)` on the immobilized grid plus the front.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub t: f64,
    pub s: f64,
    pub temp: Vec<f64>,
    pub s_dot: f64,
    /// Set once the front has collapsed onto the wall.
    pub degenerate: bool,
}

impl PlantState {
    /// Uniform grid spacing of the immobilized coordinate.
    pub fn d_eta(&self) -> f64 {
        1.0 / (self.temp.len() - 1) as f64
    }

    /// Physical positions `x_j = η_j s` of the grid nodes.
    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.d_eta();
        let s = self.s;
        (0..self.temp.len()).map(move |j| j as f64 * h * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    /// Minimum of `T − T_m` over the grid.
    pub min_superheat: f64,
    /// Sign of the last interface velocity (−1, 0 or 1).
    pub s_dot_sign: i8,
    /// Whether `s` lies between the initial position and the target.
    pub in_band: bool,
    pub violated: bool,
}

/// Second-order one-sided derivative `T_x` at the front.
pub fn interface_gradient(state: &PlantState) -> f64 {
    let n = state.temp.len() - 1;
    let h = state.d_eta();
    let t = &state.temp;
    (3.0 * t[n] - 4.0 * t[n - 1] + t[n - 2]) / (2.0 * h * state.s)
}

/// Trapezoidal `∫₀^s (T − T_m) dx`.
pub fn domain_integral_u(state: &PlantState, t_melt: f64) -> f64 {
    let h = state.d_eta();
    trapezoid(state.temp.iter().map(|&v| v - t_melt), h) * state.s
}

/// Composite trapezoid of evenly spaced samples.
pub(crate) fn trapezoid(samples: impl ExactSizeIterator<Item = f64>, h: f64) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for (j, v) in samples.enumerate() {
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        sum += w * v;
    }
    sum * h
}

/// Monitoring only: reports whether the one-phase model assumptions hold.
///
/// `target` is the setpoint used for the band check; pass `None` to skip it.
pub fn validity_check(state: &PlantState, config: &PlantConfig, target: Option<f64>, tolerance: f64) -> ValidityReport {
    let min_superheat = state.temp.iter().map(|&v| v - config.t_melt).fold(f64::INFINITY, f64::min);
    let s_dot_sign = if state.s_dot > tolerance {
        1
    } else if state.s_dot < -tolerance {
        -1
    } else {
        0
    };
    let in_band = match target {
        Some(target) => {
            let (lo, hi) = if config.s0 <= target { (config.s0, target) } else { (target, config.s0) };
            state.s >= lo && state.s <= hi
        }
        None => true,
    };
    ValidityReport { min_superheat, s_dot_sign, in_band, violated: min_superheat < -tolerance || s_dot_sign < 0 }
}

/// Explicit immobilized-grid integrator for a fixed configuration.
#[derive(Debug, Clone)]
pub struct StefanPlant {
    config: PlantConfig,
    scratch: Vec<f64>,
}

impl StefanPlant {
    pub fn new(config: PlantConfig) -> Result<Self> {
        config.validate()?;
        let scratch = vec![0.0; config.grid_n + 1];
        Ok(Self { config, scratch })
    }

    pub fn config(&self) -> &PlantConfig {
        &self.config
    }

    /// Linear profile from `T_0` at the wall down to `T_m` at the front.
    pub fn init_state(&self) -> PlantState {
        let cfg = &self.config;
        let n = cfg.grid_n;
        let temp = (0..=n)
            .map(|j| {
                let eta = j as f64 / n as f64;
                cfg.t_init + (cfg.t_melt - cfg.t_init) * eta
            })
            .collect::<Vec<_>>();
        let mut state = PlantState { t: 0.0, s: cfg.s0, temp, s_dot: 0.0, degenerate: false };
        state.temp[n] = cfg.t_melt;
        state.s_dot = self.front_velocity(&state);
        state
    }

    /// Builds a state from a profile `T(x)` sampled at `x = η s`.
    pub fn state_from_profile(&self, s: f64, t: f64, profile: impl Fn(f64) -> f64) -> Result<PlantState> {
        if !(s > 0.0) {
            return Err(Error::Config(format!("interface position must be positive, got {s}")));
        }
        let n = self.config.grid_n;
        let mut temp: Vec<f64> = (0..=n).map(|j| profile(j as f64 / n as f64 * s)).collect();
        temp[n] = self.config.t_melt;
        let mut state = PlantState { t, s, temp, s_dot: 0.0, degenerate: false };
        state.s_dot = self.front_velocity(&state);
        Ok(state)
    }

    fn front_velocity(&self, state: &PlantState) -> f64 {
        if state.s < DEGENERATE_FRONT {
            return 0.0;
        }
        -self.config.beta_phys * interface_gradient(state)
    }

    /// Advances the state by `dt_macro` with the input held constant.
    ///
    /// In Neumann mode `input` is the wall heat flux `q_c`; in Dirichlet mode
    /// it is the wall temperature.
    pub fn step(&mut self, state: &mut PlantState, input: f64, dt_macro: f64) -> Result<()> {
        if !(dt_macro > 0.0) {
            return Err(Error::Config(format!("macro step must be positive, got {dt_macro}")));
        }
        let cfg = &self.config;
        let n = cfg.grid_n;
        let h = cfg.d_eta();
        let t_end = state.t + dt_macro;
        let mut remaining = dt_macro;
        let mut substeps = 0usize;

        while remaining > 0.0 {
            let s = state.s;
            if s < DEGENERATE_FRONT {
                // nothing left to integrate on; hold the state
                state.degenerate = true;
                state.s_dot = 0.0;
                state.t = t_end;
                return Ok(());
            }
            substeps += 1;
            if substeps > MAX_SUBSTEPS {
                return Err(Error::Integration {
                    time: state.t,
                    reason: format!("substep budget exhausted (s = {:.3e})", s),
                });
            }
            let s_dot = -cfg.beta_phys * interface_gradient(state);
            let dt_stable = cfg.cfl_safety * h * h * s * s / (2.0 * cfg.alpha + s_dot.abs() * s * h);
            // Avoid a sliver substep caused by roundoff in `remaining`.
            let dt = if dt_stable >= remaining * (1.0 - 1e-12) { remaining } else { dt_stable };

            let diff = cfg.alpha / (s * s * h * h);
            let adv = s_dot / (s * 2.0 * h);
            let u = &state.temp;
            let new = &mut self.scratch;
            let tm = cfg.t_melt;

            new[0] = match cfg.bc_mode {
                BoundaryMode::NeumannFlux => {
                    // ghost node: u_{-1} = u_1 + 2 h s q / k
                    let ghost = u[1] + 2.0 * h * s * input / cfg.k_cond;
                    u[0] + dt * diff * (u[1] - 2.0 * u[0] + ghost)
                }
                BoundaryMode::DirichletTemperature => input,
            };
            for j in 1..n {
                let eta = j as f64 * h;
                let lap = u[j + 1] - 2.0 * u[j] + u[j - 1];
                let grad = u[j + 1] - u[j - 1];
                new[j] = u[j] + dt * (diff * lap + eta * adv * grad);
            }
            new[n] = tm;

            std::mem::swap(&mut state.temp, &mut self.scratch);
            state.s = s + dt * s_dot;
            state.s_dot = s_dot;
            remaining -= dt;
            state.t = if remaining > 0.0 { state.t + dt } else { t_end };

            if !state.s.is_finite() || !state.temp.iter().all(|v| v.is_finite()) {
                return Err(Error::Integration { time: state.t, reason: "non-finite plant state".into() });
            }
        }
        state.s_dot = self.front_velocity(state);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn plant(grid_n: usize) -> StefanPlant {
        StefanPlant::new(PlantConfig { grid_n, ..PlantConfig::default() }).unwrap()
    }

    #[test]
    fn init_matches_table_values() {
        let st = plant(100).init_state();
        assert_eq!(st.temp[0], 110.0);
        assert_eq!(st.temp[100], 100.0);
        assert_eq!(st.s, 0.12);
        assert_eq!(st.t, 0.0);
    }

    #[test]
    fn init_linear_midpoint() {
        let st = plant(10).init_state();
        assert_relative_eq!(st.temp[5], 105.0, epsilon = 1e-12);
    }

    #[test]
    fn init_at_melting_point_is_equilibrium() {
        let mut p = StefanPlant::new(PlantConfig { t_init: 100.0, ..PlantConfig::default() }).unwrap();
        let mut st = p.init_state();
        assert!(st.temp.iter().all(|&v| v == 100.0));
        p.step(&mut st, 0.0, 0.05).unwrap();
        assert!(st.temp.iter().all(|&v| (v - 100.0).abs() < 1e-12));
        assert_eq!(st.s, 0.12);
        assert_eq!(st.s_dot, 0.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            PlantConfig { s0: 0.0, ..PlantConfig::default() },
            PlantConfig { s0: 1.5, ..PlantConfig::default() },
            PlantConfig { t_init: 90.0, ..PlantConfig::default() },
            PlantConfig { grid_n: 4, ..PlantConfig::default() },
            PlantConfig { cfl_safety: 1.0, ..PlantConfig::default() },
            PlantConfig { alpha: 0.0, ..PlantConfig::default() },
        ];
        for cfg in cases {
            assert!(matches!(StefanPlant::new(cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn gradient_exact_on_linear_and_quadratic() {
        let p = plant(16);
        let st = p.init_state();
        assert_relative_eq!(interface_gradient(&st), (100.0 - 110.0) / 0.12, max_relative = 1e-12);

        let s = 0.37;
        let st = p.state_from_profile(s, 0.0, |x| 100.0 + 1.0 - (x / s).powi(2)).unwrap();
        assert_relative_eq!(interface_gradient(&st), -2.0 / s, max_relative = 1e-10);
        // double root at the front: flat there
        let st = p.state_from_profile(s, 0.0, |x| 100.0 + (1.0 - x / s).powi(2)).unwrap();
        assert!(interface_gradient(&st).abs() < 1e-10);

        let uniform = p.state_from_profile(s, 0.0, |_| 100.0).unwrap();
        assert_eq!(interface_gradient(&uniform), 0.0);
    }

    #[test]
    fn ghost_node_flux_exact_on_linear_profile() {
        // A linear profile whose slope matches the wall flux has zero
        // curvature everywhere, so the wall node stays put.
        let mut p = plant(20);
        let s = 0.5;
        let q = 3.0;
        let mut st = p.state_from_profile(s, 0.0, |x| 100.0 + q * (s - x)).unwrap();
        let wall = st.temp[0];
        p.step(&mut st, q, 1e-7).unwrap();
        assert_relative_eq!(st.temp[0], wall, max_relative = 1e-13);
    }

    #[test]
    fn domain_integral_cases() {
        let p = plant(100);
        let st = p.init_state();
        assert_relative_eq!(domain_integral_u(&st, 100.0), 0.6, max_relative = 1e-12);
        let uniform = p.state_from_profile(0.3, 0.0, |_| 100.0).unwrap();
        assert_eq!(domain_integral_u(&uniform, 100.0), 0.0);
    }

    #[test]
    fn domain_integral_second_order() {
        // Smooth profile with exact integral; error drops ~4x per refinement.
        let s = 0.7;
        let f = |x: f64| 100.0 + (std::f64::consts::PI * x / (2.0 * s)).cos() * (1.0 + x);
        let exact = {
            // fine-grid Richardson reference
            let fine = |n| {
                let p = plant(n);
                domain_integral_u(&p.state_from_profile(s, 0.0, f).unwrap(), 100.0)
            };
            (4.0 * fine(4096) - fine(2048)) / 3.0
        };
        let err = |n| {
            let p = plant(n);
            (domain_integral_u(&p.state_from_profile(s, 0.0, f).unwrap(), 100.0) - exact).abs()
        };
        let ratio = err(40) / err(80);
        assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn validity_reports() {
        let p = plant(10);
        let cfg = p.config().clone();
        let st = p.state_from_profile(0.3, 0.0, |_| 100.0).unwrap();
        let r = validity_check(&st, &cfg, Some(0.8), 1e-9);
        assert_eq!(r.min_superheat, 0.0);
        assert!(!r.violated);
        assert!(r.in_band);

        let mut cold = st.clone();
        cold.temp[3] = 99.0;
        assert!(validity_check(&cold, &cfg, None, 0.5).violated);
        assert!(!validity_check(&cold, &cfg, None, 1.5).violated);
    }

    #[test]
    fn constant_flux_melts_monotonically() {
        let mut p = plant(50);
        let mut st = p.init_state();
        let mut last = st.s;
        for _ in 0..200 {
            p.step(&mut st, 2.0, 0.005).unwrap();
            assert!(st.s > last);
            last = st.s;
            let r = validity_check(&st, p.config(), None, 1e-9);
            assert!(r.min_superheat >= -1e-9);
        }
        assert_relative_eq!(st.t, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_flux_maximum_principle() {
        let mut p = plant(40);
        let mut st = p.init_state();
        let (mut hi, mut lo) = (110.0_f64, 100.0_f64);
        for _ in 0..400 {
            // tiny macro steps so each one covers few substeps
            p.step(&mut st, 0.0, 1e-5).unwrap();
            let max = st.temp.iter().cloned().fold(f64::MIN, f64::max);
            let min = st.temp.iter().cloned().fold(f64::MAX, f64::min);
            assert!(max <= hi + 1e-12);
            assert!(min >= lo - 1e-12);
            hi = max;
            lo = min;
        }
    }

    #[test]
    fn zero_flux_energy_balance() {
        // ∫(T − T_m) dx + (α/β) s is invariant without wall flux.
        let mut p = plant(200);
        let mut st = p.init_state();
        let e0 = domain_integral_u(&st, 100.0) + st.s;
        for _ in 0..100 {
            p.step(&mut st, 0.0, 0.01).unwrap();
        }
        let e1 = domain_integral_u(&st, 100.0) + st.s;
        assert!((e1 - e0).abs() < 2e-3, "drift {}", e1 - e0);
        assert!(st.s > 0.65);
    }

    #[test]
    fn overflow_is_reported_with_time() {
        let mut p = plant(10);
        let mut st = p.init_state();
        st.temp[4] = f64::NAN;
        match p.step(&mut st, 0.0, 0.01) {
            Err(Error::Integration { time, .. }) => assert!(time > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
