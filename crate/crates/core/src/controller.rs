//! Measurable extremum-seeking loop.
//!
//! Demodulation turns the map output into gradient and Hessian estimates,
//! `G = (2/a) sin(ωt) y` and `Ĥ = −(8/a²) cos(2ωt) y`. The boundary law
//! compensates the Stefan cascade through the measured integral of the error
//! field and, in the delay-compensated mode, the integral of past controls
//! over one delay window. A first-order low-pass filter with pole `c` is
//! discretized exactly under zero-order hold.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::plant::trapezoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    Nominal,
    DelayCompensated,
    /// Delay present in the loop, predictor term omitted.
    DelayUncompensated,
}

impl ControlMode {
    pub fn has_delay(self) -> bool {
        !matches!(self, ControlMode::Nominal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    /// Controller gain `K` (negative for maximum seeking).
    pub k_gain: f64,
    pub a: f64,
    pub omega: f64,
    /// Low-pass filter pole [rad/s].
    pub c: f64,
    /// Control sample period [s].
    pub dt_ctrl: f64,
    /// Input delay [s].
    pub delay: f64,
    pub mode: ControlMode,
    /// Corner [rad/s] of the first-order high-pass applied to `y` before
    /// demodulation. Zero disables it.
    pub washout: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            k_gain: -0.1,
            a: 0.1,
            omega: 10.0,
            c: 10.0,
            dt_ctrl: 0.005,
            delay: 0.5,
            mode: ControlMode::DelayCompensated,
            washout: 1.0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.k_gain < 0.0) {
            return bad(format!("controller gain K must be negative, got {}", self.k_gain));
        }
        if !(self.c > 0.0) {
            return bad(format!("filter pole c must be positive, got {}", self.c));
        }
        if !(self.dt_ctrl > 0.0) {
            return bad(format!("control period must be positive, got {}", self.dt_ctrl));
        }
        if !(self.delay >= 0.0) {
            return bad(format!("delay must be non-negative, got {}", self.delay));
        }
        if !(self.omega > 0.0) {
            return bad(format!("dither frequency must be positive, got {}", self.omega));
        }
        if !(self.washout >= 0.0) {
            return bad(format!("washout corner must be non-negative, got {}", self.washout));
        }
        if self.mode.has_delay() {
            let ratio = self.delay / self.dt_ctrl;
            if (ratio - ratio.round()).abs() > 1e-9 {
                return bad(format!(
                    "delay {} is not an integer multiple of the control period {}",
                    self.delay, self.dt_ctrl
                ));
            }
        }
        Ok(())
    }

    /// Number of control samples spanning one delay window.
    pub fn delay_samples(&self) -> usize {
        if self.mode.has_delay() {
            (self.delay / self.dt_ctrl).round() as usize
        } else {
            0
        }
    }
}

/// Locally quadratic map with a maximum at `theta_star`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    pub theta_star: f64,
    pub y_star: f64,
    /// Curvature `H`, negative.
    pub hessian: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { theta_star: 0.8, y_star: 4.0, hessian: -1.0 }
    }
}

impl MapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hessian < 0.0) {
            return Err(Error::Config(format!("map Hessian must be negative, got {}", self.hessian)));
        }
        Ok(())
    }
}

/// `Q(Θ) = y* + (H/2)(Θ − Θ*)²`.
pub fn static_map(theta: f64, map: &MapConfig) -> f64 {
    let d = theta - map.theta_star;
    map.y_star + 0.5 * map.hessian * d * d
}

/// Gradient estimate `(2/a) sin(ωt) y`.
pub fn demod_gradient(y: f64, t: f64, a: f64, omega: f64) -> Result<f64> {
    if a == 0.0 {
        return Err(Error::ZeroAmplitude);
    }
    Ok(2.0 / a * (omega * t).sin() * y)
}

/// Hessian estimate `−(8/a²) cos(2ωt) y`.
pub fn demod_hessian(y: f64, t: f64, a: f64, omega: f64) -> Result<f64> {
    if a == 0.0 {
        return Err(Error::ZeroAmplitude);
    }
    Ok(-8.0 / (a * a) * (2.0 * omega * t).cos() * y)
}

/// Applied flux `θ = U + S`.
pub fn actuator_input(u_filt: f64, dither: f64) -> f64 {
    u_filt + dither
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    /// Filtered control `U`.
    pub u_filt: f64,
    /// Filter outputs over the last delay window, oldest first. Holds
    /// `delay_samples + 1` values so the trapezoid spans exactly `D`.
    pub delay_buffer: VecDeque<f64>,
    pub g_est: f64,
    pub h_est: f64,
    pub t: f64,
    /// Low-passed output tracked by the washout; `None` before the first sample.
    pub y_lp: Option<f64>,
}

/// Intermediate quantities of one control update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlStep {
    pub t: f64,
    pub g_est: f64,
    pub h_est: f64,
    /// `∫_{t−D}^{t} U dψ` used in this update (zero outside the compensated mode).
    pub predictor: f64,
    pub integ_u: f64,
    /// Unfiltered law output.
    pub raw: f64,
    pub u_filt: f64,
}

#[derive(Debug, Clone)]
pub struct EsController {
    cfg: ControllerConfig,
    state: ControllerState,
    decay: f64,
    wash_decay: f64,
}

impl EsController {
    pub fn new(cfg: ControllerConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.delay_samples();
        let delay_buffer = if cfg.mode.has_delay() { VecDeque::from(vec![0.0; n + 1]) } else { VecDeque::new() };
        let decay = (-cfg.c * cfg.dt_ctrl).exp();
        let wash_decay = (-cfg.washout * cfg.dt_ctrl).exp();
        Ok(Self {
            state: ControllerState { u_filt: 0.0, delay_buffer, g_est: 0.0, h_est: 0.0, t: 0.0, y_lp: None },
            cfg,
            decay,
            wash_decay,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    /// Trapezoidal `∫_{t−D}^{t} U(ψ) dψ` over the buffer.
    pub fn predictor_integral(&self) -> f64 {
        trapezoid(self.state.delay_buffer.iter().copied(), self.cfg.dt_ctrl)
    }

    /// One control sample at time `t`: demodulate `y`, form the law and
    /// advance the filter. `integ_u` is `∫₀^{s} u dx` of the error field.
    /// Removes the slow part of the measured output. The low-pass state is
    /// seeded with the first sample so the loop starts without a step.
    fn washout(&mut self, y: f64) -> f64 {
        if self.cfg.washout == 0.0 {
            return y;
        }
        let lp = self.state.y_lp.unwrap_or(y);
        let lp = self.wash_decay * lp + (1.0 - self.wash_decay) * y;
        self.state.y_lp = Some(lp);
        y - lp
    }

    pub fn control_update(&mut self, t: f64, y: f64, integ_u: f64) -> Result<ControlStep> {
        let ControllerConfig { k_gain, a, omega, .. } = self.cfg;
        let y = self.washout(y);
        let g = demod_gradient(y, t, a, omega)?;
        let h = demod_hessian(y, t, a, omega)?;
        let predictor = match self.cfg.mode {
            ControlMode::DelayCompensated => self.predictor_integral(),
            _ => 0.0,
        };
        let raw = law_output(k_gain, g, h, predictor, integ_u);
        let u = self.decay * self.state.u_filt + (1.0 - self.decay) * raw;

        let st = &mut self.state;
        st.u_filt = u;
        st.g_est = g;
        st.h_est = h;
        st.t = t;
        if !st.delay_buffer.is_empty() {
            st.delay_buffer.pop_front();
            st.delay_buffer.push_back(u);
        }
        if !u.is_finite() {
            return Err(Error::Integration { time: t, reason: "non-finite control".into() });
        }
        Ok(ControlStep { t, g_est: g, h_est: h, predictor, integ_u, raw, u_filt: u })
    }
}

/// Unfiltered boundary law `−K [G + Ĥ (P + ∫u)]`.
///
/// With the averaged estimates `G → Hϑ` and `Ĥ → H` this is
/// `−K̄ (ϑ + P + ∫u)` with `K̄ = KH > 0`, the compensating law that maps the
/// error cascade onto the exponentially stable target system.
pub fn law_output(k_gain: f64, g: f64, h: f64, predictor: f64, integ_u: f64) -> f64 {
    -k_gain * (g + h * (predictor + integ_u))
}
