//! Scenario runner: wires plant, dither and controller into the loop and
//! summarizes the trailing window of the result.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{lyapunov_eval, AverageSystem, FilterMode, KernelSpec, LyapunovSample};
use crate::config::{Scenario, SimConfig};
use crate::controller::{actuator_input, demod_gradient, demod_hessian, static_map, EsController, MapConfig};
use crate::dither::DitherGenerator;
use crate::error::{Error, Result};
use crate::oracles::{similarity_interface, SimilaritySpec};
use crate::plant::{trapezoid, validity_check, PlantState, StefanPlant};
use crate::trace::TraceRecord;

/// Tolerance of the per-row validity flag.
pub const VALIDITY_TOL: f64 = 1e-6;
/// Trailing fraction of the horizon used for settle metrics.
pub const WINDOW_FRACTION: f64 = 0.2;

/// Full-rate loop internals, one per control sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSample {
    pub t: f64,
    pub s: f64,
    pub s_dot: f64,
    pub y: f64,
    pub u_filt: f64,
    /// Unfiltered law output.
    pub raw: f64,
    pub predictor: f64,
    pub integ_u: f64,
    pub g: f64,
    pub h_hat: f64,
    /// Flux reaching the plant after the delay line.
    pub applied: f64,
    pub max_superheat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleMetrics {
    pub window_start: f64,
    pub window_end: f64,
    pub s_residual_max: f64,
    pub s_residual_mean: f64,
    pub y_residual_max: f64,
    pub y_residual_mean: f64,
    pub u_residual_mean: f64,
    pub dither_amplitude_fit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub t: f64,
    pub s_numeric: f64,
    pub s_exact: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioOutput {
    pub trace: Vec<TraceRecord>,
    pub samples: Vec<LoopSample>,
    pub metrics: Option<SettleMetrics>,
    pub lyapunov: Vec<LyapunovSample>,
    pub oracle: Option<OracleReport>,
}

impl ScenarioOutput {
    /// Largest `T − T_m` seen at or after `t_from`.
    pub fn max_superheat_since(&self, t_from: f64) -> f64 {
        self.samples.iter().filter(|s| s.t >= t_from).map(|s| s.max_superheat).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn run_scenario(cfg: &SimConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    match cfg.scenario {
        Scenario::Nominal | Scenario::DelayCompensated | Scenario::DelayUncompensated => closed_loop(cfg),
        Scenario::OpenLoopDither => open_loop(cfg),
        Scenario::DirichletOracle => dirichlet_oracle(cfg),
        Scenario::AverageTarget => average_target(cfg),
    }
}

fn max_superheat(st: &PlantState, t_melt: f64) -> f64 {
    st.temp.iter().map(|v| v - t_melt).fold(f64::NEG_INFINITY, f64::max)
}

struct Recorder<'a> {
    cfg: &'a SimConfig,
    out: ScenarioOutput,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &'a SimConfig) -> Self {
        Self { cfg, out: ScenarioOutput::default() }
    }

    fn plant_row(&mut self, k: usize, st: &PlantState, sample: &LoopSample, dither: f64, theta: f64) {
        if !k.is_multiple_of(self.cfg.output_stride) {
            return;
        }
        let report = validity_check(st, &self.cfg.plant, Some(self.cfg.map.theta_star), VALIDITY_TOL);
        self.out.trace.push(TraceRecord {
            t: sample.t,
            s: sample.s,
            y: sample.y,
            u: sample.u_filt,
            dither,
            theta,
            g: sample.g,
            h_hat: sample.h_hat,
            t0: st.temp[0],
            min_superheat: report.min_superheat,
            valid: !report.violated,
        });
    }

    fn finish_settled(mut self) -> ScenarioOutput {
        let omega = self.cfg.controller.omega;
        self.out.metrics = settle_metrics(&self.out.samples_as_trace(), &self.cfg.map, omega, WINDOW_FRACTION).ok();
        self.out
    }
}

impl ScenarioOutput {
    /// Full-rate samples in trace form, for metrics that must not depend on
    /// the output stride.
    fn samples_as_trace(&self) -> Vec<TraceRecord> {
        self.samples
            .iter()
            .map(|s| TraceRecord {
                t: s.t,
                s: s.s,
                y: s.y,
                u: s.u_filt,
                dither: 0.0,
                theta: 0.0,
                g: s.g,
                h_hat: s.h_hat,
                t0: 0.0,
                min_superheat: 0.0,
                valid: true,
            })
            .collect()
    }
}

/// `∫₀^s u dx` for the measured error field `u = (T − T_m) − β(x, t)`.
fn measured_integral(st: &PlantState, t_melt: f64, field: &DitherGenerator, t: f64) -> Result<f64> {
    let profile = field.beta_profile(t);
    let h = st.d_eta();
    let mut u = Vec::with_capacity(st.temp.len());
    for (j, temp) in st.temp.iter().enumerate() {
        u.push(temp - t_melt - profile.eval(j as f64 * h * st.s)?);
    }
    Ok(trapezoid(u.into_iter(), h) * st.s)
}

fn closed_loop(cfg: &SimConfig) -> Result<ScenarioOutput> {
    let dt = cfg.controller.dt_ctrl;
    let mut plant = StefanPlant::new(cfg.plant.clone())?;
    let mut st = plant.init_state();
    let mut ctl = EsController::new(cfg.controller.clone())?;
    let dither = DitherGenerator::new(cfg.dither.clone())?;
    let field = dither.without_advance();
    let mut line: VecDeque<f64> = VecDeque::from(vec![0.0; cfg.controller.delay_samples()]);
    let mut rec = Recorder::new(cfg);
    let tm = cfg.plant.t_melt;

    for k in 0..cfg.steps() {
        let t = k as f64 * dt;
        let y = static_map(st.s, &cfg.map);
        let integ_u = measured_integral(&st, tm, &field, t)?;
        let step = ctl.control_update(t, y, integ_u)?;
        let s_sig = dither.dither_signal(t)?;
        let theta = actuator_input(step.u_filt, s_sig);
        line.push_back(theta);
        let applied = line.pop_front().unwrap_or(theta);

        let sample = LoopSample {
            t,
            s: st.s,
            s_dot: st.s_dot,
            y,
            u_filt: step.u_filt,
            raw: step.raw,
            predictor: step.predictor,
            integ_u,
            g: step.g_est,
            h_hat: step.h_est,
            applied,
            max_superheat: max_superheat(&st, tm),
        };
        rec.plant_row(k, &st, &sample, s_sig, theta);
        rec.out.samples.push(sample);
        plant.step(&mut st, applied, dt)?;
    }
    Ok(rec.finish_settled())
}

fn open_loop(cfg: &SimConfig) -> Result<ScenarioOutput> {
    let dt = cfg.controller.dt_ctrl;
    let mut plant = StefanPlant::new(cfg.plant.clone())?;
    let mut st = plant.init_state();
    let dither = DitherGenerator::new(cfg.dither.clone())?;
    let (a, omega) = (cfg.dither.a, cfg.dither.omega);
    let mut rec = Recorder::new(cfg);
    let tm = cfg.plant.t_melt;

    for k in 0..cfg.steps() {
        let t = k as f64 * dt;
        let y = static_map(st.s, &cfg.map);
        let (g, h) =
            if a > 0.0 { (demod_gradient(y, t, a, omega)?, demod_hessian(y, t, a, omega)?) } else { (0.0, 0.0) };
        let s_sig = dither.dither_signal(t)?;
        let sample = LoopSample {
            t,
            s: st.s,
            s_dot: st.s_dot,
            y,
            u_filt: 0.0,
            raw: 0.0,
            predictor: 0.0,
            integ_u: 0.0,
            g,
            h_hat: h,
            applied: s_sig,
            max_superheat: max_superheat(&st, tm),
        };
        rec.plant_row(k, &st, &sample, s_sig, s_sig);
        rec.out.samples.push(sample);
        plant.step(&mut st, s_sig, dt)?;
    }
    Ok(rec.finish_settled())
}

/// Similarity spec matching the plant configuration, with `T_0` as the
/// wall temperature.
pub fn oracle_spec(cfg: &SimConfig) -> Result<SimilaritySpec> {
    let p = &cfg.plant;
    SimilaritySpec::new(p.alpha, p.beta_phys, p.t_init, p.t_melt, p.s0)
}

fn dirichlet_oracle(cfg: &SimConfig) -> Result<ScenarioOutput> {
    let spec = oracle_spec(cfg)?;
    let dt = cfg.controller.dt_ctrl;
    let mut plant = StefanPlant::new(cfg.plant.clone())?;
    let mut st = plant.state_from_profile(cfg.plant.s0, 0.0, |x| spec.temperature(x, 0.0))?;
    let t_b = cfg.plant.t_init;
    let tm = cfg.plant.t_melt;
    let mut rec = Recorder::new(cfg);
    let steps = cfg.steps();

    for k in 0..steps {
        let t = k as f64 * dt;
        let sample = LoopSample {
            t,
            s: st.s,
            s_dot: st.s_dot,
            y: static_map(st.s, &cfg.map),
            u_filt: 0.0,
            raw: 0.0,
            predictor: 0.0,
            integ_u: 0.0,
            g: 0.0,
            h_hat: 0.0,
            applied: t_b,
            max_superheat: max_superheat(&st, tm),
        };
        rec.plant_row(k, &st, &sample, 0.0, t_b);
        rec.out.samples.push(sample);
        plant.step(&mut st, t_b, dt)?;
    }
    let s_exact = similarity_interface(st.t, &spec);
    rec.out.oracle =
        Some(OracleReport { t: st.t, s_numeric: st.s, s_exact, rel_error: (st.s - s_exact).abs() / s_exact });
    Ok(rec.out)
}

/// Random initial error compatible with the ideal compensating law.
///
/// The front sits at `s* + ϑ₀` with `ϑ₀ < 0`, and the profile
/// `u₀(x) = A (s₀ − x) + C (s₀ − x)²` is non-negative with `C` chosen so that
/// `u₀'(0) = K̄ (ϑ₀ + ∫u₀)`.
pub fn average_initial_condition(spec: &KernelSpec, rng: &mut impl Rng) -> (f64, f64, f64) {
    let v0 = -spec.s_star * rng.gen_range(0.125..0.625);
    let s0 = spec.s_star + v0;
    let kb = spec.k_bar;
    let a_max = kb * v0.abs() / (1.0 + 0.5 * kb * s0 * s0);
    let a = 0.9 * a_max * rng.gen::<f64>();
    let c = -(kb * v0 + a * (1.0 + 0.5 * kb * s0 * s0)) / (2.0 * s0 + kb * s0.powi(3) / 3.0);
    (v0, a, c)
}

fn average_target(cfg: &SimConfig) -> Result<ScenarioOutput> {
    let k_bar = cfg.controller.k_gain * cfg.map.hessian;
    let spec = KernelSpec::new(k_bar, cfg.map.theta_star)?;
    let mut sys = AverageSystem::new(spec, FilterMode::Ideal, cfg.plant.grid_n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (v0, a, c) = average_initial_condition(&spec, &mut rng);
    let s0 = spec.s_star + v0;
    let mut st = sys.init(v0, |x| a * (s0 - x) + c * (s0 - x).powi(2))?;
    let dt = cfg.controller.dt_ctrl;
    let mut out = ScenarioOutput::default();

    for k in 0..=cfg.steps() {
        let flux = -k_bar * (st.v_theta + st.integral_u());
        let field = st.u_samples();
        let min_u = field.iter().copied().fold(f64::INFINITY, f64::min);
        let max_u = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let y = static_map(st.s_av(), &cfg.map);
        out.samples.push(LoopSample {
            t: st.t,
            s: st.s_av(),
            s_dot: st.field.s_dot,
            y,
            u_filt: flux,
            raw: flux,
            predictor: 0.0,
            integ_u: st.integral_u(),
            g: cfg.map.hessian * st.v_theta,
            h_hat: cfg.map.hessian,
            applied: flux,
            max_superheat: max_u,
        });
        if k.is_multiple_of(cfg.output_stride) {
            out.lyapunov.push(lyapunov_eval(&st, &spec));
            out.trace.push(TraceRecord {
                t: st.t,
                s: st.s_av(),
                y,
                u: flux,
                dither: 0.0,
                theta: flux,
                g: cfg.map.hessian * st.v_theta,
                h_hat: cfg.map.hessian,
                t0: field[0],
                min_superheat: min_u,
                valid: min_u >= -VALIDITY_TOL && st.field.s_dot >= -VALIDITY_TOL,
            });
        }
        if k < cfg.steps() {
            sys.step(&mut st, dt)?;
        }
    }
    Ok(out)
}

/// Least-squares fit of `A sin ωt + B cos ωt + C`; returns `(√(A²+B²), C)`.
fn fit_fundamental(ts: &[f64], vs: &[f64], omega: f64) -> (f64, f64) {
    // normal equations for the basis (sin, cos, 1)
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for (&t, &v) in ts.iter().zip(vs) {
        let b = [(omega * t).sin(), (omega * t).cos(), 1.0];
        for i in 0..3 {
            r[i] += b[i] * v;
            for j in 0..3 {
                m[i][j] += b[i] * b[j];
            }
        }
    }
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(&m);
    if d.abs() < f64::MIN_POSITIVE {
        return (0.0, 0.0);
    }
    let mut coef = [0.0; 3];
    for (k, c) in coef.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *c = det3(&mk) / d;
    }
    (coef[0].hypot(coef[1]), coef[2])
}

/// Residuals over the trailing `window_fraction` of the trace.
pub fn settle_metrics(
    trace: &[TraceRecord],
    map: &MapConfig,
    omega: f64,
    window_fraction: f64,
) -> Result<SettleMetrics> {
    let last = trace.last().ok_or(Error::WindowTooShort { periods: 0.0 })?;
    let t_end = last.t;
    let t_from = t_end - window_fraction * t_end;
    let periods = (t_end - t_from) * omega / (2.0 * PI);
    if periods < 3.0 {
        return Err(Error::WindowTooShort { periods });
    }
    let window: Vec<&TraceRecord> = trace.iter().filter(|r| r.t >= t_from).collect();
    let n = window.len() as f64;
    let s_res: Vec<f64> = window.iter().map(|r| (r.s - map.theta_star).abs()).collect();
    let y_res: Vec<f64> = window.iter().map(|r| (r.y - map.y_star).abs()).collect();
    let ts: Vec<f64> = window.iter().map(|r| r.t).collect();
    let ss: Vec<f64> = window.iter().map(|r| r.s).collect();
    let (amp, _) = fit_fundamental(&ts, &ss, omega);
    Ok(SettleMetrics {
        window_start: t_from,
        window_end: t_end,
        s_residual_max: s_res.iter().copied().fold(0.0, f64::max),
        s_residual_mean: s_res.iter().sum::<f64>() / n,
        y_residual_max: y_res.iter().copied().fold(0.0, f64::max),
        y_residual_mean: y_res.iter().sum::<f64>() / n,
        u_residual_mean: window.iter().map(|r| r.u.abs()).sum::<f64>() / n,
        dither_amplitude_fit: amp,
    })
}

/// Flat `key = value` summary of a finished scenario.
pub fn metrics_block(cfg: &SimConfig, out: &ScenarioOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario = {}", cfg.scenario);
    let _ = writeln!(s, "rows = {}", out.trace.len());
    let _ = writeln!(s, "samples = {}", out.samples.len());
    if let Some(last) = out.samples.last() {
        let _ = writeln!(s, "final_t = {}", last.t);
        let _ = writeln!(s, "final_s = {}", last.s);
    }
    if let Some(m) = &out.metrics {
        let _ = writeln!(s, "window_start = {}", m.window_start);
        let _ = writeln!(s, "window_end = {}", m.window_end);
        let _ = writeln!(s, "s_residual_max = {}", m.s_residual_max);
        let _ = writeln!(s, "s_residual_mean = {}", m.s_residual_mean);
        let _ = writeln!(s, "y_residual_max = {}", m.y_residual_max);
        let _ = writeln!(s, "y_residual_mean = {}", m.y_residual_mean);
        let _ = writeln!(s, "u_residual_mean = {}", m.u_residual_mean);
        let _ = writeln!(s, "dither_amplitude_fit = {}", m.dither_amplitude_fit);
        let _ = writeln!(s, "window_max_superheat = {}", out.max_superheat_since(m.window_start));
    }
    if let Some(o) = &out.oracle {
        let _ = writeln!(s, "oracle_t = {}", o.t);
        let _ = writeln!(s, "oracle_s_numeric = {}", o.s_numeric);
        let _ = writeln!(s, "oracle_s_exact = {}", o.s_exact);
        let _ = writeln!(s, "oracle_rel_error = {}", o.rel_error);
    }
    if let (Some(first), Some(last)) = (out.lyapunov.first(), out.lyapunov.last()) {
        let _ = writeln!(s, "lyapunov_w_initial = {}", first.w);
        let _ = writeln!(s, "lyapunov_w_final = {}", last.w);
    }
    s
}
