//! Backstepping machinery for the averaged error system.
//!
//! The Volterra transform
//! `w = u − K̄∫ₓˢ (x−σ) u(σ) dσ − K̄ (x−s) ϑ`
//! maps the average error cascade onto a target system with `w_x(0) = 0`,
//! and is inverted by the kernel `φ(x) = √K̄ sin(√K̄ x)`. The Lyapunov
//! functional `V = ½‖w‖² + ½‖w_x‖² + (ρ/2)ϑ²` weighted by `e^{−n s}` is the
//! quantity whose decay certifies exponential stability.
//!
//! The averaged plant is itself a one-phase Stefan problem with `T_m = 0`,
//! unit coefficients and front `s_av = s* + ϑ_av`, so it is advanced with
//! [`StefanPlant`].

use crate::error::{Error, Result};
use crate::plant::{interface_gradient, trapezoid, BoundaryMode, PlantConfig, PlantState, StefanPlant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    /// Composite gain `K̄ = KH`.
    pub k_bar: f64,
    /// Setpoint `s* = Θ*`.
    pub s_star: f64,
}

impl KernelSpec {
    pub fn new(k_bar: f64, s_star: f64) -> Result<Self> {
        if !(k_bar > 0.0) {
            return Err(Error::Config(format!("kernel gain K̄ must be positive, got {k_bar}")));
        }
        if !(s_star > 0.0) {
            return Err(Error::Config(format!("setpoint s* must be positive, got {s_star}")));
        }
        Ok(Self { k_bar, s_star })
    }

    /// `ρ = K̄/(4 s*)`, the weight on `ϑ²` in `V`.
    pub fn rho(&self) -> f64 {
        self.k_bar / (4.0 * self.s_star)
    }
}

/// Inverse kernel `φ(x) = √K̄ sin(√K̄ x)`.
pub fn phi(x: f64, spec: &KernelSpec) -> f64 {
    let r = spec.k_bar.sqrt();
    r * (r * x).sin()
}

/// `(m, n)` with `n = max{1, 8 s* K̄}` and `m = min{1/(4 s*²), K̄}`.
pub fn decay_constants(spec: &KernelSpec) -> (f64, f64) {
    let m = (1.0 / (4.0 * spec.s_star * spec.s_star)).min(spec.k_bar);
    let n = (8.0 * spec.s_star * spec.k_bar).max(1.0);
    (m, n)
}

/// `out[i] = ∫_{x_i}^{x_n} f` for evenly spaced samples.
///
/// Each cell is integrated with the cubic through its four nearest samples,
/// one-sided at the ends, so the rule is fourth order. Fewer than four
/// samples fall back to the trapezoid.
pub fn tail_integrals(f: &[f64], h: f64) -> Vec<f64> {
    let len = f.len();
    let mut out = vec![0.0; len];
    if len < 2 {
        return out;
    }
    let n = len - 1;
    for j in (0..n).rev() {
        let cell = if len < 4 {
            0.5 * (f[j] + f[j + 1])
        } else if j == 0 {
            (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0
        } else if j == n - 1 {
            (f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n]) / 24.0
        } else {
            (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2]) / 24.0
        };
        out[j] = out[j + 1] + h * cell;
    }
    out
}

fn grid(len: usize, s: f64) -> (f64, impl Iterator<Item = f64>) {
    let h = s / (len - 1) as f64;
    (h, (0..len).map(move |j| j as f64 * h))
}

/// Forward transform of samples of `u` on a uniform grid over `[0, s]`.
pub fn forward_transform(u: &[f64], v_theta: f64, s: f64, spec: &KernelSpec) -> Vec<f64> {
    if u.len() < 2 {
        return u.to_vec();
    }
    let (h, xs) = grid(u.len(), s);
    let xs: Vec<f64> = xs.collect();
    let sigma_u: Vec<f64> = xs.iter().zip(u).map(|(x, v)| x * v).collect();
    let int_u = tail_integrals(u, h);
    let int_su = tail_integrals(&sigma_u, h);
    let kb = spec.k_bar;
    xs.iter().enumerate().map(|(i, &x)| u[i] - kb * (x * int_u[i] - int_su[i]) - kb * (x - s) * v_theta).collect()
}

/// Inverse transform with kernel `φ`.
pub fn inverse_transform(w: &[f64], v_theta: f64, s: f64, spec: &KernelSpec) -> Vec<f64> {
    if w.len() < 2 {
        return w.to_vec();
    }
    let (h, xs) = grid(w.len(), s);
    let xs: Vec<f64> = xs.collect();
    let r = spec.k_bar.sqrt();
    // sin(r(x−σ)) = sin(rx)cos(rσ) − cos(rx)sin(rσ)
    let cw: Vec<f64> = xs.iter().zip(w).map(|(x, v)| (r * x).cos() * v).collect();
    let sw: Vec<f64> = xs.iter().zip(w).map(|(x, v)| (r * x).sin() * v).collect();
    let int_cw = tail_integrals(&cw, h);
    let int_sw = tail_integrals(&sw, h);
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let conv = r * ((r * x).sin() * int_cw[i] - (r * x).cos() * int_sw[i]);
            w[i] + conv + phi(x - s, spec) * v_theta
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterMode {
    /// `c → ∞`: the boundary flux is the law itself.
    Ideal,
    /// First-order filter with pole `c` between law and flux.
    Finite { c: f64 },
}

#[derive(Debug, Clone)]
pub struct AverageState {
    pub t: f64,
    pub v_theta: f64,
    /// `u_av` on the immobilized grid; `field.s` is `s_av`.
    pub field: PlantState,
    /// Filtered boundary flux in finite-c mode.
    pub u_filt: f64,
}

impl AverageState {
    pub fn s_av(&self) -> f64 {
        self.field.s
    }

    pub fn u_samples(&self) -> &[f64] {
        &self.field.temp
    }

    pub fn integral_u(&self) -> f64 {
        trapezoid(self.field.temp.iter().copied(), self.field.d_eta()) * self.field.s
    }

    /// Target-system samples `w` from the forward transform.
    pub fn w(&self, spec: &KernelSpec) -> Vec<f64> {
        forward_transform(&self.field.temp, self.v_theta, self.field.s, spec)
    }

    /// `‖u‖²_{H¹} + ϑ²`, the norm of the stability estimate.
    pub fn norm_sq(&self) -> f64 {
        let (l2, h1) = l2_and_h1(&self.field.temp, self.field.s);
        l2 + h1 + self.v_theta * self.v_theta
    }
}

/// Averaged closed loop: the Stefan cascade driven by the compensating flux
/// `U = −K̄ (ϑ + ∫u)`, directly or through the filter.
#[derive(Debug, Clone)]
pub struct AverageSystem {
    spec: KernelSpec,
    mode: FilterMode,
    plant: StefanPlant,
}

impl AverageSystem {
    /// `length` only bounds the grid configuration; it must exceed `s*`.
    pub fn new(spec: KernelSpec, mode: FilterMode, grid_n: usize) -> Result<Self> {
        if let FilterMode::Finite { c } = mode {
            if !(c > 0.0) {
                return Err(Error::Config(format!("filter pole must be positive, got {c}")));
            }
        }
        let cfg = PlantConfig {
            alpha: 1.0,
            beta_phys: 1.0,
            k_cond: 1.0,
            t_melt: 0.0,
            t_init: 0.0,
            s0: spec.s_star,
            length: 2.0 * spec.s_star,
            grid_n,
            cfl_safety: 0.9,
            bc_mode: BoundaryMode::NeumannFlux,
        };
        Ok(Self { spec, mode, plant: StefanPlant::new(cfg)? })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// State with error `ϑ` and profile `u(x)` on `[0, s* + ϑ]`.
    pub fn init(&self, v_theta: f64, profile: impl Fn(f64) -> f64) -> Result<AverageState> {
        let s = self.spec.s_star + v_theta;
        let field = self.plant.state_from_profile(s, 0.0, profile)?;
        let mut st = AverageState { t: 0.0, v_theta, field, u_filt: 0.0 };
        st.u_filt = self.law(&st);
        Ok(st)
    }

    fn law(&self, st: &AverageState) -> f64 {
        -self.spec.k_bar * (st.v_theta + st.integral_u())
    }

    /// Advances by `dt` with the boundary flux held over the step.
    pub fn step(&mut self, st: &mut AverageState, dt: f64) -> Result<()> {
        let law = self.law(st);
        let flux = match self.mode {
            FilterMode::Ideal => law,
            FilterMode::Finite { c } => {
                let decay = (-c * dt).exp();
                st.u_filt = decay * st.u_filt + (1.0 - decay) * law;
                st.u_filt
            }
        };
        self.plant.step(&mut st.field, flux, dt)?;
        st.t = st.field.t;
        st.v_theta = st.field.s - self.spec.s_star;
        if !st.v_theta.is_finite() {
            return Err(Error::Integration { time: st.t, reason: "non-finite average state".into() });
        }
        Ok(())
    }
}

/// Free-function form of [`AverageSystem::step`].
pub fn average_system_step(sys: &mut AverageSystem, st: &mut AverageState, dt: f64) -> Result<()> {
    sys.step(st, dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSample {
    pub t: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v: f64,
    pub w: f64,
}

/// `(∫f², ∫f_x²)` for samples over `[0, s]`; the gradient integral uses
/// cell differences.
fn l2_and_h1(f: &[f64], s: f64) -> (f64, f64) {
    if f.len() < 2 {
        return (0.0, 0.0);
    }
    let h = s / (f.len() - 1) as f64;
    let l2 = trapezoid(f.iter().map(|v| v * v), h);
    let h1 = f.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum::<f64>() / h;
    (l2, h1)
}

/// Lyapunov functional of the target state `w` over `[0, s_av]`.
pub fn lyapunov_from_target(t: f64, w: &[f64], v_theta: f64, s_av: f64, spec: &KernelSpec) -> LyapunovSample {
    let (l2, h1) = l2_and_h1(w, s_av);
    let v1 = 0.5 * l2;
    let v2 = 0.5 * h1;
    let v3 = 0.5 * spec.rho() * v_theta * v_theta;
    let v = v1 + v2 + v3;
    let (_, n) = decay_constants(spec);
    LyapunovSample { t, v1, v2, v3, v, w: v * (-n * s_av).exp() }
}

pub fn lyapunov_eval(st: &AverageState, spec: &KernelSpec) -> LyapunovSample {
    lyapunov_from_target(st.t, &st.w(spec), st.v_theta, st.s_av(), spec)
}

/// `w_x` at the front, same stencil as the plant.
pub fn target_front_gradient(w: &[f64], s: f64) -> f64 {
    let probe = PlantState { t: 0.0, s, temp: w.to_vec(), s_dot: 0.0, degenerate: false };
    interface_gradient(&probe)
}
