//! Simulation configuration and its text format.
//!
//! One `section.key = value` assignment per line, `#` starts a comment.
//! Missing keys keep their defaults; later assignments override earlier
//! ones, which is how command-line overrides compose with a file.
//!
//! `a` and `omega` are shared by the controller and the dither and may be set
//! in either section. The dither advance follows the delay unless given
//! explicitly.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::controller::{ControlMode, ControllerConfig, MapConfig};
use crate::dither::DitherConfig;
use crate::error::{Error, Result};
use crate::plant::{BoundaryMode, PlantConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Nominal,
    DelayCompensated,
    DelayUncompensated,
    DirichletOracle,
    AverageTarget,
    OpenLoopDither,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Nominal,
        Scenario::DelayCompensated,
        Scenario::DelayUncompensated,
        Scenario::DirichletOracle,
        Scenario::AverageTarget,
        Scenario::OpenLoopDither,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Nominal => "nominal",
            Scenario::DelayCompensated => "delay-compensated",
            Scenario::DelayUncompensated => "delay-uncompensated",
            Scenario::DirichletOracle => "dirichlet-oracle",
            Scenario::AverageTarget => "average-target",
            Scenario::OpenLoopDither => "open-loop-dither",
        }
    }

    /// Controller mode of the closed-loop scenarios.
    pub fn control_mode(self) -> Option<ControlMode> {
        match self {
            Scenario::Nominal => Some(ControlMode::Nominal),
            Scenario::DelayCompensated => Some(ControlMode::DelayCompensated),
            Scenario::DelayUncompensated => Some(ControlMode::DelayUncompensated),
            _ => None,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

fn mode_name(mode: ControlMode) -> &'static str {
    match mode {
        ControlMode::Nominal => "nominal",
        ControlMode::DelayCompensated => "delay-compensated",
        ControlMode::DelayUncompensated => "delay-uncompensated",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub plant: PlantConfig,
    pub controller: ControllerConfig,
    pub map: MapConfig,
    pub dither: DitherConfig,
    pub t_end: f64,
    pub scenario: Scenario,
    pub seed: u64,
    pub output_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        let mut cfg = Self {
            plant: PlantConfig::default(),
            controller: ControllerConfig::default(),
            map: MapConfig::default(),
            dither: DitherConfig::default(),
            t_end: 100.0,
            scenario: Scenario::DelayCompensated,
            seed: 0,
            output_stride: 1,
        };
        cfg.reconcile(&BTreeSet::new());
        cfg
    }
}

/// Every accepted key, in the order of the default dump.
pub const KEYS: &[&str] = &[
    "plant.alpha",
    "plant.beta_phys",
    "plant.k_cond",
    "plant.T_m",
    "plant.T_0",
    "plant.s_0",
    "plant.L",
    "plant.grid_n",
    "plant.cfl_safety",
    "plant.bc_mode",
    "controller.K",
    "controller.a",
    "controller.omega",
    "controller.c",
    "controller.dt_ctrl",
    "controller.D",
    "controller.mode",
    "controller.washout",
    "map.theta_star",
    "map.y_star",
    "map.hessian",
    "dither.a",
    "dither.omega",
    "dither.advance",
    "dither.max_order",
    "dither.term_tol",
    "sim.t_end",
    "sim.scenario",
    "sim.seed",
    "sim.output_stride",
];

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse { line, msg: format!("cannot read `{value}` as a value for `{key}`") })
}

fn parse_bc(line: usize, value: &str) -> Result<BoundaryMode> {
    match value {
        "neumann-flux" => Ok(BoundaryMode::NeumannFlux),
        "dirichlet-temperature" => Ok(BoundaryMode::DirichletTemperature),
        _ => Err(Error::Parse { line, msg: format!("unknown boundary mode `{value}`") }),
    }
}

fn parse_mode(line: usize, value: &str) -> Result<ControlMode> {
    [ControlMode::Nominal, ControlMode::DelayCompensated, ControlMode::DelayUncompensated]
        .into_iter()
        .find(|m| mode_name(*m) == value)
        .ok_or_else(|| Error::Parse { line, msg: format!("unknown controller mode `{value}`") })
}

fn invalid(key: &str, msg: impl Into<String>) -> Error {
    Error::Validation { key: key.to_string(), msg: msg.into() }
}

impl SimConfig {
    /// Applies one assignment. `line` is only used for error reports.
    fn assign(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "plant.alpha" => self.plant.alpha = parse_value(line, key, v)?,
            "plant.beta_phys" => self.plant.beta_phys = parse_value(line, key, v)?,
            "plant.k_cond" => self.plant.k_cond = parse_value(line, key, v)?,
            "plant.T_m" => self.plant.t_melt = parse_value(line, key, v)?,
            "plant.T_0" => self.plant.t_init = parse_value(line, key, v)?,
            "plant.s_0" => self.plant.s0 = parse_value(line, key, v)?,
            "plant.L" => self.plant.length = parse_value(line, key, v)?,
            "plant.grid_n" => self.plant.grid_n = parse_value(line, key, v)?,
            "plant.cfl_safety" => self.plant.cfl_safety = parse_value(line, key, v)?,
            "plant.bc_mode" => self.plant.bc_mode = parse_bc(line, v)?,
            "controller.K" => self.controller.k_gain = parse_value(line, key, v)?,
            "controller.a" | "dither.a" => {
                let a = parse_value(line, key, v)?;
                self.controller.a = a;
                self.dither.a = a;
            }
            "controller.omega" | "dither.omega" => {
                let w = parse_value(line, key, v)?;
                self.controller.omega = w;
                self.dither.omega = w;
            }
            "controller.c" => self.controller.c = parse_value(line, key, v)?,
            "controller.dt_ctrl" => self.controller.dt_ctrl = parse_value(line, key, v)?,
            "controller.D" => self.controller.delay = parse_value(line, key, v)?,
            "controller.mode" => self.controller.mode = parse_mode(line, v)?,
            "controller.washout" => self.controller.washout = parse_value(line, key, v)?,
            "map.theta_star" => self.map.theta_star = parse_value(line, key, v)?,
            "map.y_star" => self.map.y_star = parse_value(line, key, v)?,
            "map.hessian" => self.map.hessian = parse_value(line, key, v)?,
            "dither.advance" => self.dither.advance = parse_value(line, key, v)?,
            "dither.max_order" => self.dither.max_order = parse_value(line, key, v)?,
            "dither.term_tol" => self.dither.term_tol = parse_value(line, key, v)?,
            "sim.t_end" => self.t_end = parse_value(line, key, v)?,
            "sim.scenario" => {
                self.scenario = v.parse().map_err(|msg| Error::Parse { line, msg })?;
            }
            "sim.seed" => self.seed = parse_value(line, key, v)?,
            "sim.output_stride" => self.output_stride = parse_value(line, key, v)?,
            _ => return Err(Error::Parse { line, msg: format!("unknown key `{key}`") }),
        }
        Ok(())
    }

    /// Derives the scenario-dependent fields that were not set explicitly.
    fn reconcile(&mut self, explicit: &BTreeSet<String>) {
        let set = |k: &str| explicit.contains(k);
        match self.scenario.control_mode() {
            Some(mode) => {
                if !set("controller.mode") {
                    self.controller.mode = mode;
                }
                if mode == ControlMode::Nominal && !set("controller.D") {
                    self.controller.delay = 0.0;
                }
            }
            None => {
                if !set("controller.mode") {
                    self.controller.mode = ControlMode::Nominal;
                }
            }
        }
        if !set("dither.advance") {
            self.dither.advance = self.expected_advance();
        }
        match self.scenario {
            Scenario::OpenLoopDither if !set("plant.T_0") => self.plant.t_init = self.plant.t_melt,
            Scenario::DirichletOracle if !set("plant.bc_mode") => {
                self.plant.bc_mode = BoundaryMode::DirichletTemperature
            }
            _ => {}
        }
    }

    fn expected_advance(&self) -> f64 {
        if self.controller.mode.has_delay() {
            self.controller.delay
        } else {
            0.0
        }
    }

    /// Checks every invariant, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let p = &self.plant;
        let positive = [
            ("plant.alpha", p.alpha),
            ("plant.beta_phys", p.beta_phys),
            ("plant.k_cond", p.k_cond),
            ("plant.s_0", p.s0),
            ("controller.c", self.controller.c),
            ("controller.dt_ctrl", self.controller.dt_ctrl),
            ("controller.omega", self.controller.omega),
            ("dither.term_tol", self.dither.term_tol),
            ("sim.t_end", self.t_end),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("must be positive, got {v}")));
            }
        }
        if !(p.s0 < p.length) {
            return Err(invalid("plant.s_0", format!("must be below plant.L = {}", p.length)));
        }
        if !(p.t_init >= p.t_melt) {
            return Err(invalid("plant.T_0", format!("must not be below plant.T_m = {}", p.t_melt)));
        }
        if p.grid_n < 8 {
            return Err(invalid("plant.grid_n", format!("must be at least 8, got {}", p.grid_n)));
        }
        if !(p.cfl_safety > 0.0 && p.cfl_safety < 1.0) {
            return Err(invalid("plant.cfl_safety", format!("must lie in (0, 1), got {}", p.cfl_safety)));
        }
        let c = &self.controller;
        if !(c.k_gain < 0.0) {
            return Err(invalid("controller.K", format!("must be negative, got {}", c.k_gain)));
        }
        if !(c.delay >= 0.0) {
            return Err(invalid("controller.D", format!("must be non-negative, got {}", c.delay)));
        }
        if !(c.washout >= 0.0) {
            return Err(invalid("controller.washout", format!("must be non-negative, got {}", c.washout)));
        }
        if c.mode.has_delay() {
            let ratio = c.delay / c.dt_ctrl;
            if (ratio - ratio.round()).abs() > 1e-9 {
                return Err(invalid("controller.D", "must be an integer multiple of controller.dt_ctrl"));
            }
        }
        if let Some(mode) = self.scenario.control_mode() {
            if mode != c.mode {
                return Err(invalid(
                    "controller.mode",
                    format!("`{}` contradicts scenario `{}`", mode_name(c.mode), self.scenario),
                ));
            }
            if !(c.a > 0.0) {
                return Err(invalid("controller.a", "closed-loop scenarios need a positive amplitude"));
            }
        }
        if !(self.dither.a >= 0.0) {
            return Err(invalid("dither.a", format!("must be non-negative, got {}", self.dither.a)));
        }
        if self.dither.max_order < 2 {
            return Err(invalid("dither.max_order", "must be at least 2"));
        }
        if !(self.dither.advance >= 0.0) {
            return Err(invalid("dither.advance", "must be non-negative"));
        }
        if (self.dither.advance - self.expected_advance()).abs() > 1e-12 {
            return Err(invalid(
                "dither.advance",
                format!("must equal the loop delay {} in this scenario", self.expected_advance()),
            ));
        }
        if !(self.map.hessian < 0.0) {
            return Err(invalid("map.hessian", format!("must be negative, got {}", self.map.hessian)));
        }
        if !(self.map.theta_star > 0.0 && self.map.theta_star < p.length) {
            return Err(invalid("map.theta_star", format!("must lie in (0, plant.L = {})", p.length)));
        }
        if self.output_stride == 0 {
            return Err(invalid("sim.output_stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of control samples covering `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.controller.dt_ctrl).round() as usize
    }

    /// Dumps every key with its current value, in the input format.
    pub fn to_text(&self) -> String {
        let bc = match self.plant.bc_mode {
            BoundaryMode::NeumannFlux => "neumann-flux",
            BoundaryMode::DirichletTemperature => "dirichlet-temperature",
        };
        let values: Vec<String> = vec![
            self.plant.alpha.to_string(),
            self.plant.beta_phys.to_string(),
            self.plant.k_cond.to_string(),
            self.plant.t_melt.to_string(),
            self.plant.t_init.to_string(),
            self.plant.s0.to_string(),
            self.plant.length.to_string(),
            self.plant.grid_n.to_string(),
            self.plant.cfl_safety.to_string(),
            bc.to_string(),
            self.controller.k_gain.to_string(),
            self.controller.a.to_string(),
            self.controller.omega.to_string(),
            self.controller.c.to_string(),
            self.controller.dt_ctrl.to_string(),
            self.controller.delay.to_string(),
            mode_name(self.controller.mode).to_string(),
            self.controller.washout.to_string(),
            self.map.theta_star.to_string(),
            self.map.y_star.to_string(),
            self.map.hessian.to_string(),
            self.dither.a.to_string(),
            self.dither.omega.to_string(),
            self.dither.advance.to_string(),
            self.dither.max_order.to_string(),
            self.dither.term_tol.to_string(),
            self.t_end.to_string(),
            self.scenario.to_string(),
            self.seed.to_string(),
            self.output_stride.to_string(),
        ];
        KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Splits a line into `(key, value)`; `None` for blank and comment lines.
fn split_line(line_no: usize, raw: &str) -> Result<Option<(String, String)>> {
    let body = raw.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return Ok(None);
    }
    let (key, value) = body
        .split_once('=')
        .ok_or_else(|| Error::Parse { line: line_no, msg: format!("expected `section.key = value`, got `{body}`") })?;
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() || value.is_empty() {
        return Err(Error::Parse { line: line_no, msg: format!("incomplete assignment `{body}`") });
    }
    Ok(Some((key.to_string(), value.to_string())))
}

/// Parses a configuration text; see the module docs for the format.
pub fn load_config(text: &str) -> Result<SimConfig> {
    load_config_with_overrides(text, &[])
}

/// Parses `text`, then applies `overrides` (each `section.key=value`) in
/// order. Override errors report line numbers continuing after the text.
pub fn load_config_with_overrides(text: &str, overrides: &[String]) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    let mut explicit = BTreeSet::new();
    let file_lines = text.lines().count();
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .chain(overrides.iter().enumerate().map(|(i, l)| (file_lines + i + 1, l.as_str())));
    for (line_no, raw) in lines {
        if let Some((key, value)) = split_line(line_no, raw)? {
            cfg.assign(line_no, &key, &value)?;
            explicit.insert(key);
        }
    }
    // an explicit dither.* setting of a shared key counts for the controller
    // as well
    for (d, c) in [("dither.a", "controller.a"), ("dither.omega", "controller.omega")] {
        if explicit.contains(d) {
            explicit.insert(c.to_string());
        }
    }
    cfg.reconcile(&explicit);
    cfg.validate()?;
    Ok(cfg)
}
