//! Fixtures shared by the benchmarks.

use stefan_es::plant::{PlantConfig, PlantState, StefanPlant};

/// Plant on the default grid with its front moved near the setpoint and a
/// smooth superheat profile.
pub fn plant_near_setpoint(grid_n: usize) -> (StefanPlant, PlantState) {
    let plant = StefanPlant::new(PlantConfig { grid_n, ..PlantConfig::default() }).expect("valid config");
    let s = 0.8;
    let state = plant
        .state_from_profile(s, 0.0, |x| 100.0 + 0.3 * (1.0 - x / s) * (1.0 + (3.0 * x).sin()))
        .expect("valid profile");
    (plant, state)
}

/// Smooth error profile on `grid_n + 1` points over `[0, s]`, zero at `s`.
pub fn error_profile(grid_n: usize, s: f64) -> Vec<f64> {
    (0..=grid_n)
        .map(|j| {
            let x = j as f64 / grid_n as f64 * s;
            (s - x) * (1.0 + (2.0 * x).cos())
        })
        .collect()
}
