use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::{RigidState, VehicleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Drivetrain {
    #[serde(rename = "FWD")]
    Fwd,
    #[serde(rename = "RWD")]
    Rwd,
    #[serde(rename = "AWD", alias = "4WD")]
    Awd,
}

impl Drivetrain {
    /// Whether wheel `i` (FL, FR, RL, RR) receives drive torque.
    pub fn drives(&self, i: usize) -> bool {
        match self {
            Drivetrain::Fwd => i < 2,
            Drivetrain::Rwd => i >= 2,
            Drivetrain::Awd => true,
        }
    }

    pub fn driven_count(&self) -> usize {
        match self {
            Drivetrain::Awd => 4,
            _ => 2,
        }
    }
}

impl std::str::FromStr for Drivetrain {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FWD" => Ok(Drivetrain::Fwd),
            "RWD" => Ok(Drivetrain::Rwd),
            "AWD" | "4WD" => Ok(Drivetrain::Awd),
            other => Err(invalid("drivetrain", format!("expected FWD, RWD, AWD or 4WD, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSpec {
    /// (rpm, N·m) points, rpm strictly increasing.
    pub torque_curve: Vec<(f64, f64)>,
    pub idle_rpm: f64,
    pub redline_rpm: f64,
}

impl EngineSpec {
    pub fn validate(&self) -> Result<()> {
        if self.torque_curve.is_empty() {
            return Err(invalid("engine", "torque curve is empty"));
        }
        if self.torque_curve.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("engine", "torque curve rpm points must be strictly increasing"));
        }
        if self.torque_curve.iter().any(|&(rpm, t)| !(t >= 0.0) || !rpm.is_finite()) {
            return Err(invalid("engine", "torque must be non-negative"));
        }
        if !(self.idle_rpm > 0.0 && self.redline_rpm > self.idle_rpm) {
            return Err(invalid("engine", "need 0 < idle_rpm < redline_rpm"));
        }
        Ok(())
    }

    /// Torque at `rpm`, linear between points and held flat beyond the ends.
    pub fn torque(&self, rpm: f64) -> f64 {
        let c = &self.torque_curve;
        if rpm <= c[0].0 {
            return c[0].1;
        }
        for w in c.windows(2) {
            if rpm <= w[1].0 {
                let t = (rpm - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + t * (w[1].1 - w[0].1);
            }
        }
        c[c.len() - 1].1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionSpec {
    pub gear_ratios: Vec<f64>,
    pub final_drive_ratio: f64,
    /// Vehicle speed (m/s) at which each gear shifts up; one fewer than the
    /// number of gears.
    pub shift_up_speeds: Vec<f64>,
    pub driveline_efficiency: f64,
}

impl TransmissionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.gear_ratios.is_empty() || self.gear_ratios.iter().any(|&g| !(g > 0.0)) {
            return Err(invalid("transmission", "gear ratios must be positive"));
        }
        if self.gear_ratios.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("transmission", "gear ratios must be decreasing"));
        }
        if self.shift_up_speeds.len() + 1 != self.gear_ratios.len() {
            return Err(invalid("transmission", "need one shift speed per gear change"));
        }
        if self.shift_up_speeds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("transmission", "shift speeds must be increasing"));
        }
        if !(self.final_drive_ratio > 0.0) || !(self.driveline_efficiency > 0.0 && self.driveline_efficiency <= 1.0) {
            return Err(invalid("transmission", "bad final drive or efficiency"));
        }
        Ok(())
    }

    /// Zero-based gear index for a forward speed.
    pub fn select_gear(&self, speed: f64) -> usize {
        self.shift_up_speeds.iter().take_while(|&&s| speed >= s).count()
    }

    pub fn overall_ratio(&self, gear: usize) -> f64 {
        self.gear_ratios[gear] * self.final_drive_ratio
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowertrainOutput {
    pub gear: usize,
    pub engine_rpm: f64,
    pub wheel_torque: [f64; 4],
}

/// Drive torque at each wheel (FL, FR, RL, RR) for a throttle in [0, 1].
pub fn powertrain(spec: &VehicleSpec, state: &RigidState, throttle: f64) -> PowertrainOutput {
    let throttle = throttle.clamp(0.0, 1.0);
    let trans = &spec.transmission;
    let gear = trans.select_gear(state.velocity.x.abs());
    let ratio = trans.overall_ratio(gear);
    let driven = spec.drivetrain.driven_count() as f64;
    let wheel_spin: f64 = (0..4)
        .filter(|&i| spec.drivetrain.drives(i))
        .map(|i| state.wheels[i].spin_rate.abs())
        .sum::<f64>()
        / driven;
    let engine_rpm = (wheel_spin * ratio * 60.0 / (2.0 * PI)).clamp(spec.engine.idle_rpm, spec.engine.redline_rpm);
    let mut wheel_torque = [0.0; 4];
    if throttle > 0.0 {
        let per_wheel = throttle * spec.engine.torque(engine_rpm) * ratio * trans.driveline_efficiency / driven;
        for (i, t) in wheel_torque.iter_mut().enumerate() {
            if spec.drivetrain.drives(i) {
                *t = per_wheel;
            }
        }
    }
    PowertrainOutput {
        gear,
        engine_rpm,
        wheel_torque,
    }
}
