//! Slip-dependent tire friction and the per-wheel suspension/spin model.
//!
//! Slip conventions:
//!
//! * longitudinal slip = (ω·r − v_long) / max(|v_long|, ε)
//! * lateral slip = v_lat / max(|v_long|, ε)  (tangent of the slip angle)
//!
//! with ε = [`SLIP_SPEED_FLOOR`]. The friction curve is applied to the
//! magnitude of each slip and the resulting force opposes the slip.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Speed floor (m/s) regularising both slip ratios near standstill.
pub const SLIP_SPEED_FLOOR: f64 = 0.5;

/// Slip → friction coefficient curve described by its peak ("extremum") and
/// saturated ("asymptote") points, plus a force multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionCurve {
    pub extremum_slip: f64,
    pub extremum_value: f64,
    pub asymptote_slip: f64,
    pub asymptote_value: f64,
    pub stiffness: f64,
}

impl FrictionCurve {
    pub const DRY: FrictionCurve = FrictionCurve {
        extremum_slip: 0.40,
        extremum_value: 1.00,
        asymptote_slip: 0.80,
        asymptote_value: 0.50,
        stiffness: 1.00,
    };

    pub const WET: FrictionCurve = FrictionCurve {
        extremum_slip: 0.40,
        extremum_value: 0.65,
        asymptote_slip: 0.80,
        asymptote_value: 0.35,
        stiffness: 0.85,
    };

    pub fn validate(&self) -> Result<()> {
        let ok = self.extremum_slip > 0.0
            && self.extremum_slip < self.asymptote_slip
            && self.asymptote_value > 0.0
            && self.extremum_value >= self.asymptote_value
            && self.stiffness > 0.0
            && self.asymptote_slip.is_finite()
            && self.extremum_value.is_finite()
            && self.stiffness.is_finite();
        if ok {
            Ok(())
        } else {
            Err(invalid("friction curve", format!("{self:?}")))
        }
    }

    /// Friction coefficient at a slip magnitude (stiffness not applied).
    ///
    /// Rising branch: monotone cubic through the origin with zero slope at the
    /// extremum. Falling branch: cubic smoothstep from extremum to asymptote.
    #[inline]
    pub fn value(&self, slip: f64) -> f64 {
        debug_assert!(slip >= 0.0);
        if slip >= self.asymptote_slip {
            self.asymptote_value
        } else if slip >= self.extremum_slip {
            let t = (slip - self.extremum_slip) / (self.asymptote_slip - self.extremum_slip);
            self.extremum_value + (self.asymptote_value - self.extremum_value) * t * t * (3.0 - 2.0 * t)
        } else {
            let u = 1.0 - slip / self.extremum_slip;
            self.extremum_value * (1.0 - u * u * u)
        }
    }

    /// Derivative of [`value`](Self::value) with respect to slip.
    #[inline]
    pub fn slope(&self, slip: f64) -> f64 {
        if slip >= self.asymptote_slip {
            0.0
        } else if slip >= self.extremum_slip {
            let span = self.asymptote_slip - self.extremum_slip;
            let t = (slip - self.extremum_slip) / span;
            (self.asymptote_value - self.extremum_value) * 6.0 * t * (1.0 - t) / span
        } else {
            let u = 1.0 - slip / self.extremum_slip;
            3.0 * self.extremum_value * u * u / self.extremum_slip
        }
    }

    /// Same curve with both friction values multiplied by `k`.
    pub fn scaled(&self, k: f64) -> FrictionCurve {
        FrictionCurve {
            extremum_value: self.extremum_value * k,
            asymptote_value: self.asymptote_value * k,
            ..*self
        }
    }

    /// Curve with a flat friction level beyond `extremum_slip`.
    pub fn constant(mu: f64, extremum_slip: f64) -> FrictionCurve {
        FrictionCurve {
            extremum_slip,
            extremum_value: mu,
            asymptote_slip: 2.0 * extremum_slip,
            asymptote_value: mu,
            stiffness: 1.0,
        }
    }
}

/// Friction coefficient for a non-negative slip.
pub fn evaluate_friction(curve: &FrictionCurve, slip: f64) -> Result<f64> {
    if !(slip >= 0.0) {
        return Err(invalid("slip", format!("slip magnitude must be >= 0, got {slip}")));
    }
    Ok(curve.value(slip))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Dry,
    Wet,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Dry => "dry",
            Condition::Wet => "wet",
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Condition {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dry" => Ok(Condition::Dry),
            "wet" => Ok(Condition::Wet),
            other => Err(invalid("condition", format!("expected dry or wet, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCondition {
    pub name: Condition,
    pub longitudinal: FrictionCurve,
    pub lateral: FrictionCurve,
}

impl SurfaceCondition {
    pub fn dry() -> Self {
        SurfaceCondition {
            name: Condition::Dry,
            longitudinal: FrictionCurve::DRY,
            lateral: FrictionCurve::DRY,
        }
    }

    pub fn wet() -> Self {
        SurfaceCondition {
            name: Condition::Wet,
            longitudinal: FrictionCurve::WET,
            lateral: FrictionCurve::WET,
        }
    }

    pub fn preset(name: Condition) -> Self {
        match name {
            Condition::Dry => Self::dry(),
            Condition::Wet => Self::wet(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.longitudinal.validate()?;
        self.lateral.validate()
    }

    /// Same condition with every friction value multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        SurfaceCondition {
            name: self.name,
            longitudinal: self.longitudinal.scaled(k),
            lateral: self.lateral.scaled(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelSpec {
    pub radius: f64,
    pub suspension_rest_length: f64,
    pub spring_rate: f64,
    pub damper_rate: f64,
    pub max_brake_torque: f64,
    pub steerable: bool,
    pub driven: bool,
    pub rotational_inertia: f64,
}

impl WheelSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.radius > 0.0
            && self.spring_rate > 0.0
            && self.damper_rate >= 0.0
            && self.suspension_rest_length > 0.0
            && self.max_brake_torque >= 0.0
            && self.rotational_inertia > 0.0;
        if ok {
            Ok(())
        } else {
            Err(invalid("wheel spec", format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelState {
    pub spin_rate: f64,
    pub suspension_compression: f64,
    pub in_contact: bool,
    pub normal_force: f64,
    pub longitudinal_slip: f64,
    pub lateral_slip: f64,
    /// (longitudinal, lateral) force in the contact plane.
    pub tire_force: Vector2<f64>,
    pub station_of_contact: f64,
}

/// Kinematics of a wheel that touches the ground, expressed in the contact
/// frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactKinematics {
    pub compression: f64,
    pub compression_rate: f64,
    pub v_long: f64,
    pub v_lat: f64,
    pub station: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelOutput {
    pub state: WheelState,
    /// (longitudinal, lateral, normal) force on the vehicle in the contact
    /// frame.
    pub force: Vector3<f64>,
    /// Torque the tire force exerts about the axle (opposing positive spin
    /// when the force points forward).
    pub reaction_torque: f64,
}

/// Suspension force from compression and compression rate; zero whenever the
/// wheel is off the ground and never pulling.
#[inline]
pub fn suspension_force(spec: &WheelSpec, compression: f64, compression_rate: f64) -> f64 {
    if compression <= 0.0 {
        0.0
    } else {
        (spec.spring_rate * compression + spec.damper_rate * compression_rate).max(0.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct PlanarForce {
    long: f64,
    lat: f64,
    slip_long: f64,
    slip_lat: f64,
    /// ∂F_long/∂slip_long before the ellipse clamp.
    d_long: f64,
}

fn planar_force(condition: &SurfaceCondition, normal: f64, spin: f64, radius: f64, v_long: f64, v_lat: f64) -> PlanarForce {
    let denom = v_long.abs().max(SLIP_SPEED_FLOOR);
    let slip_long = (spin * radius - v_long) / denom;
    let slip_lat = v_lat / denom;
    let lc = &condition.longitudinal;
    let sc = &condition.lateral;
    let mut long = normal * lc.stiffness * lc.value(slip_long.abs()) * slip_long.signum();
    let mut lat = -normal * sc.stiffness * sc.value(slip_lat.abs()) * slip_lat.signum();
    if slip_long == 0.0 {
        long = 0.0;
    }
    if slip_lat == 0.0 {
        lat = 0.0;
    }
    let a = normal * lc.stiffness * lc.extremum_value;
    let b = normal * sc.stiffness * sc.extremum_value;
    if a > 0.0 && b > 0.0 {
        let q = (long / a).powi(2) + (lat / b).powi(2);
        if q > 1.0 {
            let k = 1.0 / q.sqrt();
            long *= k;
            lat *= k;
        }
    }
    PlanarForce {
        long,
        lat,
        slip_long,
        slip_lat,
        d_long: normal * lc.stiffness * lc.slope(slip_long.abs()),
    }
}

/// Advances one wheel by `dt`.
///
/// The spin update is linearly implicit in the tire force so that the stiff
/// slip response stays stable near standstill; brake torque acts as Coulomb
/// friction and can lock the wheel but never reverse it.
pub fn update_wheel(
    spec: &WheelSpec,
    condition: &SurfaceCondition,
    state: &WheelState,
    contact: Option<&ContactKinematics>,
    drive_torque: f64,
    brake_torque: f64,
    dt: f64,
) -> WheelOutput {
    let r = spec.radius;
    let inertia = spec.rotational_inertia;
    let brake = brake_torque.abs();

    let Some(c) = contact.filter(|c| c.compression > 0.0) else {
        let mut next = WheelState {
            spin_rate: state.spin_rate,
            station_of_contact: state.station_of_contact,
            ..WheelState::default()
        };
        next.spin_rate = apply_spin(state.spin_rate, dt * drive_torque / inertia, dt * brake / inertia);
        return WheelOutput {
            state: next,
            force: Vector3::zeros(),
            reaction_torque: 0.0,
        };
    };

    let normal = suspension_force(spec, c.compression, c.compression_rate);
    let before = planar_force(condition, normal, state.spin_rate, r, c.v_long, c.v_lat);
    let denom_v = c.v_long.abs().max(SLIP_SPEED_FLOOR);
    // ∂F/∂ω, clamped non-negative so the implicit factor never amplifies.
    let d_force = (before.d_long * r / denom_v).max(0.0);
    let factor = 1.0 + dt * r * d_force / inertia;
    let free = dt * (drive_torque - before.long * r) / (inertia * factor);
    let spin = apply_spin(state.spin_rate + free, 0.0, dt * brake / (inertia * factor));

    let after = planar_force(condition, normal, spin, r, c.v_long, c.v_lat);
    WheelOutput {
        state: WheelState {
            spin_rate: spin,
            suspension_compression: c.compression,
            in_contact: normal > 0.0,
            normal_force: normal,
            longitudinal_slip: after.slip_long,
            lateral_slip: after.slip_lat,
            tire_force: Vector2::new(after.long, after.lat),
            station_of_contact: c.station,
        },
        force: Vector3::new(after.long, after.lat, normal),
        reaction_torque: after.long * r,
    }
}

/// Adds a spin increment, then removes up to `brake` of spin magnitude
/// without crossing zero.
#[inline]
fn apply_spin(spin: f64, increment: f64, brake: f64) -> f64 {
    let w = spin + increment;
    if w.abs() <= brake {
        0.0
    } else {
        w - brake * w.signum()
    }
}
