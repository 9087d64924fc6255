//! Autonomous driver: waypoint-pair steering and the five-phase speed
//! controller.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::RigidState;
use crate::error::{invalid, Result};
use crate::geometry::{RoadModel, Route};
use crate::units::{ft_to_m, mph_to_mps};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlParams {
    /// m
    pub waypoint_threshold_distance: f64,
    /// 1/s
    pub steering_damping_rate: f64,
    /// rad
    pub max_steer_angle: f64,
    /// Natural frequency of the lateral path-error response, rad/s.
    pub path_natural_frequency: f64,
    pub path_damping_ratio: f64,
    /// How far ahead, in seconds of travel, the route curvature is read.
    pub curvature_preview_time: f64,
    /// Steer per unit yaw-rate error, s.
    pub yaw_rate_gain: f64,
    /// Steer per rad of accumulated yaw-rate error.
    pub yaw_rate_integral_gain: f64,
    /// Bound on the integral steer contribution, rad.
    pub yaw_integral_limit: f64,
    /// s
    pub reaction_delay: f64,
    /// m/s
    pub normal_brake_margin: f64,
    /// m/s
    pub curve_brake_margin: f64,
    pub hold_throttle: f64,
    /// Brake command per m/s of excess speed when holding a target.
    pub brake_gain: f64,
    /// Brake command once the reaction delay has elapsed on curve entry.
    pub entry_brake: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        ControlParams {
            waypoint_threshold_distance: ft_to_m(20.0),
            steering_damping_rate: 10.0,
            max_steer_angle: 35f64.to_radians(),
            path_natural_frequency: 1.5,
            path_damping_ratio: 0.8,
            curvature_preview_time: 0.3,
            yaw_rate_gain: 0.1,
            yaw_rate_integral_gain: 1.0,
            yaw_integral_limit: 0.1,
            reaction_delay: 1.21,
            normal_brake_margin: mph_to_mps(2.0),
            curve_brake_margin: mph_to_mps(1.0),
            hold_throttle: 0.1,
            brake_gain: 0.2 / mph_to_mps(1.0),
            entry_brake: 1.0,
        }
    }
}

impl ControlParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("waypoint_threshold_distance", self.waypoint_threshold_distance),
            ("steering_damping_rate", self.steering_damping_rate),
            ("path_natural_frequency", self.path_natural_frequency),
            ("path_damping_ratio", self.path_damping_ratio),
            ("max_steer_angle", self.max_steer_angle),
            ("normal_brake_margin", self.normal_brake_margin),
            ("curve_brake_margin", self.curve_brake_margin),
            ("hold_throttle", self.hold_throttle),
            ("brake_gain", self.brake_gain),
            ("entry_brake", self.entry_brake),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid("control params", format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("reaction_delay", self.reaction_delay),
            ("curvature_preview_time", self.curvature_preview_time),
            ("yaw_rate_gain", self.yaw_rate_gain),
            ("yaw_rate_integral_gain", self.yaw_rate_integral_gain),
            ("yaw_integral_limit", self.yaw_integral_limit),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid("control params", format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.max_steer_angle >= 0.5 * PI {
            return Err(invalid("control params", "max_steer_angle must be below 90 degrees"));
        }
        if self.hold_throttle > 1.0 || self.entry_brake > 1.0 {
            return Err(invalid("control params", "hold_throttle and entry_brake must be <= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriverCommand {
    pub throttle: f64,
    pub brake: f64,
    /// Front-wheel angle, rad, positive left.
    pub steer_angle: f64,
}

impl DriverCommand {
    pub fn new(throttle: f64, brake: f64, steer_angle: f64, max_steer_angle: f64) -> Result<DriverCommand> {
        if !(0.0..=1.0).contains(&throttle) || !(0.0..=1.0).contains(&brake) {
            return Err(invalid("driver command", format!("throttle {throttle} / brake {brake} outside [0, 1]")));
        }
        if !(steer_angle.abs() <= max_steer_angle) {
            return Err(invalid("driver command", format!("steer angle {steer_angle} exceeds {max_steer_angle}")));
        }
        Ok(DriverCommand {
            throttle,
            brake,
            steer_angle,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    NormalDriving,
    CurveEntry,
    FullSuperelevation,
    CurveExit,
    PostCurveAcceleration,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::NormalDriving,
        Phase::CurveEntry,
        Phase::FullSuperelevation,
        Phase::CurveExit,
        Phase::PostCurveAcceleration,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::NormalDriving => "normal_driving",
            Phase::CurveEntry => "curve_entry",
            Phase::FullSuperelevation => "full_superelevation",
            Phase::CurveExit => "curve_exit",
            Phase::PostCurveAcceleration => "post_curve_acceleration",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Phase {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| invalid("phase", format!("unknown phase {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedTarget {
    Base,
    Curve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseInterval {
    pub phase: Phase,
    /// Station range [start, end), m.
    pub start: f64,
    pub end: f64,
    pub target: SpeedTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub intervals: [PhaseInterval; 5],
}

impl PhasePlan {
    pub fn phase_at(&self, station: f64) -> Phase {
        self.intervals
            .iter()
            .find(|iv| station < iv.end)
            .map_or(Phase::PostCurveAcceleration, |iv| iv.phase)
    }

    pub fn interval(&self, phase: Phase) -> &PhaseInterval {
        &self.intervals[phase as usize]
    }

    pub fn start(&self) -> f64 {
        self.intervals[0].start
    }

    pub fn end(&self) -> f64 {
        self.intervals[4].end
    }
}

/// Splits the route into the five driving phases, with boundaries tied to
/// the superelevation transitions and snapped to waypoint stations.
pub fn plan_phases(road: &RoadModel, route: &Route) -> Result<PhasePlan> {
    let t = road.transitions();
    let (entry_start, full_start, exit_start, post_start) = if t.is_degenerate() {
        let (pc, pt) = (road.pc_station(), road.pt_station());
        (pc, pc, pt, pt)
    } else {
        (t.entry_runout_start, t.entry_runoff_end, t.exit_runoff_start, t.exit_runout_end)
    };
    let (first, last) = (route.start_station(), route.end_station());
    if entry_start < first || post_start > last {
        return Err(invalid(
            "phase plan",
            format!("route [{first:.2}, {last:.2}] m does not cover the transitions [{entry_start:.2}, {post_start:.2}] m"),
        ));
    }
    // Entry and exit snap outward so they contain their transitions; the
    // full-superelevation interval stays inside the constant-slope segment.
    let st = route.stations();
    let down = |s: f64| st[st.partition_point(|&x| x <= s + 1e-9).saturating_sub(1)];
    let up = |s: f64| st[st.partition_point(|&x| x < s - 1e-9).min(st.len() - 1)];
    let full_start = up(full_start).max(down(entry_start));
    let exit_start = down(exit_start).max(full_start);
    let b = [first, down(entry_start), full_start, exit_start, up(post_start).max(exit_start), last];
    let targets = [
        SpeedTarget::Base,
        SpeedTarget::Curve,
        SpeedTarget::Curve,
        SpeedTarget::Curve,
        SpeedTarget::Base,
    ];
    let intervals = std::array::from_fn(|i| PhaseInterval {
        phase: Phase::ALL[i],
        start: b[i],
        end: b[i + 1],
        target: targets[i],
    });
    Ok(PhasePlan { intervals })
}

/// Throttle and brake for one phase. Speeds in m/s.
pub fn drive_phase(v: f64, phase: Phase, elapsed_in_phase: f64, v_base: f64, v_curve: f64, params: &ControlParams) -> (f64, f64) {
    let hold = |target: f64, margin: f64| {
        if v > target + margin {
            (params.brake_gain * (v - target)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    match phase {
        Phase::NormalDriving => {
            let brake = hold(v_base, params.normal_brake_margin);
            let throttle = if v < v_base { 1.0 } else { 0.0 };
            (throttle, brake)
        }
        Phase::CurveEntry => {
            let brake = if elapsed_in_phase > params.reaction_delay && v > v_curve {
                params.entry_brake
            } else {
                0.0
            };
            (0.0, brake)
        }
        Phase::FullSuperelevation => {
            let brake = hold(v_curve, params.curve_brake_margin);
            let throttle = if v < v_curve { params.hold_throttle } else { 0.0 };
            (throttle, brake)
        }
        Phase::CurveExit => (params.hold_throttle, 0.0),
        Phase::PostCurveAcceleration => (if v < v_base { 1.0 } else { 0.0 }, 0.0),
    }
}

fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Path-following steering. The target pair advances with the waypoint
/// threshold; the front-wheel angle comes from a curvature demand built
/// from the previewed route curvature, the cross-track error and the course
/// error, converted to steer by a kinematic feedforward plus a PI loop on
/// yaw rate, then smoothed to first order.
#[derive(Debug, Clone, PartialEq)]
pub struct Steering {
    /// Index of the far waypoint of the target pair.
    target: usize,
    /// Segment under the centre of mass.
    nearest: usize,
    angle: f64,
    integral: f64,
    wheelbase: f64,
}

impl Steering {
    pub fn new(route: &Route, wheelbase: f64) -> Result<Steering> {
        if route.len() < 2 {
            return Err(invalid("steering", "route needs at least two waypoints"));
        }
        if !(wheelbase > 0.0) {
            return Err(invalid("steering", "wheelbase must be positive"));
        }
        Ok(Steering {
            target: 1,
            nearest: 0,
            angle: 0.0,
            integral: 0.0,
            wheelbase,
        })
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn finished(&self, route: &Route) -> bool {
        self.target >= route.len()
    }

    /// Advances the target pair for a vehicle front at `front` (body frame)
    /// and returns the new smoothed, clamped front-wheel angle.
    pub fn update(&mut self, state: &RigidState, front: &Vector3<f64>, route: &Route, params: &ControlParams, dt: f64) -> f64 {
        let wp = route.waypoints();
        let n = wp.len();
        let front_xy = state.body_point(front).xy();
        let dir = |i: usize| -> Vector2<f64> { (wp[i + 1].xy() - wp[i].xy()).normalize() };

        while self.target < n {
            let along = (wp[self.target].xy() - front_xy).dot(&dir(self.target - 1));
            if along < params.waypoint_threshold_distance {
                self.target += 1;
            } else {
                break;
            }
        }

        let target = if self.target >= n {
            self.integral = 0.0;
            0.0
        } else {
            let cg = state.position.xy();
            while self.nearest + 2 < n && (cg - wp[self.nearest + 1].xy()).dot(&dir(self.nearest)) > 0.0 {
                self.nearest += 1;
            }
            let i = self.nearest;
            let u = state.velocity.x.max(1.0);
            let rel = cg - wp[i].xy();
            let d = dir(i);
            let cross_track = d.x * rel.y - d.y * rel.x;

            let mut ahead = params.curvature_preview_time * u + rel.dot(&d).max(0.0);
            let mut j = i;
            while j + 2 < n {
                let seg = (wp[j + 1].xy() - wp[j].xy()).norm();
                if ahead <= seg {
                    break;
                }
                ahead -= seg;
                j += 1;
            }
            let path_curvature = if j + 2 < n {
                wrap_angle(route.segment_heading(j + 1) - route.segment_heading(j)) / (wp[j + 1].xy() - wp[j].xy()).norm()
            } else {
                0.0
            };

            let course_error = wrap_angle(state.heading() + state.velocity.y.atan2(u) - route.segment_heading(i));
            let w = params.path_natural_frequency;
            let curvature = path_curvature
                - w * w / (u * u) * cross_track
                - 2.0 * params.path_damping_ratio * w / u * course_error;
            let yaw_error = u * curvature - state.angular_velocity.z;
            self.integral = (self.integral + params.yaw_rate_integral_gain * yaw_error * dt)
                .clamp(-params.yaw_integral_limit, params.yaw_integral_limit);
            (self.wheelbase * curvature).atan() + params.yaw_rate_gain * yaw_error + self.integral
        };
        let target = target.clamp(-params.max_steer_angle, params.max_steer_angle);
        self.angle += (target - self.angle) * (1.0 - (-params.steering_damping_rate * dt).exp());
        self.angle = self.angle.clamp(-params.max_steer_angle, params.max_steer_angle);
        self.angle
    }
}
