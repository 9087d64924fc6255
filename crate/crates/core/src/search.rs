//! Closed-loop runs, safety verdicts, the incremental maximum-safe-speed
//! search, the AASHTO point-mass benchmark and the comparison report.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{drive_phase, plan_phases, ControlParams, DriverCommand, Phase, Steering};
use crate::dynamics::{settle, step, RigidState, StepConfig, VehicleSpec};
use crate::error::{invalid, Error, Result};
use crate::geometry::{RoadModel, Route};
use crate::tire::SurfaceCondition;
use crate::units::{m_to_ft, mph_to_mps, mps_to_mph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetyCriteria {
    /// Largest allowed CG offset from the route, m. The footprint-in-lane
    /// rule applies regardless.
    pub max_lateral_offset: Option<f64>,
    /// Extra room beyond the lane edge lines before a footprint corner
    /// counts as departed, m.
    pub lane_edge_tolerance: f64,
    /// s
    pub wheel_lift_pair_duration: f64,
    /// rad
    pub max_roll: f64,
    /// rad
    pub max_heading_error: f64,
    /// Speed below which the vehicle counts as stalled, m/s.
    pub stall_speed: f64,
    /// Simulated-time budget, s. Defaults to a bound derived from the route
    /// length and the curve speed.
    pub time_limit: Option<f64>,
}

impl Default for SafetyCriteria {
    fn default() -> Self {
        SafetyCriteria {
            max_lateral_offset: None,
            lane_edge_tolerance: 0.0,
            wheel_lift_pair_duration: 0.2,
            max_roll: 30f64.to_radians(),
            max_heading_error: 45f64.to_radians(),
            stall_speed: mph_to_mps(2.0),
            time_limit: None,
        }
    }
}

impl SafetyCriteria {
    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.max_lateral_offset {
            if !(m > 0.0) {
                return Err(invalid("safety criteria", "max_lateral_offset must be > 0"));
            }
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(invalid("safety criteria", "time_limit must be > 0"));
            }
        }
        let positive = [
            ("wheel_lift_pair_duration", self.wheel_lift_pair_duration),
            ("max_roll", self.max_roll),
            ("max_heading_error", self.max_heading_error),
            ("stall_speed", self.stall_speed),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid("safety criteria", format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.lane_edge_tolerance >= 0.0) {
            return Err(invalid("safety criteria", "lane_edge_tolerance must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Safe,
    LaneDeparture,
    Rollover,
    SpinOut,
    Stall,
}

impl Verdict {
    pub fn is_safe(&self) -> bool {
        *self == Verdict::Safe
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Safe => "safe",
            Verdict::LaneDeparture => "lane_departure",
            Verdict::Rollover => "rollover",
            Verdict::SpinOut => "spin_out",
            Verdict::Stall => "stall",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub step: StepConfig,
    /// s
    pub settle_time: f64,
    /// Trajectory samples per second; ignored when `full_rate_log` is set.
    pub log_rate: f64,
    pub full_rate_log: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            step: StepConfig::default(),
            settle_time: 1.0,
            log_rate: 50.0,
            full_rate_log: false,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step.dt > 0.0 && self.step.dt <= 0.02) {
            return Err(invalid("sim params", "dt must be in (0, 0.02] s"));
        }
        if !(self.settle_time >= 0.0) || !(self.log_rate > 0.0) {
            return Err(invalid("sim params", "settle_time must be >= 0 and log_rate > 0"));
        }
        Ok(())
    }
}

/// One logged sample. SI units, angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub station: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub speed: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub steer_angle: f64,
    pub throttle: f64,
    pub brake: f64,
    pub phase: Phase,
    pub normal_force: [f64; 4],
    pub longitudinal_slip: [f64; 4],
    pub lateral_slip: [f64; 4],
    /// CG offset from the route, positive toward the curve centre.
    pub lateral_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub v_base: f64,
    pub v_curve: f64,
    pub verdict: Verdict,
    pub failure_time: Option<f64>,
    pub failure_station: Option<f64>,
    pub detail: Option<String>,
    /// Peak body-frame lateral acceleration inside the window, m/s².
    pub peak_lateral_accel: f64,
    pub peak_roll: f64,
    /// Smallest inside-wheel normal force inside the window, N.
    pub min_inside_normal_force: f64,
    pub peak_lateral_offset: f64,
    pub trajectory: Vec<TrajectoryRow>,
}

/// Everything a run needs besides the two speeds.
#[derive(Debug, Clone, Copy)]
pub struct Scenario<'a> {
    pub vehicle: &'a VehicleSpec,
    pub road: &'a RoadModel,
    pub route: &'a Route,
    pub condition: &'a SurfaceCondition,
    pub control: &'a ControlParams,
    pub criteria: &'a SafetyCriteria,
    pub sim: &'a SimParams,
}

impl Scenario<'_> {
    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.condition.validate()?;
        self.control.validate()?;
        self.criteria.validate()?;
        self.sim.validate()
    }
}

/// Wheels on the curve-centre side (the alignment turns left).
const INSIDE_WHEELS: [usize; 2] = [0, 2];
const RIGHT_WHEELS: [usize; 2] = [1, 3];

/// Simulates one pass along the route: settle, release at `v_base`, then
/// drive the five phases until the route end or the first violation.
/// Speeds in m/s.
pub fn simulate_run(scn: &Scenario, v_base: f64, v_curve: f64) -> Result<RunOutcome> {
    if !(v_curve > 0.0 && v_curve <= v_base) {
        return Err(invalid("run", format!("need 0 < v_curve <= v_base, got {v_curve} / {v_base}")));
    }
    let spec = scn.vehicle;
    let road = scn.road;
    let route = scn.route;
    let crit = scn.criteria;
    let dt = scn.sim.step.dt;
    let plan = plan_phases(road, route)?;
    let window = (plan.interval(Phase::CurveEntry).start, plan.interval(Phase::CurveExit).end);
    let (lane_lo, lane_hi) = road.lane_bounds(route.lane());
    let route_lateral = road.lane_center(route.lane()) + route.centerline_offset();
    let footprint = spec.footprint();
    let front = spec.front_point();
    let rear_reach = -footprint[2].x;

    // Start with the rear bumper just past the route start.
    let start_station = route.start_station() + rear_reach + 0.5;
    let start_xy = road.surface_point(start_station, route_lateral).xy();
    let heading = road.pose(start_station).heading;
    let placed = RigidState::on_ground(spec, road, start_xy, heading, 0.0)?;
    let mut s = settle(spec, &placed, road, scn.condition, &scn.sim.step, scn.sim.settle_time, v_base)?;

    let time_limit = crit
        .time_limit
        .unwrap_or(3.0 * route.length() / v_curve.max(crit.stall_speed) + 30.0);
    let log_every = if scn.sim.full_rate_log {
        1
    } else {
        ((1.0 / scn.sim.log_rate) / dt).round().max(1.0) as usize
    };

    let mut steering = Steering::new(route, scn.vehicle.wheelbase)?;
    let mut phase = Phase::NormalDriving;
    let mut phase_start = 0.0;
    let mut lift_timer = [0.0f64; 2];
    let mut out = RunOutcome {
        v_base,
        v_curve,
        verdict: Verdict::Safe,
        failure_time: None,
        failure_station: None,
        detail: None,
        peak_lateral_accel: 0.0,
        peak_roll: 0.0,
        min_inside_normal_force: f64::INFINITY,
        peak_lateral_offset: 0.0,
        trajectory: Vec::new(),
    };

    let mut n = 0usize;
    loop {
        let (station, lateral) = road.locate(s.position.xy());
        let now = plan.phase_at(station);
        if now != phase {
            phase = now;
            phase_start = s.time;
        }
        let (throttle, brake) = drive_phase(s.velocity.x, phase, s.time - phase_start, v_base, v_curve, scn.control);
        let steer = steering.update(&s, &front, route, scn.control, dt);
        let cmd = DriverCommand {
            throttle,
            brake,
            steer_angle: steer,
        };

        if n.is_multiple_of(log_every) {
            out.trajectory.push(row(&s, station, lateral - route_lateral, &cmd, phase));
        }

        let next = step(spec, &s, &cmd, road, scn.condition, &scn.sim.step)?;
        let lat_accel = (next.velocity.y - s.velocity.y) / dt + next.angular_velocity.z * next.velocity.x;
        s = next;
        n += 1;

        let (station, lateral) = road.locate(s.position.xy());
        let in_window = station >= window.0 && station <= window.1;
        let mut failure: Option<(Verdict, String)> = None;

        if in_window {
            let (roll, _, _) = s.euler();
            let offset = lateral - route_lateral;
            out.peak_lateral_accel = out.peak_lateral_accel.max(lat_accel.abs());
            out.peak_roll = out.peak_roll.max(roll.abs());
            out.peak_lateral_offset = out.peak_lateral_offset.max(offset.abs());
            for i in INSIDE_WHEELS {
                out.min_inside_normal_force = out.min_inside_normal_force.min(s.wheels[i].normal_force);
            }

            let departed = footprint.iter().find_map(|c| {
                let (_, l) = road.locate(s.body_point(c).xy());
                (l < lane_lo - crit.lane_edge_tolerance || l > lane_hi + crit.lane_edge_tolerance).then_some(l)
            });
            for (k, side) in [INSIDE_WHEELS, RIGHT_WHEELS].iter().enumerate() {
                let lifted = side.iter().all(|&i| !s.wheels[i].in_contact || s.wheels[i].normal_force <= 0.0);
                lift_timer[k] = if lifted { lift_timer[k] + dt } else { 0.0 };
            }
            let heading_error = wrap(s.heading() - road.pose(station).heading);

            if let Some(l) = departed {
                failure = Some((Verdict::LaneDeparture,
                    format!("footprint corner at lateral {:.2} ft, lane [{:.2}, {:.2}] ft", m_to_ft(l), m_to_ft(lane_lo), m_to_ft(lane_hi)),
                ));
            } else if crit.max_lateral_offset.is_some_and(|m| offset.abs() > m) {
                failure = Some((Verdict::LaneDeparture, format!("CG offset {:.2} ft from the route", m_to_ft(offset))));
            } else if lift_timer.iter().any(|&t| t > crit.wheel_lift_pair_duration) {
                failure = Some((Verdict::Rollover, "both wheels on one side unloaded".into()));
            } else if roll.abs() > crit.max_roll {
                failure = Some((Verdict::Rollover, format!("roll {:.1} deg", roll.to_degrees())));
            } else if heading_error.abs() > crit.max_heading_error {
                failure = Some((Verdict::SpinOut, format!("heading error {:.1} deg", heading_error.to_degrees())));
            }
        }
        if failure.is_none() && station < route.end_station() {
            if s.velocity.x < crit.stall_speed {
                failure = Some((Verdict::Stall, format!("speed {:.2} mph", mps_to_mph(s.velocity.x))));
            } else if s.time > time_limit {
                failure = Some((Verdict::Stall, format!("time budget {time_limit:.1} s exceeded")));
            }
        }
        if let Some((v, why)) = failure {
            out.verdict = v;
            out.failure_time = Some(s.time);
            out.failure_station = Some(station);
            out.detail = Some(why);
        }
        let front_station = road.locate(s.body_point(&front).xy()).0;
        let done = !out.verdict.is_safe() || front_station >= route.end_station();
        if !done && road.sample(s.position.xy()).is_none() {
            return Err(Error::Search(format!(
                "vehicle left the paved surface outside the evaluation window at station {:.1} ft",
                m_to_ft(station)
            )));
        }
        if done {
            out.trajectory.push(row(&s, station, lateral - route_lateral, &cmd, phase));
            break;
        }
    }
    if !out.min_inside_normal_force.is_finite() {
        out.min_inside_normal_force = 0.0;
    }
    Ok(out)
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

fn row(s: &RigidState, station: f64, offset: f64, cmd: &DriverCommand, phase: Phase) -> TrajectoryRow {
    let (roll, pitch, yaw) = s.euler();
    TrajectoryRow {
        t: s.time,
        station,
        x: s.position.x,
        y: s.position.y,
        z: s.position.z,
        speed: s.speed(),
        u: s.velocity.x,
        v: s.velocity.y,
        w: s.velocity.z,
        p: s.angular_velocity.x,
        q: s.angular_velocity.y,
        r: s.angular_velocity.z,
        roll,
        pitch,
        yaw,
        steer_angle: cmd.steer_angle,
        throttle: cmd.throttle,
        brake: cmd.brake,
        phase,
        normal_force: s.wheels.map(|w| w.normal_force),
        longitudinal_slip: s.wheels.map(|w| w.longitudinal_slip),
        lateral_slip: s.wheels.map(|w| w.lateral_slip),
        lateral_offset: offset,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchParams {
    pub start_mph: f64,
    pub increment_mph: f64,
    /// Offset of v_base above v_curve, mph.
    pub base_offset_mph: f64,
    /// Speeds above the first failure re-run to detect a non-monotone pattern.
    pub confirm_steps: usize,
    /// Quarter-increment pass between the last safe and first failing speed.
    pub refine: bool,
    pub max_mph: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            start_mph: 15.0,
            increment_mph: 1.0,
            base_offset_mph: 5.0,
            confirm_steps: 2,
            refine: false,
            max_mph: 200.0,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.start_mph > 0.0 && self.increment_mph > 0.0 && self.base_offset_mph >= 0.0) {
            return Err(invalid("search params", "start and increment must be > 0, base offset >= 0"));
        }
        if !(self.max_mph > self.start_mph) {
            return Err(invalid("search params", "max_mph must exceed start_mph"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedTrial {
    pub v_curve_mph: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedSearchResult {
    pub vehicle_class: String,
    pub condition: String,
    /// mph
    pub max_safe_speed: f64,
    /// mph
    pub increment: f64,
    pub refined_max_safe_speed: Option<f64>,
    pub first_failure_speed: f64,
    pub first_failure_mode: Verdict,
    pub aashto_design_speed: Option<f64>,
    pub observed_max_speed: Option<f64>,
    pub trials: Vec<SpeedTrial>,
    pub warnings: Vec<String>,
    /// Outcomes at the largest safe speed and the first failing speed.
    #[serde(skip)]
    pub boundary: Option<Box<(RunOutcome, RunOutcome)>>,
}

/// Raises v_curve by `increment` from `start` (v_base = v_curve + offset)
/// until a run is unsafe.
pub fn find_max_safe_speed(scn: &Scenario, params: &SearchParams) -> Result<SpeedSearchResult> {
    params.validate()?;
    let run = |v_curve_mph: f64| {
        simulate_run(
            scn,
            mph_to_mps(v_curve_mph + params.base_offset_mph),
            mph_to_mps(v_curve_mph),
        )
    };
    let mut trials = Vec::new();
    let mut warnings = Vec::new();

    let start = run(params.start_mph)?;
    trials.push(SpeedTrial {
        v_curve_mph: params.start_mph,
        verdict: start.verdict,
    });
    if !start.verdict.is_safe() {
        return Err(Error::Search(format!(
            "start speed {} mph is not safe for {} on {}: {} at t = {:.2} s ({})",
            params.start_mph,
            scn.vehicle.name,
            scn.condition.name,
            start.verdict,
            start.failure_time.unwrap_or(f64::NAN),
            start.detail.as_deref().unwrap_or("")
        )));
    }

    let mut k = 0u32;
    let mut last_safe = start;
    let (fail_speed, failed) = loop {
        k += 1;
        let v = params.start_mph + k as f64 * params.increment_mph;
        if v > params.max_mph {
            return Err(Error::Search(format!("no unsafe speed found up to {} mph", params.max_mph)));
        }
        let o = run(v)?;
        trials.push(SpeedTrial {
            v_curve_mph: v,
            verdict: o.verdict,
        });
        if o.verdict.is_safe() {
            last_safe = o;
        } else {
            break (v, o);
        }
    };
    let max_safe = fail_speed - params.increment_mph;

    for j in 1..=params.confirm_steps {
        let v = fail_speed + j as f64 * params.increment_mph;
        if v > params.max_mph {
            break;
        }
        let verdict = run(v)?.verdict;
        trials.push(SpeedTrial { v_curve_mph: v, verdict });
        if verdict.is_safe() {
            warnings.push(format!(
                "non-monotone: {v} mph is safe although {fail_speed} mph failed ({})",
                failed.verdict
            ));
        }
    }

    let mut refined = None;
    if params.refine {
        let step = 0.25 * params.increment_mph;
        let mut best = max_safe;
        let mut v = max_safe + step;
        while v < fail_speed - 1e-9 {
            let o = run(v)?;
            trials.push(SpeedTrial {
                v_curve_mph: v,
                verdict: o.verdict,
            });
            if !o.verdict.is_safe() {
                break;
            }
            best = v;
            v += step;
        }
        refined = Some(best);
    }

    Ok(SpeedSearchResult {
        vehicle_class: scn.vehicle.name.clone(),
        condition: scn.condition.name.to_string(),
        max_safe_speed: max_safe,
        increment: params.increment_mph,
        refined_max_safe_speed: refined,
        first_failure_speed: fail_speed,
        first_failure_mode: failed.verdict,
        aashto_design_speed: None,
        observed_max_speed: None,
        trials,
        warnings,
        boundary: Some(Box::new((last_safe, failed))),
    })
}

/// Runs independent searches concurrently; results keep the input order.
pub fn run_searches(scenarios: &[Scenario], params: &SearchParams) -> Vec<Result<SpeedSearchResult>> {
    scenarios.par_iter().map(|s| find_max_safe_speed(s, params)).collect()
}

/// Maximum side-friction factors by design speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AashtoFrictionTable {
    /// (design speed mph, f_max)
    pub points: Vec<(f64, f64)>,
    pub source: Option<String>,
}

const GREEN_BOOK_CSV: &str = include_str!("../../../configs/aashto_fmax.csv");

impl AashtoFrictionTable {
    pub fn green_book() -> AashtoFrictionTable {
        Self::from_csv(GREEN_BOOK_CSV).expect("embedded table parses")
    }

    /// Single-value table, f_max independent of speed.
    pub fn constant(f: f64) -> AashtoFrictionTable {
        AashtoFrictionTable {
            points: vec![(0.0, f)],
            source: None,
        }
    }

    /// Parses `speed_mph,f_max` rows; `#` lines are comments and a
    /// `# source:` line is kept as the citation.
    pub fn from_csv(text: &str) -> Result<AashtoFrictionTable> {
        let source = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("# source:").map(|s| s.trim().to_string()));
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut points = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            points.push(rec?);
        }
        let t = AashtoFrictionTable { points, source };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(invalid("AASHTO table", "no rows"));
        }
        if self.points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("AASHTO table", "design speeds must be increasing"));
        }
        if self.points.windows(2).any(|w| w[1].1 > w[0].1) {
            return Err(invalid("AASHTO table", "f_max must not increase with speed"));
        }
        if self.points.iter().any(|&(v, f)| !(v >= 0.0) || !(f > 0.0 && f < 1.0)) {
            return Err(invalid("AASHTO table", "speeds must be >= 0 and f_max in (0, 1)"));
        }
        Ok(())
    }

    /// f_max at `v` mph, linear between rows and clamped at the ends.
    pub fn f_max(&self, v: f64) -> f64 {
        let p = &self.points;
        if v <= p[0].0 {
            return p[0].1;
        }
        for w in p.windows(2) {
            if v <= w[1].0 {
                let t = (v - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + t * (w[1].1 - w[0].1);
            }
        }
        p[p.len() - 1].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AashtoSpeed {
    /// mph
    pub speed: f64,
    /// Rounded down to a multiple of 5 mph.
    pub rounded: f64,
    pub iterations: usize,
}

pub const AASHTO_MAX_ITERATIONS: usize = 100;

/// Solves v = √(15·R·(e + f_max(v))) (R in ft, v in mph) by fixed-point
/// iteration.
pub fn aashto_design_speed(radius_ft: f64, superelevation: f64, table: &AashtoFrictionTable) -> Result<AashtoSpeed> {
    if !(radius_ft > 0.0) {
        return Err(invalid("AASHTO design speed", format!("radius must be > 0, got {radius_ft}")));
    }
    if !(0.0..0.12).contains(&superelevation) {
        return Err(invalid("AASHTO design speed", format!("superelevation {superelevation} outside [0, 0.12)")));
    }
    table.validate()?;
    let g = |v: f64| (15.0 * radius_ft * (superelevation + table.f_max(v))).sqrt();
    let mut v = g(table.points[0].0);
    for i in 1..=AASHTO_MAX_ITERATIONS {
        let next = g(v);
        if (next - v).abs() < 0.01 {
            return Ok(AashtoSpeed {
                speed: next,
                rounded: (next / 5.0).floor() * 5.0,
                iterations: i,
            });
        }
        v = next;
    }
    Err(Error::NoConvergence {
        iterations: AASHTO_MAX_ITERATIONS,
        last: v,
    })
}

/// (estimate − observed) / observed × 100, or `None` without a usable
/// observation.
pub fn deviation_percent(estimate: f64, observed: Option<f64>) -> Option<f64> {
    observed.filter(|&o| o > 0.0).map(|o| (estimate - o) / o * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub vehicle_class: String,
    pub condition: String,
    pub simulated_max_safe_speed: f64,
    pub aashto_design_speed: Option<f64>,
    pub observed_max_speed: Option<f64>,
    pub simulated_deviation_pct: Option<f64>,
    pub aashto_deviation_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

pub fn compare_report(results: &[SpeedSearchResult]) -> ComparisonReport {
    let rows = results
        .iter()
        .map(|r| ComparisonRow {
            vehicle_class: r.vehicle_class.clone(),
            condition: r.condition.clone(),
            simulated_max_safe_speed: r.max_safe_speed,
            aashto_design_speed: r.aashto_design_speed,
            observed_max_speed: r.observed_max_speed,
            simulated_deviation_pct: deviation_percent(r.max_safe_speed, r.observed_max_speed),
            aashto_deviation_pct: r
                .aashto_design_speed
                .and_then(|a| deviation_percent(a, r.observed_max_speed)),
        })
        .collect();
    ComparisonReport { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn result(est: f64, obs: Option<f64>) -> SpeedSearchResult {
        SpeedSearchResult {
            vehicle_class: "sedan".into(),
            condition: "dry".into(),
            max_safe_speed: est,
            increment: 1.0,
            refined_max_safe_speed: None,
            first_failure_speed: est + 1.0,
            first_failure_mode: Verdict::LaneDeparture,
            aashto_design_speed: Some(est),
            observed_max_speed: obs,
            trials: vec![],
            warnings: vec![],
            boundary: None,
        }
    }

    #[test]
    fn aashto_constant_table() {
        let v = aashto_design_speed(500.0, 0.0, &AashtoFrictionTable::constant(0.15)).unwrap();
        assert_relative_eq!(v.speed, (15.0f64 * 500.0 * 0.15).sqrt(), epsilon = 1e-9);
        assert_relative_eq!(v.speed, 33.5410, epsilon = 1e-4);
        assert_eq!(v.rounded, 30.0);
    }

    #[test]
    fn aashto_default_curve_matches_scan() {
        let table = AashtoFrictionTable::green_book();
        let v = aashto_design_speed(712.0, 0.078, &table).unwrap();
        // Exhaustive 0.01 mph scan of |v − √(15R(e + f(v)))|.
        assert!((v.speed - 48.57).abs() < 0.02, "{}", v.speed);
        assert_eq!(v.rounded, 45.0);
        assert!(table.source.as_deref().unwrap().contains("Green Book"));
    }

    #[test]
    fn aashto_rejects_bad_input() {
        let t = AashtoFrictionTable::green_book();
        assert!(aashto_design_speed(0.0, 0.05, &t).is_err());
        assert!(aashto_design_speed(500.0, 0.12, &t).is_err());
        assert!(AashtoFrictionTable::from_csv("v,f\n20,0.1\n15,0.2\n").is_err());
        assert!(AashtoFrictionTable::from_csv("v,f\n15,0.1\n20,0.2\n").is_err());
    }

    #[test]
    fn aashto_shrinks_with_radius() {
        let t = AashtoFrictionTable::green_book();
        let mut prev = f64::INFINITY;
        for r in [712.0, 300.0, 100.0, 10.0, 1.0, 0.01] {
            let v = aashto_design_speed(r, 0.078, &t).unwrap().speed;
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 0.5);
    }

    #[test]
    fn deviation_examples() {
        assert_eq!(deviation_percent(40.0, Some(40.0)), Some(0.0));
        assert_relative_eq!(deviation_percent(38.0, Some(40.0)).unwrap(), -5.0, epsilon = 1e-12);
        assert_eq!(deviation_percent(38.0, None), None);
    }

    #[test]
    fn report_rows() {
        let rs = vec![result(38.0, Some(40.0)), result(50.0, None), result(60.0, Some(60.0))];
        let rep = compare_report(&rs);
        assert_eq!(rep.rows.len(), 3);
        assert_relative_eq!(rep.rows[0].simulated_deviation_pct.unwrap(), -5.0, epsilon = 1e-12);
        assert_eq!(rep.rows[1].simulated_deviation_pct, None);
        assert_eq!(rep.rows[1].aashto_deviation_pct, None);
        assert_eq!(rep.rows[2].simulated_deviation_pct, Some(0.0));
    }

    proptest! {
        #[test]
        fn aashto_fixed_point(r in 50.0f64..3000.0, e in 0.0f64..0.11) {
            let t = AashtoFrictionTable::green_book();
            let v = aashto_design_speed(r, e, &t).unwrap().speed;
            prop_assert!((v - (15.0 * r * (e + t.f_max(v))).sqrt()).abs() < 0.02);
        }

        #[test]
        fn f_max_interpolates_monotonically(a in 0.0f64..100.0, b in 0.0f64..100.0) {
            let t = AashtoFrictionTable::green_book();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(t.f_max(lo) >= t.f_max(hi));
        }
    }
}
