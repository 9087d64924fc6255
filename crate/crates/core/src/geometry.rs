//! Parametric horizontal-curve road model and waypoint routes.
//!
//! The alignment is tangent → circular arc → tangent, turning left (the curve
//! centre lies on the +y side of the direction of travel). Stations increase in
//! the direction of travel. Lateral offsets are measured from the centreline,
//! positive toward the curve centre. A positive cross slope lowers the side
//! nearer the curve centre.
//!
//! The approach tangent starts at the world origin heading along +x, with the
//! centreline at elevation zero (no grade).

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::units::{ft_to_m, snap_to_feet};

/// Length of a superelevation transition, either given or derived from the
/// maximum relative gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransitionLength {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub radius: f64,
    /// Length of the circular portion.
    pub arc_length: f64,
    pub superelevation_rate: f64,
    pub lane_width: f64,
    pub shoulder_width: f64,
    /// Lanes per direction.
    pub lane_count: u32,
    /// Tangent cross slope of the outer half of the section (signed; negative
    /// drains away from the curve centre).
    pub normal_crown_slope: f64,
    pub approach_tangent_length: f64,
    pub departure_tangent_length: f64,
    pub runoff_length: TransitionLength,
    pub runout_length: TransitionLength,
    pub runoff_fraction_before_pc: f64,
    /// Maximum relative gradient between the edge of one rotated lane and the
    /// axis of rotation (ft/ft).
    pub max_relative_gradient: f64,
}

impl Default for CurveSpec {
    /// R = 712 ft, e = 7.8 %, 1400 ft of arc,
    /// 11 ft lanes and 4 ft shoulders, with 80 % of the runoff before the PC.
    fn default() -> Self {
        CurveSpec {
            radius: ft_to_m(712.0),
            arc_length: ft_to_m(1400.0),
            superelevation_rate: 0.078,
            lane_width: ft_to_m(11.0),
            shoulder_width: ft_to_m(4.0),
            lane_count: 1,
            normal_crown_slope: -0.02,
            approach_tangent_length: ft_to_m(600.0),
            departure_tangent_length: ft_to_m(400.0),
            runoff_length: TransitionLength::Auto,
            runout_length: TransitionLength::Auto,
            runoff_fraction_before_pc: 0.8,
            max_relative_gradient: 0.005,
        }
    }
}

impl CurveSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radius", self.radius),
            ("arc_length", self.arc_length),
            ("lane_width", self.lane_width),
            ("max_relative_gradient", self.max_relative_gradient),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid("curve spec", format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("shoulder_width", self.shoulder_width),
            ("approach_tangent_length", self.approach_tangent_length),
            ("departure_tangent_length", self.departure_tangent_length),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid("curve spec", format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, t) in [("runoff_length", self.runoff_length), ("runout_length", self.runout_length)] {
            if let TransitionLength::Fixed(v) = t {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(invalid("curve spec", format!("{name} must be >= 0, got {v}")));
                }
            }
        }
        if !(0.0..0.12).contains(&self.superelevation_rate) {
            return Err(invalid(
                "curve spec",
                format!("superelevation_rate must be in [0, 0.12), got {}", self.superelevation_rate),
            ));
        }
        if !(0.0..=1.0).contains(&self.runoff_fraction_before_pc) {
            return Err(invalid(
                "curve spec",
                format!(
                    "runoff_fraction_before_pc must be in [0, 1], got {}",
                    self.runoff_fraction_before_pc
                ),
            ));
        }
        if self.lane_count == 0 {
            return Err(invalid("curve spec", "lane_count must be at least 1"));
        }
        if !self.normal_crown_slope.is_finite() || self.normal_crown_slope.abs() >= 0.12 {
            return Err(invalid("curve spec", "normal_crown_slope out of range"));
        }
        if self.arc_length >= 2.0 * PI * self.radius {
            return Err(invalid("curve spec", "arc longer than a full circle"));
        }
        Ok(())
    }

    /// Half-width of the paved section (lanes plus shoulder) on either side of
    /// the centreline.
    pub fn half_width(&self) -> f64 {
        self.lane_count as f64 * self.lane_width + self.shoulder_width
    }
}

/// Stations bounding the superelevation transitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transitions {
    /// Normal crown ends, runout begins.
    pub entry_runout_start: f64,
    /// Adverse crown removed (cross slope 0), runoff begins.
    pub entry_runoff_start: f64,
    /// Full superelevation reached.
    pub entry_runoff_end: f64,
    pub exit_runoff_start: f64,
    pub exit_runoff_end: f64,
    pub exit_runout_end: f64,
}

impl Transitions {
    pub fn is_degenerate(&self) -> bool {
        self.entry_runout_start == self.entry_runoff_end && self.exit_runoff_start == self.exit_runout_end
    }
}

/// Centreline pose at a station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadPose {
    pub station: f64,
    pub world_position: Vector3<f64>,
    pub heading: f64,
    pub cross_slope: f64,
    pub grade: f64,
}

/// Ground query result at a point inside the paved footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub station: f64,
    pub lateral: f64,
    pub elevation: f64,
    /// Upward unit normal.
    pub normal: Vector3<f64>,
    pub cross_slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadModel {
    spec: CurveSpec,
    pc_station: f64,
    pt_station: f64,
    end_station: f64,
    runoff_length: f64,
    runout_length: f64,
    transitions: Transitions,
    /// Piecewise-linear (station, cross slope) knots; constant beyond the ends.
    profile: Vec<(f64, f64)>,
    center: Vector2<f64>,
    pt_point: Vector2<f64>,
    deflection: f64,
}

/// Builds the alignment and superelevation profile for `spec`.
pub fn build_road(spec: &CurveSpec) -> Result<RoadModel> {
    spec.validate()?;
    let e = spec.superelevation_rate;
    let crown = spec.normal_crown_slope;
    let grad = spec.max_relative_gradient;
    let w = spec.lane_width;

    let runoff = match spec.runoff_length {
        TransitionLength::Fixed(v) => v,
        TransitionLength::Auto => w * e / grad,
    };
    // Runout removes the adverse crown of the outer half.
    let adverse = (-crown).max(0.0);
    let runout = match spec.runout_length {
        TransitionLength::Fixed(v) => v,
        TransitionLength::Auto => w * adverse / grad,
    };

    // The runoff starts from a level outer half, or from the crown itself when
    // there is no adverse crown to remove.
    let ramp_start = if runout > 0.0 { 0.0 } else { crown };
    let tol = 1e-12;
    let rise = (e - ramp_start).abs();
    if runoff > 0.0 && w * rise / runoff > grad * (1.0 + tol) {
        return Err(invalid(
            "curve spec",
            format!("runoff of {runoff:.3} m exceeds the maximum relative gradient {grad}"),
        ));
    }
    if runoff == 0.0 && rise > 0.0 {
        return Err(invalid("curve spec", "zero runoff length with a nonzero change in cross slope"));
    }
    if runout > 0.0 && w * adverse / runout > grad * (1.0 + tol) {
        return Err(invalid(
            "curve spec",
            format!("runout of {runout:.3} m exceeds the maximum relative gradient {grad}"),
        ));
    }
    if runout == 0.0 && adverse > 0.0 {
        return Err(invalid("curve spec", "zero runout length with an adverse normal crown"));
    }

    let f = spec.runoff_fraction_before_pc;
    let before = f * runoff;
    let after = runoff - before;
    if runout + before > spec.approach_tangent_length {
        return Err(invalid(
            "curve spec",
            format!(
                "runout + runoff before the PC ({:.3} m) is longer than the approach tangent ({:.3} m)",
                runout + before,
                spec.approach_tangent_length
            ),
        ));
    }
    if runout + before > spec.departure_tangent_length {
        return Err(invalid(
            "curve spec",
            "runout + runoff after the PT is longer than the departure tangent",
        ));
    }
    if 2.0 * after > spec.arc_length {
        return Err(invalid("curve spec", "arc too short to hold both runoff portions"));
    }

    let pc = spec.approach_tangent_length;
    let pt = pc + spec.arc_length;
    let end = pt + spec.departure_tangent_length;
    let transitions = Transitions {
        entry_runout_start: pc - before - runout,
        entry_runoff_start: pc - before,
        entry_runoff_end: pc + after,
        exit_runoff_start: pt - after,
        exit_runoff_end: pt + before,
        exit_runout_end: pt + before + runout,
    };
    let t = &transitions;
    let knots = [
        (t.entry_runout_start, crown),
        (t.entry_runoff_start, ramp_start),
        (t.entry_runoff_end, e),
        (t.exit_runoff_start, e),
        (t.exit_runoff_end, ramp_start),
        (t.exit_runout_end, crown),
    ];
    let mut profile: Vec<(f64, f64)> = Vec::with_capacity(knots.len());
    for (s, v) in knots {
        match profile.last_mut() {
            Some(last) if last.0 == s => last.1 = v,
            _ => profile.push((s, v)),
        }
    }

    let center = Vector2::new(pc, spec.radius);
    let deflection = spec.arc_length / spec.radius;
    let pt_point = center + spec.radius * Vector2::new(deflection.sin(), -deflection.cos());

    Ok(RoadModel {
        spec: spec.clone(),
        pc_station: pc,
        pt_station: pt,
        end_station: end,
        runoff_length: runoff,
        runout_length: runout,
        transitions,
        profile,
        center,
        pt_point,
        deflection,
    })
}

impl RoadModel {
    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    pub fn pc_station(&self) -> f64 {
        self.pc_station
    }

    pub fn pt_station(&self) -> f64 {
        self.pt_station
    }

    pub fn end_station(&self) -> f64 {
        self.end_station
    }

    pub fn runoff_length(&self) -> f64 {
        self.runoff_length
    }

    pub fn runout_length(&self) -> f64 {
        self.runout_length
    }

    pub fn transitions(&self) -> &Transitions {
        &self.transitions
    }

    pub fn profile(&self) -> &[(f64, f64)] {
        &self.profile
    }

    /// Angle turned through by the arc.
    pub fn deflection(&self) -> f64 {
        self.deflection
    }

    pub fn curve_center(&self) -> Vector2<f64> {
        self.center
    }

    /// Cross slope of the half of the section outside the curve (the
    /// reference profile).
    pub fn cross_slope(&self, station: f64) -> f64 {
        let p = &self.profile;
        if station <= p[0].0 {
            return p[0].1;
        }
        for w in p.windows(2) {
            let (s0, v0) = w[0];
            let (s1, v1) = w[1];
            if station <= s1 {
                return v0 + (v1 - v0) * (station - s0) / (s1 - s0);
            }
        }
        p[p.len() - 1].1
    }

    /// Rate of change of the reference cross slope with station.
    fn cross_slope_rate(&self, station: f64) -> f64 {
        let p = &self.profile;
        for w in p.windows(2) {
            let (s0, v0) = w[0];
            let (s1, v1) = w[1];
            if station > s0 && station < s1 {
                return (v1 - v0) / (s1 - s0);
            }
        }
        0.0
    }

    /// Cross slope of the half of the section nearer the curve centre. It
    /// keeps its normal crown until the rotating half catches up with it.
    pub fn inner_cross_slope(&self, station: f64) -> f64 {
        let s = self.cross_slope(station);
        let crown = self.spec.normal_crown_slope;
        if crown < 0.0 {
            s.max(-crown)
        } else {
            s
        }
    }

    fn inner_cross_slope_rate(&self, station: f64) -> f64 {
        let crown = self.spec.normal_crown_slope;
        if crown < 0.0 && self.cross_slope(station) < -crown {
            0.0
        } else {
            self.cross_slope_rate(station)
        }
    }

    fn slope_on_side(&self, station: f64, lateral: f64) -> (f64, f64) {
        if lateral > 0.0 {
            (self.inner_cross_slope(station), self.inner_cross_slope_rate(station))
        } else {
            (self.cross_slope(station), self.cross_slope_rate(station))
        }
    }

    /// Horizontal centreline point and heading; extrapolates along the
    /// tangents beyond either end.
    pub fn centerline(&self, station: f64) -> (Vector2<f64>, f64) {
        if station <= self.pc_station {
            (Vector2::new(station, 0.0), 0.0)
        } else if station <= self.pt_station {
            let th = (station - self.pc_station) / self.spec.radius;
            (
                self.center + self.spec.radius * Vector2::new(th.sin(), -th.cos()),
                th,
            )
        } else {
            let d = station - self.pt_station;
            let h = self.deflection;
            (self.pt_point + d * Vector2::new(h.cos(), h.sin()), h)
        }
    }

    pub fn pose(&self, station: f64) -> RoadPose {
        let (p, heading) = self.centerline(station);
        RoadPose {
            station,
            world_position: Vector3::new(p.x, p.y, 0.0),
            heading,
            cross_slope: self.cross_slope(station),
            grade: 0.0,
        }
    }

    /// Surface elevation at a station and lateral offset.
    pub fn elevation(&self, station: f64, lateral: f64) -> f64 {
        let (slope, _) = self.slope_on_side(station, lateral);
        -slope * lateral
    }

    /// World point on the road surface.
    pub fn surface_point(&self, station: f64, lateral: f64) -> Vector3<f64> {
        let (p, h) = self.centerline(station);
        let n = Vector2::new(-h.sin(), h.cos());
        let xy = p + lateral * n;
        Vector3::new(xy.x, xy.y, self.elevation(station, lateral))
    }

    /// Station and lateral offset of a horizontal world point.
    pub fn locate(&self, xy: Vector2<f64>) -> (f64, f64) {
        let mut best: Option<(f64, f64)> = None;
        let mut consider = |s: f64, lat: f64| {
            if best.is_none_or(|(_, l)| lat.abs() < l.abs()) {
                best = Some((s, lat));
            }
        };
        if xy.x <= self.pc_station {
            consider(xy.x, xy.y);
        }
        let d = xy - self.center;
        let th = d.x.atan2(-d.y);
        if (0.0..=self.deflection).contains(&th) {
            consider(self.pc_station + self.spec.radius * th, self.spec.radius - d.norm());
        }
        let h = self.deflection;
        let rel = xy - self.pt_point;
        let along = rel.dot(&Vector2::new(h.cos(), h.sin()));
        if along >= 0.0 {
            consider(self.pt_station + along, rel.dot(&Vector2::new(-h.sin(), h.cos())));
        }
        // The three regions cover the plane; fall back to the approach tangent.
        best.unwrap_or((xy.x, xy.y))
    }

    /// Ground query by station and lateral offset. `None` is the distinct
    /// "no contact" result for points off the paved footprint.
    pub fn sample_at(&self, station: f64, lateral: f64) -> Option<SurfaceSample> {
        if station < 0.0 || station > self.end_station || lateral.abs() > self.spec.half_width() {
            return None;
        }
        let (slope, rate) = self.slope_on_side(station, lateral);
        let (_, h) = self.centerline(station);
        let tangent = Vector3::new(h.cos(), h.sin(), 0.0);
        let left = Vector3::new(-h.sin(), h.cos(), 0.0);
        // Distance along the offset line per unit of station.
        let stretch = if station > self.pc_station && station < self.pt_station {
            (self.spec.radius - lateral) / self.spec.radius
        } else {
            1.0
        };
        let dz_dt = -rate * lateral / stretch;
        let dz_dn = -slope;
        let normal = (Vector3::z() - dz_dt * tangent - dz_dn * left).normalize();
        Some(SurfaceSample {
            station,
            lateral,
            elevation: -slope * lateral,
            normal,
            cross_slope: slope,
        })
    }

    /// Ground query by horizontal world position.
    pub fn sample(&self, xy: Vector2<f64>) -> Option<SurfaceSample> {
        let (s, lat) = self.locate(xy);
        self.sample_at(s, lat)
    }

    /// Lateral bounds `(min, max)` of a lane.
    pub fn lane_bounds(&self, lane: Lane) -> (f64, f64) {
        let w = self.spec.lane_width;
        match lane {
            Lane::Outer => (-w, 0.0),
            Lane::Inner => (0.0, w),
        }
    }

    /// Lateral offset of a lane centreline.
    pub fn lane_center(&self, lane: Lane) -> f64 {
        let (a, b) = self.lane_bounds(lane);
        0.5 * (a + b)
    }
}

/// Anything the wheels can be ray-cast against.
pub trait Ground {
    /// Surface under a horizontal world point, or `None` for no contact.
    fn sample(&self, xy: Vector2<f64>) -> Option<SurfaceSample>;
}

impl Ground for RoadModel {
    fn sample(&self, xy: Vector2<f64>) -> Option<SurfaceSample> {
        RoadModel::sample(self, xy)
    }
}

/// Unbounded level plane at a fixed elevation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatGround {
    pub elevation: f64,
}

impl Ground for FlatGround {
    fn sample(&self, xy: Vector2<f64>) -> Option<SurfaceSample> {
        Some(SurfaceSample {
            station: xy.x,
            lateral: xy.y,
            elevation: self.elevation,
            normal: Vector3::z(),
            cross_slope: 0.0,
        })
    }
}

/// Empty space: nothing to touch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoGround;

impl Ground for NoGround {
    fn sample(&self, _xy: Vector2<f64>) -> Option<SurfaceSample> {
        None
    }
}

/// Travel lane. Both lanes are driven in the direction of increasing
/// station; `Outer` lies on the side away from the curve centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lane {
    Inner,
    Outer,
}

impl std::fmt::Display for Lane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Lane::Inner => "inner",
            Lane::Outer => "outer",
        })
    }
}

impl std::str::FromStr for Lane {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inner" => Ok(Lane::Inner),
            "outer" => Ok(Lane::Outer),
            other => Err(invalid("lane", format!("expected inner or outer, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    waypoints: Vec<Vector3<f64>>,
    stations: Vec<f64>,
    lane: Lane,
    centerline_offset: f64,
    spacing: f64,
}

impl Route {
    /// Assembles a route from parts, checking the structural invariants.
    pub fn from_parts(
        waypoints: Vec<Vector3<f64>>,
        stations: Vec<f64>,
        lane: Lane,
        centerline_offset: f64,
        spacing: f64,
    ) -> Result<Route> {
        if waypoints.len() < 2 {
            return Err(invalid("route", "at least two waypoints are required"));
        }
        if waypoints.len() != stations.len() {
            return Err(invalid("route", "waypoint and station counts differ"));
        }
        if stations.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("route", "stations must be strictly increasing"));
        }
        if !(spacing > 0.0) {
            return Err(invalid("route", "spacing must be positive"));
        }
        Ok(Route {
            waypoints,
            stations,
            lane,
            centerline_offset,
            spacing,
        })
    }

    pub fn waypoints(&self) -> &[Vector3<f64>] {
        &self.waypoints
    }

    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    pub fn lane(&self) -> Lane {
        self.lane
    }

    /// Offset from the lane centreline, positive toward the curve centre.
    pub fn centerline_offset(&self) -> f64 {
        self.centerline_offset
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn start_station(&self) -> f64 {
        self.stations[0]
    }

    pub fn end_station(&self) -> f64 {
        self.stations[self.stations.len() - 1]
    }

    /// Polyline length through the waypoints.
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Horizontal heading of segment `i` → `i + 1`.
    pub fn segment_heading(&self, i: usize) -> f64 {
        let d = self.waypoints[i + 1] - self.waypoints[i];
        d.y.atan2(d.x)
    }

    /// Index of the segment containing `station`.
    pub fn segment_at(&self, station: f64) -> usize {
        let n = self.stations.len();
        match self
            .stations
            .binary_search_by(|s| s.partial_cmp(&station).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Signed horizontal distance from the route polyline to `xy`, positive
    /// to the left of the direction of travel, measured against the segment
    /// covering `station`.
    pub fn cross_track(&self, xy: Vector2<f64>, station: f64) -> f64 {
        let i = self.segment_at(station);
        let a = self.waypoints[i].xy();
        let b = self.waypoints[i + 1].xy();
        let d = b - a;
        let len = d.norm();
        let rel = xy - a;
        (d.x * rel.y - d.y * rel.x) / len
    }
}

/// Generates the waypoint route along `lane`, shifted `offset` toward the
/// curve centre, with waypoints every `spacing` (nominal) of station.
pub fn generate_route(model: &RoadModel, lane: Lane, offset: f64, spacing: f64) -> Result<Route> {
    let half_lane = 0.5 * model.spec.lane_width;
    if !(offset.abs() < half_lane) {
        return Err(invalid(
            "route",
            format!("offset {offset} m must be smaller than half the lane width {half_lane} m"),
        ));
    }
    if !(spacing > 0.0) || spacing > model.end_station {
        return Err(invalid("route", format!("spacing {spacing} m out of range")));
    }
    let lateral = model.lane_center(lane) + offset;
    let end = model.end_station;
    let n = (end / spacing).ceil() as usize;
    let mut waypoints = Vec::with_capacity(n + 1);
    let mut stations = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let s = snap_to_feet(end * i as f64 / n as f64);
        let p = model.surface_point(s, lateral);
        waypoints.push(p.map(snap_to_feet));
        stations.push(s);
    }
    Route::from_parts(waypoints, stations, lane, offset, spacing)
}
