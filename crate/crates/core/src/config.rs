//! TOML configuration files. Every quantity in a file carries its unit in
//! the key name (`_ft`, `_in`, `_lb`, `_mph`, ...); conversion to SI
//! happens here and nowhere else.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::ControlParams;
use crate::dynamics::{
    Drivetrain, EngineSpec, Integrator, StepConfig, TransmissionSpec, VehicleBuilder, VehicleSpec,
};
use crate::error::{Error, Result};
use crate::geometry::{build_road, generate_route, CurveSpec, Lane, RoadModel, Route, TransitionLength};
use crate::search::{AashtoFrictionTable, SafetyCriteria, SearchParams, SimParams};
use crate::tire::{Condition, FrictionCurve, SurfaceCondition};
use crate::units::{ft_to_m, m_to_ft, mph_to_mps, mps_to_mph, FT, INCH, LB, LB_FT};

/// Files shipped in `configs/`, embedded so the tool runs without them.
pub mod builtin {
    pub const SCENARIO: &str = include_str!("../../../configs/scenario.toml");
    pub const CURVE: &str = include_str!("../../../configs/curve.toml");
    pub const SEDAN: &str = include_str!("../../../configs/sedan.toml");
    pub const SUV: &str = include_str!("../../../configs/suv.toml");
    pub const PICKUP: &str = include_str!("../../../configs/pickup.toml");
    pub const SURFACES: &str = include_str!("../../../configs/surfaces.toml");
    pub const AASHTO: &str = include_str!("../../../configs/aashto_fmax.csv");

    /// Embedded file by its name in `configs/`.
    pub fn file(name: &str) -> Option<&'static str> {
        Some(match name {
            "scenario.toml" => SCENARIO,
            "curve.toml" => CURVE,
            "sedan.toml" => SEDAN,
            "suv.toml" => SUV,
            "pickup.toml" => PICKUP,
            "surfaces.toml" => SURFACES,
            "aashto_fmax.csv" => AASHTO,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthSetting {
    Auto(AutoTag),
    Feet(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl LengthSetting {
    fn to_si(self) -> TransitionLength {
        match self {
            LengthSetting::Auto(_) => TransitionLength::Auto,
            LengthSetting::Feet(f) => TransitionLength::Fixed(ft_to_m(f)),
        }
    }

    fn from_si(t: TransitionLength) -> Self {
        match t {
            TransitionLength::Auto => LengthSetting::Auto(AutoTag::Auto),
            TransitionLength::Fixed(m) => LengthSetting::Feet(m_to_ft(m)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteFile {
    pub lane: Lane,
    /// Toward the curve centre.
    pub offset_ft: f64,
    pub spacing_ft: f64,
}

impl Default for RouteFile {
    fn default() -> Self {
        RouteFile {
            lane: Lane::Outer,
            offset_ft: 1.25,
            spacing_ft: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub radius_ft: f64,
    pub arc_length_ft: f64,
    pub superelevation: f64,
    pub lane_width_ft: f64,
    pub shoulder_width_ft: f64,
    pub lane_count: u32,
    pub normal_crown_slope: f64,
    pub approach_tangent_ft: f64,
    pub departure_tangent_ft: f64,
    pub runoff_length_ft: LengthSetting,
    pub runout_length_ft: LengthSetting,
    pub runoff_fraction_before_pc: f64,
    pub max_relative_gradient: f64,
    #[serde(default)]
    pub route: RouteFile,
}

impl CurveFile {
    pub fn to_spec(&self) -> CurveSpec {
        CurveSpec {
            radius: ft_to_m(self.radius_ft),
            arc_length: ft_to_m(self.arc_length_ft),
            superelevation_rate: self.superelevation,
            lane_width: ft_to_m(self.lane_width_ft),
            shoulder_width: ft_to_m(self.shoulder_width_ft),
            lane_count: self.lane_count,
            normal_crown_slope: self.normal_crown_slope,
            approach_tangent_length: ft_to_m(self.approach_tangent_ft),
            departure_tangent_length: ft_to_m(self.departure_tangent_ft),
            runoff_length: self.runoff_length_ft.to_si(),
            runout_length: self.runout_length_ft.to_si(),
            runoff_fraction_before_pc: self.runoff_fraction_before_pc,
            max_relative_gradient: self.max_relative_gradient,
        }
    }

    pub fn from_spec(spec: &CurveSpec, route: RouteFile) -> CurveFile {
        CurveFile {
            radius_ft: m_to_ft(spec.radius),
            arc_length_ft: m_to_ft(spec.arc_length),
            superelevation: spec.superelevation_rate,
            lane_width_ft: m_to_ft(spec.lane_width),
            shoulder_width_ft: m_to_ft(spec.shoulder_width),
            lane_count: spec.lane_count,
            normal_crown_slope: spec.normal_crown_slope,
            approach_tangent_ft: m_to_ft(spec.approach_tangent_length),
            departure_tangent_ft: m_to_ft(spec.departure_tangent_length),
            runoff_length_ft: LengthSetting::from_si(spec.runoff_length),
            runout_length_ft: LengthSetting::from_si(spec.runout_length),
            runoff_fraction_before_pc: spec.runoff_fraction_before_pc,
            max_relative_gradient: spec.max_relative_gradient,
            route,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineFile {
    /// [rpm, lb-ft] pairs.
    pub torque_curve_lb_ft: Vec<[f64; 2]>,
    pub idle_rpm: f64,
    pub redline_rpm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionFile {
    pub gear_ratios: Vec<f64>,
    pub final_drive_ratio: f64,
    pub shift_up_mph: Vec<f64>,
    pub driveline_efficiency: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WheelFile {
    pub radius_in: f64,
    pub suspension_rest_length_in: Option<f64>,
    pub ride_frequency_hz: Option<f64>,
    pub damping_ratio: Option<f64>,
    pub rotational_inertia_lb_ft2: Option<f64>,
    /// Brake capacity as a multiple of the axle load under 1 g braking.
    pub brake_capacity_g: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleFile {
    pub name: String,
    pub model: Option<String>,
    pub mass_lb: f64,
    pub wheelbase_in: f64,
    pub overall_length_in: f64,
    pub overall_width_in: f64,
    pub overall_height_in: f64,
    pub cg_height_in: f64,
    pub drive_type: Drivetrain,
    pub axles: u32,
    pub track_width_in: Option<f64>,
    /// Distance from the front axle as a fraction of the wheelbase.
    pub cg_longitudinal_position: Option<f64>,
    /// [I_x, I_y, I_z]
    pub inertia_lb_ft2: Option<[f64; 3]>,
    pub aero_drag_area_ft2: Option<f64>,
    pub wheels: WheelFile,
    pub engine: EngineFile,
    pub transmission: TransmissionFile,
}

const LB_FT2: f64 = LB * FT * FT;

impl VehicleFile {
    pub fn to_spec(&self) -> Result<VehicleSpec> {
        if self.axles != 2 {
            return Err(crate::error::invalid("vehicle", format!("only two-axle vehicles are modelled, got {}", self.axles)));
        }
        let w = &self.wheels;
        VehicleBuilder {
            name: self.name.clone(),
            mass: self.mass_lb * LB,
            wheelbase: self.wheelbase_in * INCH,
            overall_length: self.overall_length_in * INCH,
            overall_width: self.overall_width_in * INCH,
            overall_height: self.overall_height_in * INCH,
            cg_height: self.cg_height_in * INCH,
            drivetrain: self.drive_type,
            engine: EngineSpec {
                torque_curve: self.engine.torque_curve_lb_ft.iter().map(|&[rpm, t]| (rpm, t * LB_FT)).collect(),
                idle_rpm: self.engine.idle_rpm,
                redline_rpm: self.engine.redline_rpm,
            },
            transmission: TransmissionSpec {
                gear_ratios: self.transmission.gear_ratios.clone(),
                final_drive_ratio: self.transmission.final_drive_ratio,
                shift_up_speeds: self.transmission.shift_up_mph.iter().map(|&v| mph_to_mps(v)).collect(),
                driveline_efficiency: self.transmission.driveline_efficiency,
            },
            wheel_radius: w.radius_in * INCH,
            track_width: self.track_width_in.map(|t| t * INCH),
            cg_longitudinal_position: self.cg_longitudinal_position,
            inertia: self.inertia_lb_ft2.map(|i| nalgebra::Vector3::from(i) * LB_FT2),
            aero_drag_coefficient_area: self.aero_drag_area_ft2.map(|a| a * FT * FT),
            suspension_rest_length: w.suspension_rest_length_in.map(|l| l * INCH),
            ride_frequency: w.ride_frequency_hz,
            damping_ratio: w.damping_ratio,
            wheel_inertia: w.rotational_inertia_lb_ft2.map(|i| i * LB_FT2),
            brake_capacity: w.brake_capacity_g,
        }
        .build()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceEntry {
    pub longitudinal: FrictionCurve,
    pub lateral: FrictionCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfacesFile {
    pub dry: SurfaceEntry,
    pub wet: SurfaceEntry,
}

impl SurfacesFile {
    pub fn condition(&self, c: Condition) -> SurfaceCondition {
        let e = match c {
            Condition::Dry => &self.dry,
            Condition::Wet => &self.wet,
        };
        SurfaceCondition {
            name: c,
            longitudinal: e.longitudinal,
            lateral: e.lateral,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlFile {
    pub waypoint_threshold_ft: f64,
    pub steering_damping_rate_per_s: f64,
    pub max_steer_deg: f64,
    pub path_natural_frequency_rad_s: f64,
    pub path_damping_ratio: f64,
    pub curvature_preview_s: f64,
    pub yaw_rate_gain_s: f64,
    pub yaw_rate_integral_gain: f64,
    pub yaw_integral_limit_rad: f64,
    pub reaction_delay_s: f64,
    pub normal_brake_margin_mph: f64,
    pub curve_brake_margin_mph: f64,
    pub hold_throttle: f64,
    pub brake_gain_per_mph: f64,
    pub entry_brake: f64,
}

impl Default for ControlFile {
    fn default() -> Self {
        Self::from_params(&ControlParams::default())
    }
}

impl ControlFile {
    pub fn to_params(&self) -> ControlParams {
        ControlParams {
            waypoint_threshold_distance: ft_to_m(self.waypoint_threshold_ft),
            steering_damping_rate: self.steering_damping_rate_per_s,
            max_steer_angle: self.max_steer_deg.to_radians(),
            path_natural_frequency: self.path_natural_frequency_rad_s,
            path_damping_ratio: self.path_damping_ratio,
            curvature_preview_time: self.curvature_preview_s,
            yaw_rate_gain: self.yaw_rate_gain_s,
            yaw_rate_integral_gain: self.yaw_rate_integral_gain,
            yaw_integral_limit: self.yaw_integral_limit_rad,
            reaction_delay: self.reaction_delay_s,
            normal_brake_margin: mph_to_mps(self.normal_brake_margin_mph),
            curve_brake_margin: mph_to_mps(self.curve_brake_margin_mph),
            hold_throttle: self.hold_throttle,
            brake_gain: self.brake_gain_per_mph / mph_to_mps(1.0),
            entry_brake: self.entry_brake,
        }
    }

    pub fn from_params(p: &ControlParams) -> Self {
        ControlFile {
            waypoint_threshold_ft: round6(m_to_ft(p.waypoint_threshold_distance)),
            steering_damping_rate_per_s: p.steering_damping_rate,
            max_steer_deg: round6(p.max_steer_angle.to_degrees()),
            path_natural_frequency_rad_s: p.path_natural_frequency,
            path_damping_ratio: p.path_damping_ratio,
            curvature_preview_s: p.curvature_preview_time,
            yaw_rate_gain_s: p.yaw_rate_gain,
            yaw_rate_integral_gain: p.yaw_rate_integral_gain,
            yaw_integral_limit_rad: p.yaw_integral_limit,
            reaction_delay_s: p.reaction_delay,
            normal_brake_margin_mph: round6(mps_to_mph(p.normal_brake_margin)),
            curve_brake_margin_mph: round6(mps_to_mph(p.curve_brake_margin)),
            hold_throttle: p.hold_throttle,
            brake_gain_per_mph: round6(p.brake_gain * mph_to_mps(1.0)),
            entry_brake: p.entry_brake,
        }
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriteriaFile {
    pub max_lateral_offset_ft: Option<f64>,
    pub lane_edge_tolerance_ft: f64,
    pub wheel_lift_pair_duration_s: f64,
    pub max_roll_deg: f64,
    pub max_heading_error_deg: f64,
    pub stall_speed_mph: f64,
    pub time_limit_s: Option<f64>,
}

impl Default for CriteriaFile {
    fn default() -> Self {
        let c = SafetyCriteria::default();
        CriteriaFile {
            max_lateral_offset_ft: c.max_lateral_offset.map(m_to_ft),
            lane_edge_tolerance_ft: m_to_ft(c.lane_edge_tolerance),
            wheel_lift_pair_duration_s: c.wheel_lift_pair_duration,
            max_roll_deg: round6(c.max_roll.to_degrees()),
            max_heading_error_deg: round6(c.max_heading_error.to_degrees()),
            stall_speed_mph: round6(mps_to_mph(c.stall_speed)),
            time_limit_s: c.time_limit,
        }
    }
}

impl CriteriaFile {
    pub fn to_criteria(&self) -> SafetyCriteria {
        SafetyCriteria {
            max_lateral_offset: self.max_lateral_offset_ft.map(ft_to_m),
            lane_edge_tolerance: ft_to_m(self.lane_edge_tolerance_ft),
            wheel_lift_pair_duration: self.wheel_lift_pair_duration_s,
            max_roll: self.max_roll_deg.to_radians(),
            max_heading_error: self.max_heading_error_deg.to_radians(),
            stall_speed: mph_to_mps(self.stall_speed_mph),
            time_limit: self.time_limit_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimFile {
    pub dt_s: f64,
    pub integrator: Integrator,
    pub settle_time_s: f64,
    pub log_rate_hz: f64,
    pub full_rate_log: bool,
}

impl Default for SimFile {
    fn default() -> Self {
        let s = SimParams::default();
        SimFile {
            dt_s: s.step.dt,
            integrator: s.step.integrator,
            settle_time_s: s.settle_time,
            log_rate_hz: s.log_rate,
            full_rate_log: s.full_rate_log,
        }
    }
}

impl SimFile {
    pub fn to_params(&self) -> SimParams {
        SimParams {
            step: StepConfig {
                dt: self.dt_s,
                integrator: self.integrator,
            },
            settle_time: self.settle_time_s,
            log_rate: self.log_rate_hz,
            full_rate_log: self.full_rate_log,
        }
    }
}

/// Top-level scenario file. Paths are relative to the file's directory;
/// a bare name of a shipped config falls back to the embedded copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub curve: String,
    pub vehicles: Vec<String>,
    pub conditions: Vec<Condition>,
    pub surfaces: String,
    pub aashto_table: String,
    pub output_dir: String,
    /// Optional waypoint CSV (as written by `route-export`) that replaces the
    /// generated route.
    #[serde(default)]
    pub route_file: Option<String>,
    /// Reserved; runs are always deterministic.
    #[serde(default = "yes")]
    pub deterministic: bool,
    #[serde(default)]
    pub control: ControlFile,
    #[serde(default)]
    pub criteria: CriteriaFile,
    #[serde(default)]
    pub search: SearchParams,
    #[serde(default)]
    pub sim: SimFile,
}

fn yes() -> bool {
    true
}

/// A fully resolved scenario in SI units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub source: String,
    pub curve: CurveSpec,
    pub route: RouteFile,
    /// Waypoints read from `route_file`, used instead of generating them.
    pub route_override: Option<Route>,
    pub vehicles: Vec<VehicleSpec>,
    pub conditions: Vec<SurfaceCondition>,
    pub aashto: AashtoFrictionTable,
    pub output_dir: PathBuf,
    pub control: ControlParams,
    pub criteria: SafetyCriteria,
    pub search: SearchParams,
    pub sim: SimParams,
    /// Concatenated text of every file that went into the scenario, in load
    /// order, for hashing.
    pub canonical_text: String,
}

fn config_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| config_err(path, e.to_string()))
}

/// Reads `name` relative to `base`, or the embedded copy when `base` is
/// `None` or the file is absent and `name` is a shipped config.
fn read(base: Option<&Path>, name: &str) -> Result<(PathBuf, String)> {
    match base {
        Some(dir) => {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(t) => Ok((path, t)),
                Err(source) => Err(Error::Io { path, source }),
            }
        }
        None => builtin::file(name)
            .map(|t| (PathBuf::from(format!("<builtin>/{name}")), t.to_string()))
            .ok_or_else(|| config_err(Path::new(name), "not a built-in config file")),
    }
}

pub fn load_curve(path: &Path, text: &str) -> Result<CurveFile> {
    let c: CurveFile = parse_toml(path, text)?;
    c.to_spec().validate().map_err(|e| config_err(path, e.to_string()))?;
    Ok(c)
}

pub fn load_vehicle(path: &Path, text: &str) -> Result<VehicleSpec> {
    let v: VehicleFile = parse_toml(path, text)?;
    v.to_spec().map_err(|e| config_err(path, e.to_string()))
}

pub fn load_surfaces(path: &Path, text: &str) -> Result<SurfacesFile> {
    let s: SurfacesFile = parse_toml(path, text)?;
    for c in [Condition::Dry, Condition::Wet] {
        s.condition(c).validate().map_err(|e| config_err(path, e.to_string()))?;
    }
    Ok(s)
}

impl Scenario {
    /// The shipped default scenario.
    pub fn builtin() -> Result<Scenario> {
        Self::resolve(Path::new("<builtin>/scenario.toml"), builtin::SCENARIO, None)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::resolve(path, &text, Some(&dir))
    }

    fn resolve(path: &Path, text: &str, dir: Option<&Path>) -> Result<Scenario> {
        let file: ScenarioFile = parse_toml(path, text)?;
        let mut canonical = format!("# {}\n{text}", display_name(path));

        let mut load = |name: &str| -> Result<(PathBuf, String)> {
            let (p, t) = read(dir, name)?;
            canonical.push_str(&format!("\n# {}\n{t}", display_name(&p)));
            Ok((p, t))
        };
        if file.vehicles.is_empty() {
            return Err(config_err(path, "vehicles: at least one vehicle file is required"));
        }
        if file.conditions.is_empty() {
            return Err(config_err(path, "conditions: at least one of dry, wet is required"));
        }
        let (cp, ct) = load(&file.curve)?;
        let curve = load_curve(&cp, &ct)?;
        let mut vehicles = Vec::new();
        for v in &file.vehicles {
            let (vp, vt) = load(v)?;
            vehicles.push(load_vehicle(&vp, &vt)?);
        }
        let (sp, st) = load(&file.surfaces)?;
        let surfaces = load_surfaces(&sp, &st)?;
        let (ap, at) = load(&file.aashto_table)?;
        let aashto = AashtoFrictionTable::from_csv(&at).map_err(|e| config_err(&ap, e.to_string()))?;

        let route_override = match &file.route_file {
            Some(name) => {
                let (rp, rt) = load(name)?;
                Some(crate::report::read_route_csv(&rt).map_err(|e| config_err(&rp, e.to_string()))?)
            }
            None => None,
        };

        let control = file.control.to_params();
        control.validate().map_err(|e| config_err(path, format!("[control] {e}")))?;
        let criteria = file.criteria.to_criteria();
        criteria.validate().map_err(|e| config_err(path, format!("[criteria] {e}")))?;
        file.search.validate().map_err(|e| config_err(path, format!("[search] {e}")))?;
        let sim = file.sim.to_params();
        sim.validate().map_err(|e| config_err(path, format!("[sim] {e}")))?;

        let output_dir = match dir {
            Some(d) => d.join(&file.output_dir),
            None => PathBuf::from(&file.output_dir),
        };
        Ok(Scenario {
            source: display_name(path),
            curve: curve.to_spec(),
            route: curve.route,
            route_override,
            vehicles,
            conditions: file.conditions.iter().map(|&c| surfaces.condition(c)).collect(),
            aashto,
            output_dir,
            control,
            criteria,
            search: file.search,
            sim,
            canonical_text: canonical,
        })
    }

    /// sha256 of every input file, hex encoded.
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.canonical_text.as_bytes()))
    }

    pub fn road(&self) -> Result<RoadModel> {
        build_road(&self.curve)
    }

    /// The imported route if one was given, else the generated one.
    pub fn build_route(&self, road: &RoadModel) -> Result<Route> {
        match &self.route_override {
            Some(r) => Ok(r.clone()),
            None => generate_route(road, self.route.lane, ft_to_m(self.route.offset_ft), ft_to_m(self.route.spacing_ft)),
        }
    }

    pub fn vehicle(&self, name: &str) -> Option<&VehicleSpec> {
        self.vehicles.iter().find(|v| v.name.eq_ignore_ascii_case(name))
    }

    pub fn condition(&self, c: Condition) -> Option<&SurfaceCondition> {
        self.conditions.iter().find(|s| s.name == c)
    }
}

fn display_name(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// The effective defaults of every tunable section, as TOML.
pub fn dump_defaults() -> String {
    #[derive(Serialize)]
    struct Defaults {
        control: ControlFile,
        criteria: CriteriaFile,
        search: SearchParams,
        sim: SimFile,
    }
    toml::to_string_pretty(&Defaults {
        control: ControlFile::default(),
        criteria: CriteriaFile::default(),
        search: SearchParams::default(),
        sim: SimFile::default(),
    })
    .expect("defaults serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builtin_scenario_resolves() {
        let s = Scenario::builtin().unwrap();
        assert_eq!(s.vehicles.len(), 3);
        assert_eq!(s.conditions.len(), 2);
        assert_eq!(s.curve, CurveSpec::default());
        assert_eq!(s.route.lane, Lane::Outer);
        assert_relative_eq!(s.route.offset_ft, 1.25);
        assert_eq!(s.control, ControlParams::default());
        assert_eq!(s.criteria, SafetyCriteria::default());
        assert_eq!(s.config_hash().len(), 64);
    }

    #[test]
    fn table_one_vehicles_verbatim() {
        let sedan: VehicleFile = toml::from_str(builtin::SEDAN).unwrap();
        let suv: VehicleFile = toml::from_str(builtin::SUV).unwrap();
        let pickup: VehicleFile = toml::from_str(builtin::PICKUP).unwrap();
        let rows = [
            (&sedan, 3286.0, 111.4, 193.8, 73.0, 57.7, 22.0, Drivetrain::Fwd),
            (&suv, 5864.0, 130.0, 224.4, 80.5, 74.4, 32.0, Drivetrain::Rwd),
            (&pickup, 5090.0, 145.0, 231.9, 79.9, 77.2, 33.0, Drivetrain::Awd),
        ];
        for (v, m, wb, l, w, h, cg, d) in rows {
            assert_eq!(
                (v.mass_lb, v.wheelbase_in, v.overall_length_in, v.overall_width_in, v.overall_height_in, v.cg_height_in),
                (m, wb, l, w, h, cg)
            );
            assert_eq!(v.drive_type, d);
            assert_eq!(v.axles, 2);
            v.to_spec().unwrap();
        }
        assert!(builtin::PICKUP.contains("\"4WD\""));
    }

    #[test]
    fn table_one_surfaces_verbatim() {
        let s: SurfacesFile = toml::from_str(builtin::SURFACES).unwrap();
        assert_eq!(s.dry.longitudinal, FrictionCurve::DRY);
        assert_eq!(s.dry.lateral, FrictionCurve::DRY);
        assert_eq!(s.wet.longitudinal, FrictionCurve::WET);
        assert_eq!(s.wet.lateral, FrictionCurve::WET);
    }

    #[test]
    fn unknown_field_names_line() {
        let bad = builtin::SEDAN.replace("mass_lb", "mass_lbs");
        let err = load_vehicle(Path::new("sedan.toml"), &bad).unwrap_err().to_string();
        assert!(err.contains("sedan.toml"), "{err}");
        assert!(err.contains("mass_lbs") && err.contains("line"), "{err}");
    }

    #[test]
    fn missing_file_names_path() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let scen = builtin::SCENARIO.replace("\"sedan.toml\"", "\"nope.toml\"");
        std::fs::write(dir.join("scenario.toml"), scen).unwrap();
        for f in ["curve.toml", "suv.toml", "pickup.toml", "surfaces.toml", "aashto_fmax.csv"] {
            std::fs::write(dir.join(f), builtin::file(f).unwrap()).unwrap();
        }
        let err = Scenario::load(&dir.join("scenario.toml")).unwrap_err().to_string();
        assert!(err.contains("nope.toml"), "{err}");
    }

    #[test]
    fn defaults_dump_round_trips() {
        let text = dump_defaults();
        #[derive(Deserialize)]
        struct D {
            control: ControlFile,
            criteria: CriteriaFile,
        }
        let d: D = toml::from_str(&text).unwrap();
        assert_eq!(d.control.to_params().reaction_delay, 1.21);
        let c = d.control.to_params();
        let p = ControlParams::default();
        assert_relative_eq!(c.waypoint_threshold_distance, p.waypoint_threshold_distance, max_relative = 1e-9);
        assert_relative_eq!(d.criteria.to_criteria().max_roll, 30f64.to_radians(), max_relative = 1e-9);
    }

    #[test]
    fn curve_round_trip() {
        let c = CurveFile::from_spec(&CurveSpec::default(), RouteFile::default());
        let text = toml::to_string(&c).unwrap();
        let back: CurveFile = toml::from_str(&text).unwrap();
        let spec = back.to_spec();
        assert_relative_eq!(spec.radius, CurveSpec::default().radius, max_relative = 1e-12);
        assert_eq!(spec.runoff_length, TransitionLength::Auto);
    }
}
