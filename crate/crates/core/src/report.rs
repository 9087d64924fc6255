//! File formats. Every CSV opens with `#` header lines naming the tool
//! version, schema, config hash and units; every JSON document carries the
//! same facts in a leading `header` object. All numbers are imperial.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::geometry::{Lane, Route};
use crate::search::{AashtoSpeed, ComparisonReport, RunOutcome, SpeedSearchResult, TrajectoryRow};
use crate::units::{ft_to_m, m_to_ft, mps_to_mph, G, LBF};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "curvespeed";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub tool_version: String,
    pub schema: String,
    pub schema_version: u32,
    pub config_sha256: String,
    pub units: String,
}

impl Header {
    pub fn new(schema: &str, config_sha256: &str, units: &str) -> Header {
        Header {
            tool: TOOL_NAME.into(),
            tool_version: TOOL_VERSION.into(),
            schema: schema.into(),
            schema_version: SCHEMA_VERSION,
            config_sha256: config_sha256.into(),
            units: units.into(),
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# {} {}\n# schema: {} v{}\n# config_sha256: {}\n# units: {}\n",
            self.tool, self.tool_version, self.schema, self.schema_version, self.config_sha256, self.units
        )
    }
}

fn csv_body(header: &Header, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| invalid("csv output", e.to_string()))?;
    let body = String::from_utf8(bytes).map_err(|e| invalid("csv output", e.to_string()))?;
    Ok(header.comment_lines() + &body)
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Rounds for display in summaries; raw values stay in the trajectory.
fn r4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

const TRAJECTORY_UNITS: &str = "t s; station, x, y, z, lateral_offset ft; speed mph; u, v, w ft/s; \
p, q, r deg/s; roll, pitch, yaw, steer, slip angles deg; normal force lbf; \
slip ratio, throttle, brake dimensionless; wheels FL, FR, RL, RR";

pub fn trajectory_csv(rows: &[TrajectoryRow], config_sha256: &str) -> Result<String> {
    let header = Header::new("trajectory", config_sha256, TRAJECTORY_UNITS);
    let wheels = ["fl", "fr", "rl", "rr"];
    let mut columns: Vec<String> = [
        "t_s", "station_ft", "x_ft", "y_ft", "z_ft", "speed_mph", "u_ft_s", "v_ft_s", "w_ft_s", "p_deg_s", "q_deg_s",
        "r_deg_s", "roll_deg", "pitch_deg", "yaw_deg", "steer_deg", "throttle", "brake", "phase",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for (prefix, unit) in [("normal_force", "lbf"), ("slip_ratio", ""), ("slip_angle", "deg")] {
        for w in wheels {
            columns.push(if unit.is_empty() { format!("{prefix}_{w}") } else { format!("{prefix}_{w}_{unit}") });
        }
    }
    columns.push("lateral_offset_ft".into());
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let body = rows.iter().map(|r| {
        let mut v = vec![
            num(r.t),
            num(m_to_ft(r.station)),
            num(m_to_ft(r.x)),
            num(m_to_ft(r.y)),
            num(m_to_ft(r.z)),
            num(mps_to_mph(r.speed)),
            num(m_to_ft(r.u)),
            num(m_to_ft(r.v)),
            num(m_to_ft(r.w)),
            num(r.p.to_degrees()),
            num(r.q.to_degrees()),
            num(r.r.to_degrees()),
            num(r.roll.to_degrees()),
            num(r.pitch.to_degrees()),
            num(r.yaw.to_degrees()),
            num(r.steer_angle.to_degrees()),
            num(r.throttle),
            num(r.brake),
            r.phase.as_str().to_string(),
        ];
        v.extend(r.normal_force.iter().map(|&n| num(n / LBF)));
        v.extend(r.longitudinal_slip.iter().map(|&s| num(s)));
        v.extend(r.lateral_slip.iter().map(|&a| num(a.to_degrees())));
        v.push(num(m_to_ft(r.lateral_offset)));
        v
    });
    csv_body(&header, &cols, body)
}

const ROUTE_COLUMNS: [&str; 6] = ["index", "x_ft", "y_ft", "z_ft", "station_ft", "offset_ft"];

pub fn route_csv(route: &Route, config_sha256: &str) -> Result<String> {
    let header = Header::new("route", config_sha256, "ft");
    let mut text = csv_body(
        &header,
        &ROUTE_COLUMNS,
        route.waypoints().iter().zip(route.stations()).enumerate().map(|(i, (p, s))| {
            vec![
                i.to_string(),
                num(m_to_ft(p.x)),
                num(m_to_ft(p.y)),
                num(m_to_ft(p.z)),
                num(m_to_ft(*s)),
                num(m_to_ft(route.centerline_offset())),
            ]
        }),
    )?;
    // Route metadata goes ahead of the column line with the other comments.
    let split = text.find("index,").unwrap_or(0);
    let meta = format!("# lane: {}\n# spacing_ft: {}\n", route.lane(), num(m_to_ft(route.spacing())));
    text.insert_str(split, &meta);
    Ok(text)
}

/// Parses a route written by [`route_csv`]. Lengths read back bit-identical
/// to the generated route.
pub fn read_route_csv(text: &str) -> Result<Route> {
    let mut lane = None;
    let mut spacing = None;
    for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
        if let Some((k, v)) = line.split_once(':') {
            match k.trim() {
                "lane" => lane = Some(v.trim().parse::<Lane>()?),
                "spacing_ft" => {
                    spacing = Some(
                        v.trim()
                            .parse::<f64>()
                            .map_err(|e| invalid("route csv", format!("bad spacing_ft: {e}")))?,
                    )
                }
                _ => {}
            }
        }
    }
    let lane = lane.ok_or_else(|| invalid("route csv", "missing '# lane:' header line"))?;
    let spacing = spacing.ok_or_else(|| invalid("route csv", "missing '# spacing_ft:' header line"))?;

    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    for required in &ROUTE_COLUMNS[..5] {
        if !headers.iter().any(|h| h == *required) {
            return Err(invalid("route csv", format!("missing column {required}")));
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (ix, iy, iz, is, io) = (col("x_ft"), col("y_ft"), col("z_ft"), col("station_ft"), col("offset_ft"));
    let mut waypoints = Vec::new();
    let mut stations = Vec::new();
    let mut offset = None;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = |i: Option<usize>| -> Result<f64> {
            let i = i.expect("column checked above");
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| invalid("route csv", format!("row {}: {e}", line + 1)))
        };
        waypoints.push(Vector3::new(ft_to_m(field(ix)?), ft_to_m(field(iy)?), ft_to_m(field(iz)?)));
        stations.push(ft_to_m(field(is)?));
        if io.is_some() && offset.is_none() {
            offset = Some(ft_to_m(field(io)?));
        }
    }
    Route::from_parts(waypoints, stations, lane, offset.unwrap_or(0.0), ft_to_m(spacing))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub vehicle: String,
    pub condition: String,
    pub v_base_mph: f64,
    pub v_curve_mph: f64,
    pub verdict: String,
    pub safe: bool,
    pub failure_time_s: Option<f64>,
    pub failure_station_ft: Option<f64>,
    pub detail: Option<String>,
    pub peak_lateral_accel_g: f64,
    pub peak_roll_deg: f64,
    pub min_inside_normal_force_lbf: f64,
    pub peak_lateral_offset_ft: f64,
}

impl RunSummary {
    pub fn new(vehicle: &str, condition: &str, o: &RunOutcome) -> RunSummary {
        RunSummary {
            vehicle: vehicle.into(),
            condition: condition.into(),
            v_base_mph: r4(mps_to_mph(o.v_base)),
            v_curve_mph: r4(mps_to_mph(o.v_curve)),
            verdict: o.verdict.as_str().into(),
            safe: o.verdict.is_safe(),
            failure_time_s: o.failure_time.map(r4),
            failure_station_ft: o.failure_station.map(|s| r4(m_to_ft(s))),
            detail: o.detail.clone(),
            peak_lateral_accel_g: r4(o.peak_lateral_accel / G),
            peak_roll_deg: r4(o.peak_roll.to_degrees()),
            min_inside_normal_force_lbf: r4(o.min_inside_normal_force / LBF),
            peak_lateral_offset_ft: r4(m_to_ft(o.peak_lateral_offset)),
        }
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    header: Header,
    #[serde(flatten)]
    body: &'a T,
}

fn json_document<T: Serialize>(schema: &str, config_sha256: &str, units: &str, body: &T) -> Result<String> {
    let doc = Document {
        header: Header::new(schema, config_sha256, units),
        body,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

#[derive(Serialize)]
struct Outcome<'a> {
    outcome: &'a RunSummary,
}

pub fn run_summary_json(summary: &RunSummary, config_sha256: &str) -> Result<String> {
    json_document(
        "run_outcome",
        config_sha256,
        "speed mph; time s; station, offset ft; accel g; angle deg; force lbf",
        &Outcome { outcome: summary },
    )
}

#[derive(Serialize)]
struct Sweep<'a> {
    aashto: AashtoSummary,
    results: &'a [SpeedSearchResult],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AashtoSummary {
    pub radius_ft: f64,
    pub superelevation: f64,
    pub design_speed_mph: f64,
    pub rounded_mph: f64,
    pub iterations: usize,
    pub table_source: String,
}

impl AashtoSummary {
    pub fn new(radius_ft: f64, superelevation: f64, v: &AashtoSpeed, table_source: &str) -> AashtoSummary {
        AashtoSummary {
            radius_ft,
            superelevation,
            design_speed_mph: r4(v.speed),
            rounded_mph: v.rounded,
            iterations: v.iterations,
            table_source: table_source.into(),
        }
    }
}

pub fn search_results_json(results: &[SpeedSearchResult], aashto: &AashtoSummary, config_sha256: &str) -> Result<String> {
    json_document(
        "speed_search",
        config_sha256,
        "speed mph; radius ft",
        &Sweep {
            aashto: aashto.clone(),
            results,
        },
    )
}

pub fn comparison_json(report: &ComparisonReport, config_sha256: &str) -> Result<String> {
    json_document("comparison", config_sha256, "speed mph; deviation percent", report)
}

pub fn comparison_csv(report: &ComparisonReport, config_sha256: &str) -> Result<String> {
    let header = Header::new("comparison", config_sha256, "speed mph; deviation percent; blank = not available");
    csv_body(
        &header,
        &[
            "vehicle",
            "condition",
            "simulated_max_safe_mph",
            "aashto_design_mph",
            "observed_max_mph",
            "simulated_deviation_pct",
            "aashto_deviation_pct",
        ],
        report.rows.iter().map(|r| {
            vec![
                r.vehicle_class.clone(),
                r.condition.clone(),
                num(r.simulated_max_safe_speed),
                opt(r.aashto_design_speed),
                opt(r.observed_max_speed),
                opt(r.simulated_deviation_pct.map(r4)),
                opt(r.aashto_deviation_pct.map(r4)),
            ]
        }),
    )
}

/// Long-format table for grouped bar charts: one row per vehicle,
/// condition and estimate.
pub fn deviation_plot_csv(report: &ComparisonReport, config_sha256: &str) -> Result<String> {
    let header = Header::new("deviation_plot", config_sha256, "speed mph; deviation percent; blank = not available");
    let rows = report.rows.iter().flat_map(|r| {
        [
            ("simulated", Some(r.simulated_max_safe_speed), r.simulated_deviation_pct),
            ("aashto", r.aashto_design_speed, r.aashto_deviation_pct),
            ("observed", r.observed_max_speed, None),
        ]
        .into_iter()
        .filter(|(_, speed, _)| speed.is_some())
        .map(|(estimate, speed, dev)| {
            vec![
                r.vehicle_class.clone(),
                r.condition.clone(),
                estimate.to_string(),
                opt(speed),
                opt(dev.map(r4)),
            ]
        })
        .collect::<Vec<_>>()
    });
    csv_body(&header, &["vehicle", "condition", "estimate", "speed_mph", "deviation_pct"], rows)
}

/// Observed speeds keyed by (vehicle, condition), from a CSV with columns
/// vehicle, condition, observed_max_mph.
pub fn read_observed_csv(text: &str) -> Result<BTreeMap<(String, String), f64>> {
    #[derive(Deserialize)]
    struct Row {
        vehicle: String,
        condition: String,
        observed_max_mph: f64,
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        if !(row.observed_max_mph > 0.0) {
            return Err(invalid("observed speeds", format!("{}/{}: speed must be positive", row.vehicle, row.condition)));
        }
        let key = (row.vehicle.to_ascii_lowercase(), row.condition.to_ascii_lowercase());
        if out.insert(key, row.observed_max_mph).is_some() {
            return Err(invalid("observed speeds", format!("duplicate row for {}/{}", row.vehicle, row.condition)));
        }
    }
    Ok(out)
}

/// Every report file of a sweep except the manifest, as (relative path,
/// contents), in a fixed order: boundary trajectories per result, then the
/// result and comparison documents.
pub fn sweep_outputs(results: &[SpeedSearchResult], aashto: &AashtoSummary, config_sha256: &str) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    for r in results {
        if let Some(b) = &r.boundary {
            let stem = format!("trajectories/{}_{}", r.vehicle_class, r.condition);
            files.push((format!("{stem}_safe_{}mph.csv", r.max_safe_speed), trajectory_csv(&b.0.trajectory, config_sha256)?));
            files.push((
                format!("{stem}_fail_{}mph.csv", r.first_failure_speed),
                trajectory_csv(&b.1.trajectory, config_sha256)?,
            ));
        }
    }
    let report = crate::search::compare_report(results);
    files.push(("results.json".into(), search_results_json(results, aashto, config_sha256)?));
    files.push(("comparison.csv".into(), comparison_csv(&report, config_sha256)?));
    files.push(("comparison.json".into(), comparison_json(&report, config_sha256)?));
    files.push(("deviation_plot.csv".into(), deviation_plot_csv(&report, config_sha256)?));
    Ok(files)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

/// Index of a sweep's output directory. `complete` is false when any search
/// faulted; the faults are listed so partial results stay interpretable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub complete: bool,
    pub files: Vec<ManifestEntry>,
    pub faults: Vec<String>,
}

impl Manifest {
    pub fn add(&mut self, file: &str, contents: &[u8]) {
        self.files.push(ManifestEntry {
            file: file.into(),
            sha256: sha256_hex(contents),
        });
    }

    pub fn render(&self, config_sha256: &str) -> String {
        let mut s = Header::new("manifest", config_sha256, "none").comment_lines();
        let _ = writeln!(s, "status: {}", if self.complete { "complete" } else { "incomplete" });
        for f in &self.files {
            let _ = writeln!(s, "{}  {}", f.sha256, f.file);
        }
        for fault in &self.faults {
            let _ = writeln!(s, "fault: {}", fault.replace('\n', " "));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_road, generate_route, CurveSpec};
    use crate::search::{compare_report, Verdict};

    fn route(offset_ft: f64) -> Route {
        let road = build_road(&CurveSpec::default()).unwrap();
        generate_route(&road, Lane::Outer, ft_to_m(offset_ft), ft_to_m(10.0)).unwrap()
    }

    #[test]
    fn route_round_trip_is_exact() {
        let r = route(1.25);
        let text = route_csv(&r, "abc").unwrap();
        assert!(text.starts_with("# curvespeed "));
        assert!(text.contains("index,x_ft,y_ft,z_ft,station_ft,offset_ft\n"));
        let back = read_route_csv(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn route_offset_column_constant() {
        for off in [1.25, 0.0] {
            let text = route_csv(&route(off), "x").unwrap();
            let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
            for rec in reader.records() {
                assert_eq!(rec.unwrap().get(5).unwrap().parse::<f64>().unwrap(), off);
            }
        }
    }

    #[test]
    fn route_missing_lane_rejected() {
        let text = route_csv(&route(0.0), "x").unwrap().replace("# lane: outer\n", "");
        assert!(read_route_csv(&text).is_err());
    }

    #[test]
    fn observed_parsing() {
        let obs = read_observed_csv("vehicle,condition,observed_max_mph\nSedan, dry, 40\nsuv,wet,35.5\n").unwrap();
        assert_eq!(obs[&("sedan".to_string(), "dry".to_string())], 40.0);
        assert_eq!(obs.len(), 2);
        assert!(read_observed_csv("vehicle,condition,observed_max_mph\nsedan,dry,40\nsedan,dry,41\n").is_err());
        assert!(read_observed_csv("vehicle,condition\nsedan,dry\n").is_err());
    }

    #[test]
    fn comparison_blanks_missing_observed() {
        let mk = |obs| SpeedSearchResult {
            vehicle_class: "sedan".into(),
            condition: "dry".into(),
            max_safe_speed: 38.0,
            increment: 1.0,
            refined_max_safe_speed: None,
            first_failure_speed: 39.0,
            first_failure_mode: Verdict::LaneDeparture,
            aashto_design_speed: Some(40.0),
            observed_max_speed: obs,
            trials: vec![],
            warnings: vec![],
            boundary: None,
        };
        let report = compare_report(&[mk(Some(40.0)), mk(None)]);
        let text = comparison_csv(&report, "h").unwrap();
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines[1], "sedan,dry,38,40,40,-5,0");
        assert_eq!(lines[2], "sedan,dry,38,40,,,");
        let plot = deviation_plot_csv(&report, "h").unwrap();
        assert_eq!(plot.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 + 2);
        let json = comparison_json(&report, "h").unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["header"]["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn manifest_lists_files_and_status() {
        let mut m = Manifest::default();
        m.add("a.csv", b"abc");
        m.faults.push("sedan/wet: start unsafe".into());
        let text = m.render("h");
        assert!(text.contains("status: incomplete"));
        assert!(text.contains("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad  a.csv"));
        assert!(text.contains("fault: sedan/wet"));
    }
}
