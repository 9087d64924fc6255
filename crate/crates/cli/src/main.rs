use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use curvespeed::config::{dump_defaults, Scenario as Config};
use curvespeed::report::{
    read_observed_csv, route_csv, run_summary_json, sweep_outputs, trajectory_csv, AashtoSummary, Manifest, RunSummary,
};
use curvespeed::search::{
    aashto_design_speed, run_searches, simulate_run, AashtoFrictionTable, Scenario, SpeedSearchResult,
};
use curvespeed::tire::Condition;
use curvespeed::units::{m_to_ft, mph_to_mps};

/// Maximum safe curve speed by vehicle-dynamics simulation, compared with
/// the AASHTO design speed. All inputs and outputs are in imperial units.
#[derive(Debug, Parser)]
#[command(name = "curvespeed", version)]
struct Cli {
    /// Scenario file; the built-in default scenario when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (or file for route-export).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Overwrite a non-empty output directory.
    #[arg(long, global = true)]
    force: bool,

    /// Print the default control, criteria, search and sim sections and exit.
    #[arg(long)]
    dump_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one closed-loop simulation and write its trajectory and outcome.
    Simulate {
        #[arg(long, default_value = "sedan")]
        vehicle: String,
        #[arg(long, default_value = "dry")]
        condition: Condition,
        /// Curve speed, mph.
        #[arg(long)]
        v_curve: f64,
        /// Approach speed, mph; defaults to v_curve plus the search offset.
        #[arg(long)]
        v_base: Option<f64>,
    },
    /// Find the maximum safe speed for every vehicle and condition.
    Sweep {
        /// Restrict to these vehicles (repeatable).
        #[arg(long)]
        vehicle: Vec<String>,
        /// Restrict to these conditions (repeatable).
        #[arg(long)]
        condition: Vec<Condition>,
        /// CSV with columns vehicle, condition, observed_max_mph.
        #[arg(long, value_name = "PATH")]
        observed: Option<PathBuf>,
    },
    /// AASHTO design speed for a radius and superelevation.
    Aashto {
        /// ft; defaults to the scenario curve.
        #[arg(long)]
        radius: Option<f64>,
        /// Superelevation rate; defaults to the scenario curve.
        #[arg(long)]
        e: Option<f64>,
        /// Use a constant side-friction factor instead of the table.
        #[arg(long, conflicts_with = "table")]
        f_const: Option<f64>,
        /// Side-friction table CSV; defaults to the scenario table.
        #[arg(long, value_name = "PATH")]
        table: Option<PathBuf>,
        /// Print only the value rounded down to a multiple of 5 mph.
        #[arg(long)]
        round: bool,
    },
    /// Write the waypoint route as CSV (stdout unless --out is given).
    RouteExport,
}

/// Exit codes: 0 success or safe, 1 usage or config error, 2 unsafe
/// verdict, 3 internal fault.
enum Failure {
    Usage(anyhow::Error),
    Unsafe,
    Fault(anyhow::Error),
}

impl From<curvespeed::Error> for Failure {
    fn from(e: curvespeed::Error) -> Self {
        use curvespeed::Error as E;
        match e {
            E::Invalid { .. } | E::Config { .. } | E::Io { .. } | E::Csv(_) | E::Json(_) => Failure::Usage(e.into()),
            E::NonFinite { .. } | E::Search(_) | E::NoConvergence { .. } => Failure::Fault(e.into()),
        }
    }
}

fn fault(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Fault(e.into())
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Unsafe) => ExitCode::from(2),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Fault(e)) => {
            eprintln!("fault: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.dump_config {
        print!("{}", dump_defaults());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(usage(anyhow!("no command given; see --help")));
    };
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::builtin()?,
    };
    let out = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    match command {
        Command::Simulate {
            vehicle,
            condition,
            v_curve,
            v_base,
        } => simulate(&config, &out, cli.force, &vehicle, condition, v_curve, v_base),
        Command::Sweep {
            vehicle,
            condition,
            observed,
        } => sweep(&config, &out, cli.force, &vehicle, &condition, observed.as_deref()),
        Command::Aashto {
            radius,
            e,
            f_const,
            table,
            round,
        } => aashto(&config, radius, e, f_const, table.as_deref(), round),
        Command::RouteExport => route_export(&config, cli.out.as_deref(), cli.force),
    }
}

/// Creates `dir`, refusing one that already has entries unless `force`.
fn prepare_dir(dir: &Path, force: bool) -> Result<(), Failure> {
    if dir.exists() {
        let non_empty = std::fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))
            .map_err(usage)?
            .next()
            .is_some();
        if non_empty && !force {
            return Err(usage(anyhow!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(fault)
}

fn write(dir: &Path, name: &str, contents: &str, manifest: Option<&mut Manifest>) -> Result<(), Failure> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))
            .map_err(fault)?;
    }
    std::fs::write(&path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(fault)?;
    if let Some(m) = manifest {
        m.add(name, contents.as_bytes());
    }
    Ok(())
}

fn conditions_of(config: &Config, c: Condition) -> Result<&curvespeed::tire::SurfaceCondition, Failure> {
    config
        .condition(c)
        .ok_or_else(|| usage(anyhow!("condition {c} is not enabled in {}", config.source)))
}

fn simulate(
    config: &Config,
    out: &Path,
    force: bool,
    vehicle: &str,
    condition: Condition,
    v_curve: f64,
    v_base: Option<f64>,
) -> Result<(), Failure> {
    let spec = config
        .vehicle(vehicle)
        .ok_or_else(|| usage(anyhow!("vehicle {vehicle:?} is not in {}", config.source)))?;
    let surface = conditions_of(config, condition)?;
    let v_base = v_base.unwrap_or(v_curve + config.search.base_offset_mph);
    if !(v_curve > 0.0 && v_base >= v_curve) {
        return Err(usage(anyhow!("need 0 < v_curve <= v_base, got v_curve {v_curve}, v_base {v_base}")));
    }
    let road = config.road()?;
    let route = config.build_route(&road)?;
    let scn = Scenario {
        vehicle: spec,
        road: &road,
        route: &route,
        condition: surface,
        control: &config.control,
        criteria: &config.criteria,
        sim: &config.sim,
    };
    let outcome = simulate_run(&scn, mph_to_mps(v_base), mph_to_mps(v_curve))?;
    let hash = config.config_hash();
    prepare_dir(out, force)?;
    let summary = RunSummary::new(&spec.name, condition.as_str(), &outcome);
    write(out, "trajectory.csv", &trajectory_csv(&outcome.trajectory, &hash)?, None)?;
    write(out, "outcome.json", &run_summary_json(&summary, &hash)?, None)?;
    print!("{} {} v_base {v_base} mph v_curve {v_curve} mph: {}", spec.name, condition, outcome.verdict);
    if let (Some(t), Some(s)) = (outcome.failure_time, outcome.failure_station) {
        print!(" at t = {t:.2} s, station {:.1} ft", m_to_ft(s));
    }
    if let Some(d) = &outcome.detail {
        print!(" ({d})");
    }
    println!();
    if outcome.verdict.is_safe() {
        Ok(())
    } else {
        Err(Failure::Unsafe)
    }
}

fn sweep(
    config: &Config,
    out: &Path,
    force: bool,
    vehicles: &[String],
    conditions: &[Condition],
    observed: Option<&Path>,
) -> Result<(), Failure> {
    for v in vehicles {
        if config.vehicle(v).is_none() {
            return Err(usage(anyhow!("vehicle {v:?} is not in {}", config.source)));
        }
    }
    for &c in conditions {
        conditions_of(config, c)?;
    }
    let observed = match observed {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(usage)?;
            Some(read_observed_csv(&text).map_err(|e| usage(anyhow!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let road = config.road()?;
    let route = config.build_route(&road)?;
    let curve = road.spec();
    let radius_ft = m_to_ft(curve.radius);
    let aashto = aashto_design_speed(radius_ft, curve.superelevation_rate, &config.aashto)?;
    let aashto_summary = AashtoSummary::new(
        radius_ft,
        curve.superelevation_rate,
        &aashto,
        config.aashto.source.as_deref().unwrap_or(""),
    );

    let selected = config
        .vehicles
        .iter()
        .filter(|v| vehicles.is_empty() || vehicles.iter().any(|n| n.eq_ignore_ascii_case(&v.name)));
    let mut scenarios = Vec::new();
    for v in selected {
        for s in config
            .conditions
            .iter()
            .filter(|s| conditions.is_empty() || conditions.contains(&s.name))
        {
            scenarios.push(Scenario {
                vehicle: v,
                road: &road,
                route: &route,
                condition: s,
                control: &config.control,
                criteria: &config.criteria,
                sim: &config.sim,
            });
        }
    }
    if scenarios.is_empty() {
        return Err(usage(anyhow!("nothing to sweep")));
    }
    prepare_dir(out, force)?;

    let outcomes = run_searches(&scenarios, &config.search);
    let hash = config.config_hash();
    let mut manifest = Manifest::default();
    let mut results: Vec<SpeedSearchResult> = Vec::new();
    for (scn, outcome) in scenarios.iter().zip(outcomes) {
        let label = format!("{}/{}", scn.vehicle.name, scn.condition.name);
        match outcome {
            Ok(mut r) => {
                r.aashto_design_speed = Some(aashto.speed);
                if let Some(obs) = &observed {
                    r.observed_max_speed = obs
                        .get(&(r.vehicle_class.to_ascii_lowercase(), r.condition.to_ascii_lowercase()))
                        .copied();
                }
                for w in &r.warnings {
                    eprintln!("warning: {label}: {w}");
                }
                results.push(r);
            }
            Err(e) => manifest.faults.push(format!("{label}: {e}")),
        }
    }
    for (name, contents) in sweep_outputs(&results, &aashto_summary, &hash)? {
        write(out, &name, &contents, Some(&mut manifest))?;
    }
    manifest.complete = manifest.faults.is_empty();
    write(out, "MANIFEST", &manifest.render(&hash), None)?;

    println!(
        "AASHTO design speed: {:.2} mph (rounded {} mph)",
        aashto.speed, aashto.rounded
    );
    for r in &results {
        println!(
            "{:<8} {:<4} max safe {:>6} mph, first failure {} mph ({})",
            r.vehicle_class, r.condition, r.max_safe_speed, r.first_failure_speed, r.first_failure_mode
        );
    }
    if manifest.complete {
        Ok(())
    } else {
        Err(fault(anyhow!(
            "{} search(es) faulted; partial results in {}:\n  {}",
            manifest.faults.len(),
            out.display(),
            manifest.faults.join("\n  ")
        )))
    }
}

fn aashto(
    config: &Config,
    radius: Option<f64>,
    e: Option<f64>,
    f_const: Option<f64>,
    table: Option<&Path>,
    round: bool,
) -> Result<(), Failure> {
    let radius = radius.unwrap_or_else(|| m_to_ft(config.curve.radius));
    let e = e.unwrap_or(config.curve.superelevation_rate);
    let table = match (f_const, table) {
        (Some(f), _) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(usage(anyhow!("--f-const must be in (0, 1), got {f}")));
            }
            AashtoFrictionTable::constant(f)
        }
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(usage)?;
            AashtoFrictionTable::from_csv(&text).map_err(|e| usage(anyhow!("{}: {e}", p.display())))?
        }
        (None, None) => config.aashto.clone(),
    };
    let v = aashto_design_speed(radius, e, &table)?;
    if round {
        println!("{}", v.rounded);
    } else {
        println!("{:.2} mph (rounded down to 5 mph: {})", v.speed, v.rounded);
    }
    Ok(())
}

fn route_export(config: &Config, out: Option<&Path>, force: bool) -> Result<(), Failure> {
    let road = config.road()?;
    let route = config.build_route(&road)?;
    let text = route_csv(&route, &config.config_hash())?;
    match out {
        Some(path) => {
            if path.exists() && !force {
                return Err(usage(anyhow!("{} exists; pass --force to overwrite", path.display())));
            }
            std::fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))
                .map_err(fault)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
