//! Acceptance criteria 1-10. Runs as a plain binary so every criterion prints
//! one PASS/FAIL line; exits non-zero if any fails.

use std::time::{Duration, Instant};

use nalgebra::{UnitQuaternion, Vector2, Vector3};

use curvespeed::config::{builtin, Scenario as Config, VehicleFile};
use curvespeed::control::{drive_phase, ControlParams, DriverCommand, Phase};
use curvespeed::dynamics::{
    step, Drivetrain, EngineSpec, Integrator, RigidState, StepConfig, TransmissionSpec, VehicleBuilder, VehicleSpec,
};
use curvespeed::geometry::{build_road, generate_route, CurveSpec, FlatGround, Lane, NoGround, TransitionLength};
use curvespeed::report::{sweep_outputs, AashtoSummary};
use curvespeed::search::{
    aashto_design_speed, find_max_safe_speed, run_searches, AashtoFrictionTable, Scenario, SearchParams,
    SpeedSearchResult,
};
use curvespeed::tire::{evaluate_friction, Condition, FrictionCurve, SurfaceCondition};
use curvespeed::units::{ft_to_m, m_to_ft, mph_to_mps, mps_to_mph, G, MPH};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

// 1. Friction-curve fidelity.
fn friction_curve() -> Outcome {
    let t0 = Instant::now();
    let knots = [
        (FrictionCurve::DRY, 0.40, 1.00),
        (FrictionCurve::DRY, 0.80, 0.50),
        (FrictionCurve::DRY, 1.50, 0.50),
        (FrictionCurve::WET, 0.40, 0.65),
        (FrictionCurve::WET, 0.80, 0.35),
        (FrictionCurve::WET, 2.00, 0.35),
        (FrictionCurve::DRY, 0.0, 0.0),
        (FrictionCurve::WET, 0.0, 0.0),
    ];
    for (c, slip, want) in knots {
        let got = evaluate_friction(&c, slip).map_err(|e| e.to_string())?;
        if got != want {
            return Err(format!("slip {slip}: {got} != {want}"));
        }
    }
    // Largest jump between neighbours on a 10^4-point grid over [0, 1.2],
    // against the steepest slope of the curve times the spacing.
    let n = 10_000;
    let h = 1.2 / n as f64;
    let mut worst = 0.0f64;
    for c in [FrictionCurve::DRY, FrictionCurve::WET] {
        let bound = 3.0 * c.extremum_value / c.extremum_slip * h * 1.000_001;
        let mut prev = evaluate_friction(&c, 0.0).unwrap();
        for i in 1..=n {
            let v = evaluate_friction(&c, i as f64 * h).unwrap();
            worst = worst.max((v - prev).abs() / bound);
            prev = v;
        }
    }
    let elapsed = t0.elapsed();
    check(
        worst <= 1.0 && elapsed < Duration::from_secs(1),
        format!("8 knots exact, max step/bound {worst:.3}, {}", secs(elapsed)),
    )
}

/// Low, square test vehicle for the circle oracles.
fn test_vehicle() -> VehicleSpec {
    VehicleBuilder {
        name: "test".into(),
        mass: 1200.0,
        wheelbase: 2.6,
        overall_length: 4.2,
        overall_width: 1.9,
        overall_height: 1.2,
        cg_height: 0.3,
        drivetrain: Drivetrain::Awd,
        engine: EngineSpec {
            torque_curve: vec![(1000.0, 300.0), (6500.0, 300.0)],
            idle_rpm: 800.0,
            redline_rpm: 6500.0,
        },
        transmission: TransmissionSpec {
            gear_ratios: vec![3.5, 2.2, 1.5, 1.1, 0.85],
            final_drive_ratio: 3.7,
            shift_up_speeds: vec![10.0, 17.0, 25.0, 33.0],
            driveline_efficiency: 0.9,
        },
        wheel_radius: 0.32,
        track_width: Some(1.7),
        cg_longitudinal_position: None,
        inertia: None,
        aero_drag_coefficient_area: Some(0.0),
        suspension_rest_length: None,
        ride_frequency: None,
        damping_ratio: None,
        wheel_inertia: None,
        brake_capacity: None,
    }
    .build()
    .expect("test vehicle")
}

fn circle_search(e: f64, mu: f64) -> Result<(f64, Duration), String> {
    let spec = CurveSpec {
        radius: 100.0,
        arc_length: 250.0,
        superelevation_rate: e,
        normal_crown_slope: 0.0,
        approach_tangent_length: 200.0,
        departure_tangent_length: 60.0,
        runoff_length: TransitionLength::Fixed(60.0),
        runout_length: TransitionLength::Fixed(10.0),
        ..CurveSpec::default()
    };
    let road = build_road(&spec).map_err(|e| e.to_string())?;
    let route = generate_route(&road, Lane::Outer, 0.0, ft_to_m(10.0)).map_err(|e| e.to_string())?;
    let vehicle = test_vehicle();
    let surface = SurfaceCondition {
        name: Condition::Dry,
        longitudinal: FrictionCurve::constant(mu, 0.1),
        lateral: FrictionCurve::constant(mu, 0.1),
    };
    let config = Config::builtin().map_err(|e| e.to_string())?;
    let scn = Scenario {
        vehicle: &vehicle,
        road: &road,
        route: &route,
        condition: &surface,
        control: &config.control,
        criteria: &config.criteria,
        sim: &config.sim,
    };
    let params = SearchParams {
        start_mph: 30.0,
        increment_mph: 1.0,
        ..SearchParams::default()
    };
    let t0 = Instant::now();
    let r = find_max_safe_speed(&scn, &params).map_err(|e| e.to_string())?;
    Ok((mph_to_mps(r.max_safe_speed), t0.elapsed()))
}

// 2. Skidpad.
fn skidpad() -> Outcome {
    let mu = 0.8;
    let (v, t) = circle_search(0.0, mu)?;
    let want = (mu * G * 100.0).sqrt();
    let err = (v - want) / want;
    check(
        err.abs() <= 0.10 && t < Duration::from_secs(60),
        format!("{v:.2} m/s vs {want:.2} m/s ({:+.1}%), {}", err * 100.0, secs(t)),
    )
}

// 3. Banked turn.
fn banked() -> Outcome {
    let (mu, e) = (0.8, 0.078);
    let (v, t) = circle_search(e, mu)?;
    let want = (G * 100.0 * (e + mu) / (1.0 - e * mu)).sqrt();
    let err = (v - want) / want;
    check(err.abs() <= 0.10, format!("{v:.2} m/s vs {want:.2} m/s ({:+.1}%), {}", err * 100.0, secs(t)))
}

// 4. AASHTO solver.
fn aashto() -> Outcome {
    let table = AashtoFrictionTable::green_book();
    let v = aashto_design_speed(712.0, 0.078, &table).map_err(|e| e.to_string())?;
    // Independent scan: the speed in 0.01 mph steps where the residual of
    // v = sqrt(15 R (e + f(v))) changes sign.
    let mut scan = None;
    let mut prev = f64::NAN;
    for i in 1..=10_000 {
        let s = i as f64 * 0.01;
        let res = s - (15.0 * 712.0 * (0.078 + table.f_max(s))).sqrt();
        if prev < 0.0 && res >= 0.0 {
            scan = Some(s);
            break;
        }
        prev = res;
    }
    let scan = scan.ok_or("scan found no crossing")?;
    let c = aashto_design_speed(500.0, 0.0, &AashtoFrictionTable::constant(0.15)).map_err(|e| e.to_string())?;
    let closed = (15.0f64 * 500.0 * 0.15).sqrt();
    check(
        (v.speed - scan).abs() <= 0.02 && (v.speed - 48.57).abs() <= 0.02 && v.rounded == 45.0 && c.speed == closed,
        format!(
            "fixed point {:.3} mph, scan {scan:.2} mph, rounded {}; constant table {} == {closed}",
            v.speed, v.rounded, c.speed
        ),
    )
}

fn full_sweep(config: &Config) -> Result<(Vec<SpeedSearchResult>, AashtoSummary, Duration), String> {
    let road = config.road().map_err(|e| e.to_string())?;
    let route = config.build_route(&road).map_err(|e| e.to_string())?;
    let mut scenarios = Vec::new();
    for v in &config.vehicles {
        for c in &config.conditions {
            scenarios.push(Scenario {
                vehicle: v,
                road: &road,
                route: &route,
                condition: c,
                control: &config.control,
                criteria: &config.criteria,
                sim: &config.sim,
            });
        }
    }
    let t0 = Instant::now();
    let radius_ft = m_to_ft(config.curve.radius);
    let a = aashto_design_speed(radius_ft, config.curve.superelevation_rate, &config.aashto).map_err(|e| e.to_string())?;
    let mut results = Vec::new();
    for r in run_searches(&scenarios, &config.search) {
        let mut r = r.map_err(|e| e.to_string())?;
        r.aashto_design_speed = Some(a.speed);
        results.push(r);
    }
    let summary = AashtoSummary::new(radius_ft, config.curve.superelevation_rate, &a, config.aashto.source.as_deref().unwrap_or(""));
    Ok((results, summary, t0.elapsed()))
}

// 5. Orderings over the default sweep.
fn orderings(config: &Config, sweep: &(Vec<SpeedSearchResult>, AashtoSummary, Duration)) -> Outcome {
    let (results, aashto, t) = sweep;
    let get = |v: &str, c: &str| {
        results
            .iter()
            .find(|r| r.vehicle_class == v && r.condition == c)
            .map(|r| r.max_safe_speed)
            .ok_or(format!("missing {v}/{c}"))
    };
    let mut ok = *t < Duration::from_secs(600);
    let mut parts = Vec::new();
    for v in &config.vehicles {
        let (dry, wet) = (get(&v.name, "dry")?, get(&v.name, "wet")?);
        ok &= wet < dry && dry > aashto.design_speed_mph;
        parts.push(format!("{} dry {dry} wet {wet}", v.name));
    }
    check(
        ok,
        format!("{}; AASHTO {:.2} mph; sweep {}", parts.join(", "), aashto.design_speed_mph, secs(*t)),
    )
}

// 6. Phase controller truth table.
fn truth_table() -> Outcome {
    let p = ControlParams::default();
    let (vb, vc) = (mph_to_mps(60.0), mph_to_mps(55.0));
    let dt = 0.002;
    let tau = 1.21;
    let mut cases = 0usize;
    for phase in Phase::ALL {
        for vi in 0..=800 {
            // 45 to 85 mph in 0.05 mph steps.
            let v = mph_to_mps(45.0 + 0.05 * vi as f64);
            for ti in 0..=1000 {
                let t = ti as f64 * 0.003;
                let (th, br) = drive_phase(v, phase, t, vb, vc, &p);
                let (want_th, brakes) = match phase {
                    Phase::NormalDriving => (if v < vb { 1.0 } else { 0.0 }, v > vb + 2.0 * MPH),
                    Phase::CurveEntry => (0.0, t > tau && v > vc),
                    Phase::FullSuperelevation => (if v < vc { 0.1 } else { 0.0 }, v > vc + 1.0 * MPH),
                    Phase::CurveExit => (0.1, false),
                    Phase::PostCurveAcceleration => (if v < vb { 1.0 } else { 0.0 }, false),
                };
                if th != want_th || (br > 0.0) != brakes || !(0.0..=1.0).contains(&br) {
                    return Err(format!("{phase} v {:.2} mph t {t:.3}: got ({th}, {br})", mps_to_mph(v)));
                }
                cases += 1;
            }
        }
    }
    // Braking onset under a fixed-step clock.
    let mut t = 0.0;
    let onset = loop {
        if drive_phase(vb, Phase::CurveEntry, t, vb, vc, &p).1 > 0.0 {
            break t;
        }
        t += dt;
    };
    check(
        (onset - tau).abs() <= dt + 1e-12,
        format!("{cases} grid cases match; braking onset at {onset:.3} s"),
    )
}

// 7. Determinism.
fn determinism(config: &Config, first: &(Vec<SpeedSearchResult>, AashtoSummary, Duration)) -> Outcome {
    let hash = config.config_hash();
    let a = sweep_outputs(&first.0, &first.1, &hash).map_err(|e| e.to_string())?;
    let second = full_sweep(config)?;
    let b = sweep_outputs(&second.0, &second.1, &hash).map_err(|e| e.to_string())?;
    let bytes: usize = a.iter().map(|(_, c)| c.len()).sum();
    check(a == b, format!("{} report files, {bytes} bytes, identical across two sweeps", a.len()))
}

// 8. Integrator order on a contact-free tumbling body.
fn integrator_order() -> Outcome {
    let spec = test_vehicle();
    let surface = SurfaceCondition::dry();
    let mut s0 = RigidState::on_ground(&spec, &FlatGround { elevation: 0.0 }, Vector2::zeros(), 0.0, 15.0)
        .map_err(|e| e.to_string())?;
    s0.position.z += 100.0;
    s0.orientation = UnitQuaternion::from_euler_angles(0.2, -0.1, 0.3);
    s0.velocity = Vector3::new(15.0, 2.0, 5.0);
    s0.angular_velocity = Vector3::new(1.5, 0.7, -1.0);
    let t_end = 1.0;
    let run = |integrator, dt: f64| -> Result<RigidState, String> {
        let cfg = StepConfig { dt, integrator };
        let mut s = s0.clone();
        let n = (t_end / dt).round() as usize;
        for _ in 0..n {
            s = step(&spec, &s, &DriverCommand::default(), &NoGround, &surface, &cfg).map_err(|e| e.to_string())?;
        }
        Ok(s)
    };
    let err = |a: &RigidState, b: &RigidState| {
        (a.position - b.position).norm() + (a.orientation.to_rotation_matrix().matrix() - b.orientation.to_rotation_matrix().matrix()).norm()
    };
    let reference = run(Integrator::Rk4, 1.0 / 4096.0)?;
    let ratio = |integrator, dt: f64| -> Result<f64, String> {
        Ok(err(&run(integrator, dt)?, &reference) / err(&run(integrator, dt / 2.0)?, &reference))
    };
    let semi = ratio(Integrator::SemiImplicitEuler, 0.01)?;
    let rk4 = ratio(Integrator::Rk4, 0.02)?;
    check(
        (1.7..=2.3).contains(&semi) && (12.0..=20.0).contains(&rk4),
        format!("semi-implicit ratio {semi:.3}, RK4 ratio {rk4:.2}"),
    )
}

// 9. Cross slope.
fn cross_slope() -> Outcome {
    let road = build_road(&CurveSpec::default()).map_err(|e| e.to_string())?;
    let at_pc = road.cross_slope(road.pc_station());
    let t = road.transitions();
    let n = 200;
    let full_exact = (0..=n).all(|i| {
        let s = t.entry_runoff_end + (t.exit_runoff_start - t.entry_runoff_end) * i as f64 / n as f64;
        road.cross_slope(s) == 0.078
    });
    check(
        (at_pc - 0.0624).abs() < 1e-12 && full_exact,
        format!(
            "PC {at_pc:.6}; full segment {:.1}-{:.1} ft reads 0.078 at {} stations",
            m_to_ft(t.entry_runoff_end),
            m_to_ft(t.exit_runoff_start),
            n + 1
        ),
    )
}

// 10. Raising the CG never raises the safe speed.
fn cg_monotonicity(config: &Config) -> Outcome {
    let road = config.road().map_err(|e| e.to_string())?;
    let route = config.build_route(&road).map_err(|e| e.to_string())?;
    let text = builtin::file("sedan.toml").ok_or("no sedan.toml")?;
    let mut file: VehicleFile = toml::from_str(text).map_err(|e| e.to_string())?;
    let surface = config.condition(Condition::Dry).ok_or("no dry condition")?;
    let mut speeds = Vec::new();
    for cg_in in [22.0, 33.0] {
        file.cg_height_in = cg_in;
        let vehicle = file.to_spec().map_err(|e| e.to_string())?;
        let scn = Scenario {
            vehicle: &vehicle,
            road: &road,
            route: &route,
            condition: surface,
            control: &config.control,
            criteria: &config.criteria,
            sim: &config.sim,
        };
        let r = find_max_safe_speed(&scn, &config.search).map_err(|e| e.to_string())?;
        speeds.push((cg_in, r.max_safe_speed, r.first_failure_mode));
    }
    check(
        speeds[1].1 <= speeds[0].1,
        speeds
            .iter()
            .map(|(h, v, m)| format!("cg {h} in: {v} mph (then {m})"))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

fn main() {
    let config = Config::builtin().expect("built-in scenario");
    let mut failed = 0;
    let mut report = |n: usize, name: &str, r: Outcome| {
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n:>2} {tag} {name}: {detail}");
    };
    report(1, "friction curve", friction_curve());
    report(2, "skidpad", skidpad());
    report(3, "banked turn", banked());
    report(4, "AASHTO solver", aashto());
    let sweep = full_sweep(&config);
    match &sweep {
        Ok(s) => {
            report(5, "orderings", orderings(&config, s));
        }
        Err(e) => report(5, "orderings", Err(e.clone())),
    }
    report(6, "phase truth table", truth_table());
    match &sweep {
        Ok(s) => report(7, "determinism", determinism(&config, s)),
        Err(e) => report(7, "determinism", Err(e.clone())),
    }
    report(8, "integrator order", integrator_order());
    report(9, "cross slope", cross_slope());
    report(10, "CG monotonicity", cg_monotonicity(&config));
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
