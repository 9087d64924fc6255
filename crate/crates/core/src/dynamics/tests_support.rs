use crate::units::{INCH, LB, MPH};

use super::{Drivetrain, EngineSpec, TransmissionSpec, VehicleBuilder, VehicleSpec};

pub(crate) fn sedan_builder() -> VehicleBuilder {
    VehicleBuilder {
        name: "sedan".into(),
        mass: 3286.0 * LB,
        wheelbase: 111.4 * INCH,
        overall_length: 193.8 * INCH,
        overall_width: 73.0 * INCH,
        overall_height: 57.7 * INCH,
        cg_height: 22.0 * INCH,
        drivetrain: Drivetrain::Fwd,
        engine: EngineSpec {
            torque_curve: vec![(1000.0, 150.0), (2000.0, 250.0), (4000.0, 250.0), (5700.0, 205.0), (6500.0, 170.0)],
            idle_rpm: 800.0,
            redline_rpm: 6500.0,
        },
        transmission: TransmissionSpec {
            gear_ratios: vec![4.48, 2.87, 1.84, 1.39, 1.0, 0.75],
            final_drive_ratio: 3.53,
            shift_up_speeds: [20.0, 35.0, 50.0, 65.0, 85.0].map(|v| v * MPH).to_vec(),
            driveline_efficiency: 0.9,
        },
        wheel_radius: 0.33,
        track_width: None,
        cg_longitudinal_position: None,
        inertia: None,
        aero_drag_coefficient_area: None,
        suspension_rest_length: None,
        ride_frequency: None,
        damping_ratio: None,
        wheel_inertia: None,
        brake_capacity: None,
    }
}

pub(crate) fn sedan_like() -> VehicleSpec {
    sedan_builder().build().unwrap()
}
