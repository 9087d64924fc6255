//! Six-degree-of-freedom sprung-mass vehicle body on four ray-cast wheels.
//!
//! Body frame: origin at the centre of gravity, x forward, y left, z up.
//! Translational velocities (u, v, w) and angular rates (p, q, r) are body
//! frame quantities. Wheels are indexed FL, FR, RL, RR.

mod powertrain;

use std::fmt::Write as _;

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::control::DriverCommand;
use crate::error::{invalid, Error, Result};
use crate::geometry::Ground;
use crate::tire::{update_wheel, ContactKinematics, SurfaceCondition, WheelOutput, WheelSpec, WheelState};
use crate::units::G;

pub use powertrain::{powertrain, Drivetrain, EngineSpec, PowertrainOutput, TransmissionSpec};

/// Sea-level air density, kg/m³.
pub const AIR_DENSITY: f64 = 1.225;
pub const DEFAULT_DT: f64 = 0.002;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub name: String,
    pub mass: f64,
    pub wheelbase: f64,
    pub overall_length: f64,
    pub overall_width: f64,
    pub overall_height: f64,
    pub track_width: f64,
    pub cg_height: f64,
    /// Distance from the front axle to the CG as a fraction of the wheelbase.
    pub cg_longitudinal_position: f64,
    pub drivetrain: Drivetrain,
    /// Principal moments (I_x, I_y, I_z).
    pub inertia: Vector3<f64>,
    pub engine: EngineSpec,
    pub transmission: TransmissionSpec,
    pub wheels: [WheelSpec; 4],
    /// Drag coefficient times frontal area, m².
    pub aero_drag_coefficient_area: f64,
}

/// Solid-cuboid principal moments for the given mass and box dimensions.
pub fn cuboid_inertia(mass: f64, length: f64, width: f64, height: f64) -> Vector3<f64> {
    Vector3::new(
        mass * (width * width + height * height) / 12.0,
        mass * (length * length + height * height) / 12.0,
        mass * (length * length + width * width) / 12.0,
    )
}

impl VehicleSpec {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("mass", self.mass),
            ("wheelbase", self.wheelbase),
            ("overall_length", self.overall_length),
            ("overall_width", self.overall_width),
            ("overall_height", self.overall_height),
            ("track_width", self.track_width),
            ("cg_height", self.cg_height),
        ];
        for (name, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid("vehicle spec", format!("{name} must be > 0, got {v}")));
            }
        }
        if self.wheelbase >= self.overall_length {
            return Err(invalid("vehicle spec", "wheelbase must be shorter than the overall length"));
        }
        if self.track_width > self.overall_width {
            return Err(invalid("vehicle spec", "track wider than the body"));
        }
        if !(0.0..=1.0).contains(&self.cg_longitudinal_position) {
            return Err(invalid("vehicle spec", "cg_longitudinal_position must be in [0, 1]"));
        }
        if self.inertia.iter().any(|&i| !(i > 0.0)) {
            return Err(invalid("vehicle spec", "inertia components must be > 0"));
        }
        if !(self.aero_drag_coefficient_area >= 0.0) {
            return Err(invalid("vehicle spec", "aero drag area must be >= 0"));
        }
        self.engine.validate()?;
        self.transmission.validate()?;
        for w in &self.wheels {
            w.validate()?;
        }
        Ok(())
    }

    /// Front axle → CG distance.
    pub fn cg_to_front(&self) -> f64 {
        self.cg_longitudinal_position * self.wheelbase
    }

    /// CG → rear axle distance.
    pub fn cg_to_rear(&self) -> f64 {
        self.wheelbase - self.cg_to_front()
    }

    /// Static vertical load on each wheel on level ground.
    pub fn static_wheel_loads(&self) -> [f64; 4] {
        let w = self.mass * G;
        let front = 0.5 * w * self.cg_to_rear() / self.wheelbase;
        let rear = 0.5 * w * self.cg_to_front() / self.wheelbase;
        [front, front, rear, rear]
    }

    /// Suspension hard points in the body frame, placed so that the static
    /// loads compress the springs with the CG at `cg_height`.
    pub fn hard_points(&self) -> [Vector3<f64>; 4] {
        let loads = self.static_wheel_loads();
        let a = self.cg_to_front();
        let b = self.cg_to_rear();
        let half = 0.5 * self.track_width;
        let xy = [(a, half), (a, -half), (-b, half), (-b, -half)];
        std::array::from_fn(|i| {
            let w = &self.wheels[i];
            let static_compression = loads[i] / w.spring_rate;
            Vector3::new(
                xy[i].0,
                xy[i].1,
                -self.cg_height + w.radius + w.suspension_rest_length - static_compression,
            )
        })
    }

    /// Body-frame corners of the plan-view footprint at ground level.
    pub fn footprint(&self) -> [Vector3<f64>; 4] {
        let a = self.cg_to_front();
        let overhang = 0.5 * (self.overall_length - self.wheelbase);
        let front = a + overhang;
        let rear = -(self.wheelbase - a) - overhang;
        let half = 0.5 * self.overall_width;
        let z = -self.cg_height;
        [
            Vector3::new(front, half, z),
            Vector3::new(front, -half, z),
            Vector3::new(rear, half, z),
            Vector3::new(rear, -half, z),
        ]
    }

    /// Body-frame point at the front bumper on the centreline.
    pub fn front_point(&self) -> Vector3<f64> {
        Vector3::new(self.cg_to_front() + 0.5 * (self.overall_length - self.wheelbase), 0.0, 0.0)
    }
}

/// Dimensions and powertrain of a vehicle class, with optional overrides for
/// the quantities that have defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleBuilder {
    pub name: String,
    pub mass: f64,
    pub wheelbase: f64,
    pub overall_length: f64,
    pub overall_width: f64,
    pub overall_height: f64,
    pub cg_height: f64,
    pub drivetrain: Drivetrain,
    pub engine: EngineSpec,
    pub transmission: TransmissionSpec,
    pub wheel_radius: f64,
    pub track_width: Option<f64>,
    pub cg_longitudinal_position: Option<f64>,
    pub inertia: Option<Vector3<f64>>,
    pub aero_drag_coefficient_area: Option<f64>,
    pub suspension_rest_length: Option<f64>,
    /// Sprung natural frequency per corner, Hz.
    pub ride_frequency: Option<f64>,
    pub damping_ratio: Option<f64>,
    pub wheel_inertia: Option<f64>,
    /// Brake capacity as a multiple of the axle load under 1 g braking.
    pub brake_capacity: Option<f64>,
}

impl VehicleBuilder {
    pub fn build(&self) -> Result<VehicleSpec> {
        let cg_frac = self.cg_longitudinal_position.unwrap_or(0.5);
        let track = self.track_width.unwrap_or(self.overall_width - 12.0 * crate::units::INCH);
        let inertia = self.inertia.unwrap_or_else(|| {
            cuboid_inertia(self.mass, self.overall_length, self.overall_width, self.overall_height)
        });
        let rest = self.suspension_rest_length.unwrap_or(0.35);
        let freq = self.ride_frequency.unwrap_or(1.2);
        let zeta = self.damping_ratio.unwrap_or(0.4);
        let r = self.wheel_radius;
        let wheel_inertia = self.wheel_inertia.unwrap_or(12.0 * r * r);
        let capacity = self.brake_capacity.unwrap_or(1.0);

        let a = cg_frac * self.wheelbase;
        let b = self.wheelbase - a;
        let h = self.cg_height;
        let w = self.mass * G;
        let front_static = 0.5 * w * b / self.wheelbase;
        let rear_static = 0.5 * w * a / self.wheelbase;
        // Per-wheel load with a 1 g deceleration transfer.
        let front_braking = 0.5 * w * (b + h) / self.wheelbase;
        let rear_braking = (0.5 * w * (a - h) / self.wheelbase).max(0.0);

        let corner = |load: f64, brake_load: f64, front: bool| {
            let m_corner = load / G;
            let k = m_corner * (2.0 * std::f64::consts::PI * freq).powi(2);
            WheelSpec {
                radius: r,
                suspension_rest_length: rest,
                spring_rate: k,
                damper_rate: 2.0 * zeta * (k * m_corner).sqrt(),
                max_brake_torque: capacity * brake_load * r,
                steerable: front,
                driven: false,
                rotational_inertia: wheel_inertia,
            }
        };
        let mut wheels = [
            corner(front_static, front_braking, true),
            corner(front_static, front_braking, true),
            corner(rear_static, rear_braking, false),
            corner(rear_static, rear_braking, false),
        ];
        for (i, wh) in wheels.iter_mut().enumerate() {
            wh.driven = self.drivetrain.drives(i);
        }
        let spec = VehicleSpec {
            name: self.name.clone(),
            mass: self.mass,
            wheelbase: self.wheelbase,
            overall_length: self.overall_length,
            overall_width: self.overall_width,
            overall_height: self.overall_height,
            track_width: track,
            cg_height: h,
            cg_longitudinal_position: cg_frac,
            drivetrain: self.drivetrain,
            inertia,
            engine: self.engine.clone(),
            transmission: self.transmission.clone(),
            wheels,
            aero_drag_coefficient_area: self.aero_drag_coefficient_area.unwrap_or(0.0),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidState {
    pub position: Vector3<f64>,
    /// Body → world rotation.
    pub orientation: UnitQuaternion<f64>,
    /// (u, v, w)
    pub velocity: Vector3<f64>,
    /// (p, q, r)
    pub angular_velocity: Vector3<f64>,
    pub wheels: [WheelState; 4],
    /// Front-wheel angle applied during the last step.
    pub steer_angle: f64,
    pub time: f64,
}

impl RigidState {
    /// (roll, pitch, yaw) with R = Rz(yaw)·Ry(pitch)·Rx(roll).
    pub fn euler(&self) -> (f64, f64, f64) {
        self.orientation.euler_angles()
    }

    /// Heading of the body x axis in the horizontal plane.
    pub fn heading(&self) -> f64 {
        let x = self.orientation * Vector3::x();
        x.y.atan2(x.x)
    }

    pub fn world_velocity(&self) -> Vector3<f64> {
        self.orientation * self.velocity
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }

    pub fn body_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.orientation * p
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.angular_velocity.iter().all(|v| v.is_finite())
            && self
                .wheels
                .iter()
                .all(|w| w.spin_rate.is_finite() && w.normal_force.is_finite() && w.tire_force.iter().all(|f| f.is_finite()))
    }

    /// Translational, rotational and wheel-spin kinetic energy.
    pub fn kinetic_energy(&self, spec: &VehicleSpec) -> f64 {
        let lin = 0.5 * spec.mass * self.velocity.norm_squared();
        let w = self.angular_velocity;
        let rot = 0.5 * (spec.inertia.x * w.x * w.x + spec.inertia.y * w.y * w.y + spec.inertia.z * w.z * w.z);
        let spin: f64 = self
            .wheels
            .iter()
            .zip(&spec.wheels)
            .map(|(s, w)| 0.5 * w.rotational_inertia * s.spin_rate * s.spin_rate)
            .sum();
        lin + rot + spin
    }

    /// Largest deviation of RᵀR from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let r = self.orientation.to_rotation_matrix().into_inner();
        (r.transpose() * r - Matrix3::identity()).abs().max()
    }

    /// Places the vehicle at its static ride height on the ground under `xy`,
    /// aligned with the surface and facing `heading`, moving forward at
    /// `speed` with the wheels rolling.
    pub fn on_ground<G: Ground + ?Sized>(
        spec: &VehicleSpec,
        ground: &G,
        xy: Vector2<f64>,
        heading: f64,
        speed: f64,
    ) -> Result<RigidState> {
        let sample = ground
            .sample(xy)
            .ok_or_else(|| invalid("initial pose", "no ground under the start position"))?;
        let n = sample.normal;
        let fwd = Vector3::new(heading.cos(), heading.sin(), 0.0);
        let x = (fwd - n * fwd.dot(&n)).normalize();
        let y = n.cross(&x);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, n]));
        let orientation = UnitQuaternion::from_rotation_matrix(&rot);
        let base = Vector3::new(xy.x, xy.y, sample.elevation);
        let loads = spec.static_wheel_loads();
        let wheels = std::array::from_fn(|i| WheelState {
            spin_rate: speed / spec.wheels[i].radius,
            suspension_compression: loads[i] / spec.wheels[i].spring_rate,
            in_contact: true,
            normal_force: loads[i],
            station_of_contact: sample.station,
            ..WheelState::default()
        });
        Ok(RigidState {
            position: base + n * spec.cg_height,
            orientation,
            velocity: Vector3::new(speed, 0.0, 0.0),
            angular_velocity: Vector3::zeros(),
            wheels,
            steer_angle: 0.0,
            time: 0.0,
        })
    }

    fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "  position         = {:?}", self.position.as_slice());
        let _ = writeln!(s, "  orientation      = {:?}", self.orientation.coords.as_slice());
        let _ = writeln!(s, "  velocity (u,v,w) = {:?}", self.velocity.as_slice());
        let _ = writeln!(s, "  rates (p,q,r)    = {:?}", self.angular_velocity.as_slice());
        for (i, w) in self.wheels.iter().enumerate() {
            let _ = writeln!(
                s,
                "  wheel {i}: spin {} N {} slip ({}, {}) force {:?}",
                w.spin_rate,
                w.normal_force,
                w.longitudinal_slip,
                w.lateral_slip,
                w.tire_force.as_slice()
            );
        }
        s
    }
}

/// Resultant force and moment about the CG, body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyForces {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

/// A force applied at a point, both in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedForce {
    pub point: Vector3<f64>,
    pub force: Vector3<f64>,
}

/// Sums wheel forces, gravity and aerodynamic drag into body-frame resultants.
///
/// Gravity is rotated into the body frame through the orientation, which
/// yields mg·sinθ on x, −mg·sinϕ·cosθ on y and −mg·cosϕ·cosθ on z for roll ϕ
/// and pitch θ.
pub fn aggregate_forces(
    spec: &VehicleSpec,
    orientation: &UnitQuaternion<f64>,
    contacts: &[AppliedForce],
    gravity: f64,
    aero_world: &Vector3<f64>,
) -> BodyForces {
    let mut out = BodyForces::default();
    for c in contacts {
        out.force += c.force;
        out.moment += c.point.cross(&c.force);
    }
    let inv = orientation.inverse();
    out.force += inv * Vector3::new(0.0, 0.0, -spec.mass * gravity);
    out.force += inv * aero_world;
    out
}

/// Quadratic drag on the world-frame velocity.
pub fn aero_drag(spec: &VehicleSpec, world_velocity: &Vector3<f64>) -> Vector3<f64> {
    -0.5 * AIR_DENSITY * spec.aero_drag_coefficient_area * world_velocity.norm() * world_velocity
}

/// Body-frame accelerations from the six equations of motion.
pub fn accelerations(spec: &VehicleSpec, velocity: &Vector3<f64>, rates: &Vector3<f64>, f: &BodyForces) -> (Vector3<f64>, Vector3<f64>) {
    let m = spec.mass;
    let (u, v, w) = (velocity.x, velocity.y, velocity.z);
    let (p, q, r) = (rates.x, rates.y, rates.z);
    let (ix, iy, iz) = (spec.inertia.x, spec.inertia.y, spec.inertia.z);
    let lin = Vector3::new(
        f.force.x / m - (q * w - r * v),
        f.force.y / m - (r * u - p * w),
        f.force.z / m - (p * v - q * u),
    );
    let ang = Vector3::new(
        (f.moment.x + (iy - iz) * q * r) / ix,
        (f.moment.y + (iz - ix) * p * r) / iy,
        (f.moment.z + (ix - iy) * p * q) / iz,
    );
    (lin, ang)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    SemiImplicitEuler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub integrator: Integrator,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dt: DEFAULT_DT,
            integrator: Integrator::SemiImplicitEuler,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pose {
    position: Vector3<f64>,
    orientation: UnitQuaternion<f64>,
    velocity: Vector3<f64>,
    rates: Vector3<f64>,
}

impl Pose {
    fn of(s: &RigidState) -> Pose {
        Pose {
            position: s.position,
            orientation: s.orientation,
            velocity: s.velocity,
            rates: s.angular_velocity,
        }
    }
}

struct Contact {
    kin: ContactKinematics,
    point_body: Vector3<f64>,
    long: Vector3<f64>,
    lat: Vector3<f64>,
    normal: Vector3<f64>,
}

/// Ray-casts one wheel from its hard point along the body −z axis.
fn cast_wheel<G: Ground + ?Sized>(
    pose: &Pose,
    hard_point: &Vector3<f64>,
    wheel: &WheelSpec,
    steer: f64,
    ground: &G,
) -> Option<Contact> {
    let hp = pose.position + pose.orientation * hard_point;
    let down = pose.orientation * -Vector3::z();
    let reach = wheel.suspension_rest_length + wheel.radius;

    let mut sample = ground.sample(hp.xy())?;
    let mut dist = 0.0;
    for _ in 0..2 {
        let n = sample.normal;
        let denom = n.dot(&down);
        if denom > -1e-6 {
            return None;
        }
        let q = Vector3::new(hp.x, hp.y, sample.elevation);
        dist = n.dot(&(q - hp)) / denom;
        let hit = hp + down * dist;
        sample = ground.sample(hit.xy())?;
        // Refine against the plane at the hit point.
        let q2 = Vector3::new(hit.x, hit.y, sample.elevation);
        dist = sample.normal.dot(&(q2 - hp)) / sample.normal.dot(&down);
    }
    let compression = reach - dist;
    if compression <= 0.0 {
        return None;
    }
    let n = sample.normal;
    let contact = hp + down * dist;
    let r_body = pose.orientation.inverse() * (contact - pose.position);
    let v_hp = pose.orientation * (pose.velocity + pose.rates.cross(hard_point));
    let compression_rate = n.dot(&v_hp) / n.dot(&down);

    let heading = pose.orientation * Vector3::new(steer.cos(), steer.sin(), 0.0);
    let long = (heading - n * heading.dot(&n)).normalize();
    let lat = n.cross(&long);
    let v_contact = pose.orientation * (pose.velocity + pose.rates.cross(&r_body));
    Some(Contact {
        kin: ContactKinematics {
            compression,
            compression_rate,
            v_long: v_contact.dot(&long),
            v_lat: v_contact.dot(&lat),
            station: sample.station,
        },
        point_body: r_body,
        long,
        lat,
        normal: n,
    })
}

/// Evaluates all four wheels at `pose`, returning the updated wheel outputs
/// and the body-frame resultants.
#[allow(clippy::too_many_arguments)]
fn evaluate<G: Ground + ?Sized>(
    spec: &VehicleSpec,
    pose: &Pose,
    wheels: &[WheelState; 4],
    steer: f64,
    drive: &[f64; 4],
    brake: f64,
    ground: &G,
    condition: &SurfaceCondition,
    dt: f64,
) -> ([WheelOutput; 4], BodyForces) {
    let hard_points = spec.hard_points();
    let inv = pose.orientation.inverse();
    let mut applied = [AppliedForce {
        point: Vector3::zeros(),
        force: Vector3::zeros(),
    }; 4];
    let outputs: [WheelOutput; 4] = std::array::from_fn(|i| {
        let w = &spec.wheels[i];
        let delta = if w.steerable { steer } else { 0.0 };
        let contact = cast_wheel(pose, &hard_points[i], w, delta, ground);
        let out = update_wheel(
            w,
            condition,
            &wheels[i],
            contact.as_ref().map(|c| &c.kin),
            drive[i],
            brake * w.max_brake_torque,
            dt,
        );
        if let Some(c) = &contact {
            let f_world = c.long * out.force.x + c.lat * out.force.y + c.normal * out.force.z;
            applied[i] = AppliedForce {
                point: c.point_body,
                force: inv * f_world,
            };
        }
        out
    });
    let aero = aero_drag(spec, &(pose.orientation * pose.velocity));
    let forces = aggregate_forces(spec, &pose.orientation, &applied, G, &aero);
    (outputs, forces)
}

/// Advances the vehicle by one fixed step.
///
/// Wheels are evaluated on the pre-step pose; in semi-implicit mode the
/// resulting accelerations update the velocities first and the pose is then
/// advanced with the new velocities.
pub fn step<G: Ground + ?Sized>(
    spec: &VehicleSpec,
    state: &RigidState,
    command: &DriverCommand,
    ground: &G,
    condition: &SurfaceCondition,
    cfg: &StepConfig,
) -> Result<RigidState> {
    if !state.is_finite() {
        return Err(Error::NonFinite {
            time: state.time,
            dump: state.dump(),
        });
    }
    let dt = cfg.dt;
    let throttle = command.throttle.clamp(0.0, 1.0);
    let brake = command.brake.clamp(0.0, 1.0);
    let steer = command.steer_angle;
    let drive = powertrain(spec, state, throttle).wheel_torque;
    let pose = Pose::of(state);

    let (outputs, forces) = evaluate(spec, &pose, &state.wheels, steer, &drive, brake, ground, condition, dt);

    let next_pose = match cfg.integrator {
        Integrator::SemiImplicitEuler => {
            let (lin, ang) = accelerations(spec, &pose.velocity, &pose.rates, &forces);
            let velocity = pose.velocity + lin * dt;
            let rates = pose.rates + ang * dt;
            let orientation = pose.orientation * UnitQuaternion::from_scaled_axis(rates * dt);
            let position = pose.position + (orientation * velocity) * dt;
            Pose {
                position,
                orientation,
                velocity,
                rates,
            }
        }
        Integrator::Rk4 => {
            // Wheel spin is frozen at its pre-step value for the inner stages.
            let deriv = |p: &Pose, f: Option<&BodyForces>| -> Derivative {
                let owned;
                let f = match f {
                    Some(f) => f,
                    None => {
                        owned = evaluate(spec, p, &state.wheels, steer, &drive, brake, ground, condition, dt).1;
                        &owned
                    }
                };
                Derivative::of(spec, p, f)
            };
            rk4(&pose, dt, |p, first| deriv(p, if first { Some(&forces) } else { None }))
        }
    };

    let mut orientation = next_pose.orientation;
    orientation.renormalize();
    let next = RigidState {
        position: next_pose.position,
        orientation,
        velocity: next_pose.velocity,
        angular_velocity: next_pose.rates,
        wheels: outputs.map(|o| o.state),
        steer_angle: steer,
        time: state.time + dt,
    };
    if !next.is_finite() {
        return Err(Error::NonFinite {
            time: next.time,
            dump: format!("pre-step state:\n{}command: {command:?}\n", state.dump()),
        });
    }
    Ok(next)
}

/// Lets the suspension relax for `duration` with the horizontal position and
/// yaw held, then releases the vehicle moving forward at `speed` with the
/// wheels rolling and the clock reset to zero.
pub fn settle<G: Ground + ?Sized>(
    spec: &VehicleSpec,
    initial: &RigidState,
    ground: &G,
    condition: &SurfaceCondition,
    cfg: &StepConfig,
    duration: f64,
    speed: f64,
) -> Result<RigidState> {
    let hold = DriverCommand {
        throttle: 0.0,
        brake: 1.0,
        steer_angle: 0.0,
    };
    let (_, _, yaw) = initial.euler();
    let mut s = initial.clone();
    s.velocity = Vector3::zeros();
    s.wheels.iter_mut().for_each(|w| w.spin_rate = 0.0);
    let steps = (duration / cfg.dt).round() as usize;
    for _ in 0..steps {
        s = step(spec, &s, &hold, ground, condition, cfg)?;
        s.position.x = initial.position.x;
        s.position.y = initial.position.y;
        let (roll, pitch, _) = s.euler();
        s.orientation = UnitQuaternion::from_euler_angles(roll, pitch, yaw);
        s.velocity.x = 0.0;
        s.velocity.y = 0.0;
        s.angular_velocity.z = 0.0;
    }
    s.velocity.x = speed;
    for (w, ws) in s.wheels.iter_mut().zip(&spec.wheels) {
        w.spin_rate = speed / ws.radius;
    }
    s.time = 0.0;
    Ok(s)
}

#[derive(Debug, Clone, Copy)]
struct Derivative {
    position: Vector3<f64>,
    orientation: Quaternion<f64>,
    velocity: Vector3<f64>,
    rates: Vector3<f64>,
}

impl Derivative {
    fn of(spec: &VehicleSpec, p: &Pose, f: &BodyForces) -> Derivative {
        let (lin, ang) = accelerations(spec, &p.velocity, &p.rates, f);
        let omega = Quaternion::from_parts(0.0, p.rates);
        Derivative {
            position: p.orientation * p.velocity,
            orientation: p.orientation.into_inner() * omega * 0.5,
            velocity: lin,
            rates: ang,
        }
    }
}

fn advance(p: &Pose, d: &Derivative, h: f64) -> Pose {
    Pose {
        position: p.position + d.position * h,
        orientation: UnitQuaternion::new_normalize(p.orientation.into_inner() + d.orientation * h),
        velocity: p.velocity + d.velocity * h,
        rates: p.rates + d.rates * h,
    }
}

fn rk4(p: &Pose, dt: f64, mut f: impl FnMut(&Pose, bool) -> Derivative) -> Pose {
    let k1 = f(p, true);
    let k2 = f(&advance(p, &k1, 0.5 * dt), false);
    let k3 = f(&advance(p, &k2, 0.5 * dt), false);
    let k4 = f(&advance(p, &k3, dt), false);
    let w = dt / 6.0;
    Pose {
        position: p.position + (k1.position + (k2.position + k3.position) * 2.0 + k4.position) * w,
        orientation: UnitQuaternion::new_normalize(
            p.orientation.into_inner()
                + (k1.orientation + (k2.orientation + k3.orientation) * 2.0 + k4.orientation) * w,
        ),
        velocity: p.velocity + (k1.velocity + (k2.velocity + k3.velocity) * 2.0 + k4.velocity) * w,
        rates: p.rates + (k1.rates + (k2.rates + k3.rates) * 2.0 + k4.rates) * w,
    }
}

#[cfg(test)]
pub(crate) mod tests_support;
