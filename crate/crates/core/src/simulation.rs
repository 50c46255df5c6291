//! Fixed-step closed-loop simulation of the robot team around a target.
//!
//! Robots are kinematic points `p' = u`. Every step, each active robot reads
//! its own cylindrical coordinates and its ring neighbours' angles and
//! utilities, computes a cylindrical rate command and lifts it to a world
//! velocity. Positions are advanced with classical RK4; utility switches are
//! applied on the step grid and rebuild the ring when a robot leaves or
//! rejoins.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::control::{control_law, ControlGains, NeighborView, Setpoints};
use crate::error::{Error, Result};
use crate::formation::{build_ring, Guideline, RingTopology, RobotId, Utility, UtilitySchedule};
use crate::geometry::{body_coords, lift_control, nearest_sheet, BodyFrame, CylindricalRate, Vec3};

/// Any state component beyond this magnitude aborts the run.
pub const BLOWUP_LIMIT: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetMotion {
    Stationary { position: Vec3 },
    ConstantVelocity { start: Vec3, velocity: Vec3 },
}

impl Default for TargetMotion {
    fn default() -> Self {
        TargetMotion::Stationary {
            position: Vec3::zeros(),
        }
    }
}

/// Body frame of the target at time `t`. The frame never rotates.
pub fn target_state(motion: &TargetMotion, t: f64) -> BodyFrame {
    match *motion {
        TargetMotion::Stationary { position } => BodyFrame::stationary(position),
        TargetMotion::ConstantVelocity { start, velocity } => {
            BodyFrame::translating(start + velocity * t, velocity)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotSpec {
    pub position: Vec3,
    pub schedule: UtilitySchedule,
    /// Per-robot height setpoint; falls back to the scenario's `z_star`.
    pub z_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub robots: Vec<RobotSpec>,
    pub gains: ControlGains,
    pub setpoints: Setpoints,
    pub guideline: Guideline,
    pub target: TargetMotion,
    pub duration: f64,
    pub dt: f64,
    /// Record every `log_every`-th step (the initial and final states are always recorded).
    pub log_every: usize,
    /// Standard deviation of the target position each robot perceives, meters.
    pub noise_std: f64,
    pub seed: u64,
    /// Optional cap on the world-frame speed of each robot.
    pub max_speed: Option<f64>,
}

impl Scenario {
    /// Scenario with a stationary target at the origin, no noise and a 1 ms step.
    pub fn new(
        robots: Vec<RobotSpec>,
        gains: ControlGains,
        setpoints: Setpoints,
        guideline: Guideline,
        duration: f64,
    ) -> Self {
        Self {
            robots,
            gains,
            setpoints,
            guideline,
            target: TargetMotion::default(),
            duration,
            dt: 1e-3,
            log_every: 1,
            noise_std: 0.0,
            seed: 0,
            max_speed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidScenario(msg));
        if self.robots.len() < 2 {
            return invalid(format!("need at least 2 robots, got {}", self.robots.len()));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return invalid(format!("duration must be finite and non-negative, got {}", self.duration));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if self.duration > 0.0 && self.dt > self.duration {
            return invalid(format!("dt {} exceeds duration {}", self.dt, self.duration));
        }
        if self.log_every == 0 {
            return invalid("log_every must be at least 1".into());
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return invalid(format!("noise std-dev must be non-negative, got {}", self.noise_std));
        }
        if let Some(s) = self.max_speed {
            if !(s.is_finite() && s > 0.0) {
                return invalid(format!("max_speed must be positive, got {s}"));
            }
        }
        self.gains.validate()?;
        self.setpoints.validate()?;
        let frame = target_state(&self.target, 0.0);
        for (i, robot) in self.robots.iter().enumerate() {
            if !robot.position.iter().all(|c| c.is_finite()) {
                return invalid(format!("robot r{} position is not finite", i + 1));
            }
            robot.schedule.validate()?;
            if robot.z_star.is_some_and(|z| !z.is_finite()) {
                return invalid(format!("robot r{} z_star is not finite", i + 1));
            }
            body_coords(&robot.position, &frame).map_err(|_| {
                Error::InvalidScenario(format!(
                    "robot r{} starts on the target's vertical axis",
                    i + 1
                ))
            })?;
        }
        Ok(())
    }

    /// Sorted, de-duplicated times at which any utility changes value.
    pub fn switch_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .robots
            .iter()
            .flat_map(|r| r.schedule.switches.iter().map(|&(t, _)| t))
            .filter(|&t| t > 0.0)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    pub fn step_count(&self) -> u64 {
        if self.duration == 0.0 {
            0
        } else {
            (self.duration / self.dt - 1e-9).ceil().max(1.0) as u64
        }
    }

    pub fn z_star(&self, id: RobotId) -> f64 {
        self.robots[id.0].z_star.unwrap_or(self.setpoints.z_star)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub position: Vec3,
    /// Continuous body-frame angle; never jumps by a full turn.
    pub phi_unwrapped: f64,
    pub utility: Utility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub step: u64,
    pub robots: Vec<RobotState>,
    pub ring: RingTopology,
}

impl SimState {
    pub fn angles(&self) -> Vec<f64> {
        self.robots.iter().map(|r| r.phi_unwrapped).collect()
    }

    pub fn utilities(&self) -> Vec<Utility> {
        self.robots.iter().map(|r| r.utility).collect()
    }
}

/// Logged quantities for one active robot at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotRecord {
    pub id: RobotId,
    pub position: Vec3,
    pub rho: f64,
    /// Continuous angle, radians.
    pub phi: f64,
    pub z: f64,
    /// Gap to the counter-clockwise neighbour, radians.
    pub delta: f64,
    pub mu: f64,
    /// Desired gap under the scenario's guideline, radians.
    pub desired_delta: f64,
    pub command: CylindricalRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub time: f64,
    /// Active robots, in ring order.
    pub robots: Vec<RobotRecord>,
}

impl LogRecord {
    pub fn robot(&self, id: RobotId) -> Option<&RobotRecord> {
        self.robots.iter().find(|r| r.id == id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEvent {
    pub time: f64,
    pub robot: RobotId,
    pub from: f64,
    pub to: f64,
    pub ring_rebuilt: bool,
    /// Ring membership after the event.
    pub ring: Vec<RobotId>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub records: Vec<LogRecord>,
    pub events: Vec<ScheduleEvent>,
}

impl TrajectoryLog {
    pub fn last(&self) -> Option<&LogRecord> {
        self.records.last()
    }

    /// Last record strictly before `t`.
    pub fn last_before(&self, t: f64) -> Option<&LogRecord> {
        self.records.iter().take_while(|r| r.time < t).last()
    }
}

struct Evaluation {
    velocities: Vec<Vec3>,
}

pub struct Simulator {
    scenario: Scenario,
    state: SimState,
    rng: ChaCha8Rng,
    noise: Vec<Vec3>,
}

impl Simulator {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let frame = target_state(&scenario.target, 0.0);
        let mut robots = Vec::with_capacity(scenario.robots.len());
        for spec in &scenario.robots {
            let q = body_coords(&spec.position, &frame)?;
            robots.push(RobotState {
                position: spec.position,
                phi_unwrapped: q.phi,
                utility: Utility::new(spec.schedule.value_at(0.0))?,
            });
        }
        let angles: Vec<f64> = robots.iter().map(|r| r.phi_unwrapped).collect();
        let utilities: Vec<Utility> = robots.iter().map(|r| r.utility).collect();
        let ring = build_ring(&angles, &utilities)?;
        let rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        let noise = vec![Vec3::zeros(); robots.len()];
        Ok(Self {
            scenario,
            state: SimState {
                time: 0.0,
                step: 0,
                robots,
                ring,
            },
            rng,
            noise,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    /// Replaces the state, e.g. to start from a prepared formation.
    pub fn set_state(&mut self, state: SimState) {
        self.state = state;
    }

    /// Advances all active robots by one RK4 step of length `h`.
    pub fn step(&mut self, h: f64) -> Result<()> {
        let t = self.state.time;
        self.draw_noise();
        let p0: Vec<Vec3> = self.state.robots.iter().map(|r| r.position).collect();
        let k1 = self.evaluate(&p0, t)?.velocities;
        let k2 = self.evaluate(&offset(&p0, &k1, h / 2.0), t + h / 2.0)?.velocities;
        let k3 = self.evaluate(&offset(&p0, &k2, h / 2.0), t + h / 2.0)?.velocities;
        let k4 = self.evaluate(&offset(&p0, &k3, h), t + h)?.velocities;

        let next_step = self.state.step + 1;
        let next_time = next_step as f64 * self.scenario.dt;
        let next_time = next_time.min(self.scenario.duration.max(t + h));
        let frame = target_state(&self.scenario.target, next_time);
        for (i, robot) in self.state.robots.iter_mut().enumerate() {
            if robot.utility.is_active() {
                robot.position += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
            }
            if !robot.position.iter().all(|c| c.is_finite() && c.abs() < BLOWUP_LIMIT) {
                return Err(Error::NumericalBlowup { limit: BLOWUP_LIMIT });
            }
            match body_coords(&robot.position, &frame) {
                Ok(q) => robot.phi_unwrapped = nearest_sheet(q.phi, robot.phi_unwrapped),
                Err(e) if robot.utility.is_active() => return Err(e),
                // a parked robot may sit on the axis of a moving target; keep its last angle
                Err(_) => {}
            }
        }
        self.state.time = next_time;
        self.state.step = next_step;
        Ok(())
    }

    /// Applies every utility switch due at the current time. Returns the changes made.
    pub fn apply_schedule(&mut self) -> Result<Vec<ScheduleEvent>> {
        // snap switches to the first grid point at or after them
        let t = self.state.time + 1e-9 * self.scenario.dt;
        let mut changes = Vec::new();
        let mut rebuild = false;
        for (i, spec) in self.scenario.robots.iter().enumerate() {
            let robot = &mut self.state.robots[i];
            let value = spec.schedule.value_at(t);
            if value != robot.utility.value() {
                let utility = Utility::new(value)?;
                rebuild |= utility.is_active() != robot.utility.is_active();
                changes.push((RobotId(i), robot.utility.value(), value));
                robot.utility = utility;
            }
        }
        if rebuild {
            self.state.ring = build_ring(&self.state.angles(), &self.state.utilities())?;
        }
        let ring = self.state.ring.order().to_vec();
        Ok(changes
            .into_iter()
            .map(|(robot, from, to)| ScheduleEvent {
                time: self.state.time,
                robot,
                from,
                to,
                ring_rebuilt: rebuild,
                ring: ring.clone(),
            })
            .collect())
    }

    /// Logged view of the current state, measured without noise.
    pub fn snapshot(&self) -> Result<LogRecord> {
        let t = self.state.time;
        let frame = target_state(&self.scenario.target, t);
        let ring = &self.state.ring;
        let angles = self.state.angles();
        let gaps = ring.raw_gaps(&angles);
        let mu = ring.gather(&self.state.utilities().iter().map(|u| u.value()).collect::<Vec<_>>());
        let desired = self.scenario.guideline.desired_spacing(&mu);
        let mut robots = Vec::with_capacity(ring.len());
        for (slot, &id) in ring.order().iter().enumerate() {
            let robot = &self.state.robots[id.0];
            let q = body_coords(&robot.position, &frame)?;
            let view = self.view(&angles, slot);
            let command = self.command(id, &q, &view);
            robots.push(RobotRecord {
                id,
                position: robot.position,
                rho: q.rho,
                phi: robot.phi_unwrapped,
                z: q.z,
                delta: gaps[slot],
                mu: mu[slot],
                desired_delta: desired.0[slot],
                command,
            });
        }
        Ok(LogRecord { time: t, robots })
    }

    /// Runs the scenario to completion from the current state.
    pub fn run_to_end(&mut self) -> Result<TrajectoryLog> {
        let mut log = TrajectoryLog::default();
        let time = |s: &Self| s.state.time;
        log.events
            .extend(self.apply_schedule().map_err(|e| e.at(time(self)))?);
        log.records.push(self.snapshot().map_err(|e| e.at(time(self)))?);
        let steps = self.scenario.step_count();
        let dt = self.scenario.dt;
        while self.state.step < steps {
            let remaining = self.scenario.duration - self.state.time;
            let h = if self.state.step + 1 == steps { remaining } else { dt };
            self.step(h).map_err(|e| e.at(time(self)))?;
            log.events
                .extend(self.apply_schedule().map_err(|e| e.at(time(self)))?);
            if self.state.step.is_multiple_of(self.scenario.log_every as u64) || self.state.step == steps {
                log.records.push(self.snapshot().map_err(|e| e.at(time(self)))?);
            }
        }
        Ok(log)
    }

    fn draw_noise(&mut self) {
        if self.scenario.noise_std == 0.0 {
            return;
        }
        let normal = Normal::new(0.0, self.scenario.noise_std).expect("validated std-dev");
        for n in self.noise.iter_mut() {
            *n = Vec3::new(
                normal.sample(&mut self.rng),
                normal.sample(&mut self.rng),
                normal.sample(&mut self.rng),
            );
        }
    }

    fn view(&self, angles: &[f64], slot: usize) -> NeighborView {
        let ring = &self.state.ring;
        let n = ring.len();
        let prev = ring.prev(slot);
        let next = ring.next(slot);
        let mu = |s: usize| self.state.robots[ring.order()[s].0].utility.value();
        let turn = std::f64::consts::TAU;
        NeighborView {
            phi_minus: ring.sheet_angle(angles, prev) - if slot == 0 { turn } else { 0.0 },
            phi_self: ring.sheet_angle(angles, slot),
            phi_plus: ring.sheet_angle(angles, next) + if slot == n - 1 { turn } else { 0.0 },
            mu_minus: mu(prev),
            mu_self: mu(slot),
            mu_plus: mu(next),
        }
    }

    fn command(&self, id: RobotId, q: &crate::geometry::CylindricalCoords, view: &NeighborView) -> CylindricalRate {
        let setpoints = Setpoints {
            z_star: self.scenario.z_star(id),
            ..self.scenario.setpoints
        };
        control_law(q, view, &self.scenario.gains, &setpoints, self.scenario.guideline)
    }

    fn evaluate(&self, positions: &[Vec3], time: f64) -> Result<Evaluation> {
        let frame = target_state(&self.scenario.target, time);
        let ring = &self.state.ring;
        let mut angles: Vec<f64> = self.state.angles();
        let mut coords = Vec::with_capacity(ring.len());
        let mut frames = Vec::with_capacity(ring.len());
        for &id in ring.order() {
            let perceived = BodyFrame {
                origin: frame.origin + self.noise[id.0],
                ..frame
            };
            let q = body_coords(&positions[id.0], &perceived)?;
            angles[id.0] = nearest_sheet(q.phi, self.state.robots[id.0].phi_unwrapped);
            coords.push(q);
            frames.push(perceived);
        }
        let mut velocities = vec![Vec3::zeros(); positions.len()];
        for (slot, &id) in ring.order().iter().enumerate() {
            let view = self.view(&angles, slot);
            let v = self.command(id, &coords[slot], &view);
            let mut u = lift_control(&v, &positions[id.0], &frames[slot])?;
            if let Some(limit) = self.scenario.max_speed {
                let speed = u.norm();
                if speed > limit {
                    u *= limit / speed;
                }
            }
            velocities[id.0] = u;
        }
        Ok(Evaluation { velocities })
    }
}

fn offset(p: &[Vec3], k: &[Vec3], h: f64) -> Vec<Vec3> {
    p.iter().zip(k).map(|(p, k)| p + k * h).collect()
}

/// Simulates `scenario` from its initial conditions.
pub fn run(scenario: &Scenario) -> Result<TrajectoryLog> {
    Simulator::new(scenario.clone())?.run_to_end()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, TAU};

    use super::*;
    use crate::formation::angular_gaps;

    fn robot(x: f64, y: f64, z: f64, mu: f64) -> RobotSpec {
        RobotSpec {
            position: Vec3::new(x, y, z),
            schedule: UtilitySchedule::constant(mu),
            z_star: None,
        }
    }

    fn on_circle(rho: f64, angles: &[f64], mu: f64) -> Vec<RobotSpec> {
        angles
            .iter()
            .map(|a| robot(rho * a.cos(), rho * a.sin(), 0.0, mu))
            .collect()
    }

    fn scenario(robots: Vec<RobotSpec>, k: f64, omega: f64, duration: f64) -> Scenario {
        Scenario::new(
            robots,
            ControlGains::uniform(k).unwrap(),
            Setpoints::new(2.0, omega, 0.0).unwrap(),
            Guideline::Fg1,
            duration,
        )
    }

    #[test]
    fn target_state_examples() {
        let still = TargetMotion::Stationary { position: Vec3::zeros() };
        let f = target_state(&still, 123.0);
        assert_eq!(f.origin, Vec3::zeros());
        assert_eq!(f.origin_velocity, Vec3::zeros());

        let moving = TargetMotion::ConstantVelocity {
            start: Vec3::zeros(),
            velocity: Vec3::new(0.1, 0.0, 0.0),
        };
        let f = target_state(&moving, 10.0);
        assert!((f.origin - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(f.origin_velocity, Vec3::new(0.1, 0.0, 0.0));
    }

    #[test]
    fn converged_formation_coasts() {
        let angles = [0.0, PI / 2.0, PI, 1.5 * PI];
        let mut sc = scenario(on_circle(2.0, &angles, 1.0), 2.0, 0.8, 1.0);
        sc.dt = 1e-3;
        let mut sim = Simulator::new(sc).unwrap();
        let before = sim.state().angles();
        sim.step(1e-3).unwrap();
        let after = sim.snapshot().unwrap();
        for r in &after.robots {
            assert!((r.rho - 2.0).abs() < 1e-9);
            assert!((r.phi - before[r.id.0] - 0.8e-3).abs() < 1e-9);
        }
    }

    #[test]
    fn radial_step_matches_closed_form() {
        // two antipodal robots at rho = 1 with no rotation: pure radial motion
        let sc = scenario(on_circle(1.0, &[0.0, PI], 1.0), 2.0, 0.0, 1.0);
        let mut sim = Simulator::new(sc).unwrap();
        sim.step(1e-3).unwrap();
        let rec = sim.snapshot().unwrap();
        let exact = 2.0 - (-2.0f64 * 1e-3).exp();
        for r in &rec.robots {
            assert!((r.rho - exact).abs() < 1e-12, "{} vs {}", r.rho, exact);
        }
    }

    #[test]
    fn zero_duration_logs_initial_record_only() {
        let sc = scenario(on_circle(1.0, &[0.0, 2.0], 1.0), 2.0, 1.0, 0.0);
        let log = run(&sc).unwrap();
        assert_eq!(log.records.len(), 1);
        assert_eq!(log.records[0].time, 0.0);
    }

    #[test]
    fn last_step_lands_on_duration() {
        let mut sc = scenario(on_circle(1.0, &[0.0, 2.0], 1.0), 2.0, 1.0, 0.0105);
        sc.dt = 1e-3;
        let log = run(&sc).unwrap();
        assert_eq!(log.records.len(), 12);
        assert_eq!(log.last().unwrap().time, 0.0105);
        assert!(log.records.windows(2).all(|w| w[1].time > w[0].time));
    }

    #[test]
    fn quitting_robot_leaves_ring() {
        let mut robots = on_circle(2.0, &[0.1, 1.7, 3.3, 4.9], 1.0);
        robots[1].schedule = UtilitySchedule {
            initial: 2.0,
            switches: vec![(0.05, 0.0)],
        };
        let mut sc = scenario(robots, 2.0, 1.0, 0.1);
        sc.guideline = Guideline::Fg2;
        let mut sim = Simulator::new(sc).unwrap();
        for _ in 0..49 {
            sim.step(1e-3).unwrap();
            assert!(sim.apply_schedule().unwrap().is_empty());
        }
        sim.step(1e-3).unwrap();
        let events = sim.apply_schedule().unwrap();
        let parked = sim.state().robots[1].position;
        assert_eq!(events.len(), 1);
        assert!(events[0].ring_rebuilt);
        assert_eq!(events[0].ring, vec![RobotId(0), RobotId(2), RobotId(3)]);
        let rec = sim.snapshot().unwrap();
        assert_eq!(rec.robots.len(), 3);
        for r in &rec.robots {
            assert!((r.desired_delta - TAU / 3.0).abs() < 1e-12);
        }
        sim.step(1e-3).unwrap();
        assert_eq!(sim.state().robots[1].position, parked);
    }

    #[test]
    fn noop_switch_changes_nothing() {
        let mut robots = on_circle(2.0, &[0.1, 1.7, 3.3], 1.0);
        robots[0].schedule = UtilitySchedule {
            initial: 1.0,
            switches: vec![(0.002, 1.0)],
        };
        let mut sim = Simulator::new(scenario(robots, 2.0, 1.0, 0.01)).unwrap();
        sim.step(1e-3).unwrap();
        sim.step(1e-3).unwrap();
        let before = sim.state().clone();
        assert!(sim.apply_schedule().unwrap().is_empty());
        assert_eq!(sim.state(), &before);
    }

    #[test]
    fn too_few_active_after_switch() {
        let mut robots = on_circle(2.0, &[0.1, 1.7], 1.0);
        robots[0].schedule = UtilitySchedule {
            initial: 1.0,
            switches: vec![(0.003, 0.0)],
        };
        let err = run(&scenario(robots, 2.0, 1.0, 0.01)).unwrap_err();
        assert_eq!(err.root(), &Error::TooFewActive { active: 1 });
        assert!(matches!(err, Error::AtTime { time, .. } if (time - 0.003).abs() < 1e-12));
    }

    #[test]
    fn invalid_scenarios_rejected() {
        let base = scenario(on_circle(2.0, &[0.1, 1.7], 1.0), 2.0, 1.0, 1.0);
        let mut s = base.clone();
        s.robots.truncate(1);
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.dt = 2.0;
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.robots[0].position = Vec3::new(0.0, 0.0, 1.0);
        assert!(s.validate().is_err());
        let mut s = base;
        s.robots[0].schedule.initial = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn unwrapped_angle_is_continuous() {
        let sc = scenario(on_circle(2.0, &[6.2, 3.0], 1.0), 2.0, 3.0, 5.0);
        let log = run(&sc).unwrap();
        let frame = BodyFrame::stationary(Vec3::zeros());
        for pair in log.records.windows(2) {
            for (a, b) in pair[0].robots.iter().zip(&pair[1].robots) {
                assert!((b.phi - a.phi).abs() < 0.1);
            }
        }
        for r in &log.last().unwrap().robots {
            let q = body_coords(&r.position, &frame).unwrap();
            let diff = (r.phi - q.phi).rem_euclid(TAU);
            assert!(diff.min(TAU - diff) < 1e-9);
        }
        // several full turns were made
        assert!(log.last().unwrap().robots[0].phi > 12.0);
    }

    #[test]
    fn gaps_sum_to_full_turn_every_step() {
        let robots = vec![
            robot(3.0, 0.5, 1.0, 2.0),
            robot(-1.0, 2.0, -0.5, 0.5),
            robot(-0.4, -1.5, 0.2, 3.0),
        ];
        let log = run(&scenario(robots, 1.5, 0.6, 4.0)).unwrap();
        for rec in &log.records {
            let sum: f64 = rec.robots.iter().map(|r| r.delta).sum();
            assert!((sum - TAU).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_scenarios_give_identical_logs() {
        let robots = vec![robot(3.0, 0.5, 1.0, 2.0), robot(-1.0, 2.0, -0.5, 0.5), robot(-0.4, -1.5, 0.2, 3.0)];
        let mut sc = scenario(robots, 1.5, 0.6, 1.0);
        sc.noise_std = 0.05;
        sc.seed = 42;
        assert_eq!(run(&sc).unwrap(), run(&sc).unwrap());
        let mut other = sc.clone();
        other.seed = 43;
        assert_ne!(run(&sc).unwrap(), run(&other).unwrap());
    }

    #[test]
    fn speed_cap_limits_world_velocity() {
        let robots = vec![robot(5.0, 0.5, 1.0, 1.0), robot(-4.0, 2.0, -0.5, 1.0)];
        let mut sc = scenario(robots, 2.0, 1.0, 0.5);
        sc.max_speed = Some(0.5);
        let log = run(&sc).unwrap();
        for pair in log.records.windows(2) {
            for (a, b) in pair[0].robots.iter().zip(&pair[1].robots) {
                let speed = (b.position - a.position).norm() / (pair[1].time - pair[0].time);
                assert!(speed <= 0.5 + 1e-9);
            }
        }
    }

    #[test]
    fn rejoining_robot_reenters_at_current_angle() {
        let mut robots = on_circle(2.0, &[0.1, 1.7, 3.3, 4.9], 1.0);
        robots[1].schedule = UtilitySchedule {
            initial: 1.0,
            switches: vec![(0.5, 0.0), (2.0, 1.0)],
        };
        let log = run(&scenario(robots, 2.0, 1.0, 2.5)).unwrap();
        assert_eq!(log.events.len(), 2);
        let rejoin = &log.events[1];
        assert!(rejoin.ring_rebuilt && rejoin.ring.len() == 4);
        let rec = log.records.iter().find(|r| r.time >= 2.0).unwrap();
        let angles: Vec<f64> = {
            let mut a = vec![0.0; 4];
            for r in &rec.robots {
                a[r.id.0] = r.phi;
            }
            a
        };
        let utils = vec![Utility::new(1.0).unwrap(); 4];
        let ring = build_ring(&angles, &utils).unwrap();
        assert_eq!(ring.order(), rejoin.ring.as_slice());
        assert!(angular_gaps(&ring, &angles).is_ok());
    }
}
