//! Cross-module checks on whole simulations.

use std::f64::consts::TAU;

use nalgebra::DVector;

use circumnav::analysis::expm;
use circumnav::analysis::order::build_m_delta;
use circumnav::analysis::series::fit_decay_rate;
use circumnav::analysis::spectral::{laplacian, slowest_rate};
use circumnav::control::{compact_form, ControlGains, Setpoints};
use circumnav::formation::{Guideline, UtilitySchedule};
use circumnav::geometry::Vec3;
use circumnav::io::ScenarioFile;
use circumnav::simulation::{run, RobotSpec, Scenario, TrajectoryLog};

fn on_circle(rho: f64, z: f64, angles: &[f64], mu: &[f64]) -> Vec<RobotSpec> {
    angles
        .iter()
        .zip(mu)
        .map(|(&a, &m)| RobotSpec {
            position: Vec3::new(rho * a.cos(), rho * a.sin(), z),
            schedule: UtilitySchedule::constant(m),
            z_star: None,
        })
        .collect()
}

fn gaps(log: &TrajectoryLog, k: usize) -> DVector<f64> {
    DVector::from_iterator(log.records[k].robots.len(), log.records[k].robots.iter().map(|r| r.delta))
}

#[test]
fn halving_the_step_changes_little() {
    let text = include_str!("../scenarios/sim_fg2.scn");
    let mut coarse = ScenarioFile::parse(text).unwrap().scenario;
    coarse.duration = 12.0;
    let mut fine = coarse.clone();
    fine.dt = coarse.dt / 2.0;
    let (a, b) = (run(&coarse).unwrap(), run(&fine).unwrap());
    let (ea, eb) = (a.last().unwrap(), b.last().unwrap());
    assert_eq!(ea.time, eb.time);
    for (ra, rb) in ea.robots.iter().zip(&eb.robots) {
        assert_eq!(ra.id, rb.id);
        assert!((ra.position - rb.position).norm() < 1e-6, "{} vs {}", ra.position, rb.position);
    }
}

#[test]
fn moving_target_is_encircled() {
    let text = include_str!("../scenarios/moving_target.scn");
    let scenario = ScenarioFile::parse(text).unwrap().scenario;
    let log = run(&scenario).unwrap();
    let end = log.last().unwrap();
    let target = Vec3::new(0.2, 0.1, 0.0) * scenario.duration;
    for r in &end.robots {
        let rel = r.position - target;
        assert!((rel.xy().norm() - 2.0).abs() < 1e-6);
        assert!(rel.z.abs() < 1e-6);
        assert!((r.delta - r.desired_delta).abs() < 1e-6);
        assert!((r.command.phi_dot - 0.6).abs() < 1e-6);
    }
}

/// Started on the circle, the gaps obey `Delta' = k_phi M Delta` exactly.
#[test]
fn gaps_follow_the_linear_gap_dynamics() {
    let angles = [0.2, 0.5, 2.9, 4.0, 5.5];
    let mu = [3.0, 0.4, 1.0, 7.0, 2.0];
    for guideline in Guideline::ALL {
        let mut s = Scenario::new(
            on_circle(2.0, 0.0, &angles, &mu),
            ControlGains::new(2.0, 2.0, 1.3).unwrap(),
            Setpoints::new(2.0, 0.8, 0.0).unwrap(),
            guideline,
            6.0,
        );
        s.log_every = 100;
        let log = run(&s).unwrap();
        let m = build_m_delta(guideline, &mu);
        let d0 = gaps(&log, 0);
        for (k, rec) in log.records.iter().enumerate() {
            let predicted = expm(&(&m * (1.3 * rec.time))) * &d0;
            let err = (gaps(&log, k) - predicted).amax();
            assert!(err < 1e-6, "{guideline} t={}: {err:e}", rec.time);
        }
    }
}

#[test]
fn spacing_error_decays_at_the_predicted_rate() {
    let k_phi = 1.2;
    for (mu, guideline) in [
        (vec![1.0; 5], Guideline::Fg1),
        (vec![20.0, 1.0, 20.0, 20.0], Guideline::Fg1),
        (vec![1.0, 2.0, 1.0, 1.0], Guideline::Fg2),
    ] {
        let n = mu.len();
        let angles: Vec<f64> = (0..n).map(|i| 0.3 + 0.9 * i as f64).collect();
        let mut s = Scenario::new(
            on_circle(2.5, 0.3, &angles, &mu),
            ControlGains::new(2.0, 2.0, k_phi).unwrap(),
            Setpoints::new(2.0, 0.5, 0.0).unwrap(),
            guideline,
            20.0,
        );
        s.log_every = 20;
        let log = run(&s).unwrap();
        let (times, norms): (Vec<f64>, Vec<f64>) = log
            .records
            .iter()
            .map(|r| {
                let e = r.robots.iter().map(|x| (x.delta - x.desired_delta).powi(2)).sum::<f64>();
                (r.time, e.sqrt())
            })
            .filter(|&(_, e)| e > 1e-9)
            .unzip();
        let end = *times.last().unwrap();
        let rate = fit_decay_rate(&times, &norms, (end / 2.0, end)).unwrap();
        let (a, _) = compact_form(guideline, &mu);
        let predicted = k_phi * slowest_rate(&laplacian(&a));
        assert!(
            (rate - predicted).abs() < 0.1 * predicted,
            "mu={mu:?}: fitted {rate}, predicted {predicted}"
        );
    }
}

#[test]
fn gaps_always_sum_to_a_full_turn() {
    let text = include_str!("../scenarios/robot_fg1.scn");
    let scenario = ScenarioFile::parse(text).unwrap().scenario;
    let log = run(&scenario).unwrap();
    for rec in &log.records {
        let total: f64 = rec.robots.iter().map(|r| r.delta).sum();
        assert!((total - TAU).abs() < 1e-9, "t={}: {total}", rec.time);
    }
}
