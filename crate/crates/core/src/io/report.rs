//! Run report: per-stage spacing, fitted decay rates, minimum gap and the
//! verdict against declared expectations. Computed from CSV rows only, so a
//! saved `trajectory.csv` reproduces the report of the run that wrote it.

use std::fmt;

use super::csv_log::TrajectoryRow;
use super::scenario_file::StageExpectation;
use crate::analysis::series::fit_decay_rate;

/// A channel whose peak stays below this is reported as already converged.
const CONVERGED_PEAK: f64 = 1e-9;

/// Range of fitted decay rates across the robots of a stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelRate {
    Fitted { min: f64, max: f64 },
    Converged,
    Unavailable,
}

impl fmt::Display for ChannelRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelRate::Fitted { min, max } => write!(f, "{min:.3}..{max:.3}"),
            ChannelRate::Converged => f.write_str("converged"),
            ChannelRate::Unavailable => f.write_str("n/a"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSummary {
    /// One-based.
    pub index: usize,
    pub start: f64,
    pub end: f64,
    /// One-based ids of active robots.
    pub robots: Vec<usize>,
    pub mu: Vec<f64>,
    pub final_spacing_deg: Vec<f64>,
    pub desired_spacing_deg: Vec<f64>,
    pub rho_rate: ChannelRate,
    pub z_rate: ChannelRate,
    pub spacing_rate: ChannelRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationResult {
    pub stage: usize,
    pub expected_deg: Vec<f64>,
    pub actual_deg: Vec<f64>,
    pub max_error_deg: f64,
    pub tolerance_deg: f64,
    pub passed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub stages: Vec<StageSummary>,
    pub min_delta_deg: f64,
    pub min_delta_time: f64,
    pub min_delta_robot: usize,
    /// Every logged gap stayed strictly positive.
    pub order_preserved: bool,
    pub expectations: Vec<ExpectationResult>,
}

impl RunReport {
    pub fn from_rows(rows: &[TrajectoryRow], expectations: &[StageExpectation]) -> Self {
        let instants = group_by_time(rows);
        let stages = split_stages(&instants);
        let summaries: Vec<StageSummary> = stages
            .iter()
            .enumerate()
            .map(|(i, stage)| summarize(i + 1, stage))
            .collect();
        let worst = rows
            .iter()
            .min_by(|a, b| a.delta_deg.total_cmp(&b.delta_deg))
            .expect("report needs at least one row");
        let expectations = expectations.iter().map(|e| check(e, &summaries)).collect();
        Self {
            stages: summaries,
            min_delta_deg: worst.delta_deg,
            min_delta_time: worst.t,
            min_delta_robot: worst.robot_id,
            order_preserved: worst.delta_deg > 0.0,
            expectations,
        }
    }

    pub fn passed(&self) -> bool {
        self.order_preserved && self.expectations.iter().all(|e| e.passed)
    }
}

fn group_by_time(rows: &[TrajectoryRow]) -> Vec<&[TrajectoryRow]> {
    rows.chunk_by(|a, b| a.t == b.t).collect()
}

/// Consecutive instants with the same active robots and utilities.
fn split_stages<'a>(instants: &[&'a [TrajectoryRow]]) -> Vec<Vec<&'a [TrajectoryRow]>> {
    let key = |rows: &[TrajectoryRow]| rows.iter().map(|r| (r.robot_id, r.mu)).collect::<Vec<_>>();
    let mut stages: Vec<Vec<&[TrajectoryRow]>> = Vec::new();
    for &instant in instants {
        match stages.last_mut() {
            Some(stage) if key(stage[0]) == key(instant) => stage.push(instant),
            _ => stages.push(vec![instant]),
        }
    }
    stages
}

fn channel_rate(stage: &[&[TrajectoryRow]], value: impl Fn(&TrajectoryRow) -> f64) -> ChannelRate {
    let window = (stage[0][0].t, stage[stage.len() - 1][0].t);
    let robots: Vec<usize> = stage[0].iter().map(|r| r.robot_id).collect();
    let mut rates = Vec::new();
    let mut any_active = false;
    for id in robots {
        let (times, values): (Vec<f64>, Vec<f64>) = stage
            .iter()
            .filter_map(|rows| rows.iter().find(|r| r.robot_id == id))
            .map(|r| (r.t, value(r)))
            .unzip();
        if values.iter().all(|v| v.abs() < CONVERGED_PEAK) {
            continue;
        }
        any_active = true;
        if let Ok(rate) = fit_decay_rate(&times, &values, window) {
            rates.push(rate);
        }
    }
    match (any_active, rates.is_empty()) {
        (false, _) => ChannelRate::Converged,
        (true, true) => ChannelRate::Unavailable,
        (true, false) => ChannelRate::Fitted {
            min: rates.iter().copied().fold(f64::INFINITY, f64::min),
            max: rates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        },
    }
}

fn summarize(index: usize, stage: &[&[TrajectoryRow]]) -> StageSummary {
    let first = stage[0];
    let last = stage[stage.len() - 1];
    StageSummary {
        index,
        start: first[0].t,
        end: last[0].t,
        robots: last.iter().map(|r| r.robot_id).collect(),
        mu: last.iter().map(|r| r.mu).collect(),
        final_spacing_deg: last.iter().map(|r| r.delta_deg).collect(),
        desired_spacing_deg: last.iter().map(|r| r.desired_delta_deg).collect(),
        rho_rate: channel_rate(stage, |r| r.v_rho),
        z_rate: channel_rate(stage, |r| r.v_z),
        spacing_rate: channel_rate(stage, |r| r.delta_deg - r.desired_delta_deg),
    }
}

fn check(expect: &StageExpectation, stages: &[StageSummary]) -> ExpectationResult {
    let mut result = ExpectationResult {
        stage: expect.stage,
        expected_deg: expect.spacing_deg.clone(),
        actual_deg: Vec::new(),
        max_error_deg: f64::INFINITY,
        tolerance_deg: expect.tolerance_deg,
        passed: false,
        note: None,
    };
    let Some(stage) = stages.get(expect.stage.wrapping_sub(1)) else {
        result.note = Some(format!("run has only {} stage(s)", stages.len()));
        return result;
    };
    result.actual_deg = stage.final_spacing_deg.clone();
    if stage.final_spacing_deg.len() != expect.spacing_deg.len() {
        result.note = Some(format!(
            "expected {} active robots, found {}",
            expect.spacing_deg.len(),
            stage.final_spacing_deg.len()
        ));
        return result;
    }
    result.max_error_deg = stage
        .final_spacing_deg
        .iter()
        .zip(&expect.spacing_deg)
        .map(|(a, e)| (a - e).abs())
        .fold(0.0, f64::max);
    result.passed = result.max_error_deg <= expect.tolerance_deg;
    result
}

fn list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.stages {
            let ids: Vec<String> = s.robots.iter().map(|id| format!("r{id}")).collect();
            writeln!(f, "stage {}: t = {:.3} .. {:.3} s, active {}", s.index, s.start, s.end, ids.join(" "))?;
            writeln!(f, "  utilities:             {}", list(&s.mu))?;
            writeln!(f, "  final spacing (deg):   {}", list(&s.final_spacing_deg))?;
            writeln!(f, "  desired spacing (deg): {}", list(&s.desired_spacing_deg))?;
            writeln!(
                f,
                "  decay rate (1/s):      rho {}  z {}  spacing {}",
                s.rho_rate, s.z_rate, s.spacing_rate
            )?;
        }
        writeln!(
            f,
            "min gap: {:.6} deg (r{} at t = {:.3} s); order preserved: {}",
            self.min_delta_deg,
            self.min_delta_robot,
            self.min_delta_time,
            if self.order_preserved { "yes" } else { "NO" }
        )?;
        for e in &self.expectations {
            let verdict = if e.passed { "PASS" } else { "FAIL" };
            write!(
                f,
                "expect stage {}: {verdict} (expected [{}], got [{}], max error {:.3} deg, tolerance {} deg)",
                e.stage,
                list(&e.expected_deg),
                list(&e.actual_deg),
                e.max_error_deg,
                e.tolerance_deg
            )?;
            if let Some(note) = &e.note {
                write!(f, ": {note}")?;
            }
            writeln!(f)?;
        }
        write!(f, "verdict: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}
