//! `trajectory.csv` and `events.csv`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FileError;
use crate::simulation::TrajectoryLog;

pub const TRAJECTORY_HEADER: &str =
    "t,robot_id,x,y,z,rho,phi,z_body,delta_deg,mu,desired_delta_deg,v_rho,v_phi,v_z";

/// One robot at one logged instant. `robot_id` is one-based, `phi` is the
/// continuous angle in degrees and `v_phi` is in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub robot_id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub rho: f64,
    pub phi: f64,
    pub z_body: f64,
    pub delta_deg: f64,
    pub mu: f64,
    pub desired_delta_deg: f64,
    pub v_rho: f64,
    pub v_phi: f64,
    pub v_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub t: f64,
    pub robot_id: usize,
    pub from: f64,
    pub to: f64,
    pub ring_rebuilt: bool,
    /// Ring members after the event, space separated (`r1 r3 r4`).
    pub ring: String,
}

/// Rows ordered by time, then robot id.
pub fn trajectory_rows(log: &TrajectoryLog) -> Vec<TrajectoryRow> {
    let mut rows = Vec::new();
    for record in &log.records {
        let mut robots: Vec<_> = record.robots.iter().collect();
        robots.sort_by_key(|r| r.id);
        rows.extend(robots.into_iter().map(|r| TrajectoryRow {
            t: record.time,
            robot_id: r.id.label(),
            x: r.position.x,
            y: r.position.y,
            z: r.position.z,
            rho: r.rho,
            phi: r.phi.to_degrees(),
            z_body: r.z,
            delta_deg: r.delta.to_degrees(),
            mu: r.mu,
            desired_delta_deg: r.desired_delta.to_degrees(),
            v_rho: r.command.rho_dot,
            v_phi: r.command.phi_dot,
            v_z: r.command.z_dot,
        }));
    }
    rows
}

pub fn event_rows(log: &TrajectoryLog) -> Vec<EventRow> {
    log.events
        .iter()
        .map(|e| EventRow {
            t: e.time,
            robot_id: e.robot.label(),
            from: e.from,
            to: e.to,
            ring_rebuilt: e.ring_rebuilt,
            ring: e.ring.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(" "),
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &str) -> Result<(), FileError> {
    let io_err = |e: csv::Error| FileError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(io_err)?;
    writer.write_record(header.split(',')).map_err(io_err)?;
    for row in rows {
        writer.serialize(row).map_err(io_err)?;
    }
    writer.flush().map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_trajectory(path: &Path, rows: &[TrajectoryRow]) -> Result<(), FileError> {
    write_rows(path, rows, TRAJECTORY_HEADER)
}

pub fn write_events(path: &Path, rows: &[EventRow]) -> Result<(), FileError> {
    write_rows(path, rows, "t,robot_id,from,to,ring_rebuilt,ring")
}

/// Parses `trajectory.csv` text. The header must match exactly and every row,
/// including the last, must be newline-terminated.
pub fn parse_trajectory(path: &Path, text: &str) -> Result<Vec<TrajectoryRow>, FileError> {
    let csv_err = |row: u64, message: String| FileError::Csv {
        path: path.to_path_buf(),
        row,
        message,
    };
    let header = text.lines().next().unwrap_or("");
    if header != TRAJECTORY_HEADER {
        return Err(csv_err(1, format!("expected header `{TRAJECTORY_HEADER}`, found `{header}`")));
    }
    if !text.ends_with('\n') {
        return Err(csv_err(
            text.lines().count() as u64,
            "truncated file: last row is not newline-terminated".into(),
        ));
    }
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, result) in reader.deserialize::<TrajectoryRow>().enumerate() {
        // data rows start on line 2
        let line = i as u64 + 2;
        let row = result.map_err(|e| {
            let line = e.position().map_or(line, |p| p.line());
            csv_err(line, e.to_string())
        })?;
        if row.robot_id == 0 {
            return Err(csv_err(line, "robot_id is one-based".into()));
        }
        if let Some(prev) = rows.last().map(|r: &TrajectoryRow| r.t) {
            if row.t < prev {
                return Err(csv_err(line, format!("time goes backwards ({} after {prev})", row.t)));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(csv_err(1, "no data rows".into()));
    }
    Ok(rows)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>, FileError> {
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_trajectory(path, &text)
}
