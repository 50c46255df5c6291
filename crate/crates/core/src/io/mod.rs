//! File formats at the edge of the library: scenario files in, CSV logs and
//! run reports out. Angles cross this boundary in degrees.

mod csv_log;
mod report;
mod scenario_file;

use std::path::PathBuf;

use thiserror::Error;

pub use csv_log::{
    event_rows, parse_trajectory, read_trajectory, trajectory_rows, write_events, write_trajectory, EventRow,
    TrajectoryRow, TRAJECTORY_HEADER,
};
pub use report::{ChannelRate, ExpectationResult, RunReport, StageSummary};
pub use scenario_file::{ScenarioFile, StageExpectation, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    /// `row` is the one-based line number in the file, header included.
    #[error("{}: row {row}: {message}", path.display())]
    Csv {
        path: PathBuf,
        row: u64,
        message: String,
    },
}
