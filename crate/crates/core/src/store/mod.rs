//! Durable formats: the binary CSI trace file, ground-truth CSV parsing,
//! plot-friendly CSV exports, and a directory-backed session log.

mod ground_truth;
mod session;
mod trace_file;

pub use ground_truth::{read_ground_truth, GroundTruth, GroundTruthSeries};
pub use session::{append_session, list_sessions, SessionRecord};
pub use trace_file::{
    export_amplitude_csv, export_spectrum_csv, read_trace, write_trace, TraceFrameReader,
    TRACE_FORMAT_VERSION, TRACE_MAGIC,
};

use thiserror::Error;

use crate::channel::ChannelError;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected \"CSIT\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported trace format version {found}, expected {expected}")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("invalid trace header: {0}")]
    InvalidHeader(String),
    #[error("file truncated inside frame {frame_index}")]
    Truncated { frame_index: usize },
    #[error(transparent)]
    TraceInvalid(#[from] ChannelError),
    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },
    #[error("ground-truth time not strictly increasing at line {line}")]
    NonMonotoneTime { line: usize },
    #[error("session id {0:?} already exists in the store")]
    DuplicateSessionId(String),
    #[error("session id {0:?} invalid: use letters, digits, '-', '_'")]
    InvalidSessionId(String),
    #[error("corrupt session record {path}: {source}")]
    SessionCorrupt {
        path: String,
        source: serde_json::Error,
    },
}
