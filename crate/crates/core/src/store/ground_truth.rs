//! Ground-truth reference series: accelerometer readings for breathing and
//! oximeter bpm for the pulse, both as `time_s,value` CSV.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::StoreError;

/// One monotone (time, value) series.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSeries {
    pub times_s: Vec<f64>,
    pub values: Vec<f64>,
}

impl GroundTruthSeries {
    pub fn len(&self) -> usize {
        self.times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_s.is_empty()
    }

    pub fn start_s(&self) -> Option<f64> {
        self.times_s.first().copied()
    }

    pub fn end_s(&self) -> Option<f64> {
        self.times_s.last().copied()
    }

    /// Mean value over [start, end]; `None` when no sample falls inside.
    pub fn mean_in_window(&self, start_s: f64, end_s: f64) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (t, v) in self.times_s.iter().zip(&self.values) {
            if *t >= start_s && *t <= end_s {
                sum += v;
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    }

    /// Samples inside [start, end] as an evenly-sampled slice view.
    pub fn window(&self, start_s: f64, end_s: f64) -> (Vec<f64>, Vec<f64>) {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (t, v) in self.times_s.iter().zip(&self.values) {
            if *t >= start_s && *t <= end_s {
                times.push(*t);
                values.push(*v);
            }
        }
        (times, values)
    }
}

/// The two reference instruments for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Abdomen accelerometer, arbitrary units; breathing rate is extracted
    /// from it with the same spectral estimator as the CSI path.
    pub breath: GroundTruthSeries,
    /// Fingertip oximeter readout in bpm, used directly.
    pub pulse: GroundTruthSeries,
}

impl GroundTruth {
    pub fn load(breath_path: &Path, pulse_path: &Path) -> Result<Self, StoreError> {
        Ok(Self {
            breath: read_ground_truth(breath_path)?,
            pulse: read_ground_truth(pulse_path)?,
        })
    }
}

/// Parses a `time_s,value` CSV with a mandatory header; time must be
/// strictly increasing.
pub fn read_ground_truth(path: &Path) -> Result<GroundTruthSeries, StoreError> {
    let reader = BufReader::new(File::open(path)?);
    let mut times_s = Vec::new();
    let mut values = Vec::new();
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or(StoreError::CsvParse {
        line: 1,
        message: "empty file".into(),
    })?;
    let header = header?;
    if header.trim() != "time_s,value" {
        return Err(StoreError::CsvParse {
            line: 1,
            message: format!("expected header \"time_s,value\", found {header:?}"),
        });
    }

    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split(',');
        let t: f64 = parse_field(fields.next(), line_no, "time_s")?;
        let v: f64 = parse_field(fields.next(), line_no, "value")?;
        if fields.next().is_some() {
            return Err(StoreError::CsvParse {
                line: line_no,
                message: "expected exactly two columns".into(),
            });
        }
        if let Some(&last) = times_s.last() {
            if t <= last {
                return Err(StoreError::NonMonotoneTime { line: line_no });
            }
        }
        times_s.push(t);
        values.push(v);
    }
    Ok(GroundTruthSeries { times_s, values })
}

fn parse_field(field: Option<&str>, line: usize, name: &str) -> Result<f64, StoreError> {
    let raw = field.ok_or_else(|| StoreError::CsvParse {
        line,
        message: format!("missing {name} column"),
    })?;
    raw.trim().parse().map_err(|_| StoreError::CsvParse {
        line,
        message: format!("cannot parse {name} from {raw:?}"),
    })
}
