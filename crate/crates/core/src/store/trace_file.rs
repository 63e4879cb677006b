//! Binary CSI trace files.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "CSIT" | version u16 | sample_rate f64 | n_antennas u8
//! | n_subcarriers u16 | carrier_freq f64 | subcarrier_spacing f64
//! frame*: timestamp u64 (microseconds)
//!         | (re f32, im f32) per (antenna, subcarrier), antenna-major
//! ```
//!
//! The round trip is bitwise lossless: timestamps are stored as the integer
//! microseconds a trace carries in memory and values as the same f32 pairs.

use num_complex::Complex32;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::StoreError;
use crate::channel::{CsiTrace, TraceMeta};
use crate::dsp::SpectrumEstimate;

pub const TRACE_MAGIC: [u8; 4] = *b"CSIT";
pub const TRACE_FORMAT_VERSION: u16 = 1;

const HEADER_LEN: usize = 4 + 2 + 8 + 1 + 2 + 8 + 8;

pub fn write_trace(path: &Path, trace: &CsiTrace) -> Result<(), StoreError> {
    if trace.n_antennas > u8::MAX as usize {
        return Err(StoreError::InvalidHeader(format!(
            "antenna count {} exceeds format limit {}",
            trace.n_antennas,
            u8::MAX
        )));
    }
    if trace.n_subcarriers > u16::MAX as usize {
        return Err(StoreError::InvalidHeader(format!(
            "subcarrier count {} exceeds format limit {}",
            trace.n_subcarriers,
            u16::MAX
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&TRACE_MAGIC)?;
    w.write_all(&TRACE_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&trace.sample_rate.to_le_bytes())?;
    w.write_all(&[trace.n_antennas as u8])?;
    w.write_all(&(trace.n_subcarriers as u16).to_le_bytes())?;
    w.write_all(&trace.carrier_freq_hz.to_le_bytes())?;
    w.write_all(&trace.subcarrier_spacing_hz.to_le_bytes())?;

    let stride = trace.n_antennas * trace.n_subcarriers;
    for frame in 0..trace.n_frames() {
        w.write_all(&trace.timestamps_us()[frame].to_le_bytes())?;
        let values = &trace.values()[frame * stride..(frame + 1) * stride];
        for v in values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<CsiTrace, StoreError> {
    let file = File::open(path)?;
    let total_len = file.metadata()?.len();
    let mut reader = BufReader::new(file);
    let (mut frames, meta) = TraceFrameReader::new(&mut reader)?;

    let frame_len = (8 + meta.n_antennas * meta.n_subcarriers * 8) as u64;
    let payload = total_len - HEADER_LEN as u64;
    if !payload.is_multiple_of(frame_len) {
        // Complete frames parse fine; the remainder is a torn frame.
        return Err(StoreError::Truncated {
            frame_index: (payload / frame_len) as usize,
        });
    }

    let n_frames = (payload / frame_len) as usize;
    let mut timestamps = Vec::with_capacity(n_frames);
    let mut values = Vec::with_capacity(n_frames * meta.n_antennas * meta.n_subcarriers);
    while let Some((ts, frame)) = frames.next_frame()? {
        timestamps.push(ts);
        values.extend(frame);
    }
    Ok(CsiTrace::new(
        meta.sample_rate,
        meta.n_antennas,
        meta.n_subcarriers,
        meta.carrier_freq_hz,
        meta.subcarrier_spacing_hz,
        timestamps,
        values,
    )?)
}

/// Incremental frame reader over any byte stream (file, pipe, stdin).
pub struct TraceFrameReader<R: Read> {
    reader: R,
    stride: usize,
    frames_read: usize,
}

impl<R: Read> TraceFrameReader<R> {
    /// Reads and validates the header, leaving the reader at the first frame.
    pub fn new(mut reader: R) -> Result<(Self, TraceMeta), StoreError> {
        let mut magic = [0u8; 4];
        reader
            .read_exact(&mut magic)
            .map_err(|_| StoreError::InvalidHeader("file shorter than the header".into()))?;
        if magic != TRACE_MAGIC {
            return Err(StoreError::BadMagic { found: magic });
        }
        let version = read_u16(&mut reader)?;
        if version != TRACE_FORMAT_VERSION {
            return Err(StoreError::VersionMismatch {
                found: version,
                expected: TRACE_FORMAT_VERSION,
            });
        }
        let sample_rate = read_f64(&mut reader)?;
        let n_antennas = read_u8(&mut reader)? as usize;
        let n_subcarriers = read_u16(&mut reader)? as usize;
        let carrier_freq_hz = read_f64(&mut reader)?;
        let subcarrier_spacing_hz = read_f64(&mut reader)?;
        if n_antennas == 0 || n_subcarriers == 0 {
            return Err(StoreError::InvalidHeader(
                "antenna and subcarrier counts must be at least 1".into(),
            ));
        }
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(StoreError::InvalidHeader(format!(
                "sample rate {sample_rate} not positive"
            )));
        }
        let meta = TraceMeta {
            sample_rate,
            n_antennas,
            n_subcarriers,
            carrier_freq_hz,
            subcarrier_spacing_hz,
        };
        Ok((
            Self {
                reader,
                stride: n_antennas * n_subcarriers,
                frames_read: 0,
            },
            meta,
        ))
    }

    /// Next frame, or `None` at a clean end of stream. A torn frame reports
    /// the index it would have had.
    pub fn next_frame(&mut self) -> Result<Option<(u64, Vec<Complex32>)>, StoreError> {
        let mut ts_bytes = [0u8; 8];
        match read_exact_or_eof(&mut self.reader, &mut ts_bytes)? {
            ReadOutcome::Eof => return Ok(None),
            ReadOutcome::Partial => {
                return Err(StoreError::Truncated {
                    frame_index: self.frames_read,
                })
            }
            ReadOutcome::Full => {}
        }
        let ts = u64::from_le_bytes(ts_bytes);
        let mut payload = vec![0u8; self.stride * 8];
        match read_exact_or_eof(&mut self.reader, &mut payload)? {
            ReadOutcome::Full => {}
            _ => {
                return Err(StoreError::Truncated {
                    frame_index: self.frames_read,
                })
            }
        }
        let values = payload
            .chunks_exact(8)
            .map(|c| {
                Complex32::new(
                    f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                    f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
                )
            })
            .collect();
        self.frames_read += 1;
        Ok(Some((ts, values)))
    }

    pub fn frames_read(&self) -> usize {
        self.frames_read
    }
}

enum ReadOutcome {
    Full,
    Partial,
    Eof,
}

fn read_exact_or_eof<R: Read>(reader: &mut R, buf: &mut [u8]) -> Result<ReadOutcome, StoreError> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = reader.read(&mut buf[filled..])?;
        if n == 0 {
            return Ok(if filled == 0 {
                ReadOutcome::Eof
            } else {
                ReadOutcome::Partial
            });
        }
        filled += n;
    }
    Ok(ReadOutcome::Full)
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8, StoreError> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)
        .map_err(|_| StoreError::InvalidHeader("file shorter than the header".into()))?;
    Ok(b[0])
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16, StoreError> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)
        .map_err(|_| StoreError::InvalidHeader("file shorter than the header".into()))?;
    Ok(u16::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, StoreError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| StoreError::InvalidHeader("file shorter than the header".into()))?;
    Ok(f64::from_le_bytes(b))
}

/// Plot export: `time_s, amplitude` of one (antenna, subcarrier) stream.
pub fn export_amplitude_csv(
    path: &Path,
    trace: &CsiTrace,
    antenna: usize,
    subcarrier: usize,
) -> Result<(), StoreError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "time_s,amplitude")?;
    let series = trace.amplitude_series(antenna, subcarrier);
    for (frame, amp) in series.iter().enumerate() {
        writeln!(w, "{},{}", trace.timestamp_s(frame), amp)?;
    }
    w.flush()?;
    Ok(())
}

/// Plot export: `freq_hz, magnitude` of a band spectrum.
pub fn export_spectrum_csv(path: &Path, spectrum: &SpectrumEstimate) -> Result<(), StoreError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "freq_hz,magnitude")?;
    for (f, m) in spectrum.frequencies.iter().zip(&spectrum.magnitudes) {
        writeln!(w, "{f},{m}")?;
    }
    w.flush()?;
    Ok(())
}
