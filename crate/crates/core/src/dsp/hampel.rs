//! Hampel filter: replace samples that sit more than `nsigma` robust standard
//! deviations from their windowed median.
//!
//! A single sweep is not idempotent (replacing a spike shrinks the MAD of the
//! windows that contained it, which can newly flag a borderline neighbor), so
//! the filter sweeps until no sample changes. In practice this converges in
//! one or two passes.

use super::DspError;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Scale factor making the MAD a consistent estimator of the standard
/// deviation for Gaussian data.
pub const MAD_SCALE: f64 = 1.4826;

const MAX_SWEEPS: usize = 16;

/// Filters `samples`, returning the cleaned series (length preserved).
/// `window` is the full window width in samples and must be odd and >= 3;
/// windows are truncated at the series edges.
pub fn hampel_filter(samples: &[f64], window: usize, nsigma: f64) -> Result<Vec<f64>, DspError> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(DspError::InvalidHampelWindow(window));
    }
    let mut current = samples.to_vec();
    for _ in 0..MAX_SWEEPS {
        let (next, changed) = sweep(&current, window, nsigma);
        current = next;
        if changed == 0 {
            break;
        }
    }
    Ok(current)
}

/// One replacement sweep; pure in the input, so samples can be processed
/// independently (and in parallel).
fn sweep(samples: &[f64], window: usize, nsigma: f64) -> (Vec<f64>, usize) {
    let n = samples.len();
    let half = window / 2;

    let decide = |scratch: &mut Vec<f64>, i: usize| -> (f64, bool) {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        scratch.clear();
        scratch.extend_from_slice(&samples[lo..hi]);
        let med = median_in_place(scratch);
        for v in scratch.iter_mut() {
            *v = (*v - med).abs();
        }
        let mad = median_in_place(scratch);
        if (samples[i] - med).abs() > nsigma * MAD_SCALE * mad {
            (med, true)
        } else {
            (samples[i], false)
        }
    };

    #[cfg(feature = "parallel")]
    let results: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map_init(|| Vec::with_capacity(window), decide)
        .collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(f64, bool)> = {
        let mut scratch = Vec::with_capacity(window);
        (0..n).map(|i| decide(&mut scratch, i)).collect()
    };

    let changed = results.iter().filter(|(_, c)| *c).count();
    (results.into_iter().map(|(v, _)| v).collect(), changed)
}

/// Median by selection; averages the two central elements for even lengths.
fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    debug_assert!(n > 0);
    let mid = n / 2;
    let (_, upper_mid, _) = values.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *upper_mid;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}
