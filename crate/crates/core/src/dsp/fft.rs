//! FFT of arbitrary length: iterative radix-2 for powers of two, Bluestein's
//! chirp-z algorithm for everything else.
//!
//! Bluestein keeps the spectral grid at exactly fs/N for any N, which matters
//! because the rate estimator zero-pads to 4x the window length and window
//! lengths like 20000 samples are not powers of two.

use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// In-place forward DFT, any length.
pub fn fft(data: &mut Vec<Complex64>) {
    let n = data.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        let table = twiddle_table(n);
        fft_pow2(data, &table, false);
    } else {
        *data = bluestein(data);
    }
}

/// Forward twiddles exp(-2 pi i k / n) for k < n/2, memoized per length:
/// the pipeline hits the same transform sizes over and over.
fn twiddle_table(n: usize) -> Arc<Vec<Complex64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<Complex64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(table) = cache.lock().unwrap().get(&n) {
        return table.clone();
    }
    let step = -2.0 * PI / n as f64;
    let table: Arc<Vec<Complex64>> = Arc::new(
        (0..n / 2)
            .map(|k| {
                let (s, c) = (step * k as f64).sin_cos();
                Complex64::new(c, s)
            })
            .collect(),
    );
    let mut guard = cache.lock().unwrap();
    if guard.len() >= 16 {
        guard.clear();
    }
    guard.insert(n, table.clone());
    table
}

/// Iterative Cooley-Tukey radix-2 over a precomputed twiddle table for this
/// exact length; `inverse` conjugates the twiddles and skips the 1/n scaling.
fn fft_pow2(data: &mut [Complex64], table: &[Complex64], inverse: bool) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    debug_assert_eq!(table.len(), n / 2);

    // Bit-reversal permutation.
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = (i as u32).reverse_bits() >> (32 - bits);
        let j = j as usize;
        if i < j {
            data.swap(i, j);
        }
    }

    let mut size = 2;
    while size <= n {
        let half = size / 2;
        let stride = n / size;
        for start in (0..n).step_by(size) {
            for k in 0..half {
                let tw = table[k * stride];
                let w = if inverse { tw.conj() } else { tw };
                let i = start + k;
                let j = i + half;
                let t = w * data[j];
                data[j] = data[i] - t;
                data[i] += t;
            }
        }
        size *= 2;
    }
}

/// Bluestein's algorithm: expresses a length-n DFT as a convolution carried
/// out with power-of-two FFTs. Chirp phases use n^2 mod 2n in integers to
/// avoid precision loss for large indices.
fn bluestein(data: &[Complex64]) -> Vec<Complex64> {
    let n = data.len();
    let m = (2 * n - 1).next_power_of_two();

    let chirp = |k: usize| -> Complex64 {
        let sq = ((k as u64 * k as u64) % (2 * n as u64)) as f64;
        let (s, c) = (PI * sq / n as f64).sin_cos();
        Complex64::new(c, s)
    };

    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        a[k] = data[k] * chirp(k).conj();
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp(0);
    for k in 1..n {
        let c = chirp(k);
        b[k] = c;
        b[m - k] = c;
    }

    let table = twiddle_table(m);
    #[cfg(feature = "parallel")]
    rayon::join(
        || fft_pow2(&mut a, &table, false),
        || fft_pow2(&mut b, &table, false),
    );
    #[cfg(not(feature = "parallel"))]
    {
        fft_pow2(&mut a, &table, false);
        fft_pow2(&mut b, &table, false);
    }
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    fft_pow2(&mut a, &table, true);

    let scale = 1.0 / m as f64;
    (0..n).map(|k| a[k] * scale * chirp(k).conj()).collect()
}

/// Magnitude spectrum of a real series, bins 0..=n/2, after zero padding the
/// input to `pad_factor * len`. Returns (magnitudes, bin width in Hz).
pub fn real_magnitude_spectrum(
    series: &[f64],
    sample_rate: f64,
    pad_factor: usize,
) -> (Vec<f64>, f64) {
    let n = series.len();
    let n_fft = (n * pad_factor.max(1)).max(1);
    let mut buf: Vec<Complex64> = Vec::with_capacity(n_fft);
    buf.extend(series.iter().map(|&x| Complex64::new(x, 0.0)));
    buf.resize(n_fft, Complex64::new(0.0, 0.0));
    fft(&mut buf);
    let mags = buf[..n_fft / 2 + 1].iter().map(|c| c.norm()).collect();
    (mags, sample_rate / n_fft as f64)
}

/// Symmetric Hann window applied in place.
pub fn hann_window(series: &mut [f64]) {
    let n = series.len();
    if n < 2 {
        return;
    }
    for (i, x) in series.iter_mut().enumerate() {
        let w = 0.5 * (1.0 - (2.0 * PI * i as f64 / (n as f64 - 1.0)).cos());
        *x *= w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[Complex64]) -> Vec<Complex64> {
        let n = data.len();
        (0..n)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, x) in data.iter().enumerate() {
                    let angle = -2.0 * PI * (k as f64) * (j as f64) / n as f64;
                    acc += x * Complex64::new(angle.cos(), angle.sin());
                }
                acc
            })
            .collect()
    }

    fn pseudo_signal(n: usize, seed: u64) -> Vec<Complex64> {
        // Deterministic quasi-random values, no RNG needed at this level.
        (0..n)
            .map(|i| {
                let t = (i as f64 + seed as f64 * 0.37).sin() * 1.7;
                Complex64::new(t.cos(), (t * 1.3).sin())
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_mixed_sizes() {
        for &n in &[
            1usize, 2, 3, 4, 5, 8, 12, 15, 16, 30, 80, 100, 101, 128, 250,
        ] {
            let signal = pseudo_signal(n, n as u64);
            let mut got = signal.clone();
            fft(&mut got);
            let want = naive_dft(&signal);
            let scale = want.iter().map(|c| c.norm()).fold(1.0, f64::max);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).norm() / scale < 1e-10, "n={n}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn dc_signal_concentrates_in_bin_zero() {
        let mut data = vec![Complex64::new(1.0, 0.0); 64];
        fft(&mut data);
        assert!((data[0].norm() - 64.0).abs() < 1e-9);
        for c in &data[1..] {
            assert!(c.norm() < 1e-9);
        }
    }

    #[test]
    fn real_spectrum_locates_tone_on_padded_grid() {
        // 0.3 Hz tone, 40 s at 500 Hz, padded 4x: bin width 1/160 Hz, so the
        // tone lands exactly on bin 48.
        let fs = 500.0;
        let n = 20000;
        let series: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * 0.3 * i as f64 / fs).sin())
            .collect();
        let mut windowed = series;
        hann_window(&mut windowed);
        let (mags, bin_hz) = real_magnitude_spectrum(&windowed, fs, 4);
        assert!((bin_hz - fs / 80000.0).abs() < 1e-15);
        let peak = mags
            .iter()
            .enumerate()
            .skip(1)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, 48, "0.3 Hz / (1/160 Hz) = 48");
    }

    #[test]
    fn hann_endpoints_are_zero() {
        let mut v = vec![1.0; 9];
        hann_window(&mut v);
        assert!(v[0].abs() < 1e-15);
        assert!(v[8].abs() < 1e-15);
        assert!((v[4] - 1.0).abs() < 1e-12);
    }
}
