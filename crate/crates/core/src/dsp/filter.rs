//! Butterworth bandpass design and zero-phase filtering.
//!
//! The design path is the classic chain: analog lowpass prototype poles,
//! lowpass-to-bandpass transform, bilinear mapping with frequency pre-warp,
//! then cascaded biquad sections. Filtering runs forward-backward so the
//! result has exactly zero phase, at the cost of squaring the magnitude
//! response (which only sharpens the band edges).

use num_complex::Complex64;
use std::f64::consts::PI;

use super::DspError;

/// One second-order section, direct form II transposed, `a0` normalized to 1.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    fn run(&self, input: &mut [f64]) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for x in input.iter_mut() {
            let y = self.b0 * *x + s1;
            s1 = self.b1 * *x - self.a1 * y + s2;
            s2 = self.b2 * *x - self.a2 * y;
            *x = y;
        }
    }
}

/// Cascaded Butterworth bandpass of prototype order `order` (2*order poles).
#[derive(Debug, Clone)]
pub struct ButterworthBandpass {
    sections: Vec<Biquad>,
    gain: f64,
    low_hz: f64,
    sample_rate: f64,
}

impl ButterworthBandpass {
    pub fn design(
        order: usize,
        low_hz: f64,
        high_hz: f64,
        sample_rate: f64,
    ) -> Result<Self, DspError> {
        if order == 0 {
            return Err(DspError::InvalidFilterOrder(order));
        }
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate / 2.0) {
            return Err(DspError::InvalidBand {
                low_hz,
                high_hz,
                sample_rate,
            });
        }

        // Pre-warped analog band edges for the bilinear map s = (1-z^-1)/(1+z^-1).
        let w1 = (PI * low_hz / sample_rate).tan();
        let w2 = (PI * high_hz / sample_rate).tan();
        let w0_sq = w1 * w2;
        let bw = w2 - w1;

        // Analog lowpass prototype poles on the unit circle, left half-plane.
        let prototype: Vec<Complex64> = (0..order)
            .map(|k| {
                let theta = PI / 2.0 + PI * (2 * k + 1) as f64 / (2 * order) as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();

        let mut sections = Vec::with_capacity(order);
        let bilinear =
            |s: Complex64| (Complex64::new(1.0, 0.0) + s) / (Complex64::new(1.0, 0.0) - s);

        for p in prototype {
            if p.im <= 1e-12 && p.im >= -1e-12 {
                // Real prototype pole (odd order): its two bandpass poles are
                // roots of one real quadratic, forming a single section.
                let half = 0.5 * bw * p;
                let disc = (half * half - Complex64::new(w0_sq, 0.0)).sqrt();
                let z_a = bilinear(half + disc);
                let z_b = bilinear(half - disc);
                sections.push(section_from_pole_product(z_a, z_b));
            } else if p.im > 0.0 {
                // Each bandpass pole of a complex prototype pole pairs with
                // its conjugate from the conjugate prototype pole, so each
                // root yields one conjugate-pair section.
                let half = 0.5 * bw * p;
                let disc = (half * half - Complex64::new(w0_sq, 0.0)).sqrt();
                for s in [half + disc, half - disc] {
                    let z = bilinear(s);
                    sections.push(section_from_conjugate_pair(z));
                }
            }
        }

        for sec in &sections {
            // Stability: both roots of z^2 + a1 z + a2 inside the unit circle.
            debug_assert!(sec.a2 < 1.0 + 1e-12, "unstable section: {sec:?}");
        }

        // Normalize to unit gain at the geometric center frequency.
        let wc = 2.0 * w0_sq.sqrt().atan();
        let z = Complex64::new(wc.cos(), wc.sin());
        let mut response = Complex64::new(1.0, 0.0);
        for sec in &sections {
            let num = z * z * sec.b0 + z * sec.b1 + Complex64::new(sec.b2, 0.0);
            let den = z * z + z * sec.a1 + Complex64::new(sec.a2, 0.0);
            response = response * num / den;
        }
        let gain = 1.0 / response.norm();

        Ok(Self {
            sections,
            gain,
            low_hz,
            sample_rate,
        })
    }

    /// Single forward pass (nonzero phase); exposed for tests.
    fn run_forward(&self, data: &mut [f64]) {
        for sec in &self.sections {
            sec.run(data);
        }
        for x in data.iter_mut() {
            *x *= self.gain;
        }
    }

    /// Zero-phase filtering: demean, pad by odd reflection, run the cascade
    /// forward and backward, crop. The output of a bandpass has no DC by
    /// construction; demeaning first removes the dominant startup transient.
    pub fn filtfilt(&self, series: &[f64]) -> Vec<f64> {
        let n = series.len();
        if n < 2 {
            return vec![0.0; n];
        }
        let mean = series.iter().sum::<f64>() / n as f64;

        // Three periods of the lowest passband frequency tames edge
        // transients for the narrow bands used here.
        let pad = ((3.0 * self.sample_rate / self.low_hz).ceil() as usize).min(n - 1);

        let mut ext = Vec::with_capacity(n + 2 * pad);
        let first = series[0] - mean;
        let last = series[n - 1] - mean;
        for i in 0..pad {
            ext.push(2.0 * first - (series[pad - i] - mean));
        }
        ext.extend(series.iter().map(|&x| x - mean));
        for i in 0..pad {
            ext.push(2.0 * last - (series[n - 2 - i] - mean));
        }

        self.run_forward(&mut ext);
        ext.reverse();
        self.run_forward(&mut ext);
        ext.reverse();

        ext[pad..pad + n].to_vec()
    }
}

fn section_from_conjugate_pair(z: Complex64) -> Biquad {
    Biquad {
        b0: 1.0,
        b1: 0.0,
        b2: -1.0,
        a1: -2.0 * z.re,
        a2: z.norm_sqr(),
    }
}

fn section_from_pole_product(z_a: Complex64, z_b: Complex64) -> Biquad {
    let sum = z_a + z_b;
    let prod = z_a * z_b;
    Biquad {
        b0: 1.0,
        b1: 0.0,
        b2: -1.0,
        a1: -sum.re,
        a2: prod.re,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / fs).sin())
            .collect()
    }

    /// RMS over the middle half, away from any residual edge effects.
    fn mid_rms(x: &[f64]) -> f64 {
        let n = x.len();
        let mid = &x[n / 4..3 * n / 4];
        (mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ButterworthBandpass::design(0, 0.25, 0.5, 500.0).is_err());
        assert!(ButterworthBandpass::design(4, 0.5, 0.25, 500.0).is_err());
        assert!(ButterworthBandpass::design(4, 0.0, 0.5, 500.0).is_err());
        assert!(ButterworthBandpass::design(4, 1.0, 300.0, 500.0).is_err());
        assert!(ButterworthBandpass::design(4, 0.25, 0.5, 500.0).is_ok());
        // Odd orders hit the real-pole branch.
        assert!(ButterworthBandpass::design(3, 0.25, 0.5, 500.0).is_ok());
    }

    #[test]
    fn dc_input_is_rejected() {
        let filt = ButterworthBandpass::design(4, 0.25, 0.5, 50.0).unwrap();
        let series = vec![7.25; 4000];
        let out = filt.filtfilt(&series);
        let max = out.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        assert!(max <= 1e-6 * 7.25, "DC leak {max}");
    }

    #[test]
    fn output_is_invariant_to_constant_offset() {
        let fs = 50.0;
        let n = 4000;
        let base = tone(0.35, fs, n);
        let shifted: Vec<f64> = base.iter().map(|x| x + 42.0).collect();
        let filt = ButterworthBandpass::design(4, 0.25, 0.5, fs).unwrap();
        let a = filt.filtfilt(&base);
        let b = filt.filtfilt(&shifted);
        let scale = mid_rms(&a).max(1e-12);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() / scale < 1e-6);
        }
    }

    #[test]
    fn band_center_tone_amplitude_preserved() {
        let fs = 50.0;
        let center = (0.25_f64 * 0.5).sqrt();
        let series = tone(center, fs, 6000);
        let filt = ButterworthBandpass::design(4, 0.25, 0.5, fs).unwrap();
        let out = filt.filtfilt(&series);
        let ratio = mid_rms(&out) / mid_rms(&series);
        assert!((ratio - 1.0).abs() < 0.05, "center gain ratio {ratio}");
    }

    #[test]
    fn octave_outside_edge_attenuated_20db() {
        let fs = 50.0;
        let filt = ButterworthBandpass::design(4, 0.25, 0.5, fs).unwrap();
        for freq in [1.0, 0.125] {
            let series = tone(freq, fs, 6000);
            let out = filt.filtfilt(&series);
            let ratio = mid_rms(&out) / mid_rms(&series);
            assert!(ratio < 0.1, "tone at {freq} Hz attenuated only to {ratio}");
        }
    }

    #[test]
    fn mixture_keeps_in_band_and_drops_out_of_band() {
        let fs = 50.0;
        let n = 8000;
        let mixed: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                (2.0 * PI * 0.3 * t).sin() + (2.0 * PI * 1.2 * t).sin()
            })
            .collect();
        let filt = ButterworthBandpass::design(4, 0.25, 0.5, fs).unwrap();
        let out = filt.filtfilt(&mixed);

        // Amplitude of each component by projection onto quadrature pair.
        let component = |x: &[f64], f: f64| -> f64 {
            let m = x.len();
            let lo = m / 4;
            let hi = 3 * m / 4;
            let mut c = 0.0;
            let mut s = 0.0;
            for (i, &v) in x.iter().enumerate().take(hi).skip(lo) {
                let t = i as f64 / fs;
                c += v * (2.0 * PI * f * t).cos();
                s += v * (2.0 * PI * f * t).sin();
            }
            let len = (hi - lo) as f64;
            2.0 * (c * c + s * s).sqrt() / len
        };
        let kept = component(&out, 0.3);
        let dropped = component(&out, 1.2);
        assert!(kept > 0.8, "0.3 Hz component should survive, got {kept}");
        assert!(
            dropped < kept / 10.0,
            "1.2 Hz should be down >= 20 dB: {dropped} vs {kept}"
        );
    }

    #[test]
    fn zero_phase_preserves_pulse_peak_index() {
        let fs = 50.0;
        let n = 6000;
        let center_freq = (0.25_f64 * 0.5).sqrt();
        let peak_at = n / 2;
        let sigma = 4.0 * fs; // 4 s envelope
        let series: Vec<f64> = (0..n)
            .map(|i| {
                let d = (i as f64 - peak_at as f64) / sigma;
                (-d * d).exp() * (2.0 * PI * center_freq * (i as f64 - peak_at as f64) / fs).cos()
            })
            .collect();
        let filt = ButterworthBandpass::design(4, 0.25, 0.5, fs).unwrap();
        let out = filt.filtfilt(&series);
        let got = out
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(
            (got as i64 - peak_at as i64).abs() <= 1,
            "peak moved from {peak_at} to {got}"
        );
    }

    #[test]
    fn output_mean_is_near_zero() {
        let fs = 50.0;
        let series: Vec<f64> = tone(0.35, fs, 5000).iter().map(|x| x + 3.0).collect();
        let filt = ButterworthBandpass::design(4, 0.25, 0.5, fs).unwrap();
        let out = filt.filtfilt(&series);
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        assert!(mean.abs() < 1e-3, "mean {mean}");
    }
}
