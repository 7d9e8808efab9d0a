use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::AudioClip;
use crate::error::{Error, Result};

/// Short-time spectrum, frames stored row-major as `n_frames x n_bins`.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram {
    pub frames: Vec<Complex<f64>>,
    pub n_frames: usize,
    pub n_bins: usize,
    pub n_fft: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl ComplexSpectrogram {
    pub fn frame(&self, t: usize) -> &[Complex<f64>] {
        &self.frames[t * self.n_bins..(t + 1) * self.n_bins]
    }

    /// Center frequency of bin `k` in Hz.
    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.n_fft as f64
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.frames.iter().map(|c| c.norm()).collect()
    }

    pub fn power(&self) -> Vec<f64> {
        self.frames.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Number of centered frames for `n_samples` at the given hop.
pub fn frame_count(n_samples: usize, hop: usize) -> usize {
    1 + n_samples / hop
}

/// Maps a (possibly out-of-range) index into `0..n` by mirror reflection
/// about the end samples, without repeating them.
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let r = i.rem_euclid(period);
    if r < n as isize {
        r as usize
    } else {
        (period - r) as usize
    }
}

/// Copies the frame centered at `t * hop` (reflection padded) into `out`.
pub(crate) fn centered_frame(x: &[f32], t: usize, hop: usize, out: &mut [f64]) {
    let n = x.len();
    let half = (out.len() / 2) as isize;
    let start = (t * hop) as isize - half;
    for (j, slot) in out.iter_mut().enumerate() {
        let i = start + j as isize;
        let idx = if i >= 0 && (i as usize) < n {
            i as usize
        } else {
            reflect_index(i, n)
        };
        *slot = x[idx] as f64;
    }
}

/// Hann-windowed, center-padded short-time Fourier transform.
///
/// Produces `1 + n / hop` frames of `n_fft / 2 + 1` bins.
pub fn stft(clip: &AudioClip, n_fft: usize, hop: usize) -> Result<ComplexSpectrogram> {
    if !n_fft.is_power_of_two() || n_fft < 2 {
        return Err(Error::Domain(format!("n_fft {n_fft} is not a power of two")));
    }
    if hop == 0 || hop > n_fft {
        return Err(Error::Domain(format!("hop {hop} must lie in 1..={n_fft}")));
    }
    if clip.is_empty() {
        return Err(Error::Domain("cannot analyse an empty clip".into()));
    }
    let n_frames = frame_count(clip.len(), hop);
    let n_bins = n_fft / 2 + 1;
    let window = hann_window(n_fft);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    let mut real = vec![0.0; n_fft];
    let mut buf = vec![Complex::default(); n_fft];
    let mut frames = Vec::with_capacity(n_frames * n_bins);
    for t in 0..n_frames {
        centered_frame(&clip.samples, t, hop, &mut real);
        for ((c, &r), &w) in buf.iter_mut().zip(&real).zip(&window) {
            *c = Complex::new(r * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        frames.extend_from_slice(&buf[..n_bins]);
    }
    Ok(ComplexSpectrogram {
        frames,
        n_frames,
        n_bins,
        n_fft,
        hop,
        sample_rate: clip.sample_rate,
    })
}
