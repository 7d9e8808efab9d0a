//! Procedurally generated labelled audio and spectrograms for demos and
//! end-to-end tests.
//!
//! Eight signal families, one per class, each with randomised pitch, level,
//! phase and background noise so that no two clips are identical.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dsp::AudioClip;
use crate::error::{Error, Result};
use crate::neural::Tensor;

pub const SYNTH_CLASSES: usize = 8;

/// Short names of the generated families, in label order.
pub const SYNTH_FAMILIES: [&str; SYNTH_CLASSES] = [
    "low_drone",
    "high_tone",
    "tremolo",
    "noise_beat",
    "chirp",
    "rumble",
    "vibrato_chord",
    "plucks",
];

fn clip_rng(seed: u64, class: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((class as u64) << 32) | index as u64);
    rng
}

/// One clip of `seconds` at `sample_rate` from family `class`.
pub fn synth_clip(class: usize, index: usize, seed: u64, seconds: f64, sample_rate: u32) -> Result<AudioClip> {
    if class >= SYNTH_CLASSES {
        return Err(Error::Label(format!("synthetic class {class} out of range")));
    }
    let mut rng = clip_rng(seed, class, index);
    let sr = sample_rate as f64;
    let n = (seconds * sr).round() as usize;
    let detune = rng.random_range(0.94..1.06);
    let level = rng.random_range(0.25..0.45);
    let phase = rng.random_range(0.0..TAU);
    let noise_level = rng.random_range(0.005..0.02);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = Vec::with_capacity(n);
    // One-pole low-pass state for the rumble family.
    let mut lp = 0.0;
    let beat_hz = rng.random_range(1.8..2.4);
    let sweep_s = rng.random_range(1.5..2.5);
    for i in 0..n {
        let t = i as f64 / sr;
        let s = match class {
            0 => {
                let f = 110.0 * detune;
                (TAU * f * t + phase).sin() + 0.5 * (TAU * 2.0 * f * t).sin()
            }
            1 => (TAU * 2800.0 * detune * t + phase).sin(),
            2 => {
                let am = 0.5 * (1.0 + (TAU * 6.0 * detune * t).sin());
                am * (TAU * 660.0 * detune * t + phase).sin()
            }
            3 => {
                let pos = (t * beat_hz).fract();
                (-pos * 25.0).exp() * noise.sample(&mut rng) * 1.5
            }
            4 => {
                let pos = (t / sweep_s).fract() * sweep_s;
                let (f0, f1) = (400.0 * detune, 4000.0 * detune);
                let k = (f1 - f0) / sweep_s;
                (TAU * (f0 * pos + 0.5 * k * pos * pos) + phase).sin()
            }
            5 => {
                lp += 0.02 * (noise.sample(&mut rng) - lp);
                lp * 6.0
            }
            6 => {
                let vib = 1.0 + 0.01 * (TAU * 5.5 * t).sin();
                [261.63, 329.63, 392.0]
                    .iter()
                    .map(|f| (TAU * f * detune * vib * t + phase).sin() / 2.0)
                    .sum()
            }
            _ => {
                let pos = (t * beat_hz * 2.0).fract() / (beat_hz * 2.0);
                (-pos * 18.0).exp() * (TAU * 1200.0 * detune * t + phase).sin()
            }
        };
        out.push((level * s + noise_level * noise.sample(&mut rng)) as f32);
    }
    let peak = out.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    if peak > 0.99 {
        out.iter_mut().for_each(|v| *v *= 0.99 / peak);
    }
    AudioClip::with_source(out, sample_rate, format!("{}_{index:04}", SYNTH_FAMILIES[class]), 0.0)
}

/// Spectrogram-shaped inputs that a convolutional model separates easily:
/// class `c` carries a bright horizontal stripe in its own band region over
/// a noise floor. Values lie on a dB-like scale around `[-80, 0]`.
pub fn separable_spectrograms(
    per_class: usize,
    n_classes: usize,
    frames: usize,
    bands: usize,
    seed: u64,
) -> (Tensor<f32>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = per_class * n_classes;
    let mut data = Vec::with_capacity(n * frames * bands);
    let mut labels = Vec::with_capacity(n);
    let width = (bands / n_classes).max(1);
    for i in 0..n {
        let c = i % n_classes;
        labels.push(c);
        for _ in 0..frames {
            for b in 0..bands {
                let floor = -60.0 + rng.random_range(-10.0..10.0);
                let v = if b / width == c { -10.0 + rng.random_range(-5.0..5.0) } else { floor };
                data.push(v as f32);
            }
        }
    }
    (Tensor::from_vec(&[n, frames, bands], data).expect("sizes agree"), labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::SAMPLE_RATE;

    #[test]
    fn clips_are_deterministic_and_bounded() {
        for class in 0..SYNTH_CLASSES {
            let a = synth_clip(class, 3, 9, 1.0, SAMPLE_RATE).unwrap();
            let b = synth_clip(class, 3, 9, 1.0, SAMPLE_RATE).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), SAMPLE_RATE as usize);
            assert!(a.samples.iter().all(|v| v.abs() < 1.0));
            let rms = (a.samples.iter().map(|v| (*v as f64).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
            assert!(rms > 0.01, "class {class} rms {rms}");
            assert_ne!(a, synth_clip(class, 4, 9, 1.0, SAMPLE_RATE).unwrap());
        }
        assert!(synth_clip(8, 0, 0, 1.0, SAMPLE_RATE).is_err());
    }

    #[test]
    fn stripes_land_in_class_bands() {
        let (x, y) = separable_spectrograms(2, 4, 3, 16, 1);
        assert_eq!(x.shape(), &[8, 3, 16]);
        assert_eq!(y, vec![0, 1, 2, 3, 0, 1, 2, 3]);
        let row = &x.data()[16 * 3 * 5..16 * 3 * 5 + 16]; // sample 5, class 1, frame 0
        assert!(row[4..8].iter().all(|&v| v > -20.0));
        assert!(row[..4].iter().all(|&v| v < -45.0));
    }
}
