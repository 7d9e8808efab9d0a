use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::db::power_to_db_in_place;
use super::stft::{stft, ComplexSpectrogram};
use super::{AudioClip, CLIP_SAMPLES, SAMPLE_RATE};
use crate::error::{Error, Result};

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular, area-normalized mel filters over FFT bins.
#[derive(Debug, Clone)]
pub struct MelFilterBank {
    /// `n_mels x n_bins`, row-major.
    pub weights: Vec<f64>,
    pub n_mels: usize,
    pub n_bins: usize,
    pub mel_center_hz: Vec<f64>,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    support: Vec<Range<usize>>,
}

impl MelFilterBank {
    pub fn row(&self, m: usize) -> &[f64] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    /// Projects one power (or magnitude) frame onto the mel bands.
    pub fn apply_frame(&self, frame: &[f64], out: &mut [f64]) {
        debug_assert_eq!(frame.len(), self.n_bins);
        for (m, slot) in out.iter_mut().enumerate() {
            let range = self.support[m].clone();
            *slot = self.row(m)[range.clone()]
                .iter()
                .zip(&frame[range])
                .map(|(w, p)| w * p)
                .sum();
        }
    }

    /// Applies the bank to a `n_frames x n_bins` matrix.
    pub fn apply(&self, frames: &[f64], n_frames: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_frames * self.n_mels];
        for t in 0..n_frames {
            self.apply_frame(
                &frames[t * self.n_bins..(t + 1) * self.n_bins],
                &mut out[t * self.n_mels..(t + 1) * self.n_mels],
            );
        }
        out
    }
}

/// Builds `n_mels` triangular filters with corners at equally spaced mel
/// points between `fmin` and `fmax`.
pub fn mel_filterbank(
    n_mels: usize,
    n_fft: usize,
    sr: u32,
    fmin: f64,
    fmax: f64,
) -> Result<MelFilterBank> {
    let nyquist = sr as f64 / 2.0;
    if n_mels == 0 {
        return Err(Error::Domain("n_mels must be at least 1".into()));
    }
    if !(0.0 <= fmin && fmin < fmax && fmax <= nyquist) {
        return Err(Error::Domain(format!(
            "need 0 <= fmin < fmax <= {nyquist}, got fmin={fmin} fmax={fmax}"
        )));
    }
    let n_bins = n_fft / 2 + 1;
    let (mel_lo, mel_hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let corners: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz: Vec<f64> = (0..n_bins).map(|k| k as f64 * sr as f64 / n_fft as f64).collect();

    let mut weights = vec![0.0; n_mels * n_bins];
    let mut support = Vec::with_capacity(n_mels);
    for m in 0..n_mels {
        let (lo, center, hi) = (corners[m], corners[m + 1], corners[m + 2]);
        let norm = 2.0 / (hi - lo);
        let row = &mut weights[m * n_bins..(m + 1) * n_bins];
        let (mut first, mut last) = (usize::MAX, 0);
        for (k, &f) in bin_hz.iter().enumerate() {
            let rising = (f - lo) / (center - lo);
            let falling = (hi - f) / (hi - center);
            let w = rising.min(falling);
            if w > 0.0 {
                row[k] = w * norm;
                first = first.min(k);
                last = k;
            }
        }
        if first == usize::MAX {
            return Err(Error::Resolution(format!(
                "mel band {m} ({lo:.2}..{hi:.2} Hz) contains no FFT bin at n_fft={n_fft}, sr={sr}; \
                 use fewer mel bands or a longer FFT"
            )));
        }
        support.push(first..last + 1);
    }
    Ok(MelFilterBank {
        weights,
        n_mels,
        n_bins,
        mel_center_hz: corners[1..=n_mels].to_vec(),
        fmin_hz: fmin,
        fmax_hz: fmax,
        support,
    })
}

/// Parameters of the deep-model input representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MelConfig {
    pub n_fft: usize,
    /// Explicit hop in samples. When unset, the hop is derived so a 30 s clip
    /// yields exactly `n_frames` frames.
    pub hop: Option<usize>,
    pub n_frames: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            n_fft: 2048,
            hop: None,
            n_frames: 640,
            n_mels: 128,
            fmin: 0.0,
            fmax: SAMPLE_RATE as f64 / 2.0,
        }
    }
}

impl MelConfig {
    /// Hop actually used: the configured one, or `floor(661500 / (n_frames - 1))`.
    pub fn effective_hop(&self) -> usize {
        self.hop
            .unwrap_or_else(|| CLIP_SAMPLES / self.n_frames.saturating_sub(1).max(1))
    }

    pub fn output_frames(&self) -> usize {
        super::frame_count(CLIP_SAMPLES, self.effective_hop())
    }

    pub fn filterbank(&self) -> Result<MelFilterBank> {
        mel_filterbank(self.n_mels, self.n_fft, SAMPLE_RATE, self.fmin, self.fmax)
    }
}

/// Log-power mel spectrogram, `n_frames x n_mels` row-major, in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub values: Vec<f32>,
    pub n_frames: usize,
    pub n_mels: usize,
}

impl MelSpectrogram {
    pub fn frame(&self, t: usize) -> &[f32] {
        &self.values[t * self.n_mels..(t + 1) * self.n_mels]
    }
}

/// Mel power (linear) of an existing STFT.
pub(crate) fn mel_power(spec: &ComplexSpectrogram, bank: &MelFilterBank) -> Vec<f64> {
    bank.apply(&spec.power(), spec.n_frames)
}

/// The 640 x 128 dB mel spectrogram of a pipeline-standard clip.
pub fn mel_spectrogram(clip: &AudioClip) -> Result<MelSpectrogram> {
    mel_spectrogram_with(clip, &MelConfig::default(), None)
}

/// Same as [`mel_spectrogram`] with explicit parameters. Pass a prebuilt
/// filterbank to avoid reconstructing it per clip.
pub fn mel_spectrogram_with(
    clip: &AudioClip,
    cfg: &MelConfig,
    bank: Option<&MelFilterBank>,
) -> Result<MelSpectrogram> {
    clip.require_standard("mel_spectrogram")?;
    let owned;
    let bank = match bank {
        Some(b) => b,
        None => {
            owned = cfg.filterbank()?;
            &owned
        }
    };
    let spec = stft(clip, cfg.n_fft, cfg.effective_hop())?;
    let mut power = mel_power(&spec, bank);
    power_to_db_in_place(&mut power)?;
    Ok(MelSpectrogram {
        values: power.iter().map(|&v| v as f32).collect(),
        n_frames: spec.n_frames,
        n_mels: bank.n_mels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn default_bank_shape() {
        let bank = mel_filterbank(128, 2048, 22_050, 0.0, 11_025.0).unwrap();
        assert_eq!((bank.n_mels, bank.n_bins), (128, 1025));
        assert_eq!(bank.weights.len(), 128 * 1025);
    }

    fn check_bank(bank: &MelFilterBank, fmin: f64, fmax: f64) {
        assert!(bank.weights.iter().all(|&w| w >= 0.0));
        for m in 0..bank.n_mels {
            let row = bank.row(m);
            assert!(row.iter().any(|&w| w > 0.0), "row {m} empty");
            // Unimodal: non-decreasing up to the peak, non-increasing after.
            let peak = row
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (k, &w)| if w > acc.1 { (k, w) } else { acc })
                .0;
            assert!(row[..=peak].windows(2).all(|w| w[0] <= w[1]));
            assert!(row[peak..].windows(2).all(|w| w[0] >= w[1]));
        }
        // Independent evaluation of the centers from the scale formula.
        let lo = 2595.0 * (1.0 + fmin / 700.0).log10();
        let hi = 2595.0 * (1.0 + fmax / 700.0).log10();
        for (m, &c) in bank.mel_center_hz.iter().enumerate() {
            let mel = lo + (hi - lo) * (m + 1) as f64 / (bank.n_mels + 1) as f64;
            let hz = 700.0 * (10f64.powf(mel / 2595.0) - 1.0);
            assert!((c - hz).abs() < 1e-9 * hz.max(1.0));
        }
        assert!(bank.mel_center_hz.windows(2).all(|w| w[0] < w[1]));
        assert!(bank.mel_center_hz[0] > fmin);
        assert!(*bank.mel_center_hz.last().unwrap() < fmax);
    }

    #[test]
    fn default_bank_properties() {
        let bank = mel_filterbank(128, 2048, 22_050, 0.0, 11_025.0).unwrap();
        check_bank(&bank, 0.0, 11_025.0);
    }

    #[test]
    fn too_many_bands_is_a_resolution_error() {
        let err = mel_filterbank(256, 256, 22_050, 0.0, 11_025.0).unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));
    }

    #[test]
    fn invalid_band_edges() {
        assert!(mel_filterbank(10, 512, 16_000, 500.0, 400.0).is_err());
        assert!(mel_filterbank(10, 512, 16_000, 0.0, 9_000.0).is_err());
        assert!(mel_filterbank(0, 512, 16_000, 0.0, 8_000.0).is_err());
    }

    #[test]
    fn mel_formula_roundtrip() {
        for hz in [0.0, 10.0, 440.0, 1000.0, 11_025.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn randomized_banks_are_well_formed(
            n_mels in 4usize..64,
            log_fft in 10u32..13,
            sr in prop::sample::select(vec![8000u32, 16_000, 22_050, 44_100]),
            lo_frac in 0.0f64..0.2,
            hi_frac in 0.5f64..1.0,
        ) {
            let n_fft = 1usize << log_fft;
            let fmin = lo_frac * sr as f64 / 2.0;
            let fmax = hi_frac * sr as f64 / 2.0;
            if let Ok(bank) = mel_filterbank(n_mels, n_fft, sr, fmin, fmax) {
                check_bank(&bank, fmin, fmax);
            }
        }
    }

    fn sine_clip(freq: f64, amp: f64) -> AudioClip {
        let samples = (0..CLIP_SAMPLES)
            .map(|i| (amp * (2.0 * PI * freq * i as f64 / SAMPLE_RATE as f64).sin()) as f32)
            .collect();
        AudioClip::new(samples, SAMPLE_RATE).unwrap()
    }

    #[test]
    fn derived_hop_gives_640_frames() {
        let cfg = MelConfig::default();
        assert_eq!(cfg.effective_hop(), 1035);
        assert_eq!(cfg.output_frames(), 640);
    }

    #[test]
    fn standard_clip_shape_and_range() {
        let mel = mel_spectrogram(&sine_clip(1000.0, 0.5)).unwrap();
        assert_eq!((mel.n_frames, mel.n_mels), (640, 128));
        let max = mel.values.iter().cloned().fold(f32::MIN, f32::max);
        let min = mel.values.iter().cloned().fold(f32::MAX, f32::min);
        assert_eq!(max, 0.0);
        assert!(min >= -80.0);
    }

    #[test]
    fn silence_is_uniform_floor() {
        let clip = AudioClip::new(vec![0.0; CLIP_SAMPLES], SAMPLE_RATE).unwrap();
        let mel = mel_spectrogram(&clip).unwrap();
        assert!(mel.values.iter().all(|&v| v == -80.0));
    }

    #[test]
    fn sine_peaks_in_nearest_band() {
        let bank = MelConfig::default().filterbank().unwrap();
        let nearest = bank
            .mel_center_hz
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1000.0).abs().total_cmp(&(b.1 - 1000.0).abs()))
            .unwrap()
            .0;
        let mel = mel_spectrogram(&sine_clip(1000.0, 0.5)).unwrap();
        // Frames whose window needs no reflection padding; at the mirror point
        // the sine's phase kinks and leaks energy into neighbouring bands.
        let hop = MelConfig::default().effective_hop();
        let interior = (0..mel.n_frames).filter(|t| t * hop >= 1024 && t * hop + 1024 <= CLIP_SAMPLES);
        for t in interior {
            let frame = mel.frame(t);
            let argmax = (0..128).max_by(|&a, &b| frame[a].total_cmp(&frame[b])).unwrap();
            assert_eq!(argmax, nearest, "frame {t}");
        }
    }

    #[test]
    fn rejects_non_standard_clip() {
        let clip = AudioClip::new(vec![0.0; 1000], SAMPLE_RATE).unwrap();
        assert!(matches!(mel_spectrogram(&clip), Err(Error::Contract(_))));
    }

    #[test]
    fn deterministic() {
        let clip = sine_clip(317.0, 0.3);
        assert_eq!(mel_spectrogram(&clip).unwrap(), mel_spectrogram(&clip).unwrap());
    }
}
