//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Pass criterion numbers as arguments to run a subset.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use genrekit::dataio::{
    decode_container, encode_container, read_container, split, write_container, ClipRecord,
    DatasetManifest, NamedTensor, Split,
};
use genrekit::dsp::{
    self, hz_to_mel, mel_filterbank, mel_spectrogram, stft, AudioClip, ComplexSpectrogram, SAMPLE_RATE,
};
use genrekit::eval::{classification_report, render_text_report, roc_auc, ConfusionMatrix};
use genrekit::features::{mfcc_from_db, rms_energy, spectral_shape, zero_crossing_rate};
use genrekit::models::*;
use genrekit::neural::*;
use genrekit::synth::{separable_spectrograms, synth_clip, SYNTH_FAMILIES};
use genrekit::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex;

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ------------------------------------------------------------------ 2

const GRAD_TOL: f64 = 1e-4;

fn gradient_integrity() -> Result<String, String> {
    let start = Instant::now();
    let mut r = rng(2);
    let mut results: Vec<(&str, f64)> = Vec::new();

    let mut dense = Dense::<f64>::new(6, 4, &mut r);
    results.push(("dense", gradient_check(&mut dense, &[5, 6], 1).map_err(err)?));

    let mut conv = Conv1d::<f64>::new(3, 4, 5, &mut r).map_err(err)?;
    results.push(("conv1d", gradient_check(&mut conv, &[2, 9, 3], 2).map_err(err)?));

    let mut bn = BatchNorm1d::<f64>::new(3);
    results.push(("batchnorm (train)", gradient_check(&mut bn, &[3, 6, 3], 3).map_err(err)?));

    let mut pool = MaxPool1d::new(2);
    results.push(("maxpool", gradient_check(&mut pool, &[2, 10, 3], 4).map_err(err)?));

    let mut lstm = Lstm::<f64>::new(3, 4, &mut r);
    results.push(("lstm T=7", gradient_check(&mut lstm, &[2, 7, 3], 5).map_err(err)?));

    results.push(("softmax-cross-entropy", gradient_check_cross_entropy(4, 8, 6).map_err(err)?));

    let arch = ArchitectureConfig {
        kind: ArchKind::Crnn,
        conv_channels: vec![4, 4],
        kernel_width: 3,
        pool_width: 2,
        lstm_hidden: 4,
        dense_hidden: 6,
        n_classes: 3,
        dropout: 0.0,
        input_frames: 32,
        input_bands: 8,
        ..ArchitectureConfig::default()
    };
    let mut crnn = build_network::<f64>(&arch, 7).map_err(err)?;
    let e = gradient_check_classifier(&mut crnn, &[4, 32, 8], &[0, 2, 1, 2], 8).map_err(err)?;
    results.push(("tiny crnn", e));

    let secs = start.elapsed().as_secs_f64();
    for (name, e) in &results {
        ensure!(*e < GRAD_TOL, "{name}: max relative error {e:.3e} >= {GRAD_TOL:e}");
    }
    ensure!(secs < 120.0, "gradient suite took {secs:.1} s");
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(format!("{} checks, worst relative error {worst:.2e}", results.len()))
}

// ------------------------------------------------------------------ 3

fn clip(samples: Vec<f32>) -> AudioClip {
    AudioClip::new(samples, SAMPLE_RATE).unwrap()
}

/// Mirror padding without repeating the edge sample.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 { -i } else if i >= n { 2 * (n - 1) - i } else { i };
    j as usize
}

fn direct_stft(x: &[f32], n_fft: usize, hop: usize) -> Vec<Vec<Complex<f64>>> {
    let frames = 1 + x.len() / hop;
    (0..frames)
        .map(|t| {
            let start = (t * hop) as isize - (n_fft / 2) as isize;
            (0..=n_fft / 2)
                .map(|k| {
                    let mut acc = Complex::new(0.0, 0.0);
                    for j in 0..n_fft {
                        let w = 0.5 - 0.5 * (2.0 * PI * j as f64 / n_fft as f64).cos();
                        let v = x[reflect(start + j as isize, x.len())] as f64 * w;
                        let ang = -2.0 * PI * (j * k) as f64 / n_fft as f64;
                        acc += Complex::new(v * ang.cos(), v * ang.sin());
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn mel_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

fn dsp_oracles() -> Result<String, String> {
    let mut r = rng(3);
    // STFT against the O(n^2) DFT.
    let mut worst = 0.0f64;
    for (n_fft, hop) in [(256, 64), (64, 16), (128, 100)] {
        for _ in 0..3 {
            let x: Vec<f32> = (0..256).map(|_| r.random_range(-1.0..1.0)).collect();
            let got = stft(&clip(x.clone()), n_fft, hop).map_err(err)?;
            let want = direct_stft(&x, n_fft, hop);
            ensure!(got.n_frames == want.len(), "stft frame count {} != {}", got.n_frames, want.len());
            let scale = want.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
            for (t, row) in want.iter().enumerate() {
                for (k, w) in row.iter().enumerate() {
                    worst = worst.max((got.frame(t)[k] - w).norm() / scale);
                }
            }
        }
    }
    ensure!(worst < 1e-6, "stft relative error {worst:.3e}");

    // Mel filterbanks on randomized configurations.
    let (mut built, mut rejected) = (0, 0);
    for _ in 0..60 {
        let sr = [16_000u32, 22_050, 44_100][r.random_range(0..3)];
        let n_fft = [512usize, 1024, 2048, 4096][r.random_range(0..4)];
        let n_mels = r.random_range(1..=128);
        let nyq = sr as f64 / 2.0;
        let fmin = r.random_range(0.0..500.0);
        let fmax = r.random_range(fmin + 1000.0..=nyq);
        let (lo, hi) = (2595.0 * (1.0 + fmin / 700.0).log10(), 2595.0 * (1.0 + fmax / 700.0).log10());
        let corners: Vec<f64> = (0..n_mels + 2).map(|i| mel_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64)).collect();
        let bins: Vec<f64> = (0..=n_fft / 2).map(|k| k as f64 * sr as f64 / n_fft as f64).collect();
        let empty_band = (0..n_mels).any(|m| !bins.iter().any(|&f| f > corners[m] && f < corners[m + 2]));
        match mel_filterbank(n_mels, n_fft, sr, fmin, fmax) {
            Ok(bank) => {
                ensure!(!empty_band, "filterbank built although a band has no bins");
                ensure!(bank.weights.len() == n_mels * (n_fft / 2 + 1), "filterbank shape");
                ensure!(bank.weights.iter().all(|&w| w >= 0.0), "negative filter weight");
                for m in 0..n_mels {
                    ensure!(bank.row(m).iter().any(|&w| w > 0.0), "band {m} has empty support");
                    let c = bank.mel_center_hz[m];
                    ensure!((c - corners[m + 1]).abs() <= 1e-9 * corners[m + 1].max(1.0), "center {m}: {c} vs {}", corners[m + 1]);
                }
                ensure!(bank.mel_center_hz.windows(2).all(|w| w[0] < w[1]), "centers not increasing");
                ensure!(bank.mel_center_hz[0] > fmin && bank.mel_center_hz[n_mels - 1] < fmax, "centers outside range");
                built += 1;
            }
            Err(Error::Resolution(_)) => {
                ensure!(empty_band, "resolution error but every band has bins");
                rejected += 1;
            }
            Err(e) => return Err(format!("filterbank: {e}")),
        }
    }
    ensure!(built >= 20, "only {built} filterbank configurations were buildable");
    ensure!((hz_to_mel(1000.0) - 2595.0 * (1.0 + 1000.0f64 / 700.0).log10()).abs() < 1e-12, "mel formula");

    // Every 30 s clip gives 640 x 128.
    let n = dsp::CLIP_SAMPLES;
    let normal = Normal::new(0.0, 0.3).unwrap();
    let mut clips = vec![clip(vec![0.0; n]), clip((0..n).map(|_| normal.sample(&mut r) as f32).collect())];
    for c in 0..SYNTH_FAMILIES.len() {
        clips.push(synth_clip(c, 0, 1, 30.0, SAMPLE_RATE).map_err(err)?);
    }
    for c in &clips {
        let m = mel_spectrogram(c).map_err(err)?;
        ensure!((m.n_frames, m.n_mels, m.values.len()) == (640, 128, 640 * 128), "mel shape {}x{}", m.n_frames, m.n_mels);
    }

    // MFCC against a direct orthonormal DCT-II double sum.
    let frames = 6;
    let db: Vec<f64> = (0..frames * 128).map(|_| r.random_range(-80.0..0.0)).collect();
    let got = mfcc_from_db(&db, frames, 128, 20).map_err(err)?;
    let mut mfcc_err = 0.0f64;
    for t in 0..frames {
        for k in 0..20 {
            let scale = if k == 0 { (1.0f64 / 128.0).sqrt() } else { (2.0f64 / 128.0).sqrt() };
            let mut s = 0.0;
            for i in 0..128 {
                s += db[t * 128 + i] * (PI * k as f64 * (2 * i + 1) as f64 / 256.0).cos();
            }
            mfcc_err = mfcc_err.max((got.row(t)[k] - scale * s).abs());
        }
    }
    ensure!(mfcc_err < 1e-9, "mfcc error {mfcc_err:.3e}");

    // Closed-form frame statistics.
    let (fl, hop) = (2048, 512);
    let zcr = |x: Vec<f32>| zero_crossing_rate(&clip(x), fl, hop).map_err(err);
    let rms = |x: Vec<f32>| rms_energy(&clip(x), fl, hop).map_err(err);
    ensure!(zcr(vec![0.4; 10_000])?.iter().all(|&z| z == 0.0), "zcr of a constant");
    let alt: Vec<f32> = (0..10_000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    ensure!(zcr(alt)?.iter().all(|&z| z == 1.0), "zcr of an alternating signal");
    let sine = |f: f64, a: f64| -> Vec<f32> {
        (0..n).map(|i| (a * (2.0 * PI * f * i as f64 / SAMPLE_RATE as f64).sin()) as f32).collect()
    };
    let s100 = sine(100.0, 1.0);
    let direct = s100.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count() as f64 / (n - 1) as f64;
    let z = zcr(s100)?;
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    ensure!((mean - direct).abs() / direct < 0.02, "zcr mean {mean} vs direct {direct}");
    ensure!((direct - 200.0 / 22_050.0).abs() < 1e-4, "100 Hz crossing rate {direct}");
    ensure!(rms(vec![0.0; 5000])?.iter().all(|&v| v == 0.0), "rms of zeros");
    ensure!(rms(vec![-0.3; 5000])?.iter().all(|&v| (v - 0.3).abs() < 1e-7), "rms of a constant");
    let rs = rms(sine(1000.0, 0.8))?;
    let interior = &rs[4..rs.len() - 4];
    let target = 0.8 / 2f64.sqrt();
    ensure!(interior.iter().all(|v| (v - target).abs() < 1e-3), "rms of a sine");

    let spec = |mags: Vec<f64>| ComplexSpectrogram {
        n_bins: mags.len(),
        frames: mags.into_iter().map(|m| Complex::new(m, 0.0)).collect(),
        n_frames: 1,
        n_fft: 2048,
        hop: 512,
        sample_rate: SAMPLE_RATE,
    };
    let hz = |k: usize| k as f64 * SAMPLE_RATE as f64 / 2048.0;
    let mut point = vec![0.0; 1025];
    point[100] = 2.5;
    let sh = spectral_shape(&spec(point), 0.85);
    ensure!(sh.row(0) == [hz(100), 0.0, hz(100)], "point mass shape {:?}", sh.row(0));
    let mut two = vec![0.0; 1025];
    two[40] = 1.0;
    two[300] = 1.0;
    let sh = spectral_shape(&spec(two), 0.85);
    ensure!((sh.row(0)[0] - (hz(40) + hz(300)) / 2.0).abs() < 1e-9, "two-bin centroid");
    let flat = vec![1.0; 1025];
    let mut cum = 0.0;
    let scan = (0..1025).find(|_| {
        cum += 1.0;
        cum >= 0.85 * 1025.0
    });
    ensure!(scan == Some((0.85f64 * 1025.0).ceil() as usize - 1), "cumulative scan oracle");
    let sh = spectral_shape(&spec(flat), 0.85);
    ensure!(sh.row(0)[2] == hz(scan.unwrap()), "flat rolloff {} vs {}", sh.row(0)[2], hz(scan.unwrap()));
    Ok(format!(
        "stft err {worst:.1e}; {built} filterbanks built, {rejected} correctly rejected; {} clips 640x128; mfcc err {mfcc_err:.1e}",
        clips.len()
    ))
}

// ------------------------------------------------------------------ 4

fn oracle_knn(train: &[Vec<f64>], labels: &[usize], query: &[f64], k: usize, classes: usize) -> usize {
    let d = train[0].len();
    let n = train.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| train.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| {
            let v = (train.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
            if v > 0.0 { v } else { 1.0 }
        })
        .collect();
    let z = |r: &[f64]| -> Vec<f64> { (0..d).map(|j| (r[j] - mean[j]) / sd[j]).collect() };
    let q = z(query);
    let mut all: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| (z(r).iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum(), i))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let nearest = &all[..k];
    let mut votes = vec![0; classes];
    for &(_, i) in nearest {
        votes[labels[i]] += 1;
    }
    let best = *votes.iter().max().unwrap();
    nearest.iter().map(|&(_, i)| labels[i]).find(|&l| votes[l] == best).unwrap()
}

fn classical_oracles() -> Result<String, String> {
    let mut r = rng(4);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let train: Vec<Vec<f64>> = (0..200).map(|_| (0..51).map(|_| normal.sample(&mut r)).collect()).collect();
    let labels: Vec<usize> = (0..200).map(|_| r.random_range(0..8)).collect();
    let queries: Vec<Vec<f64>> = (0..100).map(|_| (0..51).map(|_| normal.sample(&mut r)).collect()).collect();
    for k in [1, 3, 5] {
        let knn = KnnClassifier::fit(&train, &labels, 8, k).map_err(err)?;
        let got = knn.predict(&queries).map_err(err)?;
        for (qi, q) in queries.iter().enumerate() {
            let want = oracle_knn(&train, &labels, q, k, 8);
            ensure!(got[qi] == want, "k={k}, query {qi}: {} vs oracle {want}", got[qi]);
        }
        // Training points are their own nearest neighbour.
        if k == 1 {
            ensure!(knn.predict(&train).map_err(err)? == labels, "1-nn on training points");
        }
    }

    let centers: Vec<Vec<f64>> = (0..8).map(|_| (0..51).map(|_| 4.0 * normal.sample(&mut r)).collect()).collect();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..60 {
            rows.push(center.iter().map(|m| m + normal.sample(&mut r)).collect::<Vec<f64>>());
            y.push(c);
        }
    }
    let cfg = LogRegConfig::default();
    ensure!(cfg.max_iter == 5000, "logreg iteration budget is {}", cfg.max_iter);
    let lr = LogisticRegression::fit(&rows, &y, 8, cfg).map_err(err)?;
    let acc = lr.predict(&rows).map_err(err)?.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
    ensure!(acc >= 0.99, "logreg train accuracy {acc}");
    ensure!(lr.iterations.iter().all(|&i| i <= 5000), "iterations {:?}", lr.iterations);
    Ok(format!("knn exact on 100 queries x k in {{1,3,5}}; logreg blob accuracy {acc:.4}, max {} iterations", lr.iterations.iter().max().unwrap()))
}

// ------------------------------------------------------------------ 5

fn capacity() -> Result<String, String> {
    let start = Instant::now();
    let (x, y) = separable_spectrograms(8, 8, 640, 128, 5);
    let classes: Vec<String> = (0..8).map(|c| format!("c{c}")).collect();
    let arch = ArchitectureConfig::default();
    let mut model = build_model(&arch, &classes, 5).map_err(err)?;
    let rows: Vec<usize> = (0..y.len()).collect();
    model.input_stats = Some(InputStats::fit(&x, &rows).map_err(err)?);
    let cfg = TrainConfig { seed: 5, ..TrainConfig::default() };
    let mut trainer = Trainer::new(&model, &cfg).map_err(err)?;
    for epoch in 1..=200 {
        trainer.epoch(&mut model, &x, &y, &rows).map_err(err)?;
        let (_, acc) = model.evaluate(&x, &y, &rows).map_err(err)?;
        if acc == 1.0 {
            let secs = start.elapsed().as_secs_f64();
            ensure!(secs < 300.0, "reached 100% but took {secs:.1} s");
            return Ok(format!("100% train accuracy on 64 spectrograms (640x128) after {epoch} epochs"));
        }
    }
    Err("train accuracy below 100% after 200 epochs".into())
}

// ------------------------------------------------------------------ 6

const E2E_PER_CLASS: usize = 100;
const E2E_EPOCHS: usize = 30;

fn synthetic_end_to_end() -> Result<String, String> {
    let start = Instant::now();
    let seed = 6;
    let records: Vec<ClipRecord> = (0..SYNTH_FAMILIES.len())
        .flat_map(|c| {
            (0..E2E_PER_CLASS).map(move |i| ClipRecord {
                clip_path: format!("{c}/{i}"),
                source_id: format!("{}/{i}", SYNTH_FAMILIES[c]),
                offset_s: 0.0,
                genre: SYNTH_FAMILIES[c].to_string(),
            })
        })
        .collect();
    let manifest = split(&records, 90, 10, seed).map_err(err)?;
    let tensor = |s: Split| -> Result<(Tensor<f32>, Vec<usize>), String> {
        let entries: Vec<_> = manifest.entries_in(s).collect();
        let mut data = Vec::with_capacity(entries.len() * 640 * 128);
        let mut y = Vec::with_capacity(entries.len());
        for e in &entries {
            let (c, i) = e.clip_path.split_once('/').unwrap();
            let audio = synth_clip(c.parse().unwrap(), i.parse().unwrap(), seed, 30.0, SAMPLE_RATE).map_err(err)?;
            data.extend(mel_spectrogram(&audio).map_err(err)?.values);
            y.push(manifest.label_of(&e.genre).map_err(err)?);
        }
        Ok((Tensor::from_vec(&[entries.len(), 640, 128], data).map_err(err)?, y))
    };
    let (xtr, ytr) = tensor(Split::Train)?;
    let (xte, yte) = tensor(Split::Test)?;
    ensure!((ytr.len(), yte.len()) == (720, 80), "split sizes {} / {}", ytr.len(), yte.len());
    let prep_secs = start.elapsed().as_secs_f64();
    let test_rows: Vec<usize> = (0..yte.len()).collect();
    let mut accs = Vec::new();
    for kind in [ArchKind::Crnn, ArchKind::Cnn, ArchKind::Rnn] {
        let t = Instant::now();
        let arch = ArchitectureConfig { kind, ..ArchitectureConfig::default() };
        let mut model = build_model(&arch, &manifest.class_order, seed).map_err(err)?;
        let cfg = TrainConfig { max_epochs: E2E_EPOCHS, seed, ..TrainConfig::default() };
        let summary = train(&mut model, &xtr, &ytr, &cfg).map_err(err)?;
        let (_, acc) = model.evaluate(&xte, &yte, &test_rows).map_err(err)?;
        println!(
            "      {kind}: test accuracy {acc:.4} (best epoch {} of {}, {:.0} s)",
            summary.best_epoch,
            summary.epochs_run,
            t.elapsed().as_secs_f64()
        );
        accs.push((kind, acc));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 1800.0, "end-to-end run took {secs:.0} s");
    let crnn = accs[0].1;
    ensure!(crnn >= 0.90, "CRNN test accuracy {crnn:.4} < 0.90");
    Ok(format!(
        "CRNN {crnn:.4} (asserted >= 0.90); recorded CNN {:.4}, RNN {:.4}; data {prep_secs:.0} s, total {secs:.0} s",
        accs[1].1, accs[2].1
    ))
}

// ------------------------------------------------------------------ 7

fn metric_oracles() -> Result<String, String> {
    let mut r = rng(7);
    let classes: Vec<String> = (0..8).map(|c| format!("c{c}")).collect();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = r.random_range(30..300);
        let y: Vec<usize> = (0..n).map(|i| if i < 8 { i } else { r.random_range(0..8) }).collect();
        let scores: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..8).map(|_| (r.random_range(0.0..3.0f64) * 5.0).round() / 5.0).collect();
                let z: f64 = raw.iter().map(|v| v.exp()).sum();
                raw.iter().map(|v| v.exp() / z).collect()
            })
            .collect();
        for (c, curve) in roc_auc(&y, &scores, &classes).map_err(err)?.iter().enumerate() {
            let labels: Vec<bool> = y.iter().map(|&v| v == c).collect();
            let col: Vec<f64> = scores.iter().map(|s| s[c]).collect();
            worst = worst.max((curve.auc.unwrap() - pair_counting_auc(&labels, &col)).abs());
        }
    }
    ensure!(worst < 1e-9, "AUC deviates from pair counting by {worst:.3e}");

    let report = classification_report(&reference_confusion()).map_err(err)?;
    let text = render_text_report(&report, &[]);
    let rap = text.lines().find(|l| l.starts_with("Rap ")).ok_or("no Rap row")?;
    let fields: Vec<&str> = rap.split_whitespace().collect();
    ensure!(fields == ["Rap", "0.92", "0.93", "0.93", "100"], "Rap row {rap:?}");
    ensure!(text.lines().any(|l| l == "Overall Accuracy  84%"), "accuracy line missing");
    for ((name, m), (want, p, rc, f)) in report.classes.iter().zip(REFERENCE_ROWS) {
        ensure!(name == want && (round2(m.precision), round2(m.recall), round2(m.f1)) == (p, rc, f), "{name} row");
    }

    for _ in 0..100 {
        let k = r.random_range(2..12);
        let counts = (0..k).map(|_| (0..k).map(|_| r.random_range(0..50u64)).collect()).collect();
        let cm = ConfusionMatrix::from_counts((0..k).map(|i| i.to_string()).collect(), counts).map_err(err)?;
        let rep = classification_report(&cm).map_err(err)?;
        ensure!(rep.weighted_avg.recall == rep.accuracy, "weighted recall {} != accuracy {}", rep.weighted_avg.recall, rep.accuracy);
    }
    Ok(format!("AUC within {worst:.1e} of pair counting; reference report rows reproduced; weighted recall = accuracy on 100 matrices"))
}

// ------------------------------------------------------------------ 8

fn random_tensors(seed: u64) -> Vec<NamedTensor> {
    let mut r = rng(seed);
    let specials = [f32::NAN, f32::INFINITY, f32::NEG_INFINITY, -0.0, f32::MIN_POSITIVE / 8.0, f32::MAX];
    (0..r.random_range(1..5))
        .map(|i| {
            let rank = r.random_range(1..4);
            let shape: Vec<usize> = (0..rank).map(|_| r.random_range(1..7)).collect();
            let n = shape.iter().product();
            let data = (0..n)
                .map(|_| if r.random_bool(0.1) { specials[r.random_range(0..specials.len())] } else { f32::from_bits(r.random()) })
                .collect();
            (format!("t{i}"), Tensor::from_vec(&shape, data).unwrap())
        })
        .collect()
}

fn trained_checkpoint(seed: u64, path: &std::path::Path) -> Result<Vec<u8>, String> {
    let (x, y) = separable_spectrograms(6, 4, 32, 16, 8);
    let arch = ArchitectureConfig {
        conv_channels: vec![8, 8],
        kernel_width: 3,
        lstm_hidden: 8,
        dense_hidden: 16,
        n_classes: 4,
        input_frames: 32,
        input_bands: 16,
        ..ArchitectureConfig::default()
    };
    let classes: Vec<String> = (0..4).map(|c| format!("c{c}")).collect();
    let mut m = build_model(&arch, &classes, seed).map_err(err)?;
    let cfg = TrainConfig { batch_size: 8, max_epochs: 4, val_fraction: 0.25, seed, ..TrainConfig::default() };
    train(&mut m, &x, &y, &cfg).map_err(err)?;
    Model::Deep(m).save(path, None, Default::default()).map_err(err)?;
    std::fs::read(path).map_err(err)
}

fn determinism_and_persistence() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let a = trained_checkpoint(11, &dir.path().join("a.mgt"))?;
    let b = trained_checkpoint(11, &dir.path().join("b.mgt"))?;
    let c = trained_checkpoint(12, &dir.path().join("c.mgt"))?;
    ensure!(a == b, "same seed produced different checkpoints");
    ensure!(a != c, "different seeds produced identical checkpoints");

    for seed in 0..100 {
        let tensors = random_tensors(seed);
        let back = decode_container(&encode_container(&tensors).map_err(err)?).map_err(err)?;
        ensure!(back.len() == tensors.len(), "seed {seed}: tensor count");
        for ((na, ta), (nb, tb)) in tensors.iter().zip(&back) {
            let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            ensure!(na == nb && ta.shape() == tb.shape() && bits(ta) == bits(tb), "seed {seed}: {na} differs");
        }
    }

    let bytes = encode_container(&random_tensors(1000)).map_err(err)?;
    for cut in 0..bytes.len() {
        ensure!(decode_container(&bytes[..cut]).is_err(), "truncation to {cut} bytes accepted");
    }
    let path = dir.path().join("cut.mgt");
    write_container(&path, &random_tensors(1001)).map_err(err)?;
    let full = std::fs::read(&path).map_err(err)?;
    std::fs::write(&path, &full[..full.len() - 3]).map_err(err)?;
    ensure!(read_container(&path).is_err(), "truncated file accepted");
    ensure!(matches!(Model::load(&path), Err(_)), "truncated checkpoint loaded");
    let trunc_ckpt = dir.path().join("a_cut.mgt");
    std::fs::write(&trunc_ckpt, &a[..a.len() / 2]).map_err(err)?;
    ensure!(Model::load(&trunc_ckpt).is_err(), "truncated checkpoint loaded");
    Ok(format!("checkpoints bit-identical ({} bytes); 100 container round trips exact; {} truncations rejected", a.len(), bytes.len()))
}

// ------------------------------------------------------------------ 9

fn records(genres: usize, songs: usize, clips_of: impl Fn(usize, usize) -> usize) -> Vec<ClipRecord> {
    let mut v = Vec::new();
    for g in 0..genres {
        for s in 0..songs {
            for c in 0..clips_of(g, s) {
                v.push(ClipRecord {
                    clip_path: format!("g{g}/s{s}_{c}.wav"),
                    source_id: format!("g{g}/s{s}"),
                    offset_s: 30.0 * c as f64,
                    genre: format!("g{g}"),
                });
            }
        }
    }
    v
}

fn check_split(m: &DatasetManifest, train: usize, test: usize) -> Result<(), String> {
    for c in m.counts() {
        ensure!((c.train, c.test) == (train, test), "{}: {}/{}", c.genre, c.train, c.test);
    }
    let mut sides = std::collections::HashMap::new();
    for e in &m.entries {
        let prev = sides.insert(e.source_id.clone(), e.split);
        ensure!(prev.is_none() || prev == Some(e.split), "song {} in both splits", e.source_id);
    }
    Ok(())
}

fn dataset_pipeline() -> Result<String, String> {
    // Full scale: about 100 songs of 10 to 12 clips per genre.
    let full = records(8, 100, |g, s| 10 + (g + s) % 3);
    let m = split(&full, 900, 100, 9).map_err(err)?;
    check_split(&m, 900, 100)?;
    let train = m.entries_in(Split::Train).count();
    let test = m.entries_in(Split::Test).count();
    ensure!((train, test) == (7200, 800), "full-scale totals {train}/{test}");

    let toy = records(8, 10, |_, _| 3);
    let t = split(&toy, 27, 3, 9).map_err(err)?;
    check_split(&t, 27, 3)?;

    ensure!(split(&full, 900, 100, 9).map_err(err)? == m, "same seed, different manifest");
    ensure!(split(&full, 900, 100, 10).map_err(err)? != m, "seed has no effect");
    ensure!(split(&toy, 28, 3, 9).is_err(), "over-quota split accepted");
    Ok(format!("7200/800 at full scale, 216/24 at toy scale, song-disjoint, seed-deterministic"))
}

// ------------------------------------------------------------------ driver

fn main() {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(u32, &str, Option<Check>); 9] = [
        (1, "published accuracy figures", None),
        (2, "gradient integrity", Some(gradient_integrity)),
        (3, "DSP oracles", Some(dsp_oracles)),
        (4, "classical-model oracles", Some(classical_oracles)),
        (5, "CRNN capacity", Some(capacity)),
        (6, "synthetic end-to-end", Some(synthetic_end_to_end)),
        (7, "metric oracles", Some(metric_oracles)),
        (8, "determinism and persistence", Some(determinism_and_persistence)),
        (9, "dataset pipeline", Some(dataset_pipeline)),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let Some(check) = check else {
            println!("N/A  [{id}] {name}: the source dataset is private, so these figures are not reproducible here");
            continue;
        };
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} ({secs:.1} s)"),
            Err(reason) => {
                failed += 1;
                println!("FAIL [{id}] {name}: {reason} ({secs:.1} s)");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
