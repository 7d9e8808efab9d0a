use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use genrekit::dataio::{self, ClipRecord, DatasetManifest, InputMode, InputRepresentation, Split};
use genrekit::dsp::{self, load_wav, resample, save_wav, AudioClip, CLIP_SAMPLES, SAMPLE_RATE};
use genrekit::eval::{self, EvalArtifacts};
use genrekit::models::{
    argmax, build_model, curves_csv, parse_curves_csv, stratified_split, train_with_progress, ArchKind,
    KnnClassifier, LogisticRegression, Model,
};
use genrekit::synth::{synth_clip, SYNTH_FAMILIES};
use genrekit::Error;
use rayon::prelude::*;

use crate::config::{CommonArgs, RunConfig};
use crate::data::{require_mode, DataSet};
use crate::error::{usage, CliResult};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn sorted_entries(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<Result<_, _>>()?;
    v.sort();
    Ok(v)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

// ---------------------------------------------------------------- prep

pub struct PrepArgs {
    pub common: CommonArgs,
    pub input: PathBuf,
    pub train_per_genre: Option<usize>,
    pub test_per_genre: Option<usize>,
}

/// Per-genre train/test/total table.
pub fn counts_table(manifest: &DatasetManifest) -> String {
    let counts = manifest.counts();
    let w = counts.iter().map(|c| c.genre.len()).chain([5]).max().unwrap_or(5) + 2;
    let mut s = format!("{:<w$}{:>7}{:>7}{:>7}\n", "Genre", "Train", "Test", "Total");
    let (mut tr, mut te) = (0, 0);
    for c in &counts {
        let _ = writeln!(s, "{:<w$}{:>7}{:>7}{:>7}", c.genre, c.train, c.test, c.train + c.test);
        tr += c.train;
        te += c.test;
    }
    let _ = writeln!(s, "{:<w$}{:>7}{:>7}{:>7}", "Total", tr, te, tr + te);
    s
}

pub fn prep(args: PrepArgs) -> CliResult<()> {
    let mut cfg = RunConfig::load(&args.common)?;
    if let Some(n) = args.train_per_genre {
        cfg.prep.train_per_genre = n;
    }
    if let Some(n) = args.test_per_genre {
        cfg.prep.test_per_genre = n;
    }
    let cfg = cfg.finish()?;
    if !(cfg.prep.clip_seconds > 0.0) {
        return usage("prep.clip_seconds must be positive");
    }
    let genres: Vec<PathBuf> = sorted_entries(&args.input)?.into_iter().filter(|p| p.is_dir()).collect();
    let mut songs = Vec::new();
    for g in &genres {
        for f in sorted_entries(g)? {
            if f.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
                songs.push((file_name(g), f));
            }
        }
    }
    if songs.is_empty() {
        return usage(format!("no genres found under {}: expected GENRE/SONG.wav files", args.input.display()));
    }
    let dir = cfg.run_dir()?;
    let clip_root = dir.join("clips");
    let mut records = Vec::new();
    for (genre, path) in &songs {
        let song = load_wav(path)?;
        let song = if song.sample_rate == SAMPLE_RATE { song } else { resample(&song, SAMPLE_RATE)? };
        // Source ids are qualified by genre so equal file names in two genres stay distinct songs.
        let source_id = format!("{genre}/{}", song.source_id);
        let out_dir = clip_root.join(genre);
        std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
        for (i, clip) in dataio::segment(&song, cfg.prep.clip_seconds).into_iter().enumerate() {
            let rel = format!("clips/{genre}/{}_{i:03}.wav", song.source_id);
            save_wav(dir.join(&rel), &clip)?;
            records.push(ClipRecord {
                clip_path: rel,
                source_id: source_id.clone(),
                offset_s: clip.offset_s,
                genre: genre.clone(),
            });
        }
    }
    let manifest = dataio::split(&records, cfg.prep.train_per_genre, cfg.prep.test_per_genre, cfg.seed)?;
    let path = dir.join(format!("{}_manifest.csv", cfg.run_id));
    manifest.write_csv(&path)?;
    cfg.write_resolved(&dir, "prep")?;
    print!("{}", counts_table(&manifest));
    println!("{} clips segmented, {} in manifest {}", records.len(), manifest.entries.len(), path.display());
    Ok(())
}

// ---------------------------------------------------------------- extract

pub struct ExtractArgs {
    pub common: CommonArgs,
    pub manifest: PathBuf,
    pub mode: InputMode,
}

fn load_clip(path: &Path) -> genrekit::Result<AudioClip> {
    let clip = load_wav(path)?;
    if clip.sample_rate == SAMPLE_RATE {
        Ok(clip)
    } else {
        resample(&clip, SAMPLE_RATE)
    }
}

pub fn extract(args: ExtractArgs) -> CliResult<()> {
    let cfg = RunConfig::load(&args.common)?.finish()?;
    let manifest = DatasetManifest::read_csv(&args.manifest)?;
    let base = args.manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let repr = match args.mode {
        InputMode::Melspec => InputRepresentation::Melspec(cfg.mel.clone()),
        InputMode::Features51 => InputRepresentation::Features51(cfg.features.clone()),
    };
    let dir = cfg.run_dir()?;
    let total = manifest.entries.len();
    let done = AtomicUsize::new(0);
    let results: Vec<genrekit::Result<Vec<f32>>> = manifest
        .entries
        .par_iter()
        .map(|e| {
            let out = load_clip(&base.join(&e.clip_path)).and_then(|c| repr.compute(&c));
            let n = done.fetch_add(1, Ordering::Relaxed) + 1;
            if n % 16 == 0 || n == total {
                eprintln!("extract: {n}/{total} clips");
            }
            out
        })
        .collect();
    let mut failures = Vec::new();
    let mut items = Vec::with_capacity(total);
    for (e, r) in manifest.entries.iter().zip(results) {
        match r {
            Ok(v) => items.push(v),
            Err(err) => failures.push(format!("  {}: {err}", e.clip_path)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Io {
            path: args.manifest.clone(),
            source: std::io::Error::other(format!(
                "{} unreadable clips:\n{}",
                failures.len(),
                failures.join("\n")
            )),
        }
        .into());
    }
    for split in [Split::Train, Split::Test] {
        let idx: Vec<usize> = (0..total).filter(|&i| manifest.entries[i].split == split).collect();
        let x = repr.stack(idx.iter().map(|&i| items[i].clone()).collect())?;
        let y = idx
            .iter()
            .map(|&i| manifest.label_of(&manifest.entries[i].genre))
            .collect::<genrekit::Result<Vec<_>>>()?;
        let clips = idx.iter().map(|&i| manifest.entries[i].clip_path.clone()).collect();
        let set = DataSet::new(split, manifest.class_order.clone(), repr.clone(), clips, x, y);
        let path = set.write(&dir)?;
        if args.mode == InputMode::Features51 {
            write_feature_csv(&dir.join(format!("features_{}.csv", split.as_str())), &set)?;
        }
        println!("{}: {} x {:?}", path.display(), set.y.len(), &set.x.shape()[1..]);
    }
    cfg.write_resolved(&dir, "extract")?;
    Ok(())
}

fn write_feature_csv(path: &Path, set: &DataSet) -> CliResult<()> {
    let mut s = String::from("clip_path,genre");
    for n in genrekit::features::FEATURE_NAMES {
        let _ = write!(s, ",{n}");
    }
    s.push('\n');
    for ((clip, &y), row) in set.meta.clips.iter().zip(&set.y).zip(set.rows()?) {
        let _ = write!(s, "{clip},{}", set.meta.class_order[y]);
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    std::fs::write(path, s).map_err(io_err(path))?;
    Ok(())
}

// ---------------------------------------------------------------- train

pub struct TrainArgs {
    pub common: CommonArgs,
    pub data: PathBuf,
    pub arch: String,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub patience: Option<usize>,
    pub k: Option<usize>,
}

fn accuracy(pred: &[usize], y: &[usize]) -> f64 {
    pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len().max(1) as f64
}

pub fn train(args: TrainArgs) -> CliResult<()> {
    let mut cfg = RunConfig::load(&args.common)?;
    let deep_kind = match args.arch.as_str() {
        "logreg" | "knn" => None,
        other => Some(other.parse::<ArchKind>().map_err(|_| {
            crate::error::CliError::Usage(format!(
                "unknown --arch {other:?}; expected cnn, rnn, parallel, crnn, logreg or knn"
            ))
        })?),
    };
    if let Some(n) = args.epochs {
        cfg.train.max_epochs = n;
    }
    if let Some(n) = args.batch_size {
        cfg.train.batch_size = n;
    }
    if let Some(lr) = args.lr {
        cfg.train.adam.lr = lr;
        cfg.logreg.lr = lr;
    }
    if let Some(p) = args.patience {
        cfg.train.patience = p;
    }
    if let Some(k) = args.k {
        cfg.knn.k = k;
    }
    let mut cfg = cfg.finish()?;
    let data = DataSet::read(&args.data, Split::Train)?;
    require_mode(&data, deep_kind.is_some(), &args.arch)?;
    let class_order = data.meta.class_order.clone();
    let mut metrics = BTreeMap::new();
    let model = if let Some(kind) = deep_kind {
        let [_, frames, bands] = data.x.dims::<3>("spectrograms")?;
        cfg.arch.kind = kind;
        cfg.arch.n_classes = class_order.len();
        cfg.arch.input_frames = frames;
        cfg.arch.input_bands = bands;
        let mut model = build_model(&cfg.arch, &class_order, cfg.seed)?;
        let summary = train_with_progress(&mut model, &data.x, &data.y, &cfg.train, |r| {
            eprintln!(
                "epoch {:>3}: train loss {:.4} acc {:.4} | val loss {:.4} acc {:.4}",
                r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc
            );
        })?;
        let best = model.curves[summary.best_epoch - 1];
        metrics.insert("train_loss".to_string(), best.train_loss);
        metrics.insert("train_acc".to_string(), best.train_acc);
        metrics.insert("val_loss".to_string(), best.val_loss);
        metrics.insert("val_acc".to_string(), best.val_acc);
        println!(
            "best epoch {} of {}: train acc {:.4}, val acc {:.4}{}",
            summary.best_epoch,
            summary.epochs_run,
            best.train_acc,
            best.val_acc,
            if summary.stopped_early { " (stopped early)" } else { "" }
        );
        Model::Deep(model)
    } else {
        let rows = data.rows()?;
        let k = class_order.len();
        let (tr, va) = stratified_split(&data.y, k, cfg.train.val_fraction, cfg.seed)?;
        let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<usize>) {
            (idx.iter().map(|&i| rows[i].clone()).collect(), idx.iter().map(|&i| data.y[i]).collect())
        };
        let (xt, yt) = pick(&tr);
        let (xv, yv) = pick(&va);
        let model = if args.arch == "logreg" {
            Model::Logreg {
                model: LogisticRegression::fit(&xt, &yt, k, cfg.logreg)?,
                class_order: class_order.clone(),
            }
        } else {
            Model::Knn {
                model: KnnClassifier::fit(&xt, &yt, k, cfg.knn.k)?,
                class_order: class_order.clone(),
            }
        };
        let predict = |x: &[Vec<f64>]| match &model {
            Model::Logreg { model, .. } => model.predict(x),
            Model::Knn { model, .. } => model.predict(x),
            Model::Deep(_) => unreachable!("classical branch"),
        };
        let (ta, vacc) = (accuracy(&predict(&xt)?, &yt), accuracy(&predict(&xv)?, &yv));
        metrics.insert("train_acc".to_string(), ta);
        metrics.insert("val_acc".to_string(), vacc);
        println!("{}: train acc {ta:.4}, val acc {vacc:.4}", args.arch);
        model
    };
    let dir = cfg.run_dir()?;
    let mut manifest = model.manifest(Some(data.meta.input.hash()), metrics);
    manifest.input = Some(data.meta.input.clone());
    let ckpt = dir.join(format!("{}_checkpoint.mgt", cfg.run_id));
    model.save_manifest(&ckpt, &manifest)?;
    if let Model::Deep(m) = &model {
        let path = dir.join(format!("{}_curves.csv", cfg.run_id));
        std::fs::write(&path, curves_csv(&m.curves)).map_err(io_err(&path))?;
    }
    cfg.write_resolved(&dir, "train")?;
    println!("checkpoint {}", ckpt.display());
    Ok(())
}

// ---------------------------------------------------------------- eval

pub struct EvalArgs {
    pub common: CommonArgs,
    pub checkpoint: PathBuf,
    pub data: PathBuf,
}

/// Class probabilities of every row of `x` under `model`, `N x K`.
fn probabilities(model: &mut Model, x: &genrekit::neural::Tensor<f32>) -> CliResult<Vec<Vec<f64>>> {
    let k = model.class_order().len();
    match model {
        Model::Deep(m) => {
            let p = m.predict(x)?;
            Ok(p.probs.data().chunks_exact(k).map(|r| r.iter().map(|&v| v as f64).collect()).collect())
        }
        Model::Logreg { model, .. } => {
            let [_, d] = x.dims::<2>("features")?;
            x.data()
                .chunks_exact(d)
                .map(|r| Ok(model.predict_proba(&r.iter().map(|&v| v as f64).collect::<Vec<_>>())?))
                .collect()
        }
        Model::Knn { model, .. } => {
            let [_, d] = x.dims::<2>("features")?;
            x.data()
                .chunks_exact(d)
                .map(|r| Ok(model.predict_proba(&r.iter().map(|&v| v as f64).collect::<Vec<_>>())?))
                .collect()
        }
    }
}

pub fn evaluate(args: EvalArgs) -> CliResult<()> {
    let cfg = RunConfig::load(&args.common)?.finish()?;
    let (mut model, manifest) = Model::load(&args.checkpoint)?;
    let data = DataSet::read(&args.data, Split::Test)?;
    require_mode(&data, model.is_deep(), &manifest.model)?;
    if data.meta.class_order != manifest.class_order {
        return Err(Error::HashMismatch {
            what: "class order".into(),
            expected: manifest.class_order.join(","),
            found: data.meta.class_order.join(","),
        }
        .into());
    }
    let found = data.meta.input.hash();
    if let Some(expected) = &manifest.data_hash {
        if expected != &found {
            return Err(Error::HashMismatch { what: "input representation".into(), expected: expected.clone(), found }.into());
        }
    }
    let probs = probabilities(&mut model, &data.x)?;
    let pred: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let cm = eval::confusion(&data.y, &pred, &manifest.class_order)?;
    let report = eval::classification_report(&cm)?;
    let roc = eval::roc_auc(&data.y, &probs, &manifest.class_order)?;
    let dir = cfg.run_dir()?;
    let curves = (!manifest.curves.is_empty()).then_some(manifest.curves.as_slice());
    let paths = eval::write_eval_artifacts(
        &dir,
        &cfg.run_id,
        &EvalArtifacts { report: &report, confusion: &cm, roc: &roc, training_curves: curves },
    )?;
    cfg.write_resolved(&dir, "eval")?;
    print!("{}", eval::render_text_report(&report, &eval::auc_summary(&roc)));
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

// ---------------------------------------------------------------- predict

pub struct PredictArgs {
    pub checkpoint: PathBuf,
    pub wav: PathBuf,
}

pub fn predict(args: PredictArgs) -> CliResult<()> {
    let (mut model, manifest) = Model::load(&args.checkpoint)?;
    let Some(repr) = manifest.input.clone() else {
        return usage("checkpoint does not record its input representation; retrain with this version");
    };
    let song = load_clip(&args.wav)?;
    if song.len() < CLIP_SAMPLES {
        return usage(format!(
            "{} lasts {:.2} s; at least {} s are needed",
            args.wav.display(),
            song.duration_s(),
            dsp::CLIP_SECONDS
        ));
    }
    // Longer files are cut into 30 s clips whose probabilities are averaged.
    let clips = dataio::segment(&song, dsp::CLIP_SECONDS as f64);
    let items = clips.iter().map(|c| repr.compute(c)).collect::<genrekit::Result<Vec<_>>>()?;
    let x = repr.stack(items)?;
    let probs = probabilities(&mut model, &x)?;
    let k = manifest.class_order.len();
    let mut mean = vec![0.0; k];
    for p in &probs {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / probs.len() as f64;
        }
    }
    let w = manifest.class_order.iter().map(String::len).max().unwrap_or(0) + 2;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "segments: {}", clips.len());
    for (name, p) in manifest.class_order.iter().zip(&mean) {
        let _ = writeln!(out, "{name:<w$}{p:.4}");
    }
    let _ = writeln!(out, "predicted: {}", manifest.class_order[argmax(&mean)]);
    Ok(())
}

// ---------------------------------------------------------------- report

pub struct ReportArgs {
    pub run_dir: PathBuf,
}

/// Plain-text overview of a run directory: its artifacts, model, training
/// curves and classification report.
pub fn summarize_run(dir: &Path) -> CliResult<String> {
    if !dir.is_dir() {
        return Err(Error::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "run directory not found"),
        }
        .into());
    }
    let run_id = file_name(dir);
    let summary_name = format!("{run_id}_summary.txt");
    let files: Vec<String> = sorted_entries(dir)?
        .iter()
        .filter(|p| p.is_file())
        .map(|p| file_name(p))
        .filter(|n| n != &summary_name)
        .collect();
    let mut s = format!("Run {run_id}\n\nArtifacts\n");
    for f in &files {
        let _ = writeln!(s, "  {f}");
    }
    let ckpt = dir.join(format!("{run_id}_checkpoint.mgt"));
    if ckpt.is_file() {
        let (_, m) = Model::load(&ckpt)?;
        let _ = writeln!(s, "\nModel\n  family: {}\n  classes: {}", m.model, m.class_order.join(", "));
        if let Some(e) = m.epoch {
            let _ = writeln!(s, "  best epoch: {e}");
        }
        for (k, v) in &m.metrics {
            let _ = writeln!(s, "  {k}: {v:.4}");
        }
        if let Some(input) = &m.input {
            let _ = writeln!(s, "  input: {} (settings hash {})", input.mode(), &input.hash()[..12]);
        }
    }
    let curves = dir.join(format!("{run_id}_curves.csv"));
    if curves.is_file() {
        let text = std::fs::read_to_string(&curves).map_err(io_err(&curves))?;
        let c = parse_curves_csv(&text)?;
        if let Some(last) = c.last() {
            let _ = writeln!(
                s,
                "\nTraining curves\n  epochs: {}\n  last: train loss {:.4} acc {:.4}, val loss {:.4} acc {:.4}",
                c.len(),
                last.train_loss,
                last.train_acc,
                last.val_loss,
                last.val_acc
            );
        }
    }
    let report = dir.join(format!("{run_id}_report.txt"));
    if report.is_file() {
        let text = std::fs::read_to_string(&report).map_err(io_err(&report))?;
        let _ = write!(s, "\nClassification report\n{text}");
    } else {
        s.push_str("\nClassification report: not available (run eval)\n");
    }
    Ok(s)
}

pub fn report(args: ReportArgs) -> CliResult<()> {
    let s = summarize_run(&args.run_dir)?;
    let path = args.run_dir.join(format!("{}_summary.txt", file_name(&args.run_dir)));
    std::fs::write(&path, &s).map_err(io_err(&path))?;
    print!("{s}");
    Ok(())
}

// ---------------------------------------------------------------- synth

pub struct SynthArgs {
    pub out: PathBuf,
    pub classes: usize,
    pub songs: usize,
    pub seconds: f64,
    pub seed: u64,
}

/// Writes `OUT/FAMILY/songNN.wav` for the synthetic signal families.
pub fn synth(args: SynthArgs) -> CliResult<()> {
    if args.classes == 0 || args.classes > SYNTH_FAMILIES.len() {
        return usage(format!("--classes must be between 1 and {}", SYNTH_FAMILIES.len()));
    }
    if !(args.seconds > 0.0) || args.songs == 0 {
        return usage("--songs and --seconds must be positive");
    }
    let jobs: Vec<(usize, usize)> =
        (0..args.classes).flat_map(|c| (0..args.songs).map(move |j| (c, j))).collect();
    jobs.par_iter().try_for_each(|&(c, j)| -> CliResult<()> {
        let dir = args.out.join(SYNTH_FAMILIES[c]);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let clip = synth_clip(c, j, args.seed, args.seconds, SAMPLE_RATE)?;
        save_wav(dir.join(format!("song{j:02}.wav")), &clip)?;
        Ok(())
    })?;
    println!("{} songs of {} s in {}", jobs.len(), args.seconds, args.out.display());
    Ok(())
}
