use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::metrics::{ClassMetrics, ClassReport, ConfusionMatrix, RocCurve};
use crate::error::{Error, Result};
use crate::models::EpochRecord;

const MIN_LABEL_WIDTH: usize = 12; // "Weighted Avg"
const ROC_HEADER: &str = "ROC AUC (one-vs-rest)";
const ROC_ABSENT: &str = "ROC AUC: not available";

/// Per-class AUC summary of a set of curves.
pub fn auc_summary(curves: &[RocCurve]) -> Vec<(String, Option<f64>)> {
    curves.iter().map(|c| (c.class.clone(), c.auc)).collect()
}

fn label_width(report: &ClassReport, auc: &[(String, Option<f64>)]) -> usize {
    report
        .classes
        .iter()
        .map(|(n, _)| n.chars().count())
        .chain(auc.iter().map(|(n, _)| n.chars().count()))
        .chain([MIN_LABEL_WIDTH])
        .max()
        .unwrap_or(MIN_LABEL_WIDTH)
        + 2
}

fn metric_line(out: &mut String, width: usize, name: &str, m: &ClassMetrics) {
    let _ = writeln!(
        out,
        "{name:<width$}{:>6.2}{:>6.2}{:>6.2}{:>7}",
        m.precision, m.recall, m.f1, m.support
    );
}

/// Fixed-width text table: one row per class with Prec., Rec., F1 and Supp.,
/// then macro and weighted averages, overall accuracy as a whole percentage,
/// and a per-class AUC section (marked absent when `auc` is empty).
pub fn render_text_report(report: &ClassReport, auc: &[(String, Option<f64>)]) -> String {
    let w = label_width(report, auc);
    let mut out = String::new();
    let _ = writeln!(out, "{:<w$}{:>6}{:>6}{:>6}{:>7}", "Genre", "Prec.", "Rec.", "F1", "Supp.");
    for (name, m) in &report.classes {
        metric_line(&mut out, w, name, m);
    }
    out.push('\n');
    metric_line(&mut out, w, "Macro Avg", &report.macro_avg);
    metric_line(&mut out, w, "Weighted Avg", &report.weighted_avg);
    out.push('\n');
    let _ = writeln!(out, "Overall Accuracy  {:.0}%", report.accuracy * 100.0);
    out.push('\n');
    if auc.is_empty() {
        let _ = writeln!(out, "{ROC_ABSENT}");
    } else {
        let _ = writeln!(out, "{ROC_HEADER}");
        for (name, a) in auc {
            match a {
                Some(a) => {
                    let _ = writeln!(out, "{name:<w$}{a:>6.2}");
                }
                None => {
                    let _ = writeln!(out, "{name:<w$}{:>6}", "n/a");
                }
            }
        }
    }
    out
}

fn parse_metric_line(line: &str) -> Result<(String, ClassMetrics)> {
    let bad = || Error::Format(format!("unreadable report line {line:?}"));
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 5 {
        return Err(bad());
    }
    let n = fields.len();
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    Ok((
        fields[..n - 4].join(" "),
        ClassMetrics {
            precision: num(fields[n - 4])?,
            recall: num(fields[n - 3])?,
            f1: num(fields[n - 2])?,
            support: fields[n - 1].parse().map_err(|_| bad())?,
        },
    ))
}

/// Reads back a table produced by [`render_text_report`]. Values carry the
/// rendered two-decimal precision, so rendering the result again reproduces
/// the input exactly.
pub fn parse_text_report(text: &str) -> Result<(ClassReport, Vec<(String, Option<f64>)>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty report".into()))?;
    if !header.starts_with("Genre") {
        return Err(Error::Format("report must start with the Genre header".into()));
    }
    let mut classes = Vec::new();
    for line in lines.by_ref() {
        if line.trim().is_empty() {
            break;
        }
        classes.push(parse_metric_line(line)?);
    }
    let mut avg = |label: &str| -> Result<ClassMetrics> {
        let line = lines.next().ok_or_else(|| Error::Format(format!("missing {label} line")))?;
        let (name, m) = parse_metric_line(line)?;
        if name != label {
            return Err(Error::Format(format!("expected {label}, found {name}")));
        }
        Ok(m)
    };
    let macro_avg = avg("Macro Avg")?;
    let weighted_avg = avg("Weighted Avg")?;
    let mut rest = lines.filter(|l| !l.trim().is_empty());
    let acc_line = rest.next().ok_or_else(|| Error::Format("missing accuracy line".into()))?;
    let pct = acc_line
        .strip_prefix("Overall Accuracy")
        .and_then(|s| s.trim().strip_suffix('%'))
        .and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| Error::Format(format!("unreadable accuracy line {acc_line:?}")))?;
    let mut auc = Vec::new();
    match rest.next() {
        Some(ROC_ABSENT) | None => {}
        Some(ROC_HEADER) => {
            for line in rest {
                let (name, value) = line
                    .trim_end()
                    .rsplit_once(char::is_whitespace)
                    .ok_or_else(|| Error::Format(format!("unreadable AUC line {line:?}")))?;
                let v = match value {
                    "n/a" => None,
                    v => Some(v.parse::<f64>().map_err(|_| Error::Format(format!("bad AUC {v:?}")))?),
                };
                auc.push((name.trim().to_string(), v));
            }
        }
        Some(other) => return Err(Error::Format(format!("unexpected line {other:?}"))),
    }
    Ok((
        ClassReport {
            classes,
            macro_avg,
            weighted_avg,
            accuracy: pct / 100.0,
        },
        auc,
    ))
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).map_err(|e| Error::Format(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// `class,precision,recall,f1,support` rows with full-precision values,
/// followed by the two averages and accuracy.
pub fn report_csv(report: &ClassReport) -> Result<String> {
    csv_string(|w| {
        w.write_record(["class", "precision", "recall", "f1", "support"])?;
        let rows = report
            .classes
            .iter()
            .map(|(n, m)| (n.as_str(), m))
            .chain([("macro avg", &report.macro_avg), ("weighted avg", &report.weighted_avg)]);
        for (name, m) in rows {
            w.write_record([
                name.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.f1.to_string(),
                m.support.to_string(),
            ])?;
        }
        w.write_record([
            "accuracy".to_string(),
            String::new(),
            String::new(),
            report.accuracy.to_string(),
            report.macro_avg.support.to_string(),
        ])
    })
}

/// Matrix with a header row and a leading column of class labels.
pub fn confusion_csv(cm: &ConfusionMatrix) -> Result<String> {
    csv_string(|w| {
        let mut header = vec!["true \\ predicted".to_string()];
        header.extend(cm.class_order.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in cm.class_order.iter().zip(&cm.counts) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn parse_confusion_csv(text: &str) -> Result<ConfusionMatrix> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    let order: Vec<String> = r.headers().map_err(fmt)?.iter().skip(1).map(String::from).collect();
    let mut counts = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(fmt)?;
        counts.push(
            rec.iter()
                .skip(1)
                .map(|v| v.parse::<u64>().map_err(|_| Error::Format(format!("bad count {v:?}"))))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    ConfusionMatrix::from_counts(order, counts)
}

/// `class,threshold,fpr,tpr` for every sweep point of every curve.
pub fn roc_csv(curves: &[RocCurve]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["class", "threshold", "fpr", "tpr"])?;
        for c in curves {
            for ((t, x), y) in c.thresholds.iter().zip(&c.fpr).zip(&c.tpr) {
                w.write_record([c.class.clone(), t.to_string(), x.to_string(), y.to_string()])?;
            }
        }
        Ok(())
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Heatmap of row-normalised counts with the raw counts printed in cells.
pub fn confusion_svg(cm: &ConfusionMatrix) -> String {
    let k = cm.n_classes();
    let cell = 56.0;
    let left = 150.0;
    let top = 40.0;
    let size = left + cell * k as f64 + 20.0;
    let height = top + cell * k as f64 + 150.0;
    let rows = cm.row_sums();
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = writeln!(s, "<text x=\"{left}\" y=\"20\" font-size=\"14\">Confusion matrix (rows: true, columns: predicted)</text>");
    for i in 0..k {
        let y = top + cell * i as f64;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            left - 6.0,
            y + cell / 2.0 + 4.0,
            escape(&cm.class_order[i])
        );
        for j in 0..k {
            let x = left + cell * j as f64;
            let frac = if rows[i] == 0 { 0.0 } else { cm.counts[i][j] as f64 / rows[i] as f64 };
            let shade = (255.0 * (1.0 - frac)).round() as u8;
            let ink = if frac > 0.5 { "#ffffff" } else { "#000000" };
            let _ = writeln!(
                s,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb({shade},{shade},255)\" stroke=\"#ffffff\"/>\n<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{ink}\">{}</text>",
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                cm.counts[i][j]
            );
        }
    }
    for j in 0..k {
        let x = left + cell * j as f64 + cell / 2.0;
        let y = top + cell * k as f64 + 8.0;
        let _ = writeln!(
            s,
            "<text x=\"{x}\" y=\"{y}\" transform=\"rotate(45 {x} {y})\">{}</text>",
            escape(&cm.class_order[j])
        );
    }
    s.push_str("</svg>\n");
    s
}

struct Plot {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Plot {
    fn point(&self, x: f64, y: f64) -> (f64, f64) {
        let span = (self.ymax - self.ymin).max(1e-12);
        (
            self.x0 + self.w * x / self.xmax.max(1e-12),
            self.y0 + self.h * (1.0 - (y - self.ymin) / span),
        )
    }

    fn polyline(&self, pts: impl Iterator<Item = (f64, f64)>, color: &str, dash: bool) -> String {
        let coords: Vec<String> = pts
            .map(|(x, y)| {
                let (px, py) = self.point(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{}/>\n",
            coords.join(" "),
            if dash { " stroke-dasharray=\"4 3\"" } else { "" }
        )
    }

    fn frame(&self, title: &str, xlabel: &str, ylabel: &str) -> String {
        let mut s = format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>\n",
            self.x0, self.y0, self.w, self.h
        );
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"14\">{}</text>", self.x0, self.y0 - 8.0, escape(title));
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            self.x0 + self.w / 2.0,
            self.y0 + self.h + 32.0,
            escape(xlabel)
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>",
            self.x0 - 36.0,
            self.y0 + self.h / 2.0,
            self.x0 - 36.0,
            self.y0 + self.h / 2.0,
            escape(ylabel)
        );
        for (v, anchor) in [(self.ymin, "end"), (self.ymax, "end")] {
            let (_, py) = self.point(0.0, v);
            let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\">{v:.2}</text>", self.x0 - 4.0, py + 4.0);
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            self.x0 + self.w,
            self.y0 + self.h + 16.0,
            self.xmax
        );
        s
    }
}

/// Per-class ROC curves on one set of axes with AUCs in the legend.
pub fn roc_svg(curves: &[RocCurve]) -> String {
    let plot = Plot { x0: 60.0, y0: 40.0, w: 400.0, h: 400.0, xmax: 1.0, ymin: 0.0, ymax: 1.0 };
    let mut s = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"700\" height=\"500\" font-family=\"sans-serif\" font-size=\"12\">\n",
    );
    s.push_str(&plot.frame("ROC curves (one-vs-rest)", "False positive rate", "True positive rate"));
    s.push_str(&plot.polyline([(0.0, 0.0), (1.0, 1.0)].into_iter(), "#999999", true));
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if c.auc.is_some() {
            s.push_str(&plot.polyline(c.fpr.iter().copied().zip(c.tpr.iter().copied()), color, false));
        }
        let label = match c.auc {
            Some(a) => format!("{} (AUC {a:.2})", c.class),
            None => format!("{} (AUC n/a)", c.class),
        };
        let y = 60.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            "<line x1=\"480\" y1=\"{}\" x2=\"500\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>\n<text x=\"506\" y=\"{}\">{}</text>",
            y - 4.0,
            y - 4.0,
            y,
            escape(&label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Loss and accuracy per epoch for the training and validation sets.
pub fn training_curves_svg(curves: &[EpochRecord]) -> String {
    let epochs = curves.last().map_or(1, |r| r.epoch).max(1) as f64;
    let max_loss = curves
        .iter()
        .flat_map(|r| [r.train_loss, r.val_loss])
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let loss = Plot { x0: 60.0, y0: 40.0, w: 340.0, h: 260.0, xmax: epochs, ymin: 0.0, ymax: max_loss };
    let acc = Plot { x0: 480.0, y0: 40.0, w: 340.0, h: 260.0, xmax: epochs, ymin: 0.0, ymax: 1.0 };
    let mut s = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"380\" font-family=\"sans-serif\" font-size=\"12\">\n",
    );
    s.push_str(&loss.frame("Loss", "Epoch", "Cross-entropy"));
    s.push_str(&acc.frame("Accuracy", "Epoch", "Accuracy"));
    let e = |r: &EpochRecord| r.epoch as f64;
    s.push_str(&loss.polyline(curves.iter().map(|r| (e(r), r.train_loss)), PALETTE[0], false));
    s.push_str(&loss.polyline(curves.iter().map(|r| (e(r), r.val_loss)), PALETTE[1], true));
    s.push_str(&acc.polyline(curves.iter().map(|r| (e(r), r.train_acc)), PALETTE[0], false));
    s.push_str(&acc.polyline(curves.iter().map(|r| (e(r), r.val_acc)), PALETTE[1], true));
    let _ = writeln!(
        s,
        "<text x=\"60\" y=\"350\" fill=\"{}\">train (solid)</text>\n<text x=\"180\" y=\"350\" fill=\"{}\">validation (dashed)</text>",
        PALETTE[0], PALETTE[1]
    );
    s.push_str("</svg>\n");
    s
}

/// Path of an artifact: `{dir}/{run_id}_{artifact}.{ext}`.
pub fn artifact_path(dir: &Path, run_id: &str, artifact: &str, ext: &str) -> PathBuf {
    dir.join(format!("{run_id}_{artifact}.{ext}"))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Everything an evaluation produces.
pub struct EvalArtifacts<'a> {
    pub report: &'a ClassReport,
    pub confusion: &'a ConfusionMatrix,
    pub roc: &'a [RocCurve],
    pub training_curves: Option<&'a [EpochRecord]>,
}

/// Writes the text and CSV report, confusion CSV and SVG, ROC CSV and SVG,
/// and the training-curve SVG when curves are given. Returns the paths
/// written, in that order.
pub fn write_eval_artifacts(dir: &Path, run_id: &str, a: &EvalArtifacts<'_>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![
        (artifact_path(dir, run_id, "report", "txt"), render_text_report(a.report, &auc_summary(a.roc))),
        (artifact_path(dir, run_id, "report", "csv"), report_csv(a.report)?),
        (artifact_path(dir, run_id, "confusion", "csv"), confusion_csv(a.confusion)?),
        (artifact_path(dir, run_id, "confusion", "svg"), confusion_svg(a.confusion)),
        (artifact_path(dir, run_id, "roc", "csv"), roc_csv(a.roc)?),
        (artifact_path(dir, run_id, "roc", "svg"), roc_svg(a.roc)),
    ];
    if let Some(c) = a.training_curves {
        files.push((artifact_path(dir, run_id, "training_curves", "svg"), training_curves_svg(c)));
    }
    for (path, text) in &files {
        write_file(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
