use crate::error::{Error, Result};

/// Counts with rows = true class and columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub class_order: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

/// Tallies `(truth, prediction)` pairs of class indices.
pub fn confusion(y_true: &[usize], y_pred: &[usize], class_order: &[String]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let k = class_order.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= k || p >= k {
            return Err(Error::Label(format!("label pair ({t}, {p}) outside {k} classes")));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        class_order: class_order.to_vec(),
        counts,
    })
}

impl ConfusionMatrix {
    pub fn from_counts(class_order: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = class_order.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::shape(format!("confusion counts must be {k} x {k}")));
        }
        Ok(Self { class_order, counts })
    }

    pub fn n_classes(&self) -> usize {
        self.class_order.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.n_classes())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Fraction on the diagonal; `None` for an empty matrix.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.trace() as f64 / total as f64)
    }
}

/// Precision, recall, F1 and support of one class or an average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub classes: Vec<(String, ClassMetrics)>,
    pub macro_avg: ClassMetrics,
    pub weighted_avg: ClassMetrics,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class metrics with the zero-division convention (an undefined ratio
/// counts as 0), unweighted and support-weighted averages, and accuracy.
///
/// Every metric is one integer ratio (F1 is `2d / (rowsum + colsum)`), and
/// the weighted averages sum `support * num / den` per class, so weighted
/// recall reduces to `trace / total` without rounding drift.
pub fn classification_report(cm: &ConfusionMatrix) -> Result<ClassReport> {
    let total = cm.total();
    if total == 0 || cm.n_classes() == 0 {
        return Err(Error::Domain("classification report of an empty confusion matrix".into()));
    }
    let rows = cm.row_sums();
    let cols = cm.col_sums();
    let ratios: Vec<[(u64, u64); 3]> = (0..cm.n_classes())
        .map(|i| {
            let d = cm.counts[i][i];
            [(d, cols[i]), (d, rows[i]), (2 * d, rows[i] + cols[i])]
        })
        .collect();
    let classes = ratios
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let m = ClassMetrics {
                precision: ratio(r[0].0, r[0].1),
                recall: ratio(r[1].0, r[1].1),
                f1: ratio(r[2].0, r[2].1),
                support: rows[i],
            };
            (cm.class_order[i].clone(), m)
        })
        .collect::<Vec<_>>();
    let k = classes.len() as f64;
    // Summed in sorted order so the mean does not depend on class order.
    let mean = |which: usize| {
        let mut v: Vec<f64> = ratios.iter().map(|r| ratio(r[which].0, r[which].1)).collect();
        v.sort_by(f64::total_cmp);
        v.iter().sum::<f64>() / k
    };
    let weighted = |which: usize| {
        ratios
            .iter()
            .zip(&rows)
            .map(|(r, &s)| {
                let (num, den) = r[which];
                if den == 0 {
                    0.0
                } else {
                    (num as f64 * s as f64) / den as f64
                }
            })
            .sum::<f64>()
            / total as f64
    };
    Ok(ClassReport {
        macro_avg: ClassMetrics {
            precision: mean(0),
            recall: mean(1),
            f1: mean(2),
            support: total,
        },
        weighted_avg: ClassMetrics {
            precision: weighted(0),
            recall: weighted(1),
            f1: weighted(2),
            support: total,
        },
        accuracy: ratio(cm.trace(), total),
        classes,
    })
}

/// One-vs-rest ROC curve of a single class.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub class: String,
    /// Score thresholds, descending; the first is `+inf` (nothing predicted
    /// positive).
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    /// `None` when the class has no positives or no negatives.
    pub auc: Option<f64>,
}

/// ROC curves for every class from per-row class scores. Samples sharing a
/// score enter the curve together, and the area is the trapezoid sum.
pub fn roc_auc<R: AsRef<[f64]>>(y_true: &[usize], scores: &[R], class_order: &[String]) -> Result<Vec<RocCurve>> {
    let k = class_order.len();
    if y_true.len() != scores.len() {
        return Err(Error::shape(format!(
            "{} labels but {} score rows",
            y_true.len(),
            scores.len()
        )));
    }
    for (i, (row, &y)) in scores.iter().zip(y_true).enumerate() {
        let row = row.as_ref();
        if row.len() != k {
            return Err(Error::shape(format!("score row {i} has {} entries, expected {k}", row.len())));
        }
        if y >= k {
            return Err(Error::Label(format!("label {y} outside {k} classes")));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("score row {i} is not finite")));
        }
    }
    Ok((0..k)
        .map(|c| {
            let mut pairs: Vec<(f64, bool)> = scores
                .iter()
                .zip(y_true)
                .map(|(row, &y)| (row.as_ref()[c], y == c))
                .collect();
            pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
            let pos = pairs.iter().filter(|p| p.1).count() as f64;
            let neg = pairs.len() as f64 - pos;
            let mut curve = RocCurve {
                class: class_order[c].clone(),
                thresholds: vec![f64::INFINITY],
                fpr: vec![0.0],
                tpr: vec![0.0],
                auc: None,
            };
            if pos == 0.0 || neg == 0.0 {
                return curve;
            }
            let (mut tp, mut fp) = (0.0, 0.0);
            let mut area = 0.0;
            let mut i = 0;
            while i < pairs.len() {
                let s = pairs[i].0;
                while i < pairs.len() && pairs[i].0 == s {
                    if pairs[i].1 {
                        tp += 1.0;
                    } else {
                        fp += 1.0;
                    }
                    i += 1;
                }
                let (x0, y0) = (*curve.fpr.last().unwrap(), *curve.tpr.last().unwrap());
                let (x1, y1) = (fp / neg, tp / pos);
                area += (x1 - x0) * (y0 + y1) / 2.0;
                curve.thresholds.push(s);
                curve.fpr.push(x1);
                curve.tpr.push(y1);
            }
            curve.auc = Some(area);
            curve
        })
        .collect())
}
