#![allow(dead_code)]

use genrekit::eval::ConfusionMatrix;
use genrekit::genres::CANONICAL_GENRES;

/// Test-set confusion counts of the reference CRNN run, 100 clips per genre,
/// rows = true genre in canonical order. Chosen so every rounded per-class
/// figure below is reproduced and accuracy is 671 / 800.
pub const REFERENCE_COUNTS: [[u64; 8]; 8] = [
    [83, 2, 0, 0, 9, 0, 1, 5],
    [0, 83, 0, 0, 0, 0, 0, 17],
    [1, 0, 83, 6, 10, 0, 0, 0],
    [0, 0, 10, 90, 0, 0, 0, 0],
    [12, 13, 0, 1, 67, 0, 0, 7],
    [0, 0, 0, 0, 0, 93, 0, 7],
    [0, 3, 1, 0, 0, 8, 88, 0],
    [12, 0, 0, 0, 0, 0, 4, 84],
];

/// Published per-genre (precision, recall, F1) at two decimals.
pub const REFERENCE_ROWS: [(&str, f64, f64, f64); 8] = [
    ("Aadhunik Sangeet", 0.77, 0.83, 0.80),
    ("Deuda", 0.82, 0.83, 0.83),
    ("Tamang Selo", 0.88, 0.83, 0.86),
    ("Lok Dohori", 0.93, 0.90, 0.91),
    ("Purbeli Bhaka", 0.78, 0.67, 0.72),
    ("Rap", 0.92, 0.93, 0.93),
    ("Rock", 0.95, 0.88, 0.91),
    ("Pop", 0.70, 0.84, 0.76),
];

pub fn reference_confusion() -> ConfusionMatrix {
    ConfusionMatrix::from_counts(
        CANONICAL_GENRES.iter().map(|s| s.to_string()).collect(),
        REFERENCE_COUNTS.iter().map(|r| r.to_vec()).collect(),
    )
    .unwrap()
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// P(score of a positive > score of a negative) + P(tie) / 2 by enumerating
/// every positive/negative pair.
pub fn pair_counting_auc(labels: &[bool], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &pi) in labels.iter().enumerate() {
        if !pi {
            continue;
        }
        for (j, &pj) in labels.iter().enumerate() {
            if pj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}
