//! Genre labels and class ordering.

/// The eight genres in canonical label-index order.
pub const CANONICAL_GENRES: [&str; 8] = [
    "Aadhunik Sangeet",
    "Deuda",
    "Tamang Selo",
    "Lok Dohori",
    "Purbeli Bhaka",
    "Rap",
    "Rock",
    "Pop",
];

/// Lowercase alphanumerics only, so `tamang_selo` matches `Tamang Selo`.
fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Position of `name` among the canonical genres, ignoring case and
/// punctuation.
pub fn canonical_index(name: &str) -> Option<usize> {
    let n = normalize(name);
    CANONICAL_GENRES.iter().position(|g| normalize(g) == n)
}

/// Orders a set of genre names: canonical order when the names are exactly
/// the canonical eight (in any spelling), lexicographic otherwise.
/// Duplicates are removed.
pub fn class_order<I, S>(names: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
    names.sort();
    names.dedup();
    let mut indices: Vec<Option<usize>> = names.iter().map(|n| canonical_index(n)).collect();
    let mut distinct = indices.clone();
    distinct.sort();
    distinct.dedup();
    let is_canonical = names.len() == CANONICAL_GENRES.len()
        && distinct.len() == CANONICAL_GENRES.len()
        && indices.iter().all(Option::is_some);
    if is_canonical {
        let mut paired: Vec<(Option<usize>, String)> = indices.drain(..).zip(names).collect();
        paired.sort();
        paired.into_iter().map(|(_, n)| n).collect()
    } else {
        names
    }
}
