use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genres::class_order;

/// One segmented clip before it is assigned to a split.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipRecord {
    pub clip_path: String,
    pub source_id: String,
    pub offset_s: f64,
    pub genre: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// A manifest row: `clip_path,source_id,offset_s,genre,split`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub clip_path: String,
    pub source_id: String,
    pub offset_s: f64,
    pub genre: String,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenreCounts {
    pub genre: String,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub class_order: Vec<String>,
    /// Seed the split was drawn with, when known.
    pub seed: Option<u64>,
}

impl DatasetManifest {
    pub fn counts(&self) -> Vec<GenreCounts> {
        self.class_order
            .iter()
            .map(|g| {
                let of = |s| {
                    self.entries
                        .iter()
                        .filter(|e| &e.genre == g && e.split == s)
                        .count()
                };
                GenreCounts {
                    genre: g.clone(),
                    train: of(Split::Train),
                    test: of(Split::Test),
                }
            })
            .collect()
    }

    pub fn entries_in(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Index of `genre` in the class order.
    pub fn label_of(&self, genre: &str) -> Result<usize> {
        self.class_order
            .iter()
            .position(|g| g == genre)
            .ok_or_else(|| Error::Label(format!("genre {genre:?} is not in the class order")))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.entries {
            w.serialize(e).map_err(|e| Error::Format(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
        let expected = ["clip_path", "source_id", "offset_s", "genre", "split"];
        if headers.iter().ne(expected) {
            return Err(Error::Format(format!(
                "manifest header must be {}, got {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let entries = r
            .deserialize()
            .enumerate()
            .map(|(i, row)| row.map_err(|e| Error::Format(format!("manifest row {}: {e}", i + 1))))
            .collect::<Result<Vec<ManifestEntry>>>()?;
        let class_order = class_order(entries.iter().map(|e| e.genre.clone()));
        Ok(Self {
            entries,
            class_order,
            seed: None,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// Assigns whole source songs to the test or train side of each genre, then
/// draws exactly `test_per_genre` and `train_per_genre` clips from the two
/// sides. Songs are visited in a seeded random order and moved to the test
/// side until it holds at least the test quota; the rest form the training
/// pool. Clips not drawn are left out of the manifest.
pub fn split(
    records: &[ClipRecord],
    train_per_genre: usize,
    test_per_genre: usize,
    seed: u64,
) -> Result<DatasetManifest> {
    let order = class_order(records.iter().map(|r| r.genre.clone()));
    let mut entries = Vec::new();
    for (gi, genre) in order.iter().enumerate() {
        let mut songs: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate().filter(|(_, r)| &r.genre == genre) {
            songs.entry(r.source_id.as_str()).or_default().push(i);
        }
        let available: usize = songs.values().map(Vec::len).sum();
        let required = train_per_genre + test_per_genre;
        if available < required {
            return Err(Error::Quota {
                genre: genre.clone(),
                required,
                available,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(gi as u64);
        let mut song_list: Vec<Vec<usize>> = songs.into_values().collect();
        song_list.shuffle(&mut rng);
        let mut test_pool = Vec::new();
        let mut train_pool = Vec::new();
        for clips in song_list {
            if test_pool.len() < test_per_genre {
                test_pool.extend(clips);
            } else {
                train_pool.extend(clips);
            }
        }
        if train_pool.len() < train_per_genre || test_pool.len() < test_per_genre {
            return Err(Error::Granularity {
                genre: genre.clone(),
            });
        }
        for (pool, quota, which) in [
            (&mut train_pool, train_per_genre, Split::Train),
            (&mut test_pool, test_per_genre, Split::Test),
        ] {
            pool.shuffle(&mut rng);
            pool.truncate(quota);
            pool.sort_unstable();
            entries.extend(pool.iter().map(|&i| {
                let r = &records[i];
                ManifestEntry {
                    clip_path: r.clip_path.clone(),
                    source_id: r.source_id.clone(),
                    offset_s: r.offset_s,
                    genre: r.genre.clone(),
                    split: which,
                }
            }));
        }
    }
    Ok(DatasetManifest {
        entries,
        class_order: order,
        seed: Some(seed),
    })
}
