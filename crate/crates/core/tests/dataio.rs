use std::collections::{HashMap, HashSet};

use genrekit::dataio::*;
use genrekit::genres::CANONICAL_GENRES;
use genrekit::neural::Tensor;
use genrekit::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `songs` songs per genre, each cut into `clips` clips.
fn records(genres: &[&str], songs: usize, clips: usize) -> Vec<ClipRecord> {
    let mut out = Vec::new();
    for g in genres {
        for s in 0..songs {
            for c in 0..clips {
                out.push(ClipRecord {
                    clip_path: format!("{g}/song{s:03}_{c:02}.wav"),
                    source_id: format!("{g}/song{s:03}"),
                    offset_s: 30.0 * c as f64,
                    genre: g.to_string(),
                });
            }
        }
    }
    out
}

fn assert_partition(m: &DatasetManifest) {
    let train: HashSet<_> = m.entries_in(Split::Train).map(|e| &e.source_id).collect();
    let test: HashSet<_> = m.entries_in(Split::Test).map(|e| &e.source_id).collect();
    assert!(train.is_disjoint(&test), "a song appears in both splits");
    let paths: HashSet<_> = m.entries.iter().map(|e| &e.clip_path).collect();
    assert_eq!(paths.len(), m.entries.len(), "a clip appears twice");
}

#[test]
fn full_scale_quotas() {
    let recs = records(&CANONICAL_GENRES, 100, 10);
    let m = split(&recs, 900, 100, 42).unwrap();
    assert_eq!(m.entries_in(Split::Train).count(), 7200);
    assert_eq!(m.entries_in(Split::Test).count(), 800);
    assert_eq!(m.class_order, CANONICAL_GENRES.to_vec());
    for c in m.counts() {
        assert_eq!((c.train, c.test), (900, 100), "{}", c.genre);
    }
    assert_partition(&m);
}

#[test]
fn uneven_songs_still_meet_quotas() {
    let mut recs = Vec::new();
    for (i, g) in ["a", "b"].iter().enumerate() {
        for s in 0..12 {
            for c in 0..(3 + (s * 7 + i) % 5) {
                recs.push(ClipRecord {
                    clip_path: format!("{g}/{s}_{c}"),
                    source_id: format!("{g}/{s}"),
                    offset_s: 30.0 * c as f64,
                    genre: g.to_string(),
                });
            }
        }
    }
    let m = split(&recs, 30, 6, 9).unwrap();
    for c in m.counts() {
        assert_eq!((c.train, c.test), (30, 6));
    }
    assert_partition(&m);
}

#[test]
fn split_is_seed_deterministic() {
    let recs = records(&["x", "y", "z"], 10, 4);
    let a = split(&recs, 24, 8, 7).unwrap();
    let b = split(&recs, 24, 8, 7).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    let c = split(&recs, 24, 8, 8).unwrap();
    assert_ne!(a.entries, c.entries);
}

#[test]
fn quota_and_granularity_errors() {
    let recs = records(&["x"], 3, 4);
    match split(&recs, 10, 4, 0) {
        Err(Error::Quota { genre, required, available }) => {
            assert_eq!((genre.as_str(), required, available), ("x", 14, 12));
        }
        other => panic!("{other:?}"),
    }
    let single = records(&["solo"], 1, 20);
    assert!(matches!(split(&single, 10, 5, 0), Err(Error::Granularity { genre }) if genre == "solo"));
}

#[test]
fn manifest_csv_roundtrip() {
    let recs = records(&["x", "y"], 4, 3);
    let m = split(&recs, 6, 3, 1).unwrap();
    let text = m.to_csv().unwrap();
    assert!(text.starts_with("clip_path,source_id,offset_s,genre,split\n"));
    let back = DatasetManifest::from_csv(&text).unwrap();
    assert_eq!(back.entries, m.entries);
    assert_eq!(back.class_order, m.class_order);
    assert!(DatasetManifest::from_csv("a,b\n1,2\n").is_err());
}

#[test]
fn large_tensor_roundtrip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.mgt");
    let n = 64 * 640 * 128;
    let data: Vec<f32> = (0..n).map(|i| (i as f32 * 0.001).sin() * 80.0 - 40.0).collect();
    let t = Tensor::from_vec(&[64, 640, 128], data).unwrap();
    write_container(&path, &[("mel".into(), t.clone())]).unwrap();
    let back = read_container(&path).unwrap();
    assert_eq!(back[0].0, "mel");
    assert_eq!(back[0].1.shape(), &[64, 640, 128]);
    assert!(back[0].1.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    // Truncating the file on disk is detected before anything is returned.
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(read_container(&path), Err(Error::Corrupt { .. })));
}

fn random_tensors(seed: u64) -> Vec<NamedTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(0..6);
    (0..count)
        .map(|i| {
            let rank = rng.random_range(1..4);
            let shape: Vec<usize> = (0..rank).map(|_| rng.random_range(1..6)).collect();
            let n = shape.iter().product();
            // Arbitrary bit patterns, NaN payloads included.
            let data = (0..n).map(|_| f32::from_bits(rng.random())).collect();
            let name: String = (0..rng.random_range(0..8))
                .map(|_| ['a', 'ß', '/', '7', 'é', '_'][rng.random_range(0..6)])
                .collect();
            (format!("{i}{name}"), Tensor::from_vec(&shape, data).unwrap())
        })
        .collect()
}

#[test]
fn container_roundtrip_hundred_seeds() {
    for seed in 0..100 {
        let t = random_tensors(seed);
        let back = decode_container(&encode_container(&t).unwrap()).unwrap();
        assert_eq!(t.len(), back.len());
        for ((n1, a), (n2, b)) in t.iter().zip(&back) {
            assert_eq!(n1, n2);
            assert_eq!(a.shape(), b.shape());
            assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn split_partitions_for_any_seed(seed in any::<u64>(), songs in 3usize..9, clips in 1usize..5) {
        let recs = records(&["p", "q"], songs, clips);
        let total = songs * clips;
        let test = clips.max(total / 4);
        match split(&recs, total - test - clips.min(total - test), test, seed) {
            Ok(m) => {
                assert_partition(&m);
                let mut per: HashMap<(&str, Split), usize> = HashMap::new();
                for e in &m.entries {
                    *per.entry((e.genre.as_str(), e.split)).or_default() += 1;
                }
                prop_assert_eq!(per[&("p", Split::Test)], test);
            }
            Err(e) => prop_assert!(matches!(e, Error::Granularity { .. }), "{e}"),
        }
    }
}
