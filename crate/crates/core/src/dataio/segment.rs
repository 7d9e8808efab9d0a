use crate::dsp::AudioClip;

/// Cuts `song` into consecutive non-overlapping windows of `clip_seconds`,
/// dropping a trailing remainder shorter than one window. Clips keep the
/// song's `source_id`; `offset_s` is measured from the song start.
pub fn segment(song: &AudioClip, clip_seconds: f64) -> Vec<AudioClip> {
    let len = (clip_seconds * song.sample_rate as f64).round() as usize;
    if len == 0 {
        return Vec::new();
    }
    song.samples
        .chunks_exact(len)
        .enumerate()
        .map(|(i, chunk)| AudioClip {
            samples: chunk.to_vec(),
            sample_rate: song.sample_rate,
            source_id: song.source_id.clone(),
            offset_s: song.offset_s + i as f64 * clip_seconds,
        })
        .collect()
}
