use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetError, Manifest, Result};
use crate::derive_seed;

/// Splits a manifest into `(train, test)` by whole frames.
///
/// Frames are grouped by their most frequent label (ties go to the lower
/// density) and each group sends `round(n * test_fraction)` frames, at least
/// one and never all, to the test side. Every block of a frame stays on one
/// side, so no frame leaks between training and testing.
pub fn split(manifest: &Manifest, test_fraction: f64, seed: u64) -> Result<(Manifest, Manifest)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::InsufficientData(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut groups: [Vec<&str>; 4] = Default::default();
    for entry in &manifest.entries {
        let mut counts = [0usize; 4];
        for a in &entry.annotations {
            counts[a.label.index()] += 1;
        }
        if counts.iter().all(|&c| c == 0) {
            continue;
        }
        let dominant = (0..4).rev().max_by_key(|&i| counts[i]).expect("four labels");
        groups[dominant].push(&entry.frame_id);
    }

    let mut test_ids: HashSet<&str> = HashSet::new();
    for (i, frames) in groups.iter_mut().enumerate() {
        let n = frames.len();
        if n < 2 {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        frames.shuffle(&mut rng);
        let take = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
        test_ids.extend(frames.iter().take(take));
    }
    let train_ids: HashSet<&str> = manifest
        .entries
        .iter()
        .map(|e| e.frame_id.as_str())
        .filter(|id| !test_ids.contains(id))
        .collect();

    let train = manifest.subset(&train_ids);
    let test = manifest.subset(&test_ids);
    let wanted = manifest.labels();
    if wanted.is_empty() {
        return Err(DatasetError::InsufficientData("manifest has no annotations".into()));
    }
    for (side, part) in [("train", &train), ("test", &test)] {
        let have = part.labels();
        if let Some(missing) = wanted.iter().find(|l| !have.contains(l)) {
            return Err(DatasetError::InsufficientData(format!(
                "label {missing} absent from {side} split ({} frames carry it)",
                groups[missing.index()].len()
            )));
        }
    }
    Ok((train, test))
}
