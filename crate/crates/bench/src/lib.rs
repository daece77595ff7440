//! Shared fixtures for the criterion benchmarks in `benches/`.

use crowd_clbp::dataset::synth_crowd_texture;
use crowd_clbp::{derive_seed, DensityLabel, GrayImage};

/// A 768x576 frame of tiled synthetic crowd texture, one density level per
/// 128 px tile, so every block size sees a mix of labels.
pub fn test_frame(seed: u64) -> GrayImage {
    let (w, h, tile) = (768u32, 576u32, 128u32);
    let tiles: Vec<GrayImage> = (0..4)
        .map(|i| synth_crowd_texture(DensityLabel::ALL[i], tile, derive_seed(seed, i as u64)))
        .collect();
    let mut pixels = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let t = &tiles[((x / tile + y / tile) % 4) as usize];
            pixels.push(t.get(x % tile, y % tile));
        }
    }
    GrayImage::new(w, h, pixels).expect("valid dimensions")
}

/// `per_class` synthetic frames of each label with their labels.
pub fn labeled_frames(per_class: usize, size: u32, seed: u64) -> Vec<(GrayImage, DensityLabel)> {
    DensityLabel::ALL
        .into_iter()
        .flat_map(|l| {
            (0..per_class).map(move |i| {
                let s = derive_seed(derive_seed(seed, l.index() as u64), i as u64);
                (synth_crowd_texture(l, size, s), l)
            })
        })
        .collect()
}
