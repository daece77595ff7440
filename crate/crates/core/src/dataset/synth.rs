//! Desk-scale surrogate for annotated crowd blocks: a textured background
//! with dark elliptical blobs at head-and-shoulder scale, whose number
//! depends on the density label.

use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{BlockAnnotation, DatasetError, DensityLabel, Manifest, Result};
use crate::derive_seed;
use crate::imaging::{GrayImage, Rect};

/// Block side the per-label person counts refer to.
pub const SYNTH_REFERENCE_SIZE: u32 = 64;

/// Standard deviation of the additive gray-level noise.
pub const SYNTH_NOISE_SIGMA: f64 = 4.0;

/// Persons per reference block drawn for each label. The ranges sit inside
/// the corresponding density bands and are pairwise disjoint.
pub fn person_count_range(label: DensityLabel) -> RangeInclusive<u32> {
    match label {
        DensityLabel::VeryLow => 1..=4,
        DensityLabel::Low => 7..=10,
        DensityLabel::Medium => 12..=16,
        DensityLabel::High => 27..=36,
    }
}

/// Renders a `size` x `size` texture for `label`. Identical arguments give
/// identical images.
///
/// # Panics
///
/// If `size < 64`.
pub fn synth_crowd_texture(label: DensityLabel, size: u32, seed: u64) -> GrayImage {
    assert!(size >= 64, "synthetic textures need size >= 64, got {size}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = f64::from(size);
    let scale = (side / f64::from(SYNTH_REFERENCE_SIZE)).powi(2);
    let persons = rng.random_range(person_count_range(label));
    let blobs = (f64::from(persons) * scale).round() as usize;

    // Background: a bright floor with a gentle linear illumination ramp.
    let base: f64 = rng.random_range(150.0..190.0);
    let gx: f64 = rng.random_range(-10.0..10.0);
    let gy: f64 = rng.random_range(-10.0..10.0);
    let n = size as usize;
    let mut px: Vec<f64> = (0..n * n)
        .map(|i| {
            let (x, y) = ((i % n) as f64 / side, (i / n) as f64 / side);
            base + gx * (x - 0.5) + gy * (y - 0.5)
        })
        .collect();

    for _ in 0..blobs {
        let cx: f64 = rng.random_range(0.0..side);
        let cy: f64 = rng.random_range(0.0..side);
        let a: f64 = rng.random_range(3.0..6.0);
        let b: f64 = rng.random_range(3.0..6.0);
        let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let gray: f64 = rng.random_range(30.0..90.0);
        let (sin, cos) = theta.sin_cos();
        let reach = a.max(b).ceil() as i64;
        let (x0, y0) = (cx.floor() as i64, cy.floor() as i64);
        for y in (y0 - reach).max(0)..=(y0 + reach).min(n as i64 - 1) {
            for x in (x0 - reach).max(0)..=(x0 + reach).min(n as i64 - 1) {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                let u = (dx * cos + dy * sin) / a;
                let v = (-dx * sin + dy * cos) / b;
                if u * u + v * v <= 1.0 {
                    px[y as usize * n + x as usize] = gray;
                }
            }
        }
    }

    let noise = Normal::new(0.0, SYNTH_NOISE_SIGMA).expect("positive sigma");
    for v in &mut px {
        *v = (*v + noise.sample(&mut rng)).round().clamp(0.0, 255.0);
    }
    GrayImage::new(size, size, px).expect("generator output is a valid image")
}

/// Writes `per_class` frames of every label into `dir` as
/// `<code>_<index>.png`, each annotated as one whole-frame block, plus the
/// matching `manifest.txt`. Frame `i` of label `l` uses the sub-seed
/// `derive_seed(derive_seed(seed, l), i)`, so output is reproducible
/// byte for byte.
pub fn write_synth_corpus(dir: &Path, per_class: usize, size: u32, seed: u64) -> Result<Manifest> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| DatasetError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let frames: Vec<(DensityLabel, usize)> = DensityLabel::ALL
        .into_iter()
        .flat_map(|l| (0..per_class).map(move |i| (l, i)))
        .collect();
    let ids = frames
        .par_iter()
        .map(|&(label, i)| {
            let id = format!("{}_{i:04}.png", label.code().to_ascii_lowercase());
            let frame_seed = derive_seed(derive_seed(seed, label.index() as u64), i as u64);
            synth_crowd_texture(label, size, frame_seed).save_png(dir.join(&id))?;
            Ok(id)
        })
        .collect::<Result<Vec<String>>>()?;
    let mut manifest = Manifest::new(dir);
    manifest.source = Some("synthetic".into());
    manifest.block_size = Some(size);
    for (id, &(label, _)) in ids.into_iter().zip(&frames) {
        manifest.push(BlockAnnotation {
            frame_id: id,
            block: Rect::new(0, 0, size, size),
            person_count: None,
            label,
        })?;
    }
    manifest.save(dir.join("manifest.txt"))?;
    Ok(manifest)
}
