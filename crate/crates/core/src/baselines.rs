//! Comparison descriptors: the original LBP and gray-level co-occurrence
//! matrices summarized by Haralick statistics.

use thiserror::Error;

use crate::descriptor::{self, ClbpParams, DescriptorError, FrameCodes, Histogram, RingGeometry};
use crate::imaging::{GrayImage, Rect};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid GLCM parameters: {0}")]
    InvalidParams(String),
    #[error("region {region:?} too small for offset {offset:?}")]
    RegionTooSmall { region: Rect, offset: (i32, i32) },
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
}

pub type Result<T> = std::result::Result<T, BaselineError>;

/// Histogram of classic LBP codes (the S component alone) over one cell.
///
/// Uses the same geometry, edge skipping and mapping as
/// [`descriptor::cell_histogram`], so it equals the S-marginal of the joint
/// CLBP histogram of the same cell.
pub fn lbp_histogram(image: &GrayImage, cell: Rect, params: &ClbpParams) -> Result<Histogram> {
    params.validate()?;
    if !cell.fits_in(image.width(), image.height()) {
        return Err(BaselineError::InvalidParams(format!("cell {cell:?} outside image")));
    }
    let geometry = RingGeometry::new(params);
    let mut counts = vec![0u64; params.pattern_bins()];
    for y in cell.y..cell.bottom() {
        for x in cell.x..cell.right() {
            if !geometry.fits(image, x, y) {
                continue;
            }
            let samples = descriptor::sample_neighbors(image, x, y, params)?;
            counts[params.mapping.map(descriptor::clbp_s_code(&samples), params.points)] += 1;
        }
    }
    Histogram::from_counts(&counts).ok_or(BaselineError::Descriptor(DescriptorError::EmptyCell(cell)))
}

/// Offsets averaged by default: east, south, south-east, north-east.
pub const DEFAULT_OFFSETS: [(i32, i32); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlcmParams {
    pub offset: (i32, i32),
    pub levels: u32,
    pub symmetric: bool,
}

impl Default for GlcmParams {
    fn default() -> Self {
        Self {
            offset: (1, 0),
            levels: 8,
            symmetric: true,
        }
    }
}

impl GlcmParams {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(BaselineError::InvalidParams(format!(
                "levels must be >= 2, got {}",
                self.levels
            )));
        }
        if self.offset == (0, 0) {
            return Err(BaselineError::InvalidParams("offset must be nonzero".into()));
        }
        Ok(())
    }
}

/// Normalized `levels x levels` co-occurrence matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    pub levels: usize,
    pub p: Vec<f64>,
}

impl Glcm {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }
}

#[inline]
fn quantize(v: f64, levels: u32) -> usize {
    ((v * f64::from(levels) / 256.0).floor() as usize).min(levels as usize - 1)
}

fn glcm_counts(image: &GrayImage, region: Rect, params: &GlcmParams, counts: &mut [u64]) -> Result<u64> {
    let (dx, dy) = params.offset;
    let levels = params.levels as usize;
    let mut pairs = 0;
    for y in region.y..region.bottom() {
        let ny = i64::from(y) + i64::from(dy);
        if ny < i64::from(region.y) || ny >= i64::from(region.bottom()) {
            continue;
        }
        for x in region.x..region.right() {
            let nx = i64::from(x) + i64::from(dx);
            if nx < i64::from(region.x) || nx >= i64::from(region.right()) {
                continue;
            }
            let a = quantize(image.get(x, y), params.levels);
            let b = quantize(image.get(nx as u32, ny as u32), params.levels);
            counts[a * levels + b] += 1;
            if params.symmetric {
                counts[b * levels + a] += 1;
            }
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(BaselineError::RegionTooSmall {
            region,
            offset: params.offset,
        });
    }
    Ok(pairs)
}

/// Co-occurrence matrix of quantized gray pairs `(I(x, y), I(x+dx, y+dy))`
/// with both pixels inside `region`.
pub fn glcm(image: &GrayImage, region: Rect, params: &GlcmParams) -> Result<Glcm> {
    params.validate()?;
    if !region.fits_in(image.width(), image.height()) {
        return Err(BaselineError::InvalidParams(format!("region {region:?} outside image")));
    }
    let levels = params.levels as usize;
    let mut counts = vec![0u64; levels * levels];
    glcm_counts(image, region, params, &mut counts)?;
    let total: u64 = counts.iter().sum();
    Ok(Glcm {
        levels,
        p: counts.iter().map(|&c| c as f64 / total as f64).collect(),
    })
}

/// Mean of the normalized matrices over several offsets.
pub fn glcm_averaged(
    image: &GrayImage,
    region: Rect,
    offsets: &[(i32, i32)],
    levels: u32,
    symmetric: bool,
) -> Result<Glcm> {
    let mut acc: Option<Glcm> = None;
    for &offset in offsets {
        let m = glcm(image, region, &GlcmParams { offset, levels, symmetric })?;
        match acc.as_mut() {
            None => acc = Some(m),
            Some(a) => a.p.iter_mut().zip(&m.p).for_each(|(x, y)| *x += y),
        }
    }
    let mut acc = acc.ok_or_else(|| BaselineError::InvalidParams("no offsets".into()))?;
    let k = offsets.len() as f64;
    acc.p.iter_mut().for_each(|v| *v /= k);
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Haralick {
    pub contrast: f64,
    pub energy: f64,
    pub entropy: f64,
    pub homogeneity: f64,
    pub correlation: f64,
}

impl Haralick {
    pub fn to_array(self) -> [f64; 5] {
        [
            self.contrast,
            self.energy,
            self.entropy,
            self.homogeneity,
            self.correlation,
        ]
    }
}

pub fn haralick_features(m: &Glcm) -> Haralick {
    let n = m.levels;
    let (mut mean_i, mut mean_j) = (0.0, 0.0);
    let mut h = Haralick {
        contrast: 0.0,
        energy: 0.0,
        entropy: 0.0,
        homogeneity: 0.0,
        correlation: 0.0,
    };
    for i in 0..n {
        for j in 0..n {
            let p = m.at(i, j);
            let d = i as f64 - j as f64;
            h.contrast += d * d * p;
            h.energy += p * p;
            if p > 0.0 {
                h.entropy -= p * p.ln();
            }
            h.homogeneity += p / (1.0 + d * d);
            mean_i += i as f64 * p;
            mean_j += j as f64 * p;
        }
    }
    let (mut var_i, mut var_j, mut cov) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let p = m.at(i, j);
            let (di, dj) = (i as f64 - mean_i, j as f64 - mean_j);
            var_i += di * di * p;
            var_j += dj * dj * p;
            cov += di * dj * p;
        }
    }
    // Constant regions have no spread; call them uncorrelated.
    if var_i > 1e-12 && var_j > 1e-12 {
        h.correlation = (cov / (var_i * var_j).sqrt()).clamp(-1.0, 1.0);
    }
    h
}

/// Block descriptor of the GLCM baseline: per cell, Haralick statistics of
/// the offset-averaged matrix, each rescaled to roughly `[0, 1]` so no single
/// statistic dominates kernel distances.
pub fn glcm_cell_feature(image: &GrayImage, cell: Rect, levels: u32, symmetric: bool) -> Result<[f64; 5]> {
    let m = glcm_averaged(image, cell, &DEFAULT_OFFSETS, levels, symmetric)?;
    let h = haralick_features(&m);
    let span = f64::from(levels - 1);
    Ok([
        h.contrast / (span * span),
        h.energy,
        h.entropy / (2.0 * f64::from(levels).ln()),
        h.homogeneity,
        0.5 * (h.correlation + 1.0),
    ])
}

/// LBP block descriptor from precomputed frame codes.
pub fn lbp_block_feature(frame: &FrameCodes, cells: &[Rect]) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(cells.len() * frame.params().pattern_bins());
    for &cell in cells {
        values.extend(frame.s_histogram(cell)?.bins);
    }
    Ok(values)
}

pub fn glcm_block_feature(image: &GrayImage, cells: &[Rect], levels: u32, symmetric: bool) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(cells.len() * 5);
    for &cell in cells {
        values.extend(glcm_cell_feature(image, cell, levels, symmetric)?);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{cell_histogram, global_magnitude_mean, Mapping, Scheme};
    use crate::imaging::image_mean;
    use proptest::prelude::*;

    fn noisy(w: u32, h: u32, salt: u32) -> GrayImage {
        let px: Vec<u8> = (0..w * h)
            .map(|i| ((i.wrapping_mul(2_654_435_761).wrapping_add(salt)) >> 24) as u8)
            .collect();
        GrayImage::from_u8(w, h, &px).unwrap()
    }

    #[test]
    fn constant_cell_lbp() {
        let img = GrayImage::filled(10, 10, 33.0).unwrap();
        let params = ClbpParams::default();
        let h = lbp_histogram(&img, Rect::new(0, 0, 10, 10), &params).unwrap();
        assert_eq!(h.len(), 10);
        assert_eq!(h.bins[8], 1.0);
    }

    #[test]
    fn lbp_is_s_marginal_of_joint_histogram() {
        let img = noisy(24, 24, 7);
        for mapping in [Mapping::Riu2, Mapping::Full] {
            let params = ClbpParams::new(1.0, 8, mapping, Scheme::Joint).unwrap();
            let mu = global_magnitude_mean(&img, &params).unwrap();
            let cell = Rect::new(2, 3, 16, 16);
            let joint = cell_histogram(&img, cell, mu, image_mean(&img), &params).unwrap();
            let lbp = lbp_histogram(&img, cell, &params).unwrap();
            let b = params.pattern_bins();
            for s in 0..b {
                let marginal: f64 = joint.bins[s * b * 2..(s + 1) * b * 2].iter().sum();
                assert!((marginal - lbp.bins[s]).abs() < 1e-12);
            }
            let frame = FrameCodes::compute(&img, &params).unwrap();
            assert_eq!(frame.s_histogram(cell).unwrap(), lbp);
        }
    }

    #[test]
    fn lbp_matches_brute_force() {
        let img = noisy(16, 16, 99);
        let params = ClbpParams::new(1.0, 8, Mapping::Full, Scheme::Joint).unwrap();
        let h = lbp_histogram(&img, Rect::new(0, 0, 16, 16), &params).unwrap();
        let mut counts = vec![0u64; 256];
        for y in 1..15u32 {
            for x in 1..15u32 {
                let c = img.get(x, y);
                // Axis neighbors only; diagonals carry interpolation and are
                // checked against the oracle in the acceptance suite.
                let mut code = 0;
                for (bit, (nx, ny)) in [(0, (x + 1, y)), (2, (x, y - 1)), (4, (x - 1, y)), (6, (x, y + 1))] {
                    if img.get(nx, ny) >= c {
                        code |= 1 << bit;
                    }
                }
                let samples = descriptor::sample_neighbors(&img, x, y, &params).unwrap();
                let full = descriptor::clbp_s_code(&samples);
                assert_eq!(full & 0b0101_0101, code);
                counts[full as usize] += 1;
            }
        }
        assert_eq!(h, Histogram::from_counts(&counts).unwrap());
    }

    #[test]
    fn glcm_examples() {
        let flat = GrayImage::filled(5, 5, 200.0).unwrap();
        let m = glcm(&flat, Rect::new(0, 0, 5, 5), &GlcmParams::default()).unwrap();
        assert_eq!(m.at(6, 6), 1.0);

        let pair = GrayImage::from_u8(2, 1, &[0, 255]).unwrap();
        let region = Rect::new(0, 0, 2, 1);
        let one_way = GlcmParams { offset: (1, 0), levels: 2, symmetric: false };
        assert_eq!(glcm(&pair, region, &one_way).unwrap().p, vec![0.0, 1.0, 0.0, 0.0]);
        let sym = GlcmParams { symmetric: true, ..one_way };
        assert_eq!(glcm(&pair, region, &sym).unwrap().p, vec![0.0, 0.5, 0.5, 0.0]);

        let down = GlcmParams { offset: (0, 1), ..sym };
        assert!(matches!(glcm(&pair, region, &down), Err(BaselineError::RegionTooSmall { .. })));
        assert!(GlcmParams { levels: 1, ..sym }.validate().is_err());
        assert!(GlcmParams { offset: (0, 0), ..sym }.validate().is_err());
    }

    #[test]
    fn haralick_degenerate_and_uniform() {
        let mut p = vec![0.0; 16];
        p[5] = 1.0;
        let h = haralick_features(&Glcm { levels: 4, p });
        assert_eq!((h.contrast, h.energy, h.entropy, h.homogeneity, h.correlation), (0.0, 1.0, 0.0, 1.0, 0.0));

        let k = 4usize;
        let h = haralick_features(&Glcm { levels: k, p: vec![1.0 / 16.0; 16] });
        assert!((h.energy - 1.0 / 16.0).abs() < 1e-15);
        assert!((h.entropy - 2.0 * (k as f64).ln()).abs() < 1e-12);
        assert!(h.correlation.abs() < 1e-12);
    }

    #[test]
    fn glcm_cell_feature_is_bounded() {
        let img = noisy(32, 32, 3);
        let f = glcm_cell_feature(&img, Rect::new(0, 0, 32, 32), 8, true).unwrap();
        assert!(f.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)), "{f:?}");
    }

    proptest! {
        #[test]
        fn glcm_is_normalized_and_inversion_symmetric(
            px in proptest::collection::vec(any::<u8>(), 12 * 9),
            levels in prop_oneof![Just(2u32), Just(4), Just(8), Just(16)],
            offset in prop_oneof![Just((1, 0)), Just((0, 1)), Just((1, 1)), Just((1, -1)), Just((-2, 1))],
            symmetric in any::<bool>(),
        ) {
            let img = GrayImage::from_u8(12, 9, &px).unwrap();
            let inverted: Vec<u8> = px.iter().map(|v| 255 - v).collect();
            let inv = GrayImage::from_u8(12, 9, &inverted).unwrap();
            let params = GlcmParams { offset, levels, symmetric };
            let region = Rect::new(0, 0, 12, 9);
            let a = glcm(&img, region, &params).unwrap();
            let b = glcm(&inv, region, &params).unwrap();
            prop_assert!((a.sum() - 1.0).abs() <= 1e-9);
            let l = levels as usize;
            for i in 0..l {
                for j in 0..l {
                    prop_assert_eq!(a.at(i, j), b.at(l - 1 - i, l - 1 - j));
                }
            }
            let h = haralick_features(&a);
            prop_assert!(h.energy > 0.0 && h.energy <= 1.0 + 1e-12);
            prop_assert!(h.entropy >= 0.0);
            prop_assert!((-1.0..=1.0).contains(&h.correlation));
        }
    }
}
