//! Completed local binary patterns.
//!
//! Each interior pixel gets three codes from a ring of `p` samples at radius
//! `r` around it:
//!
//! * **S**: sign of each neighbor minus the center, packed into `p` bits
//!   (the classic LBP code);
//! * **M**: whether each absolute difference reaches the frame-wide mean
//!   absolute difference `mu`, packed the same way;
//! * **C**: one bit, whether the center reaches the frame mean gray level.
//!
//! Codes are accumulated into per-cell histograms, either jointly over
//! `(S, M, C)` or as three concatenated marginals, and the cell histograms
//! of a block are concatenated into its feature vector.
//!
//! Thresholds use `s(x) = 1` for `x >= 0`. Neighbor `n` sits at angle
//! `2 pi n / p`, counter-clockwise from east, with image rows growing
//! downwards.

use std::f64::consts::PI;

use thiserror::Error;

use crate::imaging::{self, image_mean, GrayImage, ImagingError, Rect};

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("invalid descriptor parameters: {0}")]
    InvalidParams(String),
    #[error("ring around ({x}, {y}) leaves the image")]
    OutOfBounds { x: u32, y: u32 },
    #[error("image {width}x{height} has no pixel whose ring fits inside it")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("cell {0:?} has no pixel whose ring fits inside the image")]
    EmptyCell(Rect),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

pub type Result<T> = std::result::Result<T, DescriptorError>;

/// Largest histogram a single cell may produce.
pub const MAX_CELL_BINS: usize = 1 << 22;

const SNAP_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mapping {
    /// Raw `p`-bit codes, `2^p` bins.
    Full,
    /// Rotation-invariant uniform patterns, `p + 2` bins.
    Riu2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// S, M and C histograms side by side.
    Concat,
    /// One joint histogram over `(S, M, C)`.
    Joint,
}

impl Mapping {
    pub fn name(self) -> &'static str {
        match self {
            Mapping::Full => "full",
            Mapping::Riu2 => "riu2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Mapping::Full),
            "riu2" => Some(Mapping::Riu2),
            _ => None,
        }
    }

    pub fn bins(self, points: u32) -> usize {
        match self {
            Mapping::Full => 1usize << points,
            Mapping::Riu2 => points as usize + 2,
        }
    }

    #[inline]
    pub fn map(self, code: u32, points: u32) -> usize {
        match self {
            Mapping::Full => code as usize,
            Mapping::Riu2 => riu2_map(code, points),
        }
    }
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Concat => "concat",
            Scheme::Joint => "joint",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "concat" | "s_concat_m_concat_c" => Some(Scheme::Concat),
            "joint" | "smc_joint" => Some(Scheme::Joint),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClbpParams {
    pub radius: f64,
    pub points: u32,
    pub mapping: Mapping,
    pub scheme: Scheme,
}

impl Default for ClbpParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            points: 8,
            mapping: Mapping::Riu2,
            scheme: Scheme::Joint,
        }
    }
}

impl ClbpParams {
    pub fn new(radius: f64, points: u32, mapping: Mapping, scheme: Scheme) -> Result<Self> {
        let params = Self {
            radius,
            points,
            mapping,
            scheme,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.radius.is_finite() || self.radius < 1.0 {
            return Err(DescriptorError::InvalidParams(format!(
                "radius must be >= 1, got {}",
                self.radius
            )));
        }
        if !(4..=24).contains(&self.points) {
            return Err(DescriptorError::InvalidParams(format!(
                "points must be in 4..=24, got {}",
                self.points
            )));
        }
        if self.bin_count() > MAX_CELL_BINS {
            return Err(DescriptorError::InvalidParams(format!(
                "{} mapping with {} points and {} scheme needs {} bins per cell (limit {MAX_CELL_BINS})",
                self.mapping.name(),
                self.points,
                self.scheme.name(),
                self.bin_count()
            )));
        }
        Ok(())
    }

    pub fn pattern_bins(&self) -> usize {
        self.mapping.bins(self.points)
    }

    /// Histogram length of one cell.
    pub fn bin_count(&self) -> usize {
        let b = self.pattern_bins();
        match self.scheme {
            Scheme::Joint => b.saturating_mul(b).saturating_mul(2),
            Scheme::Concat => 2 * b + 2,
        }
    }
}

/// Threshold function: 1 when `x >= 0`.
#[inline]
pub fn sign(x: f64) -> u32 {
    u32::from(x >= 0.0)
}

/// Sample offsets of a ring, precomputed once per parameter set.
#[derive(Debug, Clone)]
pub struct RingGeometry {
    offsets: Vec<(f64, f64)>,
    margin: u32,
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < SNAP_EPS {
        r
    } else {
        v
    }
}

impl RingGeometry {
    pub fn new(params: &ClbpParams) -> Self {
        let p = params.points;
        let offsets: Vec<(f64, f64)> = (0..p)
            .map(|n| {
                let theta = 2.0 * PI * f64::from(n) / f64::from(p);
                let dx = snap(params.radius * theta.cos());
                let dy = snap(-params.radius * theta.sin());
                // -0.0 would floor to -1 below; normalize it away.
                (dx + 0.0, dy + 0.0)
            })
            .collect();
        let margin = offsets
            .iter()
            .map(|&(dx, dy)| dx.abs().ceil().max(dy.abs().ceil()) as u32)
            .max()
            .unwrap_or(0);
        Self { offsets, margin }
    }

    pub fn points(&self) -> usize {
        self.offsets.len()
    }

    /// Minimum distance in pixels between a valid center and the image edge.
    pub fn margin(&self) -> u32 {
        self.margin
    }

    #[inline]
    pub fn fits(&self, image: &GrayImage, x: u32, y: u32) -> bool {
        x >= self.margin
            && y >= self.margin
            && x + self.margin < image.width()
            && y + self.margin < image.height()
    }

    /// Writes the ring samples around `(x, y)` into `ring`. The caller
    /// guarantees the ring fits.
    #[inline]
    fn sample_into(&self, image: &GrayImage, x: u32, y: u32, ring: &mut [f64]) {
        for (slot, &(dx, dy)) in ring.iter_mut().zip(&self.offsets) {
            *slot = bilinear(image, f64::from(x) + dx, f64::from(y) + dy);
        }
    }
}

/// Bilinear sample; integer coordinates return the pixel itself.
#[inline]
fn bilinear(image: &GrayImage, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as u32, y0 as u32);
    let p00 = image.get(x0, y0);
    if fx == 0.0 && fy == 0.0 {
        return p00;
    }
    let x1 = if fx == 0.0 { x0 } else { x0 + 1 };
    let y1 = if fy == 0.0 { y0 } else { y0 + 1 };
    let p10 = image.get(x1, y0);
    let p01 = image.get(x0, y1);
    let p11 = image.get(x1, y1);
    let top = p00 + fx * (p10 - p00);
    let bottom = p01 + fx * (p11 - p01);
    top + fy * (bottom - top)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSamples {
    pub center: f64,
    pub ring: Vec<f64>,
}

pub fn sample_neighbors(image: &GrayImage, cx: u32, cy: u32, params: &ClbpParams) -> Result<NeighborSamples> {
    params.validate()?;
    let geometry = RingGeometry::new(params);
    if !geometry.fits(image, cx, cy) {
        return Err(DescriptorError::OutOfBounds { x: cx, y: cy });
    }
    let mut ring = vec![0.0; geometry.points()];
    geometry.sample_into(image, cx, cy, &mut ring);
    Ok(NeighborSamples {
        center: image.get(cx, cy),
        ring,
    })
}

/// Mean absolute neighbor-center difference over every pixel whose ring
/// fits in the image, and every ring position.
pub fn global_magnitude_mean(image: &GrayImage, params: &ClbpParams) -> Result<f64> {
    params.validate()?;
    let geometry = RingGeometry::new(params);
    magnitude_mean_with(image, &geometry)
}

fn magnitude_mean_with(image: &GrayImage, geometry: &RingGeometry) -> Result<f64> {
    let m = geometry.margin();
    if image.width() <= 2 * m || image.height() <= 2 * m {
        return Err(DescriptorError::ImageTooSmall {
            width: image.width(),
            height: image.height(),
        });
    }
    let mut ring = vec![0.0; geometry.points()];
    let mut total = 0.0;
    for y in m..image.height() - m {
        for x in m..image.width() - m {
            geometry.sample_into(image, x, y, &mut ring);
            let c = image.get(x, y);
            total += ring.iter().map(|v| (v - c).abs()).sum::<f64>();
        }
    }
    let centers = f64::from(image.width() - 2 * m) * f64::from(image.height() - 2 * m);
    Ok(total / (centers * geometry.points() as f64))
}

pub fn clbp_s_code(samples: &NeighborSamples) -> u32 {
    s_code(samples.center, &samples.ring)
}

pub fn clbp_m_code(samples: &NeighborSamples, mu: f64) -> u32 {
    m_code(samples.center, &samples.ring, mu)
}

pub fn clbp_c_bit(center: f64, global_mean: f64) -> u32 {
    sign(center - global_mean)
}

#[inline]
fn s_code(center: f64, ring: &[f64]) -> u32 {
    ring.iter()
        .enumerate()
        .fold(0, |code, (n, &v)| code | (sign(v - center) << n))
}

#[inline]
fn m_code(center: f64, ring: &[f64], mu: f64) -> u32 {
    ring.iter()
        .enumerate()
        .fold(0, |code, (n, &v)| code | (sign((v - center).abs() - mu) << n))
}

/// Rotation-invariant uniform mapping: patterns with at most two circular
/// 0/1 transitions map to their number of set bits, all others to `p + 1`.
pub fn riu2_map(code: u32, points: u32) -> usize {
    debug_assert!((1..=31).contains(&points) && code < (1 << points));
    let mask = (1u32 << points) - 1;
    let rotated = ((code >> 1) | ((code & 1) << (points - 1))) & mask;
    if (code ^ rotated).count_ones() <= 2 {
        code.count_ones() as usize
    } else {
        points as usize + 1
    }
}

/// The three codes of one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelCodes {
    pub s: u32,
    pub m: u32,
    pub c: u32,
}

/// Codes for every pixel of a frame, with the frame statistics they were
/// thresholded against. Pixels whose ring leaves the frame carry no codes.
#[derive(Debug, Clone)]
pub struct FrameCodes {
    params: ClbpParams,
    width: u32,
    height: u32,
    mu: f64,
    mean: f64,
    codes: Vec<Option<PixelCodes>>,
}

impl FrameCodes {
    /// Computes the frame mean and `mu`, then every pixel's codes.
    pub fn compute(image: &GrayImage, params: &ClbpParams) -> Result<Self> {
        params.validate()?;
        let geometry = RingGeometry::new(params);
        let mu = magnitude_mean_with(image, &geometry)?;
        let mean = image_mean(image);
        Ok(Self::with_thresholds(image, params, &geometry, mu, mean))
    }

    fn with_thresholds(image: &GrayImage, params: &ClbpParams, geometry: &RingGeometry, mu: f64, mean: f64) -> Self {
        let mut ring = vec![0.0; geometry.points()];
        let mut codes = Vec::with_capacity(image.pixels().len());
        for y in 0..image.height() {
            for x in 0..image.width() {
                codes.push(geometry.fits(image, x, y).then(|| {
                    geometry.sample_into(image, x, y, &mut ring);
                    let center = image.get(x, y);
                    PixelCodes {
                        s: s_code(center, &ring),
                        m: m_code(center, &ring, mu),
                        c: clbp_c_bit(center, mean),
                    }
                }));
            }
        }
        Self {
            params: *params,
            width: image.width(),
            height: image.height(),
            mu,
            mean,
            codes,
        }
    }

    pub fn params(&self) -> &ClbpParams {
        &self.params
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn at(&self, x: u32, y: u32) -> Option<PixelCodes> {
        self.codes[y as usize * self.width as usize + x as usize]
    }

    /// Histogram of the codes inside `cell`.
    pub fn histogram(&self, cell: Rect) -> Result<Histogram> {
        assert!(cell.fits_in(self.width, self.height), "cell {cell:?} outside frame");
        let mut acc = Accumulator::new(&self.params);
        for y in cell.y..cell.bottom() {
            for x in cell.x..cell.right() {
                if let Some(codes) = self.at(x, y) {
                    acc.add(codes);
                }
            }
        }
        acc.finish(cell)
    }

    /// Histogram of S codes only.
    pub fn s_histogram(&self, cell: Rect) -> Result<Histogram> {
        let mapping = self.params.mapping;
        let p = self.params.points;
        let mut counts = vec![0u64; self.params.pattern_bins()];
        for y in cell.y..cell.bottom() {
            for x in cell.x..cell.right() {
                if let Some(codes) = self.at(x, y) {
                    counts[mapping.map(codes.s, p)] += 1;
                }
            }
        }
        Histogram::from_counts(&counts).ok_or(DescriptorError::EmptyCell(cell))
    }

    /// Concatenated cell histograms of one block.
    pub fn block_feature(&self, block: Rect, cells: &[Rect]) -> Result<FeatureVector> {
        let mut values = Vec::with_capacity(cells.len() * self.params.bin_count());
        for &cell in cells {
            values.extend(self.histogram(cell)?.bins);
        }
        Ok(FeatureVector {
            values,
            block,
            params: self.params,
            cell_count: cells.len(),
        })
    }
}

struct Accumulator {
    params: ClbpParams,
    counts: Vec<u64>,
}

impl Accumulator {
    fn new(params: &ClbpParams) -> Self {
        Self {
            params: *params,
            counts: vec![0; params.bin_count()],
        }
    }

    #[inline]
    fn add(&mut self, codes: PixelCodes) {
        let p = self.params.points;
        let bins = self.params.pattern_bins();
        let s = self.params.mapping.map(codes.s, p);
        let m = self.params.mapping.map(codes.m, p);
        let c = codes.c as usize;
        match self.params.scheme {
            Scheme::Joint => self.counts[(s * bins + m) * 2 + c] += 1,
            Scheme::Concat => {
                self.counts[s] += 1;
                self.counts[bins + m] += 1;
                self.counts[2 * bins + c] += 1;
            }
        }
    }

    fn finish(self, cell: Rect) -> Result<Histogram> {
        Histogram::from_counts(&self.counts).ok_or(DescriptorError::EmptyCell(cell))
    }
}

/// L1-normalized histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<f64>,
}

impl Histogram {
    /// `None` when every count is zero.
    pub fn from_counts(counts: &[u64]) -> Option<Self> {
        let total: u64 = counts.iter().sum();
        (total > 0).then(|| Self {
            bins: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.bins.iter().sum()
    }
}

/// CLBP histogram of one cell, computed directly from the image.
///
/// `mu` and `image_mean` are frame-wide statistics, computed once per frame
/// with [`global_magnitude_mean`] and [`imaging::image_mean`]. Pixels of the
/// cell whose ring would leave the image are skipped.
pub fn cell_histogram(
    image: &GrayImage,
    cell: Rect,
    mu: f64,
    image_mean: f64,
    params: &ClbpParams,
) -> Result<Histogram> {
    params.validate()?;
    if !cell.fits_in(image.width(), image.height()) {
        return Err(ImagingError::InvalidImage(format!("cell {cell:?} outside image")).into());
    }
    let geometry = RingGeometry::new(params);
    let mut ring = vec![0.0; geometry.points()];
    let mut acc = Accumulator::new(params);
    for y in cell.y..cell.bottom() {
        for x in cell.x..cell.right() {
            if !geometry.fits(image, x, y) {
                continue;
            }
            geometry.sample_into(image, x, y, &mut ring);
            let center = image.get(x, y);
            acc.add(PixelCodes {
                s: s_code(center, &ring),
                m: m_code(center, &ring, mu),
                c: clbp_c_bit(center, image_mean),
            });
        }
    }
    acc.finish(cell)
}

/// Per-block descriptor: cell histograms concatenated in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub block: Rect,
    pub params: ClbpParams,
    pub cell_count: usize,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Feature vector of `block` using overlapping cells from
/// [`imaging::cells_of_block`].
pub fn block_feature(
    image: &GrayImage,
    block: Rect,
    mu: f64,
    mean: f64,
    params: &ClbpParams,
    cell_size: u32,
    overlap: f64,
) -> Result<FeatureVector> {
    let cells = imaging::cells_of_block(block, cell_size, overlap)?;
    let mut values = Vec::with_capacity(cells.len() * params.bin_count());
    for &cell in &cells {
        values.extend(cell_histogram(image, cell, mu, mean, params)?.bins);
    }
    Ok(FeatureVector {
        values,
        block,
        params: *params,
        cell_count: cells.len(),
    })
}
