//! Grayscale frames and their spatial decomposition into blocks and cells.
//!
//! Gray levels are kept as `f64` in `[0, 255]`. Quantization to 8 bits only
//! happens when reading or writing image files.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use image::{DynamicImage, ImageFormat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("block size {block_size} exceeds frame {width}x{height}")]
    BlockTooLarge {
        block_size: u32,
        width: u32,
        height: u32,
    },
    #[error("block size must be at least 1")]
    ZeroBlockSize,
    #[error("cell size {cell_size} does not fit block {w}x{h}")]
    CellTooLarge { cell_size: u32, w: u32, h: u32 },
    #[error("overlap {0} outside [0, 1)")]
    InvalidOverlap(f64),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, ImagingError>;

/// A single-channel frame, row-major.
#[derive(Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<f64>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(ImagingError::InvalidImage(format!(
                "buffer holds {} pixels, expected {}",
                pixels.len(),
                width as usize * height as usize
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0) {
            return Err(ImagingError::InvalidImage(format!(
                "gray level {bad} outside [0, 255]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_u8(width: u32, height: u32, pixels: &[u8]) -> Result<Self> {
        Self::new(width, height, pixels.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn filled(width: u32, height: u32, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Pixel at column `x`, row `y`. Panics when out of range.
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Rounds every gray level to the nearest 8-bit value.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn to_luma8(&self) -> image::GrayImage {
        image::GrayImage::from_raw(self.width, self.height, self.to_u8())
            .expect("buffer length matches dimensions")
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_luma8()
            .save_with_format(path, ImageFormat::Png)
            .map_err(|e| ImagingError::Io(io::Error::other(e)))
    }

    /// Writes a binary (P5) 8-bit PGM.
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut bytes = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        bytes.extend(self.to_u8());
        fs::write(path, bytes)?;
        Ok(())
    }
}

/// Arithmetic mean of all gray levels.
pub fn image_mean(image: &GrayImage) -> f64 {
    image.pixels.iter().sum::<f64>() / image.pixels.len() as f64
}

/// Reads an 8-bit PGM (P5) or PNG (gray or RGB) as a gray frame.
///
/// Color pixels are converted with BT.601 luma weights and rounded to the
/// nearest gray level. Any alpha channel is dropped.
pub fn load_grayscale(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(ImagingError::FileNotFound(path.display().to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    decode_grayscale(&bytes)
}

pub fn decode_grayscale(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.is_empty() {
        return Err(ImagingError::CorruptImage("empty file".into()));
    }
    let format = if bytes.starts_with(b"P5") {
        ImageFormat::Pnm
    } else if bytes.starts_with(b"\x89PNG") {
        ImageFormat::Png
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        return Err(ImagingError::UnsupportedFormat(format!(
            "netpbm variant P{}; only binary P5 is accepted",
            bytes[1] as char
        )));
    } else {
        return Err(ImagingError::UnsupportedFormat(
            "expected PGM (P5) or PNG".into(),
        ));
    };
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| ImagingError::CorruptImage(e.to_string()))?;
    let (width, height) = (decoded.width(), decoded.height());
    let pixels: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(img) => img.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLumaA8(img) => img.pixels().map(|p| f64::from(p.0[0])).collect(),
        DynamicImage::ImageRgb8(img) => img.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(img) => img.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        other => {
            return Err(ImagingError::UnsupportedFormat(format!(
                "{:?} pixels; only 8-bit gray or RGB is accepted",
                other.color()
            )))
        }
    };
    GrayImage::new(width, height, pixels)
}

#[inline]
fn luma(r: u8, g: u8, b: u8) -> f64 {
    (0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)).round()
}

/// Axis-aligned pixel rectangle; `x`, `y` are the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    #[inline]
    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.w >= 1
            && self.h >= 1
            && u64::from(self.x) + u64::from(self.w) <= u64::from(width)
            && u64::from(self.y) + u64::from(self.h) <= u64::from(height)
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn intersection_area(&self, other: &Rect) -> u64 {
        let w = self.right().min(other.right()).saturating_sub(self.x.max(other.x));
        let h = self.bottom().min(other.bottom()).saturating_sub(self.y.max(other.y));
        u64::from(w) * u64::from(h)
    }
}

/// Row-major tiling of a frame into classification blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    pub frame_size: (u32, u32),
    pub block_size: u32,
    pub columns: u32,
    pub rows: u32,
    pub blocks: Vec<Rect>,
}

impl BlockGrid {
    /// Tiles a `width` x `height` frame. When `block_size` does not divide a
    /// dimension, the last block along that axis grows to absorb the
    /// remainder, so no block is ever smaller than `block_size`.
    pub fn new(width: u32, height: u32, block_size: u32) -> Result<Self> {
        if block_size == 0 {
            return Err(ImagingError::ZeroBlockSize);
        }
        if block_size > width || block_size > height {
            return Err(ImagingError::BlockTooLarge {
                block_size,
                width,
                height,
            });
        }
        let xs = axis_spans(width, block_size);
        let ys = axis_spans(height, block_size);
        let blocks = ys
            .iter()
            .flat_map(|&(y, h)| xs.iter().map(move |&(x, w)| Rect::new(x, y, w, h)))
            .collect();
        Ok(Self {
            frame_size: (width, height),
            block_size,
            columns: xs.len() as u32,
            rows: ys.len() as u32,
            blocks,
        })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

fn axis_spans(extent: u32, block: u32) -> Vec<(u32, u32)> {
    let count = extent / block;
    (0..count)
        .map(|i| {
            let start = i * block;
            let len = if i + 1 == count { extent - start } else { block };
            (start, len)
        })
        .collect()
}

pub fn partition_blocks(image: &GrayImage, block_size: u32) -> Result<BlockGrid> {
    BlockGrid::new(image.width(), image.height(), block_size)
}

fn check_overlap(overlap: f64) -> Result<()> {
    if !(0.0..1.0).contains(&overlap) || !overlap.is_finite() {
        return Err(ImagingError::InvalidOverlap(overlap));
    }
    Ok(())
}

/// Offsets of overlapping windows of length `cell` along an axis of length
/// `extent`. The last window is pulled back so it ends exactly at `extent`.
fn cell_offsets(extent: u32, cell: u32, overlap: f64) -> Vec<u32> {
    let stride = ((f64::from(cell) * (1.0 - overlap)).floor() as u32).max(1);
    let last = extent - cell;
    let mut offsets: Vec<u32> = (0..=last).step_by(stride as usize).collect();
    if *offsets.last().expect("0 is always present") != last {
        offsets.push(last);
    }
    offsets
}

/// Overlapping cells inside `block`, row-major, in frame coordinates.
///
/// Cells advance by `floor(cell_size * (1 - overlap))` pixels (at least 1),
/// and a final cell flush with the block edge is added when the stride does
/// not land there, so every block pixel is covered.
pub fn cells_of_block(block: Rect, cell_size: u32, overlap: f64) -> Result<Vec<Rect>> {
    check_overlap(overlap)?;
    if cell_size == 0 || cell_size > block.w || cell_size > block.h {
        return Err(ImagingError::CellTooLarge {
            cell_size,
            w: block.w,
            h: block.h,
        });
    }
    let xs = cell_offsets(block.w, cell_size, overlap);
    let ys = cell_offsets(block.h, cell_size, overlap);
    Ok(ys
        .iter()
        .flat_map(|&dy| {
            xs.iter()
                .map(move |&dx| Rect::new(block.x + dx, block.y + dy, cell_size, cell_size))
        })
        .collect())
}

/// Cell layout for a block whose extent may exceed the nominal block size.
///
/// The cells of a nominal `block_size` block are laid out by
/// [`cells_of_block`] and then stretched per axis onto the actual block, so
/// every block of a grid yields the same number of cells (and therefore the
/// same feature length). For a block of exactly nominal size this is
/// identical to [`cells_of_block`].
pub fn scaled_cells(block: Rect, block_size: u32, cell_size: u32, overlap: f64) -> Result<Vec<Rect>> {
    if block.w == block_size && block.h == block_size {
        return cells_of_block(block, cell_size, overlap);
    }
    check_overlap(overlap)?;
    if cell_size == 0 || cell_size > block_size || block.w < block_size || block.h < block_size {
        return Err(ImagingError::CellTooLarge {
            cell_size,
            w: block.w.min(block_size),
            h: block.h.min(block_size),
        });
    }
    let nominal = cell_offsets(block_size, cell_size, overlap);
    let stretch = |extent: u32| -> Vec<(u32, u32)> {
        nominal
            .iter()
            .map(|&off| {
                let start = (u64::from(off) * u64::from(extent) / u64::from(block_size)) as u32;
                let end = (u64::from(off + cell_size) * u64::from(extent))
                    .div_ceil(u64::from(block_size)) as u32;
                (start, end.min(extent) - start)
            })
            .collect()
    };
    let xs = stretch(block.w);
    let ys = stretch(block.h);
    Ok(ys
        .iter()
        .flat_map(|&(dy, h)| {
            xs.iter()
                .map(move |&(dx, w)| Rect::new(block.x + dx, block.y + dy, w, h))
        })
        .collect())
}
