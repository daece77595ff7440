use image::{Rgb, RgbImage};

use super::{EvalError, Result};
use crate::dataset::DensityLabel;
use crate::imaging::{BlockGrid, GrayImage, Rect};

const GLYPH_W: u32 = 5;
const GLYPH_H: u32 = 7;

/// 5x7 glyphs, one row per byte, most significant of the low 5 bits leftmost.
fn glyph(c: char) -> [u8; 7] {
    match c {
        'V' => [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100],
        'L' => [0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111],
        'M' => [0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001],
        'H' => [0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001],
        _ => [0; 7],
    }
}

pub fn label_color(label: DensityLabel) -> Rgb<u8> {
    match label {
        DensityLabel::VeryLow => Rgb([40, 200, 70]),
        DensityLabel::Low => Rgb([240, 220, 40]),
        DensityLabel::Medium => Rgb([250, 140, 20]),
        DensityLabel::High => Rgb([230, 30, 30]),
    }
}

fn fill(out: &mut RgbImage, r: Rect, color: Rgb<u8>) {
    let right = r.right().min(out.width());
    let bottom = r.bottom().min(out.height());
    for y in r.y..bottom {
        for x in r.x..right {
            out.put_pixel(x, y, color);
        }
    }
}

/// Renders the frame in color with every block outlined and tagged with its
/// label code (VL, L, M, H). The input is left untouched.
pub fn overlay_labels(image: &GrayImage, grid: &BlockGrid, labels: &[DensityLabel]) -> Result<RgbImage> {
    if labels.len() != grid.len() {
        return Err(EvalError::CountMismatch {
            labels: labels.len(),
            blocks: grid.len(),
        });
    }
    let gray = image.to_u8();
    let mut out = RgbImage::from_fn(image.width(), image.height(), |x, y| {
        let v = gray[(y * image.width() + x) as usize];
        Rgb([v, v, v])
    });
    for (&block, &label) in grid.blocks.iter().zip(labels) {
        let color = label_color(label);
        let t = if block.w.min(block.h) >= 32 { 2 } else { 1 };
        fill(&mut out, Rect::new(block.x, block.y, block.w, t), color);
        fill(&mut out, Rect::new(block.x, block.bottom() - t, block.w, t), color);
        fill(&mut out, Rect::new(block.x, block.y, t, block.h), color);
        fill(&mut out, Rect::new(block.right() - t, block.y, t, block.h), color);

        let code = label.code();
        let chars = code.chars().count() as u32;
        let text_w = |s: u32| chars * (GLYPH_W + 1) * s + s;
        let scale = (1..=3).rev().find(|&s| text_w(s) + 2 * t <= block.w && (GLYPH_H + 2) * s + 2 * t <= block.h);
        let Some(scale) = scale else { continue };
        let origin = (block.x + t, block.y + t);
        fill(
            &mut out,
            Rect::new(origin.0, origin.1, text_w(scale), (GLYPH_H + 2) * scale),
            Rgb([0, 0, 0]),
        );
        for (i, c) in code.chars().enumerate() {
            let gx = origin.0 + scale + i as u32 * (GLYPH_W + 1) * scale;
            let gy = origin.1 + scale;
            for (row, bits) in glyph(c).iter().enumerate() {
                for col in 0..GLYPH_W {
                    if bits >> (GLYPH_W - 1 - col) & 1 == 1 {
                        fill(
                            &mut out,
                            Rect::new(gx + col * scale, gy + row as u32 * scale, scale, scale),
                            color,
                        );
                    }
                }
            }
        }
    }
    Ok(out)
}
