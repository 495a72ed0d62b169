//! Annotated (red) vs predicted (yellow) box overlays with a caption strip
//! underneath the image.

use image::{Rgb, RgbImage};

use crate::ctr::compute_ctr;
use crate::postproc::StructureBoxes;
use crate::types::{BoundingBox, GrayImage};

pub const ANNOTATED_COLOR: Rgb<u8> = Rgb([255, 0, 0]);
pub const PREDICTED_COLOR: Rgb<u8> = Rgb([255, 255, 0]);
const CAPTION_BG: Rgb<u8> = Rgb([0, 0, 0]);

const GLYPH_W: u32 = 5;
const GLYPH_H: u32 = 7;

/// 5x7 glyphs, one byte per row, bit 4 is the leftmost column.
fn glyph(c: char) -> [u8; 7] {
    match c.to_ascii_uppercase() {
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        'A' => [0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11],
        'B' => [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E],
        'C' => [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E],
        'D' => [0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C],
        'E' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F],
        'F' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10],
        'G' => [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F],
        'H' => [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'I' => [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
        'J' => [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C],
        'K' => [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
        'L' => [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F],
        'M' => [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11],
        'N' => [0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11],
        'O' => [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'P' => [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
        'Q' => [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D],
        'R' => [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11],
        'S' => [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E],
        'T' => [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
        'U' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'V' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04],
        'W' => [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A],
        'X' => [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11],
        'Y' => [0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04],
        'Z' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C],
        ':' => [0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00],
        '/' => [0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00],
        '-' => [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00],
        '=' => [0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00],
        ',' => [0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08],
        '(' => [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
        ')' => [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
        ' ' => [0; 7],
        _ => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04],
    }
}

/// Draws `text` with its top-left corner at `(x, y)`; clipped at the edges.
fn draw_text(img: &mut RgbImage, x: u32, y: u32, scale: u32, text: &str, color: Rgb<u8>) {
    let advance = (GLYPH_W + 1) * scale;
    for (i, c) in text.chars().enumerate() {
        let gx = x + i as u32 * advance;
        for (row, bits) in glyph(c).iter().enumerate() {
            for col in 0..GLYPH_W {
                if bits & (0x10 >> col) == 0 {
                    continue;
                }
                for dy in 0..scale {
                    for dx in 0..scale {
                        let px = gx + col * scale + dx;
                        let py = y + row as u32 * scale + dy;
                        if px < img.width() && py < img.height() {
                            img.put_pixel(px, py, color);
                        }
                    }
                }
            }
        }
    }
}

fn draw_box(img: &mut RgbImage, b: &BoundingBox, thickness: u32, color: Rgb<u8>) {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let t = thickness as usize;
    let mut put = |x: usize, y: usize| {
        if x < w && y < h {
            img.put_pixel(x as u32, y as u32, color);
        }
    };
    for x in b.x_min..=b.x_max {
        for k in 0..t {
            put(x, b.y_min + k);
            put(x, b.y_max.saturating_sub(k));
        }
    }
    for y in b.y_min..=b.y_max {
        for k in 0..t {
            put(b.x_min + k, y);
            put(b.x_max.saturating_sub(k), y);
        }
    }
}

/// Font scale used for an image of the given width.
pub fn caption_scale(width: usize) -> u32 {
    (width as u32 / 128).max(1)
}

/// Height of the caption strip added below an image of the given width.
pub fn caption_height(width: usize) -> u32 {
    let s = caption_scale(width);
    2 * (GLYPH_H + 2) * s + 2 * s
}

fn ctr_text(boxes: Option<&StructureBoxes>) -> String {
    match boxes.and_then(|b| compute_ctr(&b.heart, &b.thorax).ok()) {
        Some(m) => format!("{:.4}", m.ctr),
        None => "n/a".into(),
    }
}

/// Renders the radiograph in gray with annotated boxes in red and predicted
/// boxes in yellow, and a caption strip below reading `A <ctr>` (red) and
/// `P <ctr>` (yellow).
pub fn render_overlay(
    image: &GrayImage,
    annotated: Option<&StructureBoxes>,
    predicted: Option<&StructureBoxes>,
) -> RgbImage {
    let (w, h) = (image.width() as u32, image.height() as u32);
    let strip = caption_height(image.width());
    let scale = caption_scale(image.width());
    let mut out = RgbImage::from_pixel(w, h + strip, CAPTION_BG);
    for (i, v) in image.data().iter().enumerate() {
        let g = (v * 255.0).round() as u8;
        out.put_pixel(i as u32 % w, i as u32 / w, Rgb([g, g, g]));
    }
    let thickness = (image.width() as u32 / 256).max(1);
    for (boxes, color) in [(annotated, ANNOTATED_COLOR), (predicted, PREDICTED_COLOR)] {
        if let Some(b) = boxes {
            draw_box(&mut out, &b.heart, thickness, color);
            draw_box(&mut out, &b.thorax, thickness, color);
        }
    }
    let line = (GLYPH_H + 2) * scale;
    let x = scale;
    let mut y = h + scale + scale;
    if annotated.is_some() {
        draw_text(&mut out, x, y, scale, &format!("A {}", ctr_text(annotated)), ANNOTATED_COLOR);
        y += line;
    }
    draw_text(&mut out, x, y, scale, &format!("P {}", ctr_text(predicted)), PREDICTED_COLOR);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxes(h: (usize, usize), t: (usize, usize)) -> StructureBoxes {
        StructureBoxes {
            heart: BoundingBox::new(h.0, 20, h.1, 40).unwrap(),
            thorax: BoundingBox::new(t.0, 5, t.1, 55).unwrap(),
        }
    }

    #[test]
    fn size_and_colors() {
        let img = GrayImage::filled(64, 64, 0.5).unwrap();
        let a = boxes((20, 39), (6, 57));
        let p = boxes((22, 43), (8, 55));
        let out = render_overlay(&img, Some(&a), Some(&p));
        assert_eq!((out.width(), out.height()), (64, 64 + caption_height(64)));
        assert_eq!(*out.get_pixel(6, 30), ANNOTATED_COLOR);
        assert_eq!(*out.get_pixel(8, 30), PREDICTED_COLOR);
        assert_eq!(*out.get_pixel(1, 1), Rgb([128, 128, 128]));
        let strip = (64..out.height()).flat_map(|y| (0..64).map(move |x| (x, y)));
        let colors: Vec<Rgb<u8>> = strip.map(|(x, y)| *out.get_pixel(x, y)).collect();
        assert!(colors.contains(&ANNOTATED_COLOR));
        assert!(colors.contains(&PREDICTED_COLOR));
    }

    #[test]
    fn missing_prediction_draws_only_red() {
        let img = GrayImage::filled(64, 64, 0.2).unwrap();
        let a = boxes((20, 39), (6, 57));
        let out = render_overlay(&img, Some(&a), None);
        let image_area = (0..64).flat_map(|y| (0..64).map(move |x| (x, y)));
        assert!(image_area.clone().all(|(x, y)| *out.get_pixel(x, y) != PREDICTED_COLOR));
        assert!(image_area.clone().any(|(x, y)| *out.get_pixel(x, y) == ANNOTATED_COLOR));
    }

    #[test]
    fn glyphs_fit_five_columns() {
        for c in "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ.:/-=,() ?".chars() {
            assert!(glyph(c).iter().all(|r| *r < 0x20), "{c}");
        }
    }
}
