use image::{Rgb, RgbImage};

use super::DetectTrace;
use crate::raster::{Mask, Pixel};

pub const CANDIDATE_COLOR: Rgb<u8> = Rgb([255, 220, 0]);
pub const PROMPT_COLOR: Rgb<u8> = Rgb([255, 40, 40]);
pub const CONTOUR_COLOR: Rgb<u8> = Rgb([0, 255, 90]);

/// Set pixels with at least one 4-neighbour outside the mask (or image).
pub fn contour(mask: &Mask) -> Mask {
    Mask::from_fn(mask.width(), mask.height(), |x, y| {
        let (xi, yi) = (x as i64, y as i64);
        mask.get(x, y)
            && [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|(dx, dy)| !mask.get_signed(xi + dx, yi + dy))
    })
}

pub fn draw_mask_contour(img: &mut RgbImage, mask: &Mask, color: Rgb<u8>) {
    for p in contour(mask).pixels() {
        if (p.x as u32) < img.width() && (p.y as u32) < img.height() {
            img.put_pixel(p.x as u32, p.y as u32, color);
        }
    }
}

/// Filled square of half-size `r` around `p`, clipped to the image.
pub fn draw_point(img: &mut RgbImage, p: Pixel, r: i32, color: Rgb<u8>) {
    for y in p.y - r..=p.y + r {
        for x in p.x - r..=p.x + r {
            if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
}

/// Query image with detection contours, every candidate point and the
/// prompts chosen per cluster. Detections at or below `min_score` are left
/// out.
pub fn render_overlay(image: &RgbImage, trace: &DetectTrace, min_score: f64) -> RgbImage {
    let mut out = image.clone();
    for d in &trace.detections {
        if d.score > min_score {
            draw_mask_contour(&mut out, &d.mask, CONTOUR_COLOR);
        }
    }
    for c in trace.candidates.by_template.iter().flatten() {
        draw_point(&mut out, c.pixel, 1, CANDIDATE_COLOR);
    }
    for p in trace.prompts.iter().flatten() {
        draw_point(&mut out, *p, 2, PROMPT_COLOR);
    }
    out
}
