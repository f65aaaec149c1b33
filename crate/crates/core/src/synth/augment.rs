use image::{Rgb, RgbImage};

use super::TemplateEntry;
use crate::error::{L2gError, Result};
use crate::raster::Mask;

/// Scales, rotates (degrees) and blurs the masked object of a template.
///
/// The object is first cropped to its mask's bounding box; image and mask
/// then share one inverse-mapped affine with nearest-neighbour sampling.
/// Blur touches the image only. The output is sized to the transformed
/// bounding box.
pub fn augment_object(entry: &TemplateEntry, scale: f64, rotation: f64, blur_sigma: f64) -> Result<(RgbImage, Mask)> {
    if !(scale > 0.0) || !scale.is_finite() || !rotation.is_finite() || !(blur_sigma >= 0.0) {
        return Err(L2gError::Generation(format!(
            "invalid augmentation scale={scale} rotation={rotation} blur={blur_sigma}"
        )));
    }
    let [bx, by, bw, bh] = entry
        .mask
        .bbox()
        .ok_or_else(|| L2gError::Generation("template mask is empty".into()))?;
    let (sw, sh) = (bw as f64, bh as f64);
    let (sin, cos) = rotation.to_radians().sin_cos();
    let ow = ((sw * cos.abs() + sh * sin.abs()) * scale - 1e-9).ceil().max(1.0) as u32;
    let oh = ((sw * sin.abs() + sh * cos.abs()) * scale - 1e-9).ceil().max(1.0) as u32;

    let mut img = RgbImage::new(ow, oh);
    let mut mask = Mask::new(ow as usize, oh as usize);
    let (ocx, ocy) = (ow as f64 / 2.0, oh as f64 / 2.0);
    let (scx, scy) = (sw / 2.0, sh / 2.0);
    for v in 0..oh {
        for u in 0..ow {
            let dx = u as f64 + 0.5 - ocx;
            let dy = v as f64 + 0.5 - ocy;
            // inverse rotation, then inverse scale
            let rx = (cos * dx + sin * dy) / scale;
            let ry = (-sin * dx + cos * dy) / scale;
            let sx = (rx + scx).floor();
            let sy = (ry + scy).floor();
            if sx < 0.0 || sy < 0.0 || sx >= sw || sy >= sh {
                continue;
            }
            let (px, py) = (bx + sx as u32, by + sy as u32);
            img.put_pixel(u, v, *entry.image.get_pixel(px, py));
            if entry.mask.get(px as usize, py as usize) {
                mask.set(u as usize, v as usize, true);
            }
        }
    }
    if mask.is_empty() {
        return Err(L2gError::Generation("object vanished under augmentation".into()));
    }
    // pixels outside the object take the mean object colour so blur does not
    // pull in the template backdrop
    let mut acc = [0u64; 3];
    for p in mask.pixels() {
        let c = img.get_pixel(p.x as u32, p.y as u32).0;
        for i in 0..3 {
            acc[i] += c[i] as u64;
        }
    }
    let n = mask.count() as u64;
    let fill = Rgb([(acc[0] / n) as u8, (acc[1] / n) as u8, (acc[2] / n) as u8]);
    for v in 0..oh {
        for u in 0..ow {
            if !mask.get(u as usize, v as usize) {
                img.put_pixel(u, v, fill);
            }
        }
    }
    if blur_sigma > 0.0 {
        img = image::imageops::blur(&img, blur_sigma as f32);
    }
    Ok((img, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(mask: Mask) -> TemplateEntry {
        let (w, h) = mask.dims();
        let img = RgbImage::from_fn(w as u32, h as u32, |x, y| Rgb([(x * 10) as u8, (y * 10) as u8, 77]));
        TemplateEntry::new(img, mask, "obj", 0).unwrap()
    }

    #[test]
    fn identity_transform() {
        let m = Mask::from_fn(12, 9, |x, y| x + y < 10);
        let e = entry(m.clone());
        let (img, out) = augment_object(&e, 1.0, 0.0, 0.0).unwrap();
        let [bx, by, bw, bh] = m.bbox().unwrap();
        assert_eq!(out, m.crop(bx as usize, by as usize, bw as usize, bh as usize));
        for p in out.pixels() {
            assert_eq!(img.get_pixel(p.x as u32, p.y as u32), e.image.get_pixel(p.x as u32 + bx, p.y as u32 + by));
        }
    }

    #[test]
    fn rotation_180_point_reflects() {
        let m = Mask::from_fn(10, 7, |x, y| x < 3 || y == 0);
        let (_, out) = augment_object(&entry(m.clone()), 1.0, 180.0, 0.0).unwrap();
        assert_eq!(out.dims(), (10, 7));
        // pixelwise oracle: (x, y) -> (w-1-x, h-1-y)
        let oracle = Mask::from_fn(10, 7, |x, y| m.get(9 - x, 6 - y));
        let diff = out.union_count(&oracle).unwrap() - out.intersection_count(&oracle).unwrap();
        assert!(diff as f64 <= 0.02 * m.count() as f64);
        assert!((out.count() as f64 - m.count() as f64).abs() <= 0.02 * m.count() as f64);
    }

    #[test]
    fn scale_two_quadruples_area() {
        let m = Mask::from_fn(14, 14, |x, y| (2..12).contains(&x) && (2..12).contains(&y));
        let (_, out) = augment_object(&entry(m), 2.0, 0.0, 0.0).unwrap();
        assert!((out.count() as i64 - 400).abs() <= 4);
    }

    #[test]
    fn blur_leaves_mask_alone() {
        let m = Mask::from_fn(8, 8, |x, _| x > 2);
        let (_, sharp) = augment_object(&entry(m.clone()), 1.2, 15.0, 0.0).unwrap();
        let (_, blurred) = augment_object(&entry(m), 1.2, 15.0, 1.5).unwrap();
        assert_eq!(sharp, blurred);
    }

    #[test]
    fn degenerate_parameters() {
        let e = entry(Mask::full(4, 4));
        assert!(matches!(augment_object(&e, 0.0, 0.0, 0.0), Err(L2gError::Generation(_))));
        assert!(augment_object(&e, 1.0, f64::NAN, 0.0).is_err());
    }
}
