//! Boolean pixel masks, pixel coordinates and image helpers.

use std::path::Path;

use image::{GrayImage, Luma, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{L2gError, Result};

/// Integer pixel location in image coordinates (x to the right, y down).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub x: i32,
    pub y: i32,
}

impl Pixel {
    pub fn new(x: i32, y: i32) -> Self {
        Pixel { x, y }
    }

    pub fn dist(&self, other: &Pixel) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Row-major boolean raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask { width, height, data: vec![false; width * height] }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Mask { width, height, data: vec![true; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(L2gError::Contract(format!(
                "mask data has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Mask { width, height, data })
    }

    /// Builds a mask from a predicate over (x, y).
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Mask { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Out-of-bounds reads are false.
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return false;
        }
        self.get(x as usize, y as usize)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn contains(&self, p: Pixel) -> bool {
        self.get_signed(p.x as i64, p.y as i64)
    }

    fn check_same(&self, other: &Mask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(L2gError::Contract(format!(
                "mask dims differ: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }

    pub fn intersection_count(&self, other: &Mask) -> Result<usize> {
        self.check_same(other)?;
        Ok(self.data.iter().zip(&other.data).filter(|(a, b)| **a && **b).count())
    }

    pub fn union_count(&self, other: &Mask) -> Result<usize> {
        self.check_same(other)?;
        Ok(self.data.iter().zip(&other.data).filter(|(a, b)| **a || **b).count())
    }

    pub fn and(&self, other: &Mask) -> Result<Mask> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a && *b).collect();
        Ok(Mask { width: self.width, height: self.height, data })
    }

    pub fn or_assign(&mut self, other: &Mask) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a |= *b;
        }
        Ok(())
    }

    pub fn and_not(&self, other: &Mask) -> Result<Mask> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a && !*b).collect();
        Ok(Mask { width: self.width, height: self.height, data })
    }

    /// True when every set pixel of `self` is set in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.dims() == other.dims() && self.data.iter().zip(&other.data).all(|(a, b)| !*a || *b)
    }

    /// Copies `self` into a `width`×`height` canvas with its origin at
    /// (`ox`, `oy`); pixels falling outside the canvas are dropped.
    pub fn placed(&self, width: usize, height: usize, ox: i64, oy: i64) -> Mask {
        let mut out = Mask::new(width, height);
        for y in 0..self.height {
            for x in 0..self.width {
                if !self.get(x, y) {
                    continue;
                }
                let gx = x as i64 + ox;
                let gy = y as i64 + oy;
                if gx >= 0 && gy >= 0 && (gx as usize) < width && (gy as usize) < height {
                    out.set(gx as usize, gy as usize, true);
                }
            }
        }
        out
    }

    /// Sub-rectangle starting at (x0, y0).
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Mask {
        Mask::from_fn(w, h, |x, y| {
            let gx = x0 + x;
            let gy = y0 + y;
            gx < self.width && gy < self.height && self.get(gx, gy)
        })
    }

    /// Tight bounding box `(x, y, w, h)`; `None` for an empty mask.
    pub fn bbox(&self) -> Option<[u32; 4]> {
        let mut min_x = usize::MAX;
        let mut min_y = usize::MAX;
        let mut max_x = 0;
        let mut max_y = 0;
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    any = true;
                    min_x = min_x.min(x);
                    min_y = min_y.min(y);
                    max_x = max_x.max(x);
                    max_y = max_y.max(y);
                }
            }
        }
        any.then(|| {
            [min_x as u32, min_y as u32, (max_x - min_x + 1) as u32, (max_y - min_y + 1) as u32]
        })
    }

    /// Set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| Pixel::new((i % w) as i32, (i / w) as i32))
    }

    /// Uncompressed COCO run-length encoding: column-major runs, starting
    /// with the count of zeros.
    pub fn to_rle(&self) -> Rle {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for x in 0..self.width {
            for y in 0..self.height {
                let v = self.get(x, y);
                if v != current {
                    counts.push(run);
                    run = 0;
                    current = v;
                }
                run += 1;
            }
        }
        counts.push(run);
        Rle { size: [self.height as u32, self.width as u32], counts }
    }

    pub fn from_rle(rle: &Rle) -> Result<Mask> {
        let h = rle.size[0] as usize;
        let w = rle.size[1] as usize;
        let total: u64 = rle.counts.iter().map(|&c| c as u64).sum();
        if total != (w * h) as u64 {
            return Err(L2gError::format(
                "mask_rle.counts",
                format!("runs sum to {total}, expected {}", w * h),
            ));
        }
        let mut mask = Mask::new(w, h);
        let mut pos = 0usize;
        let mut value = false;
        for &c in &rle.counts {
            for _ in 0..c {
                if value {
                    let x = pos / h;
                    let y = pos % h;
                    mask.set(x, y, true);
                }
                pos += 1;
            }
            value = !value;
        }
        Ok(mask)
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            Luma([if self.get(x as usize, y as usize) { 255 } else { 0 }])
        })
    }

    /// Pixels with luma above 127 are set.
    pub fn from_gray(img: &GrayImage) -> Mask {
        Mask::from_fn(img.width() as usize, img.height() as usize, |x, y| {
            img.get_pixel(x as u32, y as u32).0[0] > 127
        })
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_gray().save(path)?;
        Ok(())
    }

    pub fn load_png(path: &Path) -> Result<Mask> {
        let img = image::open(path)?.to_luma8();
        Ok(Mask::from_gray(&img))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    /// `[height, width]`.
    pub size: [u32; 2],
    pub counts: Vec<u32>,
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path)?.to_rgb8())
}

/// Crops an RGB image; the rectangle must lie inside the image.
pub fn crop_rgb(img: &RgbImage, x0: u32, y0: u32, w: u32, h: u32) -> RgbImage {
    image::imageops::crop_imm(img, x0, y0, w, h).to_image()
}
