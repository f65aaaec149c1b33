//! Procedural object instances and backgrounds, so the whole pipeline can
//! run without external assets.
//!
//! An instance is a square prism with four painted faces, turned about its
//! vertical axis. Template view `k` of `K` looks at the prism from angle
//! `360 k / K`; query views sit halfway between template angles. Instances
//! draw their faces from a small shared palette, so several of them look
//! alike from some angles.

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::raster::Mask;
use crate::synth::{TemplateEntry, TemplateLibrary, TemplateSet};

pub const VIEW_SIZE: u32 = 96;
pub const BACKDROP: u8 = 128;

const PALETTE: [[u8; 3]; 8] = [
    [214, 48, 49],
    [39, 110, 220],
    [240, 196, 25],
    [46, 170, 67],
    [150, 70, 205],
    [245, 125, 20],
    [20, 180, 180],
    [235, 80, 160],
];

const ACCENTS: [[u8; 3]; 3] = [[245, 245, 240], [35, 35, 40], [120, 60, 20]];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Solid,
    HStripes,
    VStripes,
    Checker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub color: [u8; 3],
    pub accent: [u8; 3],
    pub pattern: Pattern,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prism {
    pub id: String,
    pub side: f64,
    pub height: f64,
    pub faces: [Face; 4],
}

impl Prism {
    /// A body colour shared by all faces, with a per-face accent pattern.
    pub fn random<R: Rng>(id: impl Into<String>, rng: &mut R) -> Self {
        let body = PALETTE[rng.gen_range(0..PALETTE.len())];
        let face = |rng: &mut R| {
            let accent = if rng.gen_bool(0.5) {
                ACCENTS[rng.gen_range(0..ACCENTS.len())]
            } else {
                PALETTE[rng.gen_range(0..PALETTE.len())]
            };
            let pattern = [Pattern::Solid, Pattern::Solid, Pattern::HStripes, Pattern::VStripes, Pattern::Checker]
                [rng.gen_range(0..5)];
            Face { color: body, accent, pattern }
        };
        Prism {
            id: id.into(),
            side: rng.gen_range(30.0..44.0),
            height: rng.gen_range(40.0..64.0),
            faces: [face(rng), face(rng), face(rng), face(rng)],
        }
    }

    /// Renders the prism on a `VIEW_SIZE` square gray backdrop.
    pub fn render(&self, angle_deg: f64) -> (RgbImage, Mask) {
        let n = VIEW_SIZE;
        let mut img = RgbImage::from_pixel(n, n, Rgb([BACKDROP; 3]));
        let mut mask = Mask::new(n as usize, n as usize);
        let c = n as f64 / 2.0;
        let r = self.side / std::f64::consts::SQRT_2;
        let top = c - self.height / 2.0;
        let bottom = c + self.height / 2.0;
        for (i, face) in self.faces.iter().enumerate() {
            let normal = (angle_deg + 90.0 * i as f64).to_radians();
            let facing = normal.cos();
            if facing <= 1e-9 {
                continue;
            }
            let x0 = r * (normal - std::f64::consts::FRAC_PI_4).sin();
            let x1 = r * (normal + std::f64::consts::FRAC_PI_4).sin();
            let (lo, hi) = (x0.min(x1), x0.max(x1));
            let shade = 0.55 + 0.45 * facing;
            for y in 0..n {
                let yc = y as f64 + 0.5;
                if yc < top || yc >= bottom {
                    continue;
                }
                let v = (yc - top) / self.height;
                for x in 0..n {
                    let xc = x as f64 + 0.5 - c;
                    if xc < lo || xc >= hi {
                        continue;
                    }
                    let u = (xc - x0) / (x1 - x0);
                    let accent = match face.pattern {
                        Pattern::Solid => false,
                        Pattern::HStripes => (v * 5.0) as u32 % 2 == 1,
                        Pattern::VStripes => (u * 4.0) as u32 % 2 == 1,
                        Pattern::Checker => ((u * 3.0) as u32 + (v * 4.0) as u32) % 2 == 1,
                    };
                    let base = if accent { face.accent } else { face.color };
                    let px = base.map(|ch| (ch as f64 * shade).round().min(255.0) as u8);
                    img.put_pixel(x, y, Rgb(px));
                    mask.set(x as usize, y as usize, true);
                }
            }
        }
        (img, mask)
    }

    pub fn views(&self, k: usize, phase: f64) -> Result<TemplateSet> {
        let entries = (0..k)
            .map(|i| {
                let (img, mask) = self.render(360.0 * (i as f64 + phase) / k as f64);
                TemplateEntry::new(img, mask, self.id.clone(), i)
            })
            .collect::<Result<Vec<_>>>()?;
        TemplateSet::new(self.id.clone(), entries)
    }
}

/// `n` reproducible instances named `obj00`, `obj01`, ...
pub fn instances(n: usize, seed: u64) -> Vec<Prism> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| Prism::random(format!("obj{i:02}"), &mut rng)).collect()
}

/// Template views at angles `360 k / K`.
pub fn template_library(prisms: &[Prism], k: usize) -> Result<TemplateLibrary> {
    prisms.iter().map(|p| Ok((p.id.clone(), p.views(k, 0.0)?))).collect()
}

/// Held-out views halfway between the template angles.
pub fn query_library(prisms: &[Prism], k: usize) -> Result<TemplateLibrary> {
    prisms.iter().map(|p| Ok((p.id.clone(), p.views(k, 0.5)?))).collect()
}

/// Smooth, muted value noise: three octaves of bilinear lattice noise with
/// a weak colour cast around a gray level.
pub fn noise_background(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f_6973_6521);
    let mut acc = vec![[0.0f64; 3]; (width * height) as usize];
    let mut total = 0.0;
    for (cell, amp) in [(32.0, 1.0), (12.0, 0.5), (5.0, 0.25)] {
        let gw = (width as f64 / cell).ceil() as usize + 2;
        let gh = (height as f64 / cell).ceil() as usize + 2;
        let lattice: Vec<[f64; 3]> = (0..gw * gh)
            .map(|_| {
                let l: f64 = rng.gen();
                [l + rng.gen_range(-0.1..0.1), l + rng.gen_range(-0.1..0.1), l + rng.gen_range(-0.1..0.1)]
            })
            .collect();
        for y in 0..height {
            let fy = y as f64 / cell;
            let (iy, ty) = (fy as usize, fy.fract());
            for x in 0..width {
                let fx = x as f64 / cell;
                let (ix, tx) = (fx as usize, fx.fract());
                let at = |gx: usize, gy: usize| lattice[gy * gw + gx];
                let (a, b, c, d) = (at(ix, iy), at(ix + 1, iy), at(ix, iy + 1), at(ix + 1, iy + 1));
                let o = &mut acc[(y * width + x) as usize];
                for ch in 0..3 {
                    let top = a[ch] + (b[ch] - a[ch]) * tx;
                    let bot = c[ch] + (d[ch] - c[ch]) * tx;
                    o[ch] += amp * (top + (bot - top) * ty);
                }
            }
        }
        total += amp;
    }
    RgbImage::from_fn(width, height, |x, y| {
        let v = acc[(y * width + x) as usize];
        Rgb(v.map(|c| (50.0 + 150.0 * c / total).round().clamp(40.0, 210.0) as u8))
    })
}
