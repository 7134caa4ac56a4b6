//! Atlas image → 64×64 skin.
//!
//! A generated atlas (nominally 512×512 RGB) is reduced to the 64×64 grid
//! and then forced into skin structure: transparent outside regions, opaque
//! base, and cutout overlay where near-white texels count as empty.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{region_at, ModelVariant, SkinAtlas, ATLAS_SIZE};
use crate::raster::{Rgb, RgbImage, RgbaImage};

/// Side length non-conforming inputs are resized to before sampling.
pub const RESIZE_TARGET: u32 = 512;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("ShapeError: expected a square image with side a multiple of {grid}, got {width}x{height}")]
    Shape { width: u32, height: u32, grid: u32 },
}

impl DecodeError {
    pub fn name(&self) -> &'static str {
        "ShapeError"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Take the pixel under the block centre.
    #[default]
    BlockCenter,
    /// Take the most frequent colour in the block.
    BlockMode,
}

impl std::str::FromStr for Sampling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "center" | "block_center" => Ok(Sampling::BlockCenter),
            "mode" | "block_mode" => Ok(Sampling::BlockMode),
            other => Err(format!("unknown sampling '{other}' (expected center|mode)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeConfig {
    pub sampling: Sampling,
    /// An overlay texel is empty iff `min(R, G, B) >= overlay_white_threshold`.
    pub overlay_white_threshold: u8,
    /// Resize inputs that are not square multiples of 64 to 512×512 first.
    pub resize_non_multiple: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            sampling: Sampling::BlockCenter,
            overlay_white_threshold: 250,
            resize_non_multiple: true,
        }
    }
}

impl DecodeConfig {
    pub fn is_white(&self, [r, g, b]: Rgb) -> bool {
        r.min(g).min(b) >= self.overlay_white_threshold
    }
}

fn check_shape(img: &RgbImage, grid: u32) -> Result<u32, DecodeError> {
    let (width, height) = img.dimensions();
    if width != height || width % grid != 0 {
        return Err(DecodeError::Shape {
            width,
            height,
            grid,
        });
    }
    Ok(width / grid)
}

/// Reduces a square image whose side is a multiple of `grid` to `grid`×`grid`.
pub fn downsample(img: &RgbImage, grid: u32, sampling: Sampling) -> Result<RgbImage, DecodeError> {
    let block = check_shape(img, grid)?;
    Ok(match sampling {
        // floor((x + 0.5) * block) == x * block + block / 2
        Sampling::BlockCenter => RgbImage::from_fn(grid, grid, |x, y| {
            img.get(x * block + block / 2, y * block + block / 2)
        }),
        Sampling::BlockMode => {
            let mut counts: HashMap<Rgb, u32> = HashMap::new();
            RgbImage::from_fn(grid, grid, |x, y| {
                counts.clear();
                for by in 0..block {
                    for bx in 0..block {
                        *counts.entry(img.get(x * block + bx, y * block + by)).or_default() += 1;
                    }
                }
                block_mode(&counts)
            })
        }
    })
}

/// Most frequent colour; ties go to the lexicographically smallest RGB.
fn block_mode(counts: &HashMap<Rgb, u32>) -> Rgb {
    let mut best: Option<(u32, Rgb)> = None;
    for (&rgb, &n) in counts {
        best = match best {
            Some((bn, brgb)) if bn > n || (bn == n && brgb < rgb) => Some((bn, brgb)),
            _ => Some((n, rgb)),
        };
    }
    best.expect("block is never empty").1
}

pub fn enforce_structure(img64: &RgbImage, variant: ModelVariant, cfg: &DecodeConfig) -> SkinAtlas {
    assert_eq!(
        img64.dimensions(),
        (ATLAS_SIZE, ATLAS_SIZE),
        "enforce_structure needs a 64x64 image"
    );
    let rgba = RgbaImage::from_fn(ATLAS_SIZE, ATLAS_SIZE, |x, y| {
        let rgb @ [r, g, b] = img64.get(x, y);
        match region_at(variant, x, y) {
            None => [0, 0, 0, 0],
            Some(id) if id.is_overlay() && cfg.is_white(rgb) => [0, 0, 0, 0],
            Some(_) => [r, g, b, 255],
        }
    });
    SkinAtlas::from_rgba(&rgba, variant).expect("64x64 by construction")
}

/// Full atlas-image → skin conversion.
pub fn decode(img: &RgbImage, variant: ModelVariant, cfg: &DecodeConfig) -> Result<SkinAtlas, DecodeError> {
    let resized;
    let src = match check_shape(img, ATLAS_SIZE) {
        Ok(_) => img,
        Err(e) if !cfg.resize_non_multiple => return Err(e),
        Err(_) => {
            resized = img.resize_nearest(RESIZE_TARGET, RESIZE_TARGET);
            &resized
        }
    };
    let small = downsample(src, ATLAS_SIZE, cfg.sampling)?;
    Ok(enforce_structure(&small, variant, cfg))
}
