#![allow(dead_code)]

use skinkit::atlas::{region_at, BodyPart, ModelVariant, RegionId, SkinAtlas};
use skinkit::raster::{Rgb, RgbaImage};
use skinkit::rng::SplitMix64;

/// Random skin. Overlay texels are transparent with probability
/// `overlay_gap`; opaque overlay colours never reach the near-white band.
pub fn random_skin(seed: u64, variant: ModelVariant, overlay_gap: f64) -> SkinAtlas {
    let mut rng = SplitMix64::new(seed);
    SkinAtlas::from_fn(variant, |region, _, _| {
        let v = rng.next_u64().to_le_bytes();
        if region.is_overlay() {
            if rng.next_f64() < overlay_gap {
                [0, 0, 0, 0]
            } else {
                [v[0], v[1], v[2].min(240), 255]
            }
        } else {
            [v[0], v[1], v[2], 255]
        }
    })
}

pub fn corpus(n: usize, seed: u64) -> Vec<SkinAtlas> {
    (0..n as u64)
        .map(|i| {
            let variant = if i % 3 == 0 {
                ModelVariant::Slim
            } else {
                ModelVariant::Classic
            };
            let gap = [1.0, 0.5, 0.9, 0.0][i as usize % 4];
            random_skin(seed.wrapping_mul(1_000_003).wrapping_add(i), variant, gap)
        })
        .collect()
}

/// One colour per part on the base layer; overlays as given (None =
/// transparent).
pub fn part_colored(variant: ModelVariant, base: impl Fn(BodyPart) -> Rgb, overlay: impl Fn(BodyPart) -> Option<Rgb>) -> SkinAtlas {
    SkinAtlas::from_fn(variant, |region, _, _| {
        let part = region.part();
        if region.is_overlay() {
            match overlay(part) {
                Some([r, g, b]) => [r, g, b, 255],
                None => [0, 0, 0, 0],
            }
        } else {
            let [r, g, b] = base(part);
            [r, g, b, 255]
        }
    })
}

pub fn solid(variant: ModelVariant, rgb: Rgb) -> SkinAtlas {
    part_colored(variant, |_| rgb, |_| None)
}

/// Raw 64×64 grid with random RGBA everywhere, including outside regions.
pub fn noise_rgba(seed: u64) -> RgbaImage {
    let mut rng = SplitMix64::new(seed);
    RgbaImage::from_fn(64, 64, |_, _| rng.next_u64().to_le_bytes()[..4].try_into().unwrap())
}

/// True when `skin` satisfies every atlas invariant, checked texel by texel.
pub fn satisfies_invariants(skin: &SkinAtlas) -> bool {
    (0..64u32).all(|y| {
        (0..64u32).all(|x| {
            let [_, _, _, a] = skin.get(x, y);
            match region_at(skin.variant(), x, y) {
                None => skin.get(x, y) == [0, 0, 0, 0],
                Some(id) if id.is_overlay() => a == 255 || skin.get(x, y) == [0, 0, 0, 0],
                Some(_) => a == 255,
            }
        })
    })
}

pub fn has_near_white_overlay(skin: &SkinAtlas) -> bool {
    (0..64u32).any(|y| {
        (0..64u32).any(|x| {
            let [r, g, b, a] = skin.get(x, y);
            matches!(region_at(skin.variant(), x, y), Some(id) if id.is_overlay())
                && a == 255
                && r.min(g).min(b) >= 250
        })
    })
}

pub const ALL_REGIONS: [RegionId; 12] = RegionId::ALL;
