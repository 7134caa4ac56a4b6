//! Template captions for text-to-image pairs.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{region_pixels, RegionId, SkinAtlas};
use crate::raster::{Rgb, Rgba, WHITE};

pub const CAPTION_PREFIX: &str = "A Minecraft skin texture UV atlas, 64x64 pixel art layout.";
pub const PIXEL_ART_CLAUSE: &str = "flat colors, hard edges.";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CaptionError {
    #[error("EmptyRegion: no samples to count")]
    EmptyRegion,
    #[error("InvalidVocabulary: {0}")]
    Vocabulary(String),
}

impl CaptionError {
    pub fn name(&self) -> &'static str {
        match self {
            CaptionError::EmptyRegion => "EmptyRegion",
            CaptionError::Vocabulary(_) => "InvalidVocabulary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedColor {
    pub name: String,
    pub rgb: Rgb,
}

/// Ordered, nonempty list of uniquely named colours. Order matters: the
/// earliest entry wins distance ties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ColorVocabulary {
    entries: Vec<NamedColor>,
}

impl<'de> Deserialize<'de> for ColorVocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = Vec::<NamedColor>::deserialize(d)?;
        ColorVocabulary::new(entries).map_err(serde::de::Error::custom)
    }
}

impl Default for ColorVocabulary {
    fn default() -> Self {
        let entries = [
            ("black", [0, 0, 0]),
            ("white", [255, 255, 255]),
            ("gray", [128, 128, 128]),
            ("red", [255, 0, 0]),
            ("green", [0, 128, 0]),
            ("blue", [0, 0, 255]),
            ("yellow", [255, 255, 0]),
            ("orange", [255, 165, 0]),
            ("purple", [128, 0, 128]),
            ("pink", [255, 192, 203]),
            ("brown", [139, 69, 19]),
            ("cyan", [0, 255, 255]),
        ]
        .into_iter()
        .map(|(name, rgb)| NamedColor {
            name: name.to_string(),
            rgb,
        })
        .collect();
        Self { entries }
    }
}

impl ColorVocabulary {
    pub fn new(entries: Vec<NamedColor>) -> Result<Self, CaptionError> {
        if entries.is_empty() {
            return Err(CaptionError::Vocabulary("vocabulary is empty".into()));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if e.name.trim().is_empty() {
                return Err(CaptionError::Vocabulary("color name is empty".into()));
            }
            if !seen.insert(e.name.as_str()) {
                return Err(CaptionError::Vocabulary(format!("duplicate color '{}'", e.name)));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_json(text: &str) -> Result<Self, CaptionError> {
        serde_json::from_str(text).map_err(|e| CaptionError::Vocabulary(e.to_string()))
    }

    pub fn entries(&self) -> &[NamedColor] {
        &self.entries
    }
}

/// Most frequent RGB among samples with nonzero alpha. Ties go to the
/// lexicographically smallest RGB; an all-transparent input yields white.
pub fn dominant_color(samples: &[Rgba]) -> Result<Rgb, CaptionError> {
    if samples.is_empty() {
        return Err(CaptionError::EmptyRegion);
    }
    let mut counts: HashMap<Rgb, u32> = HashMap::new();
    for &[r, g, b, a] in samples {
        if a > 0 {
            *counts.entry([r, g, b]).or_default() += 1;
        }
    }
    Ok(counts
        .into_iter()
        .max_by(|(ca, na), (cb, nb)| na.cmp(nb).then(cb.cmp(ca)))
        .map(|(rgb, _)| rgb)
        .unwrap_or(WHITE))
}

pub fn squared_distance(a: Rgb, b: Rgb) -> u32 {
    a.iter()
        .zip(b)
        .map(|(&x, y)| (x as i32 - y as i32).pow(2) as u32)
        .sum()
}

/// Nearest vocabulary name by squared RGB distance; earliest entry wins ties.
pub fn nearest_named(rgb: Rgb, vocab: &ColorVocabulary) -> &str {
    let mut best = &vocab.entries[0];
    let mut best_d = squared_distance(rgb, best.rgb);
    for e in &vocab.entries[1..] {
        let d = squared_distance(rgb, e.rgb);
        if d < best_d {
            best = e;
            best_d = d;
        }
    }
    &best.name
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Caption {
    pub text: String,
}

impl std::fmt::Display for Caption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

fn pooled_name(skin: &SkinAtlas, regions: &[RegionId], vocab: &ColorVocabulary) -> String {
    let samples: Vec<Rgba> = regions
        .iter()
        .flat_map(|&r| region_pixels(skin, r))
        .collect();
    let rgb = dominant_color(&samples).expect("regions are never empty");
    nearest_named(rgb, vocab).to_string()
}

pub fn build_caption(skin: &SkinAtlas, vocab: &ColorVocabulary) -> Caption {
    let head = pooled_name(skin, &[RegionId::HeadBase], vocab);
    let body = pooled_name(skin, &[RegionId::BodyBase], vocab);
    let arms = pooled_name(skin, &[RegionId::RightArmBase, RegionId::LeftArmBase], vocab);
    let legs = pooled_name(skin, &[RegionId::RightLegBase, RegionId::LeftLegBase], vocab);

    let mut text = format!(
        "{CAPTION_PREFIX} head is {head}, body is {body}, arms are {arms}, legs are {legs}"
    );
    let hat = region_pixels(skin, RegionId::HeadOverlay);
    let has_hat = hat
        .iter()
        .any(|&[r, g, b, a]| a == 255 && [r, g, b] != WHITE);
    if has_hat {
        let hat_color = pooled_name(skin, &[RegionId::HeadOverlay], vocab);
        text.push_str(&format!(", has a {hat_color} hat overlay"));
    }
    text.push_str(". ");
    text.push_str(PIXEL_ART_CLAUSE);
    Caption { text }
}
