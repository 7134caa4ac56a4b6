//! Skin atlas data model.
//!
//! A skin is a 64×64 RGBA UV atlas. Six body parts (head, body, two arms,
//! two legs) each own a base cuboid and an overlay cuboid, and every cuboid
//! unwraps into six face rectangles using the standard 1.8+ skin layout:
//!
//! ```text
//!            u    u+d   u+d+w   u+2d+w  u+2d+2w
//!   v              [ top ][bottom]
//!   v+d      [right][front][left ][ back ]
//!   v+d+h
//! ```
//!
//! "right" and "left" are the character's own sides, so the right face of
//! a cuboid is the one facing world −x when the character faces the viewer.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{self, over_white, PngError, Rgb, RgbImage, Rgba, RgbaImage};

pub const ATLAS_SIZE: u32 = 64;
const TRANSPARENT: Rgba = [0, 0, 0, 0];
/// Overlay texels at or above this alpha become opaque, the rest vanish.
pub const OVERLAY_ALPHA_CUTOFF: u8 = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AtlasError {
    #[error("DecodeError: {0}")]
    Decode(String),
    #[error("ShapeError: expected 64x64 or 64x32, got {width}x{height}")]
    Shape { width: u32, height: u32 },
    #[error("UnknownRegion: {0}")]
    UnknownRegion(String),
}

impl AtlasError {
    pub fn name(&self) -> &'static str {
        match self {
            AtlasError::Decode(_) => "DecodeError",
            AtlasError::Shape { .. } => "ShapeError",
            AtlasError::UnknownRegion(_) => "UnknownRegion",
        }
    }
}

impl From<PngError> for AtlasError {
    fn from(e: PngError) -> Self {
        match e {
            PngError::Decode(m) | PngError::Encode(m) => AtlasError::Decode(m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    #[default]
    Classic,
    Slim,
}

impl ModelVariant {
    pub fn arm_width(self) -> u32 {
        match self {
            ModelVariant::Classic => 4,
            ModelVariant::Slim => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::Classic => "classic",
            ModelVariant::Slim => "slim",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "classic" | "default" | "steve" => Ok(ModelVariant::Classic),
            "slim" | "alex" => Ok(ModelVariant::Slim),
            other => Err(format!("unknown model variant '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BodyPart {
    Head,
    Body,
    RightArm,
    LeftArm,
    RightLeg,
    LeftLeg,
}

impl BodyPart {
    pub const ALL: [BodyPart; 6] = [
        BodyPart::Head,
        BodyPart::Body,
        BodyPart::RightArm,
        BodyPart::LeftArm,
        BodyPart::RightLeg,
        BodyPart::LeftLeg,
    ];

    /// Cuboid size in texels as (width along x, height along y, depth along z).
    pub fn dims(self, variant: ModelVariant) -> (u32, u32, u32) {
        match self {
            BodyPart::Head => (8, 8, 8),
            BodyPart::Body => (8, 12, 4),
            BodyPart::RightArm | BodyPart::LeftArm => (variant.arm_width(), 12, 4),
            BodyPart::RightLeg | BodyPart::LeftLeg => (4, 12, 4),
        }
    }

    fn uv_origin(self, layer: Layer) -> (u32, u32) {
        use BodyPart::*;
        match (self, layer) {
            (Head, Layer::Base) => (0, 0),
            (Head, Layer::Overlay) => (32, 0),
            (Body, Layer::Base) => (16, 16),
            (Body, Layer::Overlay) => (16, 32),
            (RightArm, Layer::Base) => (40, 16),
            (RightArm, Layer::Overlay) => (40, 32),
            (LeftArm, Layer::Base) => (32, 48),
            (LeftArm, Layer::Overlay) => (48, 48),
            (RightLeg, Layer::Base) => (0, 16),
            (RightLeg, Layer::Overlay) => (0, 32),
            (LeftLeg, Layer::Base) => (16, 48),
            (LeftLeg, Layer::Overlay) => (0, 48),
        }
    }

    /// The part occupying the mirrored position across the body's midplane.
    pub fn mirror(self) -> BodyPart {
        use BodyPart::*;
        match self {
            Head => Head,
            Body => Body,
            RightArm => LeftArm,
            LeftArm => RightArm,
            RightLeg => LeftLeg,
            LeftLeg => RightLeg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    Base,
    Overlay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    Top,
    Bottom,
    Right,
    Front,
    Left,
    Back,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::Top,
        Face::Bottom,
        Face::Right,
        Face::Front,
        Face::Left,
        Face::Back,
    ];

    pub fn mirror(self) -> Face {
        match self {
            Face::Right => Face::Left,
            Face::Left => Face::Right,
            f => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionId {
    HeadBase,
    HeadOverlay,
    BodyBase,
    BodyOverlay,
    RightArmBase,
    RightArmOverlay,
    LeftArmBase,
    LeftArmOverlay,
    RightLegBase,
    RightLegOverlay,
    LeftLegBase,
    LeftLegOverlay,
}

impl RegionId {
    pub const ALL: [RegionId; 12] = [
        RegionId::HeadBase,
        RegionId::HeadOverlay,
        RegionId::BodyBase,
        RegionId::BodyOverlay,
        RegionId::RightArmBase,
        RegionId::RightArmOverlay,
        RegionId::LeftArmBase,
        RegionId::LeftArmOverlay,
        RegionId::RightLegBase,
        RegionId::RightLegOverlay,
        RegionId::LeftLegBase,
        RegionId::LeftLegOverlay,
    ];

    pub fn new(part: BodyPart, layer: Layer) -> Self {
        use BodyPart::*;
        use RegionId::*;
        match (part, layer) {
            (Head, Layer::Base) => HeadBase,
            (Head, Layer::Overlay) => HeadOverlay,
            (Body, Layer::Base) => BodyBase,
            (Body, Layer::Overlay) => BodyOverlay,
            (RightArm, Layer::Base) => RightArmBase,
            (RightArm, Layer::Overlay) => RightArmOverlay,
            (LeftArm, Layer::Base) => LeftArmBase,
            (LeftArm, Layer::Overlay) => LeftArmOverlay,
            (RightLeg, Layer::Base) => RightLegBase,
            (RightLeg, Layer::Overlay) => RightLegOverlay,
            (LeftLeg, Layer::Base) => LeftLegBase,
            (LeftLeg, Layer::Overlay) => LeftLegOverlay,
        }
    }

    pub fn part(self) -> BodyPart {
        use BodyPart::*;
        use RegionId::*;
        match self {
            HeadBase | HeadOverlay => Head,
            BodyBase | BodyOverlay => Body,
            RightArmBase | RightArmOverlay => RightArm,
            LeftArmBase | LeftArmOverlay => LeftArm,
            RightLegBase | RightLegOverlay => RightLeg,
            LeftLegBase | LeftLegOverlay => LeftLeg,
        }
    }

    pub fn layer(self) -> Layer {
        if self.is_overlay() {
            Layer::Overlay
        } else {
            Layer::Base
        }
    }

    pub fn is_overlay(self) -> bool {
        matches!(
            self,
            RegionId::HeadOverlay
                | RegionId::BodyOverlay
                | RegionId::RightArmOverlay
                | RegionId::LeftArmOverlay
                | RegionId::RightLegOverlay
                | RegionId::LeftLegOverlay
        )
    }

    pub fn name(self) -> &'static str {
        use RegionId::*;
        match self {
            HeadBase => "HeadBase",
            HeadOverlay => "HeadOverlay",
            BodyBase => "BodyBase",
            BodyOverlay => "BodyOverlay",
            RightArmBase => "RightArmBase",
            RightArmOverlay => "RightArmOverlay",
            LeftArmBase => "LeftArmBase",
            LeftArmOverlay => "LeftArmOverlay",
            RightLegBase => "RightLegBase",
            RightLegOverlay => "RightLegOverlay",
            LeftLegBase => "LeftLegBase",
            LeftLegOverlay => "LeftLegOverlay",
        }
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegionId {
    type Err = AtlasError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegionId::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| AtlasError::UnknownRegion(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
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

    pub fn area(&self) -> u32 {
        self.w * self.h
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }

    /// Row-major texel coordinates.
    pub fn coords(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.y..self.y + self.h).flat_map(move |y| (self.x..self.x + self.w).map(move |x| (x, y)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceRect {
    pub face: Face,
    pub rect: Rect,
}

/// Face rectangles of one cuboid unwrapped at UV origin (`u`, `v`).
pub fn cuboid_faces(u: u32, v: u32, (w, h, d): (u32, u32, u32)) -> [FaceRect; 6] {
    let fr = |face, x, y, rw, rh| FaceRect {
        face,
        rect: Rect::new(x, y, rw, rh),
    };
    [
        fr(Face::Top, u + d, v, w, d),
        fr(Face::Bottom, u + d + w, v, w, d),
        fr(Face::Right, u, v + d, d, h),
        fr(Face::Front, u + d, v + d, w, h),
        fr(Face::Left, u + d + w, v + d, d, h),
        fr(Face::Back, u + 2 * d + w, v + d, w, h),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub id: RegionId,
    pub faces: [FaceRect; 6],
}

impl Region {
    pub fn face(&self, face: Face) -> Rect {
        self.faces
            .iter()
            .find(|f| f.face == face)
            .map(|f| f.rect)
            .expect("every region has all six faces")
    }

    pub fn area(&self) -> u32 {
        self.faces.iter().map(|f| f.rect.area()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMap {
    pub variant: ModelVariant,
    pub regions: Vec<Region>,
}

impl RegionMap {
    fn build(variant: ModelVariant) -> Self {
        let regions = RegionId::ALL
            .into_iter()
            .map(|id| {
                let part = id.part();
                let (u, v) = part.uv_origin(id.layer());
                Region {
                    id,
                    faces: cuboid_faces(u, v, part.dims(variant)),
                }
            })
            .collect();
        Self { variant, regions }
    }

    pub fn region(&self, id: RegionId) -> &Region {
        self.regions
            .iter()
            .find(|r| r.id == id)
            .expect("region map covers every region id")
    }

    pub fn total_area(&self) -> u32 {
        self.regions.iter().map(Region::area).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("region map serializes")
    }
}

struct VariantTables {
    map: RegionMap,
    owner: Vec<Option<RegionId>>,
}

fn tables(variant: ModelVariant) -> &'static VariantTables {
    static CLASSIC: OnceLock<VariantTables> = OnceLock::new();
    static SLIM: OnceLock<VariantTables> = OnceLock::new();
    let cell = match variant {
        ModelVariant::Classic => &CLASSIC,
        ModelVariant::Slim => &SLIM,
    };
    cell.get_or_init(|| {
        let map = RegionMap::build(variant);
        let mut owner = vec![None; (ATLAS_SIZE * ATLAS_SIZE) as usize];
        for region in &map.regions {
            for f in &region.faces {
                for (x, y) in f.rect.coords() {
                    owner[(y * ATLAS_SIZE + x) as usize] = Some(region.id);
                }
            }
        }
        VariantTables { map, owner }
    })
}

pub fn region_map(variant: ModelVariant) -> &'static RegionMap {
    &tables(variant).map
}

/// The region owning atlas texel (`x`, `y`), if any.
pub fn region_at(variant: ModelVariant, x: u32, y: u32) -> Option<RegionId> {
    if x >= ATLAS_SIZE || y >= ATLAS_SIZE {
        return None;
    }
    tables(variant).owner[(y * ATLAS_SIZE + x) as usize]
}

/// Texels of the classic right-arm base that the slim layout leaves unused.
pub fn classic_only_arm_strip() -> Vec<(u32, u32)> {
    let classic = region_map(ModelVariant::Classic).region(RegionId::RightArmBase);
    let mut strip: Vec<(u32, u32)> = classic
        .faces
        .iter()
        .flat_map(|f| f.rect.coords().collect::<Vec<_>>())
        .filter(|&(x, y)| region_at(ModelVariant::Slim, x, y).is_none())
        .collect();
    strip.sort_by_key(|&(x, y)| (y, x));
    strip
}

/// A validated 64×64 skin. Pixels outside the variant's regions are fully
/// transparent black, base texels are opaque and overlay texels are either
/// opaque or transparent black.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SkinAtlas {
    pixels: RgbaImage,
    variant: ModelVariant,
}

impl fmt::Debug for SkinAtlas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SkinAtlas")
            .field("variant", &self.variant)
            .finish_non_exhaustive()
    }
}

impl SkinAtlas {
    /// Normalizes a 64×64 RGBA grid into a skin of the given variant.
    pub fn from_rgba(pixels: &RgbaImage, variant: ModelVariant) -> Result<Self, AtlasError> {
        let (width, height) = pixels.dimensions();
        if width != ATLAS_SIZE || height != ATLAS_SIZE {
            return Err(AtlasError::Shape { width, height });
        }
        Ok(Self {
            pixels: normalize(pixels, variant),
            variant,
        })
    }

    /// Builds a skin by evaluating `f` at every in-region texel.
    pub fn from_fn(variant: ModelVariant, mut f: impl FnMut(RegionId, u32, u32) -> Rgba) -> Self {
        let raw = RgbaImage::from_fn(ATLAS_SIZE, ATLAS_SIZE, |x, y| match region_at(variant, x, y) {
            Some(r) => f(r, x, y),
            None => TRANSPARENT,
        });
        Self {
            pixels: normalize(&raw, variant),
            variant,
        }
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn pixels(&self) -> &RgbaImage {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Rgba {
        self.pixels.get(x, y)
    }

    pub fn region_map(&self) -> &'static RegionMap {
        region_map(self.variant)
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, PngError> {
        self.pixels.encode_png()
    }

    /// The skin reflected across the character's vertical midplane: left
    /// and right limbs swap, every face is flipped horizontally and the
    /// left/right side faces of each cuboid trade places.
    pub fn mirrored(&self) -> SkinAtlas {
        let mut out = self.pixels.clone();
        for part in BodyPart::ALL {
            for layer in [Layer::Base, Layer::Overlay] {
                copy_part_mirrored(
                    &self.pixels,
                    &mut out,
                    self.variant,
                    RegionId::new(part, layer),
                    RegionId::new(part.mirror(), layer),
                );
            }
        }
        Self {
            pixels: out,
            variant: self.variant,
        }
    }
}

/// Writes region `src_id` of `src` into region `dst_id` of `dst`, flipping
/// each face horizontally and swapping the left/right side faces.
fn copy_part_mirrored(
    src: &RgbaImage,
    dst: &mut RgbaImage,
    variant: ModelVariant,
    src_id: RegionId,
    dst_id: RegionId,
) {
    let map = region_map(variant);
    let from = map.region(src_id);
    let to = map.region(dst_id);
    for fr in &from.faces {
        let s = fr.rect;
        let d = to.face(fr.face.mirror());
        debug_assert_eq!((s.w, s.h), (d.w, d.h));
        for dy in 0..s.h {
            for dx in 0..s.w {
                dst.put(d.x + dx, d.y + dy, src.get(s.x + s.w - 1 - dx, s.y + dy));
            }
        }
    }
}

fn normalize(raw: &RgbaImage, variant: ModelVariant) -> RgbaImage {
    RgbaImage::from_fn(ATLAS_SIZE, ATLAS_SIZE, |x, y| {
        let [r, g, b, a] = raw.get(x, y);
        match region_at(variant, x, y) {
            None => TRANSPARENT,
            Some(id) if id.is_overlay() => {
                if a >= OVERLAY_ALPHA_CUTOFF {
                    [r, g, b, 255]
                } else {
                    TRANSPARENT
                }
            }
            Some(_) => [r, g, b, 255],
        }
    })
}

/// Slim iff every texel of the classic-only arm strip is transparent.
pub fn detect_variant(pixels: &RgbaImage) -> ModelVariant {
    let any_opaque = classic_only_arm_strip()
        .into_iter()
        .any(|(x, y)| pixels.get(x, y)[3] != 0);
    if any_opaque {
        ModelVariant::Classic
    } else {
        ModelVariant::Slim
    }
}

/// Expands a 64×32 legacy skin to the 64×64 layout by mirroring the right
/// limbs into the left-limb slots. The result is always classic.
pub fn convert_legacy(legacy: &RgbaImage) -> Result<RgbaImage, AtlasError> {
    let (width, height) = legacy.dimensions();
    if width != ATLAS_SIZE || height != ATLAS_SIZE / 2 {
        return Err(AtlasError::Shape { width, height });
    }
    let mut out = RgbaImage::filled(ATLAS_SIZE, ATLAS_SIZE, TRANSPARENT);
    out.blit(legacy, 0, 0);
    let src = out.clone();
    for (from, to) in [
        (RegionId::RightArmBase, RegionId::LeftArmBase),
        (RegionId::RightLegBase, RegionId::LeftLegBase),
    ] {
        copy_part_mirrored(&src, &mut out, ModelVariant::Classic, from, to);
    }
    Ok(out)
}

/// Counts of raw-input texels that break the atlas invariants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct InvariantViolations {
    /// Texels outside every region with nonzero alpha.
    pub outside_not_transparent: u32,
    /// Base-layer texels with alpha below 255.
    pub base_not_opaque: u32,
}

impl InvariantViolations {
    pub fn is_clean(&self) -> bool {
        self.outside_not_transparent == 0 && self.base_not_opaque == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegionCoverage {
    pub region: RegionId,
    pub opaque: u32,
    pub total: u32,
}

/// Everything learned while loading a skin file.
#[derive(Debug, Clone)]
pub struct SkinReport {
    pub atlas: SkinAtlas,
    pub converted_legacy: bool,
    /// Violations found in the (legacy-converted) input before normalization.
    pub violations: InvariantViolations,
    pub coverage: Vec<RegionCoverage>,
}

pub fn inspect_skin(data: &[u8]) -> Result<SkinReport, AtlasError> {
    let decoded = raster::decode_png_rgba(data)?;
    let (raw, converted_legacy) = match decoded.dimensions() {
        (64, 64) => (decoded, false),
        (64, 32) => (convert_legacy(&decoded)?, true),
        (width, height) => return Err(AtlasError::Shape { width, height }),
    };
    let variant = if converted_legacy {
        ModelVariant::Classic
    } else {
        detect_variant(&raw)
    };

    let mut violations = InvariantViolations::default();
    for y in 0..ATLAS_SIZE {
        for x in 0..ATLAS_SIZE {
            let a = raw.get(x, y)[3];
            match region_at(variant, x, y) {
                None if a != 0 => violations.outside_not_transparent += 1,
                Some(id) if !id.is_overlay() && a != 255 => violations.base_not_opaque += 1,
                _ => {}
            }
        }
    }

    let atlas = SkinAtlas::from_rgba(&raw, variant)?;
    let coverage = region_map(variant)
        .regions
        .iter()
        .map(|r| {
            let samples = region_pixels(&atlas, r.id);
            RegionCoverage {
                region: r.id,
                opaque: samples.iter().filter(|p| p[3] == 255).count() as u32,
                total: samples.len() as u32,
            }
        })
        .collect();

    Ok(SkinReport {
        atlas,
        converted_legacy,
        violations,
        coverage,
    })
}

/// Decodes a skin PNG (64×64, or legacy 64×32) into a normalized atlas.
pub fn load_skin(data: &[u8]) -> Result<SkinAtlas, AtlasError> {
    inspect_skin(data).map(|r| r.atlas)
}

/// All texels of a region, face by face, row-major within each face.
pub fn region_pixels(atlas: &SkinAtlas, region: RegionId) -> Vec<Rgba> {
    atlas
        .region_map()
        .region(region)
        .faces
        .iter()
        .flat_map(|f| f.rect.coords().map(|(x, y)| atlas.get(x, y)))
        .collect()
}

pub fn region_pixels_by_name(atlas: &SkinAtlas, name: &str) -> Result<Vec<Rgba>, AtlasError> {
    Ok(region_pixels(atlas, name.parse()?))
}

pub fn composite_on_white(atlas: &SkinAtlas) -> RgbImage {
    atlas.pixels().map(over_white)
}

/// Integer nearest-neighbour upscale: each pixel becomes a `factor`×`factor`
/// block. Panics if `factor` is zero.
pub fn nearest_upscale(img: &RgbImage, factor: u32) -> RgbImage {
    assert!(factor >= 1, "upscale factor must be >= 1");
    RgbImage::from_fn(img.width() * factor, img.height() * factor, |x, y| {
        img.get(x / factor, y / factor)
    })
}

pub fn is_white(rgb: Rgb) -> bool {
    rgb == raster::WHITE
}
