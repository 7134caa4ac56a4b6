//! Deterministic tooling around 64×64 Minecraft skin atlases: parsing and
//! validation, a cuboid preview renderer, the atlas-image decoder, template
//! captions, paired dataset construction for a three-phase adapter
//! curriculum, and prompt assembly for preview synthesis.

pub mod atlas;
pub mod caption;
pub mod dataset;
pub mod decoder;
pub mod prompt;
pub mod raster;
pub mod render;
pub mod rng;

pub use atlas::{
    composite_on_white, detect_variant, load_skin, nearest_upscale, region_pixels, AtlasError, ModelVariant,
    RegionId, SkinAtlas,
};
pub use caption::{build_caption, dominant_color, nearest_named, Caption, ColorVocabulary};
pub use dataset::{
    build_manifest, build_target, cover_center_crop, phrase_prompt, Corpus, PairRecord, Phase, PhaseConfig,
    PhaseManifest,
};
pub use decoder::{decode, downsample, enforce_structure, DecodeConfig, Sampling};
pub use prompt::{
    assemble_mode1, assemble_mode2, compiler_prompt, fill_mode3, parse_compiler_output, AttributeBlock,
    PromptBundle,
};
pub use raster::{RgbImage, RgbaImage};
pub use render::{jitter_camera, render_dual_panel, render_view, Camera, JitterParams, PanelLayout};
