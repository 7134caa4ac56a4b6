//! Paired training data for the three-phase adapter curriculum.
//!
//! * phase 1, text → atlas: template caption, white-composited 8× target;
//! * phase 2, turnaround → atlas: unjittered dual-panel render;
//! * phase 3, preview → atlas: the same render under seeded camera jitter.
//!
//! Each phase warm-starts from the adapter produced by the previous one, which
//! the manifest header records as `init_adapter`.
//!
//! Output layout under the manifest directory:
//!
//! ```text
//! manifest.header.json
//! manifest.jsonl                  one PairRecord per line
//! images/targets/<digest>.png
//! images/conditioning/<digest>.png
//! ```
//!
//! Image file names are SHA-256 digests of everything that determines the
//! image (kind, normalized skin texels, camera, layout, style), so equal
//! images share a file and paths are known without rendering.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::atlas::{composite_on_white, load_skin, nearest_upscale, ModelVariant, SkinAtlas};
use crate::caption::{build_caption, ColorVocabulary};
use crate::raster::RgbImage;
use crate::render::{jitter_camera, Camera, JitterParams, PanelLayout, PreviewRenderer, RenderError, RenderStyle};
use crate::rng::{fnv1a64, mix_words, SplitMix64};

pub const TARGET_SIZE: u32 = 512;
pub const UPSCALE_FACTOR: u32 = 8;
pub const DEFAULT_PAIR_COUNT: usize = 10_000;
pub const HEADER_FILE: &str = "manifest.header.json";
pub const RECORDS_FILE: &str = "manifest.jsonl";
const MANIFEST_FORMAT: u32 = 1;
/// Stream tag separating prompt-phrasing draws from jitter draws.
const PROMPT_STREAM: u64 = 0x7072_6f6d_7074;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("EmptyCorpus: no skins to build from")]
    EmptyCorpus,
    #[error("DuplicateSkinId: {0}")]
    DuplicateSkinId(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("InvalidPhase: {0}")]
    InvalidPhase(String),
    #[error("IoError: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("EncodeError: {0}")]
    Encode(String),
}

impl DatasetError {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetError::EmptyCorpus => "EmptyCorpus",
            DatasetError::DuplicateSkinId(_) => "DuplicateSkinId",
            DatasetError::InvalidConfig(_) => "InvalidConfig",
            DatasetError::InvalidPhase(_) => "InvalidPhase",
            DatasetError::Io { .. } => "IoError",
            DatasetError::Encode(_) => "EncodeError",
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        DatasetError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<RenderError> for DatasetError {
    fn from(e: RenderError) -> Self {
        DatasetError::InvalidConfig(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    T2I,
    I2I,
    Preview2Atlas,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::T2I, Phase::I2I, Phase::Preview2Atlas];

    pub fn number(self) -> u8 {
        match self {
            Phase::T2I => 1,
            Phase::I2I => 2,
            Phase::Preview2Atlas => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Phase> {
        Phase::ALL.into_iter().find(|p| p.number() == n)
    }

    /// Identifier of the adapter this phase trains.
    pub fn adapter_id(self) -> String {
        format!("phase{}", self.number())
    }

    /// The adapter this phase is initialized from.
    pub fn init_adapter(self) -> Option<String> {
        match self {
            Phase::T2I => None,
            Phase::I2I => Some(Phase::T2I.adapter_id()),
            Phase::Preview2Atlas => Some(Phase::I2I.adapter_id()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub phase: Phase,
    pub pair_count: usize,
    pub seed: u64,
    /// Only consulted by the preview phase.
    pub jitter: JitterParams,
    pub camera: Camera,
    pub layout: PanelLayout,
    pub style: RenderStyle,
    pub vocabulary: ColorVocabulary,
    pub init_adapter: Option<String>,
}

impl PhaseConfig {
    pub fn new(phase: Phase) -> Self {
        Self {
            phase,
            pair_count: DEFAULT_PAIR_COUNT,
            seed: 0,
            jitter: JitterParams::default(),
            camera: Camera::default(),
            layout: PanelLayout::default(),
            style: RenderStyle::default(),
            vocabulary: ColorVocabulary::default(),
            init_adapter: phase.init_adapter(),
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.pair_count == 0 {
            return Err(DatasetError::InvalidConfig("pair_count must be >= 1".into()));
        }
        if self.init_adapter != self.phase.init_adapter() {
            return Err(DatasetError::InvalidConfig(format!(
                "phase {} must start from {:?}, got {:?}",
                self.phase.number(),
                self.phase.init_adapter(),
                self.init_adapter
            )));
        }
        self.camera.validate()?;
        self.jitter.validate()?;
        self.layout.validate()?;
        Ok(())
    }

    /// Seed for pair `index` built from skin `skin_id`:
    /// `mix_words([seed, fnv1a64(skin_id), index])`.
    pub fn pair_seed(&self, skin_id: &str, index: usize) -> u64 {
        mix_words(&[self.seed, fnv1a64(skin_id.as_bytes()), index as u64])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub yaw: f64,
    pub pitch: f64,
    pub back_yaw: f64,
    pub jittered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: String,
    pub index: usize,
    pub skin_id: String,
    /// Relative to the manifest directory; absent for text-to-image pairs.
    pub conditioning: Option<String>,
    pub target: String,
    pub prompt: String,
    pub model_type: ModelVariant,
    pub camera: Option<CameraRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSkin {
    pub skin_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: u32,
    pub adapter_id: String,
    pub init_adapter: Option<String>,
    pub config: PhaseConfig,
    pub corpus_fingerprint: String,
    pub corpus_size: usize,
    pub record_count: usize,
    /// Set when the corpus had fewer skins than `pair_count`.
    pub truncated: bool,
    pub skipped: Vec<SkippedSkin>,
    /// SHA-256 over the config, corpus fingerprint and record lines.
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseManifest {
    pub header: ManifestHeader,
    pub records: Vec<PairRecord>,
}

impl PhaseManifest {
    pub fn records_jsonl(&self) -> String {
        records_jsonl(&self.records)
    }

    pub fn write(&self, dir: &Path) -> Result<(), DatasetError> {
        fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
        let header = serde_json::to_string_pretty(&self.header).expect("header serializes") + "\n";
        write_atomic(&dir.join(HEADER_FILE), header.as_bytes())?;
        write_atomic(&dir.join(RECORDS_FILE), self.records_jsonl().as_bytes())
    }

    pub fn read(dir: &Path) -> Result<Self, DatasetError> {
        let read = |name: &str| {
            let p = dir.join(name);
            fs::read_to_string(&p).map_err(|e| DatasetError::io(&p, e))
        };
        let bad = |e: serde_json::Error| DatasetError::InvalidConfig(format!("malformed manifest: {e}"));
        let header: ManifestHeader = serde_json::from_str(&read(HEADER_FILE)?).map_err(bad)?;
        let records = read(RECORDS_FILE)?
            .lines()
            .map(|l| serde_json::from_str(l).map_err(bad))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, records })
    }
}

fn records_jsonl(records: &[PairRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkinSource {
    pub id: String,
    pub bytes: Vec<u8>,
}

/// Skin files keyed by id, kept sorted by id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    entries: Vec<SkinSource>,
}

impl Corpus {
    pub fn from_entries(mut entries: Vec<SkinSource>) -> Result<Self, DatasetError> {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = entries.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(DatasetError::DuplicateSkinId(w[0].id.clone()));
        }
        Ok(Self { entries })
    }

    /// Every `*.png` directly inside `dir`; the id is the file stem.
    pub fn from_dir(dir: &Path) -> Result<Self, DatasetError> {
        let mut entries = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| DatasetError::io(dir, e))? {
            let path = entry.map_err(|e| DatasetError::io(dir, e))?.path();
            let is_png = path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("png"));
            if !is_png || !path.is_file() {
                continue;
            }
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| DatasetError::InvalidConfig(format!("non UTF-8 file name {}", path.display())))?
                .to_string();
            let bytes = fs::read(&path).map_err(|e| DatasetError::io(&path, e))?;
            entries.push(SkinSource { id, bytes });
        }
        Self::from_entries(entries)
    }

    pub fn from_files(paths: &[PathBuf]) -> Result<Self, DatasetError> {
        let entries = paths
            .iter()
            .map(|p| {
                let id = p
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string();
                let bytes = fs::read(p).map_err(|e| DatasetError::io(p, e))?;
                Ok(SkinSource { id, bytes })
            })
            .collect::<Result<_, DatasetError>>()?;
        Self::from_entries(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[SkinSource] {
        &self.entries
    }

    /// SHA-256 over (id, SHA-256(bytes)) of every entry in id order.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update((e.id.len() as u64).to_le_bytes());
            h.update(e.id.as_bytes());
            h.update(Sha256::digest(&e.bytes));
        }
        hex::encode(h.finalize())
    }

    /// Entry indices in seeded shuffled order. The phase number is mixed
    /// into the seed, so phases sharing a seed still sample independently.
    pub fn shuffled_order(&self, seed: u64, phase: Phase) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        SplitMix64::new(mix_words(&[seed, phase.number() as u64])).shuffle(&mut order);
        order
    }
}

/// White-composite then 8× nearest upscale: the 512×512 training target.
pub fn build_target(skin: &SkinAtlas) -> RgbImage {
    nearest_upscale(&composite_on_white(skin), UPSCALE_FACTOR)
}

/// Uniform nearest-neighbour scale so the image covers `out`×`out`, then
/// the centred window. Scaled sides are `ceil(side · out / min_side)` and
/// the crop offsets `floor((scaled − out) / 2)`.
pub fn cover_center_crop(img: &RgbImage, out: u32) -> RgbImage {
    let (w, h) = img.dimensions();
    let (sw, sh) = cover_dims(w, h, out);
    let scaled = img.resize_nearest(sw, sh);
    scaled.crop((sw - out) / 2, (sh - out) / 2, out, out)
}

/// Dimensions of the covering resize used by [`cover_center_crop`].
pub fn cover_dims(w: u32, h: u32, out: u32) -> (u32, u32) {
    let m = w.min(h) as u64;
    let scale = |side: u32| (side as u64 * out as u64).div_ceil(m) as u32;
    (scale(w), scale(h))
}

const I2I_TEMPLATES: [&str; 3] = [
    "The reference image shows the same Minecraft character in front and back views. Generate the matching 64×64 UV atlas layout as pixel art: flat colors, crisp edges, no blur or anti-aliasing",
    "The reference places front and back views of one Minecraft character side by side. Output its skin as a 64×64 UV atlas layout with flat colors, crisp edges and no anti-aliasing",
    "Convert this front/back turnaround of a single Minecraft character into a 64×64 UV atlas layout. Pixel art only: flat colors, crisp edges, no blur",
];

const PREVIEW_TEMPLATES: [&str; 3] = [
    "The reference image is a 3D Minecraft character with front/back views in one image. Produce the corresponding 64×64 UV atlas layout: flat colors, crisp edges, no blur or anti-aliasing",
    "Reference: a 3D Minecraft character with front/back views in one image, front on the left and back on the right. Recover its 64×64 UV atlas layout as pixel art with flat colors, crisp edges",
    "Given a 3D Minecraft character with front/back views in one image, output the matching skin as a 64×64 UV atlas layout with flat colors, crisp edges, no anti-aliasing",
];

pub fn prompt_templates(phase: Phase) -> &'static [&'static str] {
    match phase {
        Phase::T2I => &[],
        Phase::I2I => &I2I_TEMPLATES,
        Phase::Preview2Atlas => &PREVIEW_TEMPLATES,
    }
}

/// Seeded pick among the phase's templates, suffixed with the model type.
pub fn phrase_prompt(phase: Phase, model_type: ModelVariant, seed: u64) -> Result<String, DatasetError> {
    let templates = prompt_templates(phase);
    if templates.is_empty() {
        return Err(DatasetError::InvalidPhase(
            "text-to-image prompts are captions, not templates".into(),
        ));
    }
    let pick = SplitMix64::new(seed).below(templates.len() as u64) as usize;
    Ok(format!("{}, {} model", templates[pick], model_type))
}

/// A record together with its images, when rendered.
#[derive(Debug, Clone)]
pub struct BuiltPair {
    pub record: PairRecord,
    pub target: Option<RgbImage>,
    pub conditioning: Option<RgbImage>,
}

fn target_path(skin: &SkinAtlas) -> String {
    let digest = sha256_hex(&[b"target", &skin.pixels().as_bytes()]);
    format!("images/targets/{digest}.png")
}

fn conditioning_path(skin: &SkinAtlas, cfg: &PhaseConfig, camera: &Camera) -> String {
    let recipe = serde_json::to_vec(&(camera, &cfg.layout, &cfg.style, TARGET_SIZE)).expect("serializes");
    let digest = sha256_hex(&[b"preview", &skin.pixels().as_bytes(), &recipe]);
    format!("images/conditioning/{digest}.png")
}

/// Builds pair `index` of a phase from one skin. With `render` false only
/// the record is produced; paths are identical either way.
pub fn build_pair(skin: &SkinAtlas, skin_id: &str, cfg: &PhaseConfig, index: usize, render: bool) -> BuiltPair {
    let seed = cfg.pair_seed(skin_id, index);
    let variant = skin.variant();
    let target = target_path(skin);

    let (prompt, camera) = match cfg.phase {
        Phase::T2I => (build_caption(skin, &cfg.vocabulary).text, None),
        phase => {
            let jittered = match phase {
                Phase::Preview2Atlas => jitter_camera(&cfg.camera, &cfg.jitter, seed),
                _ => crate::render::JitteredCamera {
                    camera: cfg.camera,
                    jittered: false,
                },
            };
            let prompt = phrase_prompt(phase, variant, mix_words(&[seed, PROMPT_STREAM]))
                .expect("image-conditioned phase");
            (prompt, Some(jittered))
        }
    };

    let conditioning = camera.map(|c| conditioning_path(skin, cfg, &c.camera));
    let record = PairRecord {
        pair_id: format!("p{}-{:06}", cfg.phase.number(), index),
        index,
        skin_id: skin_id.to_string(),
        conditioning,
        target,
        prompt,
        model_type: variant,
        camera: camera.map(|c| CameraRecord {
            yaw: c.camera.yaw,
            pitch: c.camera.pitch,
            back_yaw: c.camera.back().yaw,
            jittered: c.jittered,
        }),
    };

    if !render {
        return BuiltPair {
            record,
            target: None,
            conditioning: None,
        };
    }
    let conditioning_img = camera.map(|c| {
        let panel = PreviewRenderer::new(cfg.style).render_dual_panel(skin, &cfg.layout, &c.camera);
        cover_center_crop(&panel, TARGET_SIZE)
    });
    BuiltPair {
        record,
        target: Some(build_target(skin)),
        conditioning: conditioning_img,
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Where to write the manifest and images. `None` builds in memory only.
    pub out_dir: Option<PathBuf>,
    /// Render and write image files. Records are identical either way.
    pub write_images: bool,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub jobs: Option<usize>,
}

enum Outcome {
    Built(BuiltPair),
    Skipped(SkippedSkin),
}

/// Builds a whole phase: seeded shuffle, first `pair_count` skins, one pair
/// per skin. Records come back in index order whatever the worker count.
pub fn build_manifest(corpus: &Corpus, cfg: &PhaseConfig, opts: &BuildOptions) -> Result<PhaseManifest, DatasetError> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    let selected: Vec<usize> = corpus
        .shuffled_order(cfg.seed, cfg.phase)
        .into_iter()
        .take(cfg.pair_count)
        .collect();
    let truncated = selected.len() < cfg.pair_count;
    if truncated {
        log::warn!(
            "corpus has {} skins, fewer than the {} pairs requested",
            corpus.len(),
            cfg.pair_count
        );
    }

    let render = opts.write_images && opts.out_dir.is_some();
    let work = |(index, &entry): (usize, &usize)| -> Result<Outcome, DatasetError> {
        let src = &corpus.entries()[entry];
        let skin = match load_skin(&src.bytes) {
            Ok(skin) => skin,
            Err(e) => {
                log::warn!("skipping skin {}: {e}", src.id);
                return Ok(Outcome::Skipped(SkippedSkin {
                    skin_id: src.id.clone(),
                    error: e.to_string(),
                }));
            }
        };
        let pair = build_pair(&skin, &src.id, cfg, index, render);
        if let Some(dir) = &opts.out_dir {
            write_pair_images(dir, &pair)?;
        }
        Ok(Outcome::Built(pair))
    };
    let run = || -> Result<Vec<Outcome>, DatasetError> { selected.par_iter().enumerate().map(work).collect() };
    let outcomes = match opts.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| DatasetError::InvalidConfig(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let mut records = Vec::with_capacity(outcomes.len());
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Built(p) => records.push(p.record),
            Outcome::Skipped(s) => skipped.push(s),
        }
    }

    let fingerprint = corpus.fingerprint();
    let config_json = serde_json::to_vec(cfg).expect("config serializes");
    let content_hash = sha256_hex(&[&config_json, fingerprint.as_bytes(), records_jsonl(&records).as_bytes()]);
    let manifest = PhaseManifest {
        header: ManifestHeader {
            format: MANIFEST_FORMAT,
            adapter_id: cfg.phase.adapter_id(),
            init_adapter: cfg.init_adapter.clone(),
            config: cfg.clone(),
            corpus_fingerprint: fingerprint,
            corpus_size: corpus.len(),
            record_count: records.len(),
            truncated,
            skipped,
            content_hash,
        },
        records,
    };
    if let Some(dir) = &opts.out_dir {
        manifest.write(dir)?;
    }
    Ok(manifest)
}

fn write_pair_images(dir: &Path, pair: &BuiltPair) -> Result<(), DatasetError> {
    let jobs = [
        (Some(&pair.record.target), pair.target.as_ref()),
        (pair.record.conditioning.as_ref(), pair.conditioning.as_ref()),
    ];
    for (rel, img) in jobs {
        let (Some(rel), Some(img)) = (rel, img) else {
            continue;
        };
        let path = dir.join(rel);
        if path.exists() {
            continue;
        }
        let png = img.encode_png().map_err(|e| DatasetError::Encode(e.to_string()))?;
        write_atomic(&path, &png)?;
    }
    Ok(())
}

/// Writes via a uniquely named temporary file and a rename, so concurrent
/// writers of the same content-addressed file never expose partial data.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let parent = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| DatasetError::io(parent, e))?;
    let tmp = parent.join(format!(
        ".{}.{:?}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::thread::current().id()
    ));
    fs::write(&tmp, bytes).map_err(|e| DatasetError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| DatasetError::io(path, e))
}

/// SHA-256 over every file below `dir` (relative path and contents), in
/// sorted path order.
pub fn tree_hash(dir: &Path) -> Result<String, DatasetError> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<(), DatasetError> {
        for entry in fs::read_dir(dir).map_err(|e| DatasetError::io(dir, e))? {
            let path = entry.map_err(|e| DatasetError::io(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path
                    .strip_prefix(root)
                    .expect("under root")
                    .to_string_lossy()
                    .replace('\\', "/");
                out.push((rel, path));
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, dir, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for (rel, path) in files {
        let bytes = fs::read(&path).map_err(|e| DatasetError::io(&path, e))?;
        h.update((rel.len() as u64).to_le_bytes());
        h.update(rel.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

/// Checks that a manifest never uses a skin twice.
pub fn duplicate_skin_ids(records: &[PairRecord]) -> Vec<String> {
    let mut seen = HashSet::new();
    records
        .iter()
        .filter(|r| !seen.insert(r.skin_id.as_str()))
        .map(|r| r.skin_id.clone())
        .collect()
}
