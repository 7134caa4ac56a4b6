//! Preview-synthesis prompt assembly.
//!
//! The four prompt texts live in `resources/templates/` as versioned UTF-8
//! files whose first line is `%% skinkit-template <name> v<version>`. Mode 1
//! and mode 2 are sent as-is with ordered image slots; mode 3 is a skeleton
//! whose `[UPPER_SNAKE]` placeholders are filled from an [`AttributeBlock`],
//! either directly or by an external compiler model whose answer is checked
//! by [`parse_compiler_output`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const HEADER_PREFIX: &str = "%% skinkit-template ";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("MissingImage: slot {slot}: {detail}")]
    MissingImage { slot: SlotLabel, detail: String },
    #[error("MissingAttribute: {}", .0.join(", "))]
    MissingAttribute(Vec<String>),
    #[error("UnknownAttribute: {}", .0.join(", "))]
    UnknownAttribute(Vec<String>),
    #[error("InvalidAttribute: {name}: {reason}")]
    InvalidAttribute { name: String, reason: String },
    #[error("UnknownPlaceholder: {}", .0.join(", "))]
    UnknownPlaceholder(Vec<String>),
    #[error("NoCodeBlock: no fenced code block found")]
    NoCodeBlock,
    #[error("UnresolvedPlaceholders: {}", .0.join(", "))]
    UnresolvedPlaceholders(Vec<String>),
    #[error("BadTemplate: {0}")]
    BadTemplate(String),
}

impl PromptError {
    pub fn name(&self) -> &'static str {
        match self {
            PromptError::MissingImage { .. } => "MissingImage",
            PromptError::MissingAttribute(_) => "MissingAttribute",
            PromptError::UnknownAttribute(_) => "UnknownAttribute",
            PromptError::InvalidAttribute { .. } => "InvalidAttribute",
            PromptError::UnknownPlaceholder(_) => "UnknownPlaceholder",
            PromptError::NoCodeBlock => "NoCodeBlock",
            PromptError::UnresolvedPlaceholders(_) => "UnresolvedPlaceholders",
            PromptError::BadTemplate(_) => "BadTemplate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub name: String,
    pub version: u32,
    pub body: String,
}

impl Template {
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let (header, body) = text
            .split_once('\n')
            .ok_or_else(|| PromptError::BadTemplate("missing header line".into()))?;
        let rest = header
            .trim_end_matches('\r')
            .strip_prefix(HEADER_PREFIX)
            .ok_or_else(|| PromptError::BadTemplate(format!("header must start with '{HEADER_PREFIX}'")))?;
        let (name, version) = rest
            .rsplit_once(" v")
            .ok_or_else(|| PromptError::BadTemplate(format!("malformed header '{header}'")))?;
        let version = version
            .parse()
            .map_err(|_| PromptError::BadTemplate(format!("bad version in '{header}'")))?;
        Ok(Self {
            name: name.to_string(),
            version,
            body: body.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PromptError::BadTemplate(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateKind {
    Mode1,
    Mode2,
    Mode3Skeleton,
    Compiler,
}

pub fn builtin(kind: TemplateKind) -> &'static Template {
    static CELLS: [OnceLock<Template>; 4] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    let (idx, text) = match kind {
        TemplateKind::Mode1 => (0, include_str!("../resources/templates/mode1.txt")),
        TemplateKind::Mode2 => (1, include_str!("../resources/templates/mode2.txt")),
        TemplateKind::Mode3Skeleton => (2, include_str!("../resources/templates/mode3_skeleton.txt")),
        TemplateKind::Compiler => (3, include_str!("../resources/templates/compiler.txt")),
    };
    CELLS[idx].get_or_init(|| Template::parse(text).expect("bundled template is well formed"))
}

/// The texts used for assembly; defaults to the bundled resources.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub mode1: Template,
    pub mode2: Template,
    pub mode3_skeleton: Template,
    pub compiler: Template,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self {
            mode1: builtin(TemplateKind::Mode1).clone(),
            mode2: builtin(TemplateKind::Mode2).clone(),
            mode3_skeleton: builtin(TemplateKind::Mode3Skeleton).clone(),
            compiler: builtin(TemplateKind::Compiler).clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SlotLabel {
    A,
    B,
    C,
    D,
}

impl fmt::Display for SlotLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

const LABELS: [SlotLabel; 4] = [SlotLabel::A, SlotLabel::B, SlotLabel::C, SlotLabel::D];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSlot {
    pub label: SlotLabel,
    pub path: PathBuf,
    pub role: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptMode {
    /// Character + layout anchor + pose anchor.
    Mode1,
    /// Mode 1 plus a style reference.
    Mode2,
    /// Meta-prompt filled with extracted attributes. The recommended path.
    Mode3,
}

/// Prompt text plus its images, labelled A, B, C[, D] in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub mode: PromptMode,
    pub text: String,
    pub image_slots: Vec<ImageSlot>,
}

impl PromptBundle {
    pub fn slot_listing(&self) -> String {
        self.image_slots
            .iter()
            .map(|s| format!("[{}] {} ({})\n", s.label, s.path.display(), s.role))
            .collect()
    }
}

pub const MODE1_ROLES: [&str; 3] = [
    "character reference with front and back views",
    "layout reference: dual-panel framing and camera",
    "pose anchor: strict limb-position guide",
];
pub const STYLE_ROLE: &str = "style reference: target skin-preview rendering style";
pub const MODE3_ROLES: [&str; 3] = [
    "character design reference (front/back)",
    "camera, pose, framing and geometry lock",
    "style master reference",
];

fn bind_slots<P: AsRef<Path>>(images: &[P], roles: &[&str]) -> Result<Vec<ImageSlot>, PromptError> {
    if images.len() < roles.len() {
        return Err(PromptError::MissingImage {
            slot: LABELS[images.len()],
            detail: format!("expected {} images, got {}", roles.len(), images.len()),
        });
    }
    if images.len() > roles.len() {
        return Err(PromptError::BadTemplate(format!(
            "expected {} images, got {}",
            roles.len(),
            images.len()
        )));
    }
    images
        .iter()
        .zip(roles)
        .zip(LABELS)
        .map(|((path, role), label)| {
            let path = path.as_ref();
            File::open(path).map_err(|e| PromptError::MissingImage {
                slot: label,
                detail: format!("{}: {e}", path.display()),
            })?;
            Ok(ImageSlot {
                label,
                path: path.to_path_buf(),
                role: role.to_string(),
            })
        })
        .collect()
}

pub fn assemble_mode1<P: AsRef<Path>>(images: &[P]) -> Result<PromptBundle, PromptError> {
    assemble_mode1_with(&TemplateSet::default(), images)
}

pub fn assemble_mode1_with<P: AsRef<Path>>(t: &TemplateSet, images: &[P]) -> Result<PromptBundle, PromptError> {
    Ok(PromptBundle {
        mode: PromptMode::Mode1,
        text: t.mode1.body.clone(),
        image_slots: bind_slots(images, &MODE1_ROLES)?,
    })
}

pub fn assemble_mode2<P: AsRef<Path>>(images: &[P]) -> Result<PromptBundle, PromptError> {
    assemble_mode2_with(&TemplateSet::default(), images)
}

pub fn assemble_mode2_with<P: AsRef<Path>>(t: &TemplateSet, images: &[P]) -> Result<PromptBundle, PromptError> {
    let roles = [MODE1_ROLES[0], MODE1_ROLES[1], MODE1_ROLES[2], STYLE_ROLE];
    Ok(PromptBundle {
        mode: PromptMode::Mode2,
        text: t.mode2.body.clone(),
        image_slots: bind_slots(images, &roles)?,
    })
}

/// Mode 3 with either the character image alone or the character image
/// followed by the two reference anchors.
pub fn assemble_mode3<P: AsRef<Path>>(
    t: &TemplateSet,
    attrs: &AttributeBlock,
    images: &[P],
) -> Result<PromptBundle, PromptError> {
    let roles: &[&str] = if images.len() <= 1 {
        &MODE3_ROLES[..1]
    } else {
        &MODE3_ROLES
    };
    let image_slots = bind_slots(images, roles)?;
    Ok(PromptBundle {
        mode: PromptMode::Mode3,
        text: fill_skeleton(&t.mode3_skeleton, attrs)?,
        image_slots,
    })
}

/// Mode 3 from an already completed prompt, e.g. the output of
/// [`parse_compiler_output`]. The text must contain no placeholders.
pub fn bundle_mode3_text<P: AsRef<Path>>(text: String, images: &[P]) -> Result<PromptBundle, PromptError> {
    let unresolved = placeholders(&text);
    if !unresolved.is_empty() {
        return Err(PromptError::UnresolvedPlaceholders(unresolved));
    }
    let roles: &[&str] = if images.len() <= 1 {
        &MODE3_ROLES[..1]
    } else {
        &MODE3_ROLES
    };
    Ok(PromptBundle {
        mode: PromptMode::Mode3,
        text,
        image_slots: bind_slots(images, roles)?,
    })
}

/// Every placeholder of the mode-3 skeleton, in order of first appearance.
pub const MODE3_PLACEHOLDERS: [&str; 30] = [
    "CHARACTER_TYPE",
    "HAIR_COLOR",
    "EYE_COLOR",
    "OUTFIT_PALETTE",
    "OVERALL_FEELING",
    "HAIR_LENGTH_AND_BASE_SHAPE",
    "BANGS_DESCRIPTION",
    "SIDE_LOCKS_OR_FACE_FRAMING",
    "HAIR_ENDS_DESCRIPTION",
    "AHOGE_OR_TOP_HAIR_DESCRIPTION",
    "HEAD_ACCESSORY_DESCRIPTION",
    "HEAD_ACCESSORY_POSITION_CONSTRAINT",
    "FRONT_BACK_HAIR_CONSISTENCY",
    "EYE_DESCRIPTION",
    "FACE_EXPRESSION_DESCRIPTION",
    "UPPER_GARMENT_DESCRIPTION",
    "COLLAR_OR_NECKLINE_DESCRIPTION",
    "CHEST_ORNAMENT_DESCRIPTION",
    "SLEEVE_AND_CUFF_DESCRIPTION",
    "MAIN_SKIRT_OR_DRESS_DESCRIPTION",
    "VISIBLE_LAYERING_OR_HEM_DESCRIPTION",
    "BACK_VIEW_MAIN_DESCRIPTION",
    "BACK_ACCESSORY_DESCRIPTION",
    "BACK_SIMPLIFICATION_OR_CONSERVATIVE_RULE",
    "LEGWEAR_DESCRIPTION",
    "SHOE_DESCRIPTION",
    "SHOE_CONSTRAINT",
    "KEY_CONSISTENCY_ITEMS",
    "KEY_COLOR_IDENTITY",
    "CHARACTER_SPECIFIC_NEGATIVE_ITEMS",
];

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[([A-Z][A-Z0-9_]*)\]").expect("valid regex"))
}

/// Placeholder tokens in `text`, deduplicated, in order of first appearance.
pub fn placeholders(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    placeholder_re()
        .captures_iter(text)
        .map(|c| c[1].to_string())
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

/// Character attributes keyed by placeholder name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeBlock {
    values: BTreeMap<String, String>,
}

impl AttributeBlock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str) -> Result<Self, PromptError> {
        serde_json::from_str(text).map_err(|e| PromptError::InvalidAttribute {
            name: "<document>".into(),
            reason: e.to_string(),
        })
    }

    pub fn set(&mut self, name: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.values.insert(name.into(), value.into());
        self
    }

    pub fn remove(&mut self, name: &str) -> Option<String> {
        self.values.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    /// Checks the block against a placeholder set: every name present and
    /// nonempty, no extra names, and no value that is itself a placeholder
    /// or spans several lines.
    pub fn validate_for(&self, names: &[&str]) -> Result<(), PromptError> {
        let missing: Vec<String> = names
            .iter()
            .filter(|n| self.get(n).is_none_or(|v| v.trim().is_empty()))
            .map(|n| n.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(PromptError::MissingAttribute(missing));
        }
        let unknown: Vec<String> = self
            .values
            .keys()
            .filter(|k| !names.contains(&k.as_str()))
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(PromptError::UnknownAttribute(unknown));
        }
        for (name, value) in &self.values {
            if placeholder_re().is_match(value) {
                return Err(PromptError::InvalidAttribute {
                    name: name.clone(),
                    reason: "value contains an unresolved placeholder".into(),
                });
            }
            if value.contains('\n') || value.contains('\r') {
                return Err(PromptError::InvalidAttribute {
                    name: name.clone(),
                    reason: "value must be a single line".into(),
                });
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        self.validate_for(&MODE3_PLACEHOLDERS)
    }
}

/// Fills the bundled mode-3 skeleton.
pub fn fill_mode3(attrs: &AttributeBlock) -> Result<String, PromptError> {
    fill_skeleton(builtin(TemplateKind::Mode3Skeleton), attrs)
}

pub fn fill_skeleton(skeleton: &Template, attrs: &AttributeBlock) -> Result<String, PromptError> {
    let found = placeholders(&skeleton.body);
    let known: BTreeSet<&str> = MODE3_PLACEHOLDERS.into_iter().collect();
    let found_set: BTreeSet<&str> = found.iter().map(String::as_str).collect();
    let drift: Vec<String> = found_set
        .symmetric_difference(&known)
        .map(|s| s.to_string())
        .collect();
    if !drift.is_empty() {
        return Err(PromptError::UnknownPlaceholder(drift));
    }
    attrs.validate()?;
    let filled = placeholder_re().replace_all(&skeleton.body, |c: &regex::Captures| {
        attrs.get(&c[1]).expect("validated").to_string()
    });
    Ok(filled.into_owned())
}

pub fn compiler_prompt() -> &'static str {
    &builtin(TemplateKind::Compiler).body
}

/// The compiler instructions followed by the skeleton to fill, ready to send
/// alongside the character image.
pub fn compiler_request(t: &TemplateSet) -> String {
    format!("{}\n{}", t.compiler.body, t.mode3_skeleton.body)
}

/// Extracts the last fenced code block from a compiler answer and checks it
/// is fully filled.
pub fn parse_compiler_output(text: &str) -> Result<String, PromptError> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        let is_fence = line.trim_start().starts_with("```");
        match (&mut current, is_fence) {
            (None, true) => current = Some(Vec::new()),
            (Some(_), true) => blocks.push(current.take().expect("open block")),
            (Some(lines), false) => lines.push(line),
            (None, false) => {}
        }
    }
    let block = blocks.pop().ok_or(PromptError::NoCodeBlock)?;
    let mut body = block.join("\n");
    body.push('\n');
    let unresolved = placeholders(&body);
    if !unresolved.is_empty() {
        return Err(PromptError::UnresolvedPlaceholders(unresolved));
    }
    Ok(body)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GatewayReply {
    Image(Vec<u8>),
    Text(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GatewayError {
    #[error("GatewayTimeout: no reply within {0:?}")]
    Timeout(Duration),
    #[error("GatewayTransport: {0}")]
    Transport(String),
    #[error("GatewayRejected: {0}")]
    Rejected(String),
}

/// A multimodal model endpoint. Implementations receive the bundle by shared
/// reference and must not keep per-session mutable state, so independent
/// requests can run concurrently. A timeout is an error, never an empty reply.
pub trait MllmGateway: Send + Sync {
    fn send(&self, bundle: &PromptBundle) -> Result<GatewayReply, GatewayError>;
}

/// Offline gateway: answers every request with a fixed preview image.
#[derive(Debug, Clone)]
pub struct StubGateway {
    preview: Vec<u8>,
}

impl StubGateway {
    pub fn new(preview_png: Vec<u8>) -> Self {
        Self {
            preview: preview_png,
        }
    }
}

impl MllmGateway for StubGateway {
    fn send(&self, bundle: &PromptBundle) -> Result<GatewayReply, GatewayError> {
        if bundle.text.is_empty() {
            return Err(GatewayError::Rejected("empty prompt".into()));
        }
        Ok(GatewayReply::Image(self.preview.clone()))
    }
}
