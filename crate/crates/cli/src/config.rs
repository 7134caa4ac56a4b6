//! Pipeline configuration file (TOML). Every section is optional; missing
//! keys take the library defaults and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use skinkit::caption::ColorVocabulary;
use skinkit::decoder::DecodeConfig;
use skinkit::prompt::{Template, TemplateSet};
use skinkit::render::{Camera, JitterParams, PanelLayout, RenderStyle};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub seed: u64,
    pub camera: Camera,
    pub layout: PanelLayout,
    pub jitter: JitterParams,
    pub style: RenderStyle,
    pub decode: DecodeConfig,
    /// JSON list of `{"name", "rgb"}` entries.
    pub vocabulary: Option<PathBuf>,
    pub templates: TemplatePaths,
    pub anchors: AnchorPaths,
    pub output: OutputDirs,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemplatePaths {
    pub mode1: Option<PathBuf>,
    pub mode2: Option<PathBuf>,
    pub mode3_skeleton: Option<PathBuf>,
    pub compiler: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnchorPaths {
    pub layout: PathBuf,
    pub pose: PathBuf,
}

impl Default for AnchorPaths {
    fn default() -> Self {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/resources/anchors");
        Self {
            layout: dir.join("layout_reference.png"),
            pose: dir.join("pose_anchor.png"),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputDirs {
    /// Default `--out` for `build-dataset`.
    pub dataset: Option<PathBuf>,
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: CliConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |e: skinkit::render::RenderError| CliError::Config(e.to_string());
        self.camera.validate().map_err(bad)?;
        self.jitter.validate().map_err(bad)?;
        self.layout.validate().map_err(bad)?;
        if !(self.style.overlay_inflation >= 0.0 && self.style.overlay_inflation.is_finite()) {
            return Err(CliError::Config("style.overlay_inflation must be >= 0".into()));
        }
        let s = &self.style.shading;
        for (name, v) in [("top", s.top), ("front_back", s.front_back), ("sides", s.sides), ("bottom", s.bottom)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Config(format!("style.shading.{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn vocabulary(&self, override_path: Option<&Path>) -> Result<ColorVocabulary, CliError> {
        match override_path.or(self.vocabulary.as_deref()) {
            None => Ok(ColorVocabulary::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                ColorVocabulary::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn template_set(&self) -> Result<TemplateSet, CliError> {
        let mut set = TemplateSet::default();
        let t = &self.templates;
        for (slot, path) in [
            (&mut set.mode1, &t.mode1),
            (&mut set.mode2, &t.mode2),
            (&mut set.mode3_skeleton, &t.mode3_skeleton),
            (&mut set.compiler, &t.compiler),
        ] {
            if let Some(p) = path {
                *slot = Template::load(p).map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        Ok(set)
    }
}
