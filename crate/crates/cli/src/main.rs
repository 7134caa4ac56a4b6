//! `skinkit` command line.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 validation
//! error, 4 I/O error. On failure the first line on stderr starts with the
//! machine-readable error name.

mod config;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use skinkit::atlas::{inspect_skin, load_skin, AtlasError, ModelVariant};
use skinkit::caption::build_caption;
use skinkit::dataset::{build_manifest, BuildOptions, Corpus, DatasetError, Phase, PhaseConfig};
use skinkit::decoder::{decode, DecodeError, Sampling};
use skinkit::prompt::{
    assemble_mode1_with, assemble_mode2_with, assemble_mode3, bundle_mode3_text, compiler_request,
    parse_compiler_output, AttributeBlock, PromptBundle, PromptError,
};
use skinkit::raster::{decode_png_rgb, RgbImage};
use skinkit::render::{jitter_camera, Camera, PreviewRenderer, RenderError};
use thiserror::Error;

use config::CliConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("UsageError: {0}")]
    Usage(String),
    #[error("InvalidConfig: {0}")]
    Config(String),
    #[error("IoError: {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Atlas(#[from] AtlasError),
    #[error("{0}")]
    Decode(#[from] DecodeError),
    #[error("{0}")]
    Render(#[from] RenderError),
    #[error("{0}")]
    Prompt(#[from] PromptError),
    #[error("{0}")]
    Dataset(#[from] DatasetError),
    #[error("InvalidSkin: {0}")]
    InvalidSkin(String),
    #[error("DecodeError: {0}")]
    Png(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "UsageError",
            CliError::Config(_) => "InvalidConfig",
            CliError::Io { .. } => "IoError",
            CliError::Atlas(e) => e.name(),
            CliError::Decode(e) => e.name(),
            CliError::Render(e) => e.name(),
            CliError::Prompt(e) => e.name(),
            CliError::Dataset(e) => e.name(),
            CliError::InvalidSkin(_) => "InvalidSkin",
            CliError::Png(_) => "DecodeError",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Dataset(DatasetError::Io { .. }) => 4,
            CliError::Dataset(DatasetError::InvalidConfig(_)) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "skinkit", version, about = "Minecraft skin atlas toolkit")]
struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for every random draw; overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a skin PNG and report variant, coverage and violations.
    Validate(ValidateArgs),
    /// Render a preview of a skin.
    Render(RenderArgs),
    /// Turn a generated atlas image back into a 64×64 skin.
    Decode(DecodeArgs),
    /// Print the template caption of a skin.
    Caption(CaptionArgs),
    /// Build one phase of the paired training dataset.
    BuildDataset(BuildArgs),
    /// Assemble a preview-synthesis prompt.
    Prompt(PromptArgs),
}

#[derive(Debug, Args)]
struct ValidateArgs {
    skin: PathBuf,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct RenderArgs {
    skin: PathBuf,
    /// Output PNG.
    #[arg(short, long)]
    out: PathBuf,
    /// Render one view instead of the front/back panel pair.
    #[arg(long)]
    single: bool,
    #[arg(long, allow_hyphen_values = true)]
    yaw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pitch: Option<f64>,
    /// Pixels per texel.
    #[arg(long)]
    scale: Option<f64>,
    /// Single-view width (defaults to the panel width).
    #[arg(long)]
    width: Option<u32>,
    /// Single-view height (defaults to the panel height).
    #[arg(long)]
    height: Option<u32>,
    /// Apply seeded camera jitter.
    #[arg(long)]
    jitter: bool,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    atlas: PathBuf,
    /// Output skin PNG.
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_variant)]
    variant: ModelVariant,
    /// center | mode
    #[arg(long)]
    sampling: Option<Sampling>,
    /// Overlay texels with min(R,G,B) at or above this are empty.
    #[arg(long)]
    white_threshold: Option<u8>,
}

#[derive(Debug, Args)]
struct CaptionArgs {
    skin: PathBuf,
    /// Colour vocabulary JSON file.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Corpus directory, or skin PNG files.
    #[arg(required = true)]
    corpus: Vec<PathBuf>,
    /// 1 = text-to-image, 2 = image-to-image, 3 = preview-to-atlas.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    phase: u8,
    /// Number of pairs (clamped to the corpus size).
    #[arg(long)]
    count: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the manifest only, without images.
    #[arg(long)]
    records_only: bool,
}

#[derive(Debug, Args)]
struct PromptArgs {
    /// 1, 2 or 3.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    mode: u8,
    /// [A] character reference image.
    #[arg(long)]
    character: Option<PathBuf>,
    /// [B] layout reference (defaults to the bundled anchor).
    #[arg(long)]
    layout: Option<PathBuf>,
    /// [C] pose anchor (defaults to the bundled anchor).
    #[arg(long)]
    pose: Option<PathBuf>,
    /// [D] style reference, mode 2 only.
    #[arg(long)]
    style: Option<PathBuf>,
    /// Mode 3 attribute JSON.
    #[arg(long)]
    attributes: Option<PathBuf>,
    /// Mode 3: take the completed prompt from a compiler answer file.
    #[arg(long)]
    from_compiler: Option<PathBuf>,
    /// Mode 3: print the compiler request instead of a prompt.
    #[arg(long)]
    compiler_request: bool,
    /// Mode 3: send the character image only.
    #[arg(long)]
    a_only: bool,
    /// Print the bundle as JSON.
    #[arg(long)]
    json: bool,
}

fn parse_variant(s: &str) -> Result<ModelVariant, String> {
    s.parse().map_err(|e: String| e)
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn write_png(path: &Path, img: &RgbImage) -> Result<(), CliError> {
    let png = img.encode_png().map_err(|e| CliError::Png(e.to_string()))?;
    write(path, &png)
}

fn emit(text: &str) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

#[derive(Serialize)]
struct ValidateReport<'a> {
    variant: ModelVariant,
    converted: bool,
    valid: bool,
    outside_not_transparent: u32,
    base_not_opaque: u32,
    coverage: Vec<(&'a str, u32, u32)>,
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let report = inspect_skin(&read(&args.skin)?)?;
    let v = report.violations;
    let valid = v.is_clean();
    let coverage = report
        .coverage
        .iter()
        .map(|c| (c.region.name(), c.opaque, c.total))
        .collect();
    let r = ValidateReport {
        variant: report.atlas.variant(),
        converted: report.converted_legacy,
        valid,
        outside_not_transparent: v.outside_not_transparent,
        base_not_opaque: v.base_not_opaque,
        coverage,
    };
    if args.json {
        emit(&format!("{}\n", serde_json::to_string(&r).expect("serializes")))?;
    } else {
        let mut text = format!("variant={} converted={} valid={}\n", r.variant, r.converted, r.valid);
        for (name, opaque, total) in &r.coverage {
            text.push_str(&format!("{name:<16} {opaque:>4}/{total}\n"));
        }
        text.push_str(&format!(
            "violations: outside_not_transparent={} base_not_opaque={}\n",
            r.outside_not_transparent, r.base_not_opaque
        ));
        emit(&text)?;
    }
    if !valid {
        return Err(CliError::InvalidSkin(format!(
            "{} texels outside regions are not transparent, {} base texels are not opaque",
            v.outside_not_transparent, v.base_not_opaque
        )));
    }
    Ok(())
}

fn cmd_render(cfg: &CliConfig, seed: u64, args: &RenderArgs) -> Result<(), CliError> {
    let skin = load_skin(&read(&args.skin)?)?;
    let base = Camera::new(
        args.yaw.unwrap_or(cfg.camera.yaw),
        args.pitch.unwrap_or(cfg.camera.pitch),
        args.scale.unwrap_or(cfg.camera.scale),
    )?;
    let cam = if args.jitter {
        jitter_camera(&base, &cfg.jitter, seed)
    } else {
        skinkit::render::JitteredCamera {
            camera: base,
            jittered: false,
        }
    };
    let renderer = PreviewRenderer::new(cfg.style);
    let img = if args.single {
        let w = args.width.unwrap_or(cfg.layout.panel_width);
        let h = args.height.unwrap_or(cfg.layout.panel_height);
        if w == 0 || h == 0 {
            return Err(CliError::Usage("--width and --height must be >= 1".into()));
        }
        renderer.render_view(&skin, &cam.camera, w, h)
    } else {
        renderer.render_dual_panel(&skin, &cfg.layout, &cam.camera)
    };
    write_png(&args.out, &img)?;
    emit(&format!(
        "yaw={} pitch={} jittered={} size={}x{}\n",
        cam.camera.yaw,
        cam.camera.pitch,
        cam.jittered,
        img.dimensions().0,
        img.dimensions().1
    ))
}

fn cmd_decode(cfg: &CliConfig, args: &DecodeArgs) -> Result<(), CliError> {
    let img = decode_png_rgb(&read(&args.atlas)?).map_err(|e| CliError::Png(e.to_string()))?;
    let mut dc = cfg.decode;
    if let Some(s) = args.sampling {
        dc.sampling = s;
    }
    if let Some(t) = args.white_threshold {
        dc.overlay_white_threshold = t;
    }
    let skin = decode(&img, args.variant, &dc)?;
    let png = skin.encode_png().map_err(|e| CliError::Png(e.to_string()))?;
    write(&args.out, &png)
}

fn cmd_caption(cfg: &CliConfig, args: &CaptionArgs) -> Result<(), CliError> {
    let vocab = cfg.vocabulary(args.vocab.as_deref())?;
    let skin = load_skin(&read(&args.skin)?)?;
    emit(&format!("{}\n", build_caption(&skin, &vocab)))
}

#[derive(Serialize)]
struct BuildSummary {
    phase: u8,
    adapter_id: String,
    init_adapter: Option<String>,
    records: usize,
    truncated: bool,
    skipped: usize,
    content_hash: String,
    out: PathBuf,
}

fn cmd_build(cfg: &CliConfig, seed: u64, args: &BuildArgs) -> Result<(), CliError> {
    let phase = Phase::from_number(args.phase).expect("range checked by the parser");
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.dataset.clone())
        .ok_or_else(|| CliError::Usage("build-dataset needs --out (or output.dataset in the config)".into()))?;
    if args.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be >= 1".into()));
    }
    let corpus = match args.corpus.as_slice() {
        [dir] if dir.is_dir() => Corpus::from_dir(dir)?,
        files => Corpus::from_files(files)?,
    };
    let mut pc = PhaseConfig::new(phase);
    pc.seed = seed;
    if let Some(n) = args.count {
        pc.pair_count = n;
    }
    pc.jitter = cfg.jitter;
    pc.camera = cfg.camera;
    pc.layout = cfg.layout;
    pc.style = cfg.style;
    pc.vocabulary = cfg.vocabulary(None)?;
    let opts = BuildOptions {
        out_dir: Some(out.clone()),
        write_images: !args.records_only,
        jobs: args.jobs,
    };
    let m = build_manifest(&corpus, &pc, &opts)?;
    let summary = BuildSummary {
        phase: args.phase,
        adapter_id: m.header.adapter_id.clone(),
        init_adapter: m.header.init_adapter.clone(),
        records: m.records.len(),
        truncated: m.header.truncated,
        skipped: m.header.skipped.len(),
        content_hash: m.header.content_hash.clone(),
        out,
    };
    emit(&format!("{}\n", serde_json::to_string(&summary).expect("serializes")))
}

fn cmd_prompt(cfg: &CliConfig, args: &PromptArgs) -> Result<(), CliError> {
    let templates = cfg.template_set()?;
    if args.mode != 3 && (args.attributes.is_some() || args.from_compiler.is_some() || args.compiler_request || args.a_only) {
        return Err(CliError::Usage(
            "--attributes, --from-compiler, --compiler-request and --a-only apply to --mode 3".into(),
        ));
    }
    if args.mode != 2 && args.style.is_some() {
        return Err(CliError::Usage("--style applies to --mode 2".into()));
    }
    if args.compiler_request {
        return emit(&compiler_request(&templates));
    }

    // Images in slot order, stopping at the first one not given so the
    // assembler names the missing slot.
    let layout = args.layout.clone().unwrap_or_else(|| cfg.anchors.layout.clone());
    let pose = args.pose.clone().unwrap_or_else(|| cfg.anchors.pose.clone());
    let mut slots = vec![args.character.clone()];
    if !(args.mode == 3 && args.a_only) {
        slots.push(Some(layout));
        slots.push(Some(pose));
    }
    if args.mode == 2 {
        slots.push(args.style.clone());
    }
    let images: Vec<PathBuf> = slots.into_iter().map_while(|s| s).collect();

    let bundle: PromptBundle = match args.mode {
        1 => assemble_mode1_with(&templates, &images)?,
        2 => assemble_mode2_with(&templates, &images)?,
        _ => match (&args.attributes, &args.from_compiler) {
            (Some(a), None) => {
                let text = String::from_utf8_lossy(&read(a)?).into_owned();
                let attrs = AttributeBlock::from_json(&text)?;
                assemble_mode3(&templates, &attrs, &images)?
            }
            (None, Some(c)) => {
                let answer = String::from_utf8_lossy(&read(c)?).into_owned();
                bundle_mode3_text(parse_compiler_output(&answer)?, &images)?
            }
            _ => {
                return Err(CliError::Usage(
                    "--mode 3 needs exactly one of --attributes, --from-compiler or --compiler-request".into(),
                ))
            }
        },
    };
    if args.json {
        emit(&format!("{}\n", serde_json::to_string_pretty(&bundle).expect("serializes")))
    } else {
        emit(&format!("{}\n--- image slots ---\n{}", bundle.text.trim_end(), bundle.slot_listing()))
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = CliConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    match &cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Render(a) => cmd_render(&cfg, seed, a),
        Command::Decode(a) => cmd_decode(&cfg, a),
        Command::Caption(a) => cmd_caption(&cfg, a),
        Command::BuildDataset(a) => cmd_build(&cfg, seed, a),
        Command::Prompt(a) => cmd_prompt(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("UsageError: {}", e.kind());
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if msg.starts_with(e.name()) {
                eprintln!("{msg}");
            } else {
                eprintln!("{}: {msg}", e.name());
            }
            ExitCode::from(e.exit_code())
        }
    }
}
