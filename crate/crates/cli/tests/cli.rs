use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use skinkit::atlas::{region_at, BodyPart, ModelVariant, SkinAtlas};
use skinkit::dataset::{build_target, tree_hash, PairRecord};
use skinkit::prompt::MODE3_PLACEHOLDERS;
use skinkit::raster::{decode_png_rgb, decode_png_rgba, RgbImage, RgbaImage};

fn skinkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skinkit"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture_skin() -> SkinAtlas {
    SkinAtlas::from_fn(ModelVariant::Classic, |region, _, _| {
        if region.is_overlay() {
            return [0, 0, 0, 0];
        }
        match region.part() {
            BodyPart::Head => [0, 0, 0, 255],
            BodyPart::Body => [0, 0, 255, 255],
            BodyPart::RightArm | BodyPart::LeftArm => [255, 0, 0, 255],
            BodyPart::RightLeg | BodyPart::LeftLeg => [128, 128, 128, 255],
        }
    })
}

fn varied_skin(seed: u32, variant: ModelVariant) -> SkinAtlas {
    SkinAtlas::from_fn(variant, |region, x, y| {
        let v = (x * 31 + y * 17 + seed * 101) % 251;
        if region.is_overlay() && (x + y + seed) % 3 != 0 {
            [0, 0, 0, 0]
        } else {
            [v as u8, (v * 3 % 251) as u8, (seed * 40 % 200) as u8, 255]
        }
    })
}

fn write_skin(dir: &Path, name: &str, skin: &SkinAtlas) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, skin.encode_png().unwrap()).unwrap();
    p
}

fn corpus_dir(n: u32) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..n {
        let variant = if i % 3 == 0 { ModelVariant::Slim } else { ModelVariant::Classic };
        write_skin(dir.path(), &format!("skin{i:03}.png"), &varied_skin(i, variant));
    }
    dir
}

fn records(dir: &Path) -> Vec<PairRecord> {
    std::fs::read_to_string(dir.join("manifest.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn validate_reports() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_skin(dir.path(), "ok.png", &fixture_skin());
    let o = skinkit(&["validate", s(&ok)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("variant=classic converted=false valid=true"));

    let json = skinkit(&["validate", "--json", s(&ok)]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["coverage"].as_array().unwrap().len(), 12);

    let bad = dir.path().join("bad.png");
    std::fs::write(&bad, RgbaImage::filled(65, 64, [1, 2, 3, 255]).encode_png().unwrap()).unwrap();
    let o = skinkit(&["validate", s(&bad)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("ShapeError"));

    let legacy = dir.path().join("legacy.png");
    let img = RgbaImage::from_fn(64, 32, |x, y| match region_at(ModelVariant::Classic, x, y) {
        Some(id) if !id.is_overlay() => [9, 9, 9, 255],
        _ => [0, 0, 0, 0],
    });
    std::fs::write(&legacy, img.encode_png().unwrap()).unwrap();
    let o = skinkit(&["validate", s(&legacy)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("converted=true"));

    let mut dirty = fixture_skin().pixels().clone();
    dirty.put(0, 0, [1, 1, 1, 255]);
    let dirty_path = dir.path().join("dirty.png");
    std::fs::write(&dirty_path, dirty.encode_png().unwrap()).unwrap();
    let o = skinkit(&["validate", s(&dirty_path)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("InvalidSkin"));

    let o = skinkit(&["validate", s(&dir.path().join("missing.png"))]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("IoError"));

    std::fs::write(dir.path().join("junk.png"), b"not a png").unwrap();
    let o = skinkit(&["validate", s(&dir.path().join("junk.png"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("DecodeError"));
}

#[test]
fn render_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let skin = write_skin(dir.path(), "s.png", &varied_skin(5, ModelVariant::Classic));
    let out = |name: &str| dir.path().join(name);

    assert!(skinkit(&["render", s(&skin), "-o", s(&out("a.png"))]).status.success());
    let a = std::fs::read(out("a.png")).unwrap();
    // default layout: 2·240 + 16 + 2·8 by 496 + 2·8
    assert_eq!(decode_png_rgb(&a).unwrap().dimensions(), (512, 512));

    assert!(skinkit(&["render", s(&skin), "-o", s(&out("b.png")), "--yaw", "24", "--pitch", "30"]).status.success());
    assert_eq!(std::fs::read(out("b.png")).unwrap(), a);

    // without --jitter the seed is irrelevant
    assert!(skinkit(&["render", s(&skin), "-o", s(&out("c.png")), "--seed", "12345"]).status.success());
    assert_eq!(std::fs::read(out("c.png")).unwrap(), a);

    let mut jittered = std::collections::HashSet::new();
    for seed in 0..8 {
        let p = out(&format!("j{seed}.png"));
        let o = skinkit(&["render", s(&skin), "-o", s(&p), "--jitter", "--seed", &seed.to_string()]);
        assert!(o.status.success());
        let again = out(&format!("k{seed}.png"));
        skinkit(&["render", s(&skin), "-o", s(&again), "--jitter", "--seed", &seed.to_string()]);
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&again).unwrap());
        jittered.insert(std::fs::read(&p).unwrap());
    }
    assert!(jittered.len() > 1);

    let o = skinkit(&["render", s(&skin), "-o", s(&out("single.png")), "--single", "--width", "100", "--height", "200"]);
    assert!(o.status.success());
    assert_eq!(decode_png_rgb(&std::fs::read(out("single.png")).unwrap()).unwrap().dimensions(), (100, 200));

    let o = skinkit(&["render", s(&skin), "-o", s(&out("x.png")), "--pitch", "90"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("InvalidCamera"));
}

#[test]
fn decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let skin = varied_skin(7, ModelVariant::Slim);
    let atlas = dir.path().join("atlas.png");
    std::fs::write(&atlas, build_target(&skin).encode_png().unwrap()).unwrap();
    let out = dir.path().join("skin.png");
    let o = skinkit(&["decode", s(&atlas), "-o", s(&out), "--variant", "slim"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(decode_png_rgba(&std::fs::read(&out).unwrap()).unwrap(), *skin.pixels());
    assert!(skinkit(&["validate", s(&out)]).status.success());

    let o = skinkit(&["decode", s(&atlas), "-o", s(&out), "--variant", "slim", "--sampling", "mode"]);
    assert!(o.status.success());
    assert_eq!(decode_png_rgba(&std::fs::read(&out).unwrap()).unwrap(), *skin.pixels());

    let odd = dir.path().join("odd.png");
    std::fs::write(&odd, RgbImage::filled(300, 200, [10, 20, 30]).encode_png().unwrap()).unwrap();
    let o = skinkit(&["decode", s(&odd), "-o", s(&out), "--variant", "classic"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(skinkit(&["validate", s(&out)]).status.success());

    let o = skinkit(&["decode", s(&odd), "-o", s(&out), "--variant", "wide"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn caption_output() {
    let dir = tempfile::tempdir().unwrap();
    let skin = write_skin(dir.path(), "f.png", &fixture_skin());
    let o = skinkit(&["caption", s(&skin)]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "A Minecraft skin texture UV atlas, 64x64 pixel art layout. head is black, body is blue, arms are red, legs are gray. flat colors, hard edges.\n"
    );
    let vocab = dir.path().join("vocab.json");
    std::fs::write(&vocab, r#"[{"name":"ink","rgb":[0,0,0]},{"name":"blood","rgb":[255,0,0]}]"#).unwrap();
    let o = skinkit(&["caption", s(&skin), "--vocab", s(&vocab)]);
    // gray 128: 127²+2·128² to blood < 3·128² to ink
    assert!(stdout(&o).contains("head is ink, body is ink, arms are blood, legs are blood"), "{}", stdout(&o));
}

#[test]
fn build_dataset_phases() {
    let corpus = corpus_dir(3);
    let out = tempfile::tempdir().unwrap();
    let p1 = out.path().join("p1");
    let o = skinkit(&["build-dataset", s(corpus.path()), "--phase", "1", "--out", s(&p1), "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["records"], 3);
    assert_eq!(summary["truncated"], true);
    assert_eq!(summary["init_adapter"], serde_json::Value::Null);
    let recs = records(&p1);
    assert_eq!(recs.len(), 3);
    assert!(recs.iter().all(|r| r.conditioning.is_none() && p1.join(&r.target).is_file()));

    let p3 = out.path().join("p3");
    let o = skinkit(&["build-dataset", s(corpus.path()), "--phase", "3", "--out", s(&p3), "--seed", "3"]);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["init_adapter"], "phase2");
    for r in records(&p3) {
        let c = r.camera.unwrap();
        assert!((c.yaw - 24.0).abs() <= 10.0 && (c.pitch - 30.0).abs() <= 10.0);
        assert!(p3.join(r.conditioning.unwrap()).is_file());
    }
    let o2 = skinkit(&["build-dataset", s(corpus.path()), "--phase", "3", "--out", s(&out.path().join("again")), "--seed", "3"]);
    let again: serde_json::Value = serde_json::from_str(&stdout(&o2)).unwrap();
    assert_eq!(again["content_hash"], summary["content_hash"]);

    let ro = out.path().join("ro");
    let o = skinkit(&["build-dataset", s(corpus.path()), "--phase", "2", "--out", s(&ro), "--records-only"]);
    assert!(o.status.success());
    assert!(!ro.join("images").exists());
    assert_eq!(records(&ro).len(), 3);
}

#[test]
fn build_dataset_jobs_do_not_matter() {
    let corpus = corpus_dir(12);
    let out = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for jobs in ["1", "8"] {
        let dir = out.path().join(format!("j{jobs}"));
        let o = skinkit(&[
            "build-dataset", s(corpus.path()), "--phase", "3", "--count", "10", "--seed", "42", "--jobs", jobs, "--out", s(&dir),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        hashes.push(tree_hash(&dir).unwrap());
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn build_dataset_errors() {
    let empty = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = skinkit(&["build-dataset", s(empty.path()), "--phase", "1", "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("EmptyCorpus"));
    let o = skinkit(&["build-dataset", s(empty.path()), "--phase", "4", "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = skinkit(&["build-dataset", s(empty.path()), "--phase", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("UsageError"));
}

fn attributes_file(dir: &Path, skip: Option<&str>) -> PathBuf {
    let map: serde_json::Map<String, serde_json::Value> = MODE3_PLACEHOLDERS
        .iter()
        .filter(|n| Some(**n) != skip)
        .map(|n| (n.to_string(), serde_json::Value::String(format!("{} here", n.to_lowercase()))))
        .collect();
    let p = dir.join("attrs.json");
    std::fs::write(&p, serde_json::to_string(&map).unwrap()).unwrap();
    p
}

#[test]
fn prompt_modes() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_skin(dir.path(), "character.png", &fixture_skin());
    let d = write_skin(dir.path(), "style.png", &fixture_skin());

    let o = skinkit(&["prompt", "--mode", "1", "--character", s(&a)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Left = FRONT"));
    let listing = text.split("--- image slots ---\n").nth(1).unwrap();
    let labels: Vec<&str> = listing.lines().map(|l| &l[..3]).collect();
    assert_eq!(labels, ["[A]", "[B]", "[C]"]);
    assert!(listing.contains("layout_reference.png") && listing.contains("pose_anchor.png"));

    let o = skinkit(&["prompt", "--mode", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("MissingImage"));

    let o = skinkit(&["prompt", "--mode", "2", "--character", s(&a), "--style", s(&d)]);
    assert!(stdout(&o).contains("Style lock from D (hard)"));
    assert!(stdout(&o).contains("[D] "));
    let o = skinkit(&["prompt", "--mode", "2", "--character", s(&a)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("slot D"));

    let attrs = attributes_file(dir.path(), None);
    let o = skinkit(&["prompt", "--mode", "3", "--character", s(&a), "--attributes", s(&attrs), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bundle: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let text = bundle["text"].as_str().unwrap();
    assert!(!regex_free_placeholder(text));
    assert_eq!(bundle["image_slots"].as_array().unwrap().len(), 3);

    let o = skinkit(&["prompt", "--mode", "3", "--character", s(&a), "--attributes", s(&attrs), "--a-only", "--json"]);
    let bundle: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(bundle["image_slots"].as_array().unwrap().len(), 1);

    let partial = attributes_file(dir.path(), Some("HAIR_COLOR"));
    let o = skinkit(&["prompt", "--mode", "3", "--character", s(&a), "--attributes", s(&partial)]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr(&o).lines().next().unwrap(), "MissingAttribute: HAIR_COLOR");

    let o = skinkit(&["prompt", "--mode", "3", "--compiler-request"]);
    assert!(stdout(&o).starts_with("You are a character-to-template prompt compiler"));
    assert!(stdout(&o).contains("[HAIR_COLOR]"));

    let answer = dir.path().join("answer.txt");
    std::fs::write(&answer, format!("Part 1\n...\nPart 2: Final completed prompt\n```\n{text}```\n")).unwrap();
    let o = skinkit(&["prompt", "--mode", "3", "--character", s(&a), "--from-compiler", s(&answer), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let b2: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(b2["text"], text);

    std::fs::write(&answer, "```\nHair: [HAIR_COLOR]\n```\n").unwrap();
    let o = skinkit(&["prompt", "--mode", "3", "--character", s(&a), "--from-compiler", s(&answer)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("UnresolvedPlaceholders: HAIR_COLOR"));

    let o = skinkit(&["prompt", "--mode", "3", "--character", s(&a)]);
    assert_eq!(o.status.code(), Some(2));
}

fn regex_free_placeholder(text: &str) -> bool {
    regex::Regex::new(r"\[[A-Z][A-Z0-9_]*\]").unwrap().is_match(text)
}

#[test]
fn config_file() {
    let dir = tempfile::tempdir().unwrap();
    let skin = write_skin(dir.path(), "s.png", &varied_skin(2, ModelVariant::Classic));
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "seed = 9\n[camera]\nyaw = 40.0\n[layout]\nmargin = 4\n").unwrap();
    let o = skinkit(&["--config", s(&cfg), "render", s(&skin), "-o", s(&dir.path().join("a.png"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("yaw=40 pitch=30"));
    assert!(stdout(&o).contains("size=504x504"));
    // flags win over the config
    let o = skinkit(&["--config", s(&cfg), "render", s(&skin), "-o", s(&dir.path().join("b.png")), "--yaw", "10"]);
    assert!(stdout(&o).starts_with("yaw=10 "));

    std::fs::write(&cfg, "[camera]\nroll = 3.0\n").unwrap();
    let o = skinkit(&["--config", s(&cfg), "caption", s(&skin)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("InvalidConfig"));

    std::fs::write(&cfg, "[jitter]\nkeep_prob = 2.0\n").unwrap();
    let o = skinkit(&["--config", s(&cfg), "caption", s(&skin)]);
    assert_eq!(o.status.code(), Some(2));

    let o = skinkit(&["--config", s(&dir.path().join("absent.toml")), "caption", s(&skin)]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn help_lists_every_flag() {
    let expected: &[(&str, &[&str])] = &[
        ("", &["--config", "--seed", "--verbose", "--help", "--version"]),
        ("validate", &["--json"]),
        ("render", &["--out", "--single", "--yaw", "--pitch", "--scale", "--width", "--height", "--jitter", "--seed", "--config"]),
        ("decode", &["--out", "--variant", "--sampling", "--white-threshold"]),
        ("caption", &["--vocab"]),
        ("build-dataset", &["--phase", "--count", "--out", "--jobs", "--records-only", "--seed"]),
        (
            "prompt",
            &["--mode", "--character", "--layout", "--pose", "--style", "--attributes", "--from-compiler", "--compiler-request", "--a-only", "--json"],
        ),
    ];
    for (sub, flags) in expected {
        let args: Vec<&str> = if sub.is_empty() { vec!["--help"] } else { vec![sub, "--help"] };
        let o = skinkit(&args);
        assert!(o.status.success());
        let help = stdout(&o);
        for flag in *flags {
            assert!(help.contains(flag), "{sub} --help lacks {flag}");
        }
    }
    let top = stdout(&skinkit(&["--help"]));
    for sub in ["validate", "render", "decode", "caption", "build-dataset", "prompt"] {
        assert!(top.contains(sub));
    }
}
