//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

mod common;

use std::time::Instant;

use regex::Regex;
use skinkit::atlas::{nearest_upscale, region_map, BodyPart, Face, ModelVariant, RegionId, SkinAtlas};
use skinkit::caption::{build_caption, nearest_named, ColorVocabulary};
use skinkit::dataset::{
    build_manifest, build_target, cover_center_crop, cover_dims, duplicate_skin_ids, tree_hash, BuildOptions, Corpus,
    Phase, PhaseConfig, SkinSource,
};
use skinkit::decoder::{decode, downsample, DecodeConfig, Sampling};
use skinkit::prompt::{fill_mode3, placeholders, AttributeBlock, PromptError, MODE3_PLACEHOLDERS};
use skinkit::raster::{Rgb, RgbImage};
use skinkit::render::{FaceShading, PanelLayout, PreviewRenderer, RenderStyle};
use skinkit::rng::SplitMix64;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn corpus_of(skins: &[SkinAtlas]) -> Corpus {
    Corpus::from_entries(
        skins
            .iter()
            .enumerate()
            .map(|(i, s)| SkinSource {
                id: format!("skin{i:05}"),
                bytes: s.encode_png().unwrap(),
            })
            .collect(),
    )
    .unwrap()
}

fn round_trip() -> Outcome {
    let skins = common::corpus(240, 1);
    let start = Instant::now();
    for (i, skin) in skins.iter().enumerate() {
        check(!common::has_near_white_overlay(skin), "fixture has near-white overlay")?;
        let back = decode(&build_target(skin), skin.variant(), &DecodeConfig::default()).map_err(|e| e.to_string())?;
        check(back == *skin, format!("skin {i} differs after round trip"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 10.0, format!("took {secs:.2}s"))?;
    Ok(format!("{} skins exact in {secs:.2}s", skins.len()))
}

fn upscale_inverse() -> Outcome {
    let mut rng = SplitMix64::new(77);
    for n in 0..1000 {
        let img = RgbImage::from_fn(64, 64, |_, _| {
            let v = rng.next_u64().to_le_bytes();
            [v[0], v[1], v[2]]
        });
        let big = nearest_upscale(&img, 8);
        for s in [Sampling::BlockCenter, Sampling::BlockMode] {
            check(downsample(&big, 64, s).unwrap() == img, format!("image {n} {s:?}"))?;
        }
    }
    Ok("1000 images, both sampling modes".into())
}

/// Cheap distinct skins for the large records-only builds.
fn large_corpus(n: usize) -> Corpus {
    let skins: Vec<SkinAtlas> = (0..n)
        .map(|i| {
            let variant = if i % 4 == 0 { ModelVariant::Slim } else { ModelVariant::Classic };
            common::solid(variant, [(i % 251) as u8, (i / 251 % 251) as u8, (i % 7) as u8 * 30])
        })
        .collect();
    corpus_of(&skins)
}

fn phase3_records(corpus: &Corpus) -> Result<Vec<skinkit::dataset::PairRecord>, String> {
    let mut cfg = PhaseConfig::new(Phase::Preview2Atlas);
    cfg.pair_count = 10_000;
    cfg.seed = 20_240_601;
    let m = build_manifest(corpus, &cfg, &BuildOptions::default()).map_err(|e| e.to_string())?;
    check(m.records.len() == 10_000, format!("{} records", m.records.len()))?;
    Ok(m.records)
}

fn camera_constants(records: &[skinkit::dataset::PairRecord]) -> Outcome {
    let (mut base, mut jit) = (0, 0);
    for r in records {
        let c = r.camera.ok_or("record without camera")?;
        check((c.back_yaw - c.yaw - 180.0).abs() < 1e-9, format!("{}: back yaw {}", r.pair_id, c.back_yaw))?;
        if c.jittered {
            jit += 1;
            check(
                (c.yaw - 24.0).abs() <= 10.0 && (c.pitch - 30.0).abs() <= 10.0,
                format!("{}: ({}, {})", r.pair_id, c.yaw, c.pitch),
            )?;
        } else {
            base += 1;
            check((c.yaw, c.pitch, c.back_yaw) == (24.0, 30.0, 204.0), format!("{}: base camera {c:?}", r.pair_id))?;
        }
    }
    Ok(format!("{base} base at (24, 30)/204, {jit} jittered within ±10"))
}

fn jitter_rate(records: &[skinkit::dataset::PairRecord]) -> Outcome {
    let kept = records.iter().filter(|r| !r.camera.unwrap().jittered).count();
    let frac = kept as f64 / records.len() as f64;
    check((0.686..=0.714).contains(&frac), format!("unjittered fraction {frac:.4}"))?;
    Ok(format!("unjittered fraction {frac:.4}"))
}

fn dual_panel() -> Outcome {
    let front_marker: Rgb = [255, 0, 255];
    let back_marker: Rgb = [0, 255, 255];
    let head = region_map(ModelVariant::Classic).region(RegionId::HeadBase).clone();
    let (f, b) = (head.face(Face::Front), head.face(Face::Back));
    let skin = SkinAtlas::from_fn(ModelVariant::Classic, |region, x, y| {
        if region.is_overlay() {
            [0, 0, 0, 0]
        } else if (x, y) == (f.x + 3, f.y + 3) {
            [255, 0, 255, 255]
        } else if (x, y) == (b.x + 4, b.y + 3) {
            [0, 255, 255, 255]
        } else {
            [90, 70, 50, 255]
        }
    });
    let renderer = PreviewRenderer::new(RenderStyle {
        shading: FaceShading::flat(),
        ..RenderStyle::default()
    });
    let layout = PanelLayout::default();
    let img = renderer.render_dual_panel(&skin, &layout, &skinkit::render::Camera::default());
    let (w, h) = img.dimensions();
    for (x, y) in [(0, 0), (w - 1, 0), (0, h - 1), (w - 1, h - 1)] {
        check(img.get(x, y) == [255, 255, 255], format!("corner ({x}, {y}) not white"))?;
    }
    let split = w / 2;
    let count = |rgb: Rgb, left: bool| {
        (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .filter(|&(x, y)| (x < split) == left && img.get(x, y) == rgb)
            .count()
    };
    let (fl, fr, bl, br) = (count(front_marker, true), count(front_marker, false), count(back_marker, true), count(back_marker, false));
    check(fl > 0 && fr == 0, format!("front marker left {fl} right {fr}"))?;
    check(br > 0 && bl == 0, format!("back marker left {bl} right {br}"))?;
    Ok(format!("{w}x{h}, white corners, front marker {fl} px left, back marker {br} px right"))
}

fn caption_oracle() -> Outcome {
    let vocab = ColorVocabulary::default();
    let named: Vec<(String, Rgb)> = vocab.entries().iter().map(|e| (e.name.clone(), e.rgb)).collect();
    let mut rng = SplitMix64::new(4);
    let mut hats = 0;
    for i in 0..20 {
        let mut pick = || named[rng.below(named.len() as u64) as usize].clone();
        let (head, body, arms, legs) = (pick(), pick(), pick(), pick());
        // every other skin wears a hat; one of them is pure white, which is no hat
        let hat = match i % 4 {
            1 => Some(pick()).filter(|h| h.0 != "white"),
            3 if i == 3 => Some(("white".to_string(), [255, 255, 255])),
            3 => Some(pick()).filter(|h| h.0 != "white"),
            _ => None,
        };
        let variant = if i % 2 == 0 { ModelVariant::Classic } else { ModelVariant::Slim };
        let skin = common::part_colored(
            variant,
            |p| match p {
                BodyPart::Head => head.1,
                BodyPart::Body => body.1,
                BodyPart::RightArm | BodyPart::LeftArm => arms.1,
                BodyPart::RightLeg | BodyPart::LeftLeg => legs.1,
            },
            |p| if p == BodyPart::Head { hat.as_ref().map(|h| h.1) } else { None },
        );
        let hat_phrase = match &hat {
            Some((name, _)) if name != "white" => {
                hats += 1;
                format!(", has a {name} hat overlay")
            }
            _ => String::new(),
        };
        let expected = format!(
            "A Minecraft skin texture UV atlas, 64x64 pixel art layout. head is {}, body is {}, arms are {}, legs are {}{hat_phrase}. flat colors, hard edges.",
            head.0, body.0, arms.0, legs.0
        );
        let got = build_caption(&skin, &vocab).text;
        check(got == expected, format!("skin {i}: {got:?} != {expected:?}"))?;
    }
    check(hats > 0, "no hat branch exercised")?;
    let mut rng = SplitMix64::new(10_000);
    for _ in 0..10_000 {
        let v = rng.next_u64().to_le_bytes();
        let rgb = [v[0], v[1], v[2]];
        let d = |c: Rgb| -> i64 { (0..3).map(|k| (rgb[k] as i64 - c[k] as i64).pow(2)).sum() };
        let mut best = &named[0];
        for e in &named {
            if d(e.1) < d(best.1) {
                best = e;
            }
        }
        check(nearest_named(rgb, &vocab) == best.0, format!("nearest_named({rgb:?})"))?;
    }
    Ok(format!("20 captions ({hats} with hats), 10000 nearest_named checks"))
}

fn parallel_determinism() -> Outcome {
    let corpus = corpus_of(&common::corpus(24, 9));
    let mut out = Vec::new();
    for phase in Phase::ALL {
        let mut hashes = Vec::new();
        for jobs in [1, 8] {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let mut cfg = PhaseConfig::new(phase);
            cfg.pair_count = 24;
            cfg.seed = 99;
            let opts = BuildOptions {
                out_dir: Some(dir.path().to_path_buf()),
                write_images: true,
                jobs: Some(jobs),
            };
            build_manifest(&corpus, &cfg, &opts).map_err(|e| e.to_string())?;
            hashes.push(tree_hash(dir.path()).map_err(|e| e.to_string())?);
        }
        check(hashes[0] == hashes[1], format!("phase {} trees differ", phase.number()))?;
        out.push(hashes[0][..12].to_string());
    }
    Ok(format!("jobs 1 == jobs 8 for all phases ({})", out.join(", ")))
}

fn mode3_fill() -> Outcome {
    let mut attrs = AttributeBlock::new();
    for name in MODE3_PLACEHOLDERS {
        attrs.set(name, format!("<{}>", name.to_lowercase()));
    }
    let filled = fill_mode3(&attrs).map_err(|e| e.to_string())?;
    check(placeholders(&filled).is_empty(), "unresolved placeholders")?;
    let skeleton = &skinkit::prompt::builtin(skinkit::prompt::TemplateKind::Mode3Skeleton).body;
    let token = Regex::new(r"\[[A-Z][A-Z0-9_]*\]").unwrap();
    let s: Vec<&str> = skeleton.lines().collect();
    let f: Vec<&str> = filled.lines().collect();
    check(s.len() == f.len(), "line count changed")?;
    let mut control = 0;
    for (a, b) in s.iter().zip(&f) {
        if !token.is_match(a) {
            control += 1;
            check(a == b, format!("control line changed: {a:?}"))?;
        }
    }
    for name in MODE3_PLACEHOLDERS {
        let mut partial = attrs.clone();
        partial.remove(name);
        check(
            fill_mode3(&partial) == Err(PromptError::MissingAttribute(vec![name.to_string()])),
            format!("missing {name} not reported"),
        )?;
    }
    Ok(format!("{control} control lines identical, all 30 missing fields reported by name"))
}

fn manifest_chain() -> Outcome {
    let corpus = corpus_of(&common::corpus(5, 3));
    let mut chain = Vec::new();
    for phase in Phase::ALL {
        let mut cfg = PhaseConfig::new(phase);
        cfg.pair_count = 10_000;
        let m = build_manifest(&corpus, &cfg, &BuildOptions::default()).map_err(|e| e.to_string())?;
        check(m.records.len() == 5 && m.header.truncated, "pair count not clamped")?;
        check(duplicate_skin_ids(&m.records).is_empty(), "duplicate skin id")?;
        chain.push(m.header.init_adapter.unwrap_or_else(|| "none".into()));
    }
    check(chain == ["none", "phase1", "phase2"], format!("chain {chain:?}"))?;
    Ok(format!("chain {}", chain.join(" -> ")))
}

fn cover_crop() -> Outcome {
    let probe = |w: u32, h: u32| RgbImage::from_fn(w, h, |x, y| [(x % 256) as u8, (y % 256) as u8, ((x / 256) * 16 + y / 256) as u8]);
    let id = probe(512, 512);
    check(cover_center_crop(&id, 512) == id, "512 not identity")?;

    check(cover_dims(1024, 768, 512) == (683, 512), "1024x768 dims")?;
    let src = probe(1024, 768);
    let out = cover_center_crop(&src, 512);
    for y in 0..512 {
        for x in 0..512 {
            let sx = (2 * (85 + x) + 1) * 1024 / (2 * 683);
            let sy = (2 * y + 1) * 768 / 1024;
            check(out.get(x, y) == src.get(sx, sy), format!("1024x768 at ({x}, {y})"))?;
        }
    }

    check(cover_dims(64, 512, 512) == (512, 4096), "64x512 dims")?;
    let src = probe(64, 512);
    let out = cover_center_crop(&src, 512);
    for y in 0..512 {
        for x in 0..512 {
            check(out.get(x, y) == src.get(x / 8, (1792 + y) / 8), format!("64x512 at ({x}, {y})"))?;
        }
    }
    Ok("identity, 683x512 cols [85,597), 512x4096 rows [1792,2304)".into())
}

#[test]
fn acceptance() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("round-trip exactness", round_trip()),
        ("upscale/downsample inverse", upscale_inverse()),
    ];
    let records = phase3_records(&large_corpus(10_000));
    match &records {
        Ok(r) => {
            results.push(("camera constants", camera_constants(r)));
            results.push(("jitter rate", jitter_rate(r)));
        }
        Err(e) => {
            results.push(("camera constants", Err(e.clone())));
            results.push(("jitter rate", Err(e.clone())));
        }
    }
    results.extend([
        ("dual-panel structure", dual_panel()),
        ("caption oracle", caption_oracle()),
        ("determinism under parallelism", parallel_determinism()),
        ("mode-3 fill", mode3_fill()),
        ("manifest curriculum chain", manifest_chain()),
        ("cover_center_crop arithmetic", cover_crop()),
    ]);

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
