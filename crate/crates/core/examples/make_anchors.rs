//! Regenerates the bundled reference anchors in `resources/anchors/`:
//! a layout reference (default dual-panel framing of a neutral skin) and a
//! pose anchor (flat silhouette of the same framing).
//!
//! cargo run -p skinkit --example make_anchors

use std::path::Path;

use skinkit::atlas::{BodyPart, ModelVariant, SkinAtlas};
use skinkit::render::{Camera, FaceShading, PanelLayout, PreviewRenderer, RenderStyle};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("resources/anchors");
    std::fs::create_dir_all(&dir).expect("create anchors dir");

    let neutral = SkinAtlas::from_fn(ModelVariant::Classic, |region, _, _| {
        if region.is_overlay() {
            return [0, 0, 0, 0];
        }
        match region.part() {
            BodyPart::Head => [196, 196, 196, 255],
            BodyPart::Body => [150, 150, 150, 255],
            BodyPart::RightArm | BodyPart::LeftArm => [172, 172, 172, 255],
            BodyPart::RightLeg | BodyPart::LeftLeg => [120, 120, 120, 255],
        }
    });
    let layout = PanelLayout::default();
    let camera = Camera::default();
    let shaded = PreviewRenderer::default().render_dual_panel(&neutral, &layout, &camera);
    std::fs::write(dir.join("layout_reference.png"), shaded.encode_png().unwrap()).unwrap();

    let dark = SkinAtlas::from_fn(ModelVariant::Classic, |region, _, _| {
        if region.is_overlay() {
            [0, 0, 0, 0]
        } else {
            [40, 40, 40, 255]
        }
    });
    let flat = PreviewRenderer::new(RenderStyle {
        shading: FaceShading::flat(),
        ..RenderStyle::default()
    });
    let silhouette = flat.render_dual_panel(&dark, &layout, &camera);
    std::fs::write(dir.join("pose_anchor.png"), silhouette.encode_png().unwrap()).unwrap();
    println!("wrote anchors to {}", dir.display());
}
