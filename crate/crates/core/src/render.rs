//! Cube-based orthographic preview renderer.
//!
//! World space is measured in texels with +y up and the character facing
//! +z, feet at y = 0. The character's right side is at −x. A camera with
//! yaw θ and pitch φ sits in direction `(cos φ sin θ, sin φ, cos φ cos θ)`
//! from the model, so positive yaw shows the front and the character's left
//! side ("front-right" from the viewer) and positive pitch looks down.
//!
//! Every face of every cuboid is an affine parallelogram on screen; pixels
//! are filled by inverting that map at pixel centres and resolved with a
//! z-buffer. Faces are drawn in a fixed order and depth ties keep the
//! earlier face, so output is a pure function of the inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{BodyPart, Face, Layer, ModelVariant, Rect, RegionId, SkinAtlas};
use crate::raster::{Rgb, RgbImage, WHITE};
use crate::rng::SplitMix64;

pub const DEFAULT_YAW: f64 = 24.0;
pub const DEFAULT_PITCH: f64 = 30.0;
/// Back panel yaw offset.
pub const BACK_YAW_OFFSET: f64 = 180.0;
pub const DEFAULT_SCALE: f64 = 13.0;
pub const DEFAULT_OVERLAY_INFLATION: f64 = 0.5;
/// Model point mapped to the centre of every view.
const ANCHOR: [f64; 3] = [0.0, 16.0, 0.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("InvalidCamera: {0}")]
    Camera(String),
    #[error("InvalidJitter: {0}")]
    Jitter(String),
    #[error("InvalidLayout: {0}")]
    Layout(String),
}

impl RenderError {
    pub fn name(&self) -> &'static str {
        match self {
            RenderError::Camera(_) => "InvalidCamera",
            RenderError::Jitter(_) => "InvalidJitter",
            RenderError::Layout(_) => "InvalidLayout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Camera {
    /// Degrees about the vertical axis.
    pub yaw: f64,
    /// Degrees of downward tilt, in (−90, 90).
    pub pitch: f64,
    /// Pixels per texel.
    pub scale: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            yaw: DEFAULT_YAW,
            pitch: DEFAULT_PITCH,
            scale: DEFAULT_SCALE,
        }
    }
}

impl Camera {
    pub fn new(yaw: f64, pitch: f64, scale: f64) -> Result<Self, RenderError> {
        let cam = Self { yaw, pitch, scale };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !self.yaw.is_finite() {
            return Err(RenderError::Camera(format!("yaw {} is not finite", self.yaw)));
        }
        if !(self.pitch > -90.0 && self.pitch < 90.0) {
            return Err(RenderError::Camera(format!(
                "pitch {} outside (-90, 90)",
                self.pitch
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(RenderError::Camera(format!("scale {} must be > 0", self.scale)));
        }
        Ok(())
    }

    /// The same camera turned around to face the character's back.
    pub fn back(&self) -> Camera {
        Camera {
            yaw: self.yaw + BACK_YAW_OFFSET,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JitterParams {
    /// Probability of keeping the base camera.
    pub keep_prob: f64,
    /// Maximum absolute yaw/pitch offset in degrees.
    pub delta: f64,
}

impl Default for JitterParams {
    fn default() -> Self {
        Self {
            keep_prob: 0.7,
            delta: 10.0,
        }
    }
}

impl JitterParams {
    pub fn validate(&self) -> Result<(), RenderError> {
        if !(0.0..=1.0).contains(&self.keep_prob) {
            return Err(RenderError::Jitter(format!(
                "keep_prob {} outside [0, 1]",
                self.keep_prob
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(RenderError::Jitter(format!("delta {} must be >= 0", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitteredCamera {
    pub camera: Camera,
    pub jittered: bool,
}

/// Draws, in order: keep decision, yaw offset, pitch offset. Offsets are
/// uniform in [−Δ, Δ).
pub fn jitter_camera(base: &Camera, params: &JitterParams, seed: u64) -> JitteredCamera {
    let mut rng = SplitMix64::new(seed);
    if rng.next_f64() < params.keep_prob {
        return JitteredCamera {
            camera: *base,
            jittered: false,
        };
    }
    let dyaw = rng.uniform(-params.delta, params.delta);
    let dpitch = rng.uniform(-params.delta, params.delta);
    JitteredCamera {
        camera: Camera {
            yaw: base.yaw + dyaw,
            pitch: base.pitch + dpitch,
            scale: base.scale,
        },
        jittered: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PanelLayout {
    pub panel_width: u32,
    pub panel_height: u32,
    pub gap: u32,
    pub margin: u32,
    pub background: Rgb,
}

impl Default for PanelLayout {
    fn default() -> Self {
        // 2·240 + 16 + 2·8 = 512 and 496 + 2·8 = 512: a square canvas that
        // the cover-and-centre crop leaves untouched.
        Self {
            panel_width: 240,
            panel_height: 496,
            gap: 16,
            margin: 8,
            background: WHITE,
        }
    }
}

impl PanelLayout {
    pub fn canvas_size(&self) -> (u32, u32) {
        (
            2 * self.panel_width + self.gap + 2 * self.margin,
            self.panel_height + 2 * self.margin,
        )
    }

    /// Top-left corners of the front (left) and back (right) panels.
    pub fn panel_origins(&self) -> [(u32, u32); 2] {
        [
            (self.margin, self.margin),
            (self.margin + self.panel_width + self.gap, self.margin),
        ]
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.panel_width == 0 || self.panel_height == 0 {
            return Err(RenderError::Layout("panel dimensions must be >= 1".into()));
        }
        Ok(())
    }
}

/// Flat per-face brightness multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaceShading {
    pub top: f64,
    pub front_back: f64,
    pub sides: f64,
    pub bottom: f64,
}

impl Default for FaceShading {
    fn default() -> Self {
        Self {
            top: 1.0,
            front_back: 0.9,
            sides: 0.8,
            bottom: 0.7,
        }
    }
}

impl FaceShading {
    pub fn flat() -> Self {
        Self {
            top: 1.0,
            front_back: 1.0,
            sides: 1.0,
            bottom: 1.0,
        }
    }

    fn factor(&self, face: Face) -> f64 {
        match face {
            Face::Top => self.top,
            Face::Bottom => self.bottom,
            Face::Front | Face::Back => self.front_back,
            Face::Left | Face::Right => self.sides,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderStyle {
    pub shading: FaceShading,
    /// Overlay cuboids grow by this many texels on every side.
    pub overlay_inflation: f64,
    pub background: Rgb,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            shading: FaceShading::default(),
            overlay_inflation: DEFAULT_OVERLAY_INFLATION,
            background: WHITE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid {
    pub region: RegionId,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

/// The standing-pose player model: six base cuboids followed by their six
/// inflated overlay shells.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerGeometry {
    pub cuboids: Vec<Cuboid>,
}

impl PlayerGeometry {
    pub fn new(variant: ModelVariant, overlay_inflation: f64) -> Self {
        let aw = variant.arm_width() as f64;
        let base = |part: BodyPart| -> ([f64; 3], [f64; 3]) {
            match part {
                BodyPart::Head => ([-4.0, 24.0, -4.0], [4.0, 32.0, 4.0]),
                BodyPart::Body => ([-4.0, 12.0, -2.0], [4.0, 24.0, 2.0]),
                BodyPart::RightArm => ([-4.0 - aw, 12.0, -2.0], [-4.0, 24.0, 2.0]),
                BodyPart::LeftArm => ([4.0, 12.0, -2.0], [4.0 + aw, 24.0, 2.0]),
                BodyPart::RightLeg => ([-4.0, 0.0, -2.0], [0.0, 12.0, 2.0]),
                BodyPart::LeftLeg => ([0.0, 0.0, -2.0], [4.0, 12.0, 2.0]),
            }
        };
        let mut cuboids = Vec::with_capacity(12);
        for layer in [Layer::Base, Layer::Overlay] {
            let grow = if layer == Layer::Overlay {
                overlay_inflation
            } else {
                0.0
            };
            for part in BodyPart::ALL {
                let (min, max) = base(part);
                cuboids.push(Cuboid {
                    region: RegionId::new(part, layer),
                    min: min.map(|v| v - grow),
                    max: max.map(|v| v + grow),
                });
            }
        }
        Self { cuboids }
    }
}

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Texture-space parametrisation of one face: the texel at column `s·w`,
/// row `t·h` sits at `origin + s·u + t·v`.
struct FaceFrame {
    origin: Vec3,
    u: Vec3,
    v: Vec3,
    normal: Vec3,
}

fn face_frame(c: &Cuboid, face: Face) -> FaceFrame {
    let [x0, y0, z0] = c.min;
    let [x1, y1, z1] = c.max;
    let (w, h, d) = (x1 - x0, y1 - y0, z1 - z0);
    let (origin, u, v, normal) = match face {
        Face::Front => ([x0, y1, z1], [w, 0.0, 0.0], [0.0, -h, 0.0], [0.0, 0.0, 1.0]),
        Face::Back => ([x1, y1, z0], [-w, 0.0, 0.0], [0.0, -h, 0.0], [0.0, 0.0, -1.0]),
        Face::Right => ([x0, y1, z0], [0.0, 0.0, d], [0.0, -h, 0.0], [-1.0, 0.0, 0.0]),
        Face::Left => ([x1, y1, z1], [0.0, 0.0, -d], [0.0, -h, 0.0], [1.0, 0.0, 0.0]),
        Face::Top => ([x0, y1, z0], [w, 0.0, 0.0], [0.0, 0.0, d], [0.0, 1.0, 0.0]),
        Face::Bottom => ([x0, y0, z1], [w, 0.0, 0.0], [0.0, 0.0, -d], [0.0, -1.0, 0.0]),
    };
    FaceFrame {
        origin,
        u,
        v,
        normal,
    }
}

struct View {
    toward_camera: Vec3,
    right: Vec3,
    up: Vec3,
    scale: f64,
    cx: f64,
    cy: f64,
}

impl View {
    fn new(camera: &Camera, width: u32, height: u32) -> Self {
        // reduce to (-180, 180] so that θ and θ + 360 (and ±θ) hit identical trig inputs
        let mut yaw = camera.yaw.rem_euclid(360.0);
        if yaw > 180.0 {
            yaw -= 360.0;
        }
        let (sy, cy) = yaw.to_radians().sin_cos();
        let (sp, cp) = camera.pitch.to_radians().sin_cos();
        Self {
            toward_camera: [cp * sy, sp, cp * cy],
            right: [cy, 0.0, -sy],
            up: [-sp * sy, cp, -sp * cy],
            scale: camera.scale,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
        }
    }

    fn project_point(&self, p: Vec3) -> [f64; 2] {
        let q = sub(p, ANCHOR);
        [
            self.cx + self.scale * dot(q, self.right),
            self.cy - self.scale * dot(q, self.up),
        ]
    }

    fn project_vector(&self, v: Vec3) -> [f64; 2] {
        [self.scale * dot(v, self.right), -self.scale * dot(v, self.up)]
    }
}

pub struct PreviewRenderer {
    pub style: RenderStyle,
}

impl Default for PreviewRenderer {
    fn default() -> Self {
        Self::new(RenderStyle::default())
    }
}

impl PreviewRenderer {
    pub fn new(style: RenderStyle) -> Self {
        Self { style }
    }

    /// Renders one orthographic view into a `width`×`height` image.
    pub fn render_view(&self, skin: &SkinAtlas, camera: &Camera, width: u32, height: u32) -> RgbImage {
        let mut img = RgbImage::filled(width, height, self.style.background);
        let mut depth = vec![f64::NEG_INFINITY; width as usize * height as usize];
        let view = View::new(camera, width, height);
        let geometry = PlayerGeometry::new(skin.variant(), self.style.overlay_inflation);
        let map = skin.region_map();

        for cuboid in &geometry.cuboids {
            let region = map.region(cuboid.region);
            let cutout = cuboid.region.is_overlay();
            for face in Face::ALL {
                let frame = face_frame(cuboid, face);
                if dot(frame.normal, view.toward_camera) <= 0.0 {
                    continue;
                }
                self.raster_face(
                    skin,
                    region.face(face),
                    &frame,
                    self.style.shading.factor(face),
                    cutout,
                    &view,
                    &mut img,
                    &mut depth,
                );
            }
        }
        img
    }

    #[allow(clippy::too_many_arguments)]
    fn raster_face(
        &self,
        skin: &SkinAtlas,
        tex: Rect,
        frame: &FaceFrame,
        shade: f64,
        cutout: bool,
        view: &View,
        img: &mut RgbImage,
        depth: &mut [f64],
    ) {
        let o = view.project_point(frame.origin);
        let e1 = view.project_vector(frame.u);
        let e2 = view.project_vector(frame.v);
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        if det.abs() < 1e-9 {
            return;
        }
        let d0 = dot(frame.origin, view.toward_camera);
        let du = dot(frame.u, view.toward_camera);
        let dv = dot(frame.v, view.toward_camera);

        let xs = [o[0], o[0] + e1[0], o[0] + e2[0], o[0] + e1[0] + e2[0]];
        let ys = [o[1], o[1] + e1[1], o[1] + e2[1], o[1] + e1[1] + e2[1]];
        let (w, h) = img.dimensions();
        let span = |vals: [f64; 4], limit: u32| -> Option<(u32, u32)> {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // pixel i is a candidate when its centre i + 0.5 lies in [lo, hi]
            let first = (lo - 0.5).ceil().max(0.0);
            let last = (hi - 0.5).floor().min(limit as f64 - 1.0);
            (first <= last).then_some((first as u32, last as u32))
        };
        let (Some((px0, px1)), Some((py0, py1))) = (span(xs, w), span(ys, h)) else {
            return;
        };

        let (tw, th) = (tex.w as f64, tex.h as f64);
        for py in py0..=py1 {
            let qy = py as f64 + 0.5 - o[1];
            for px in px0..=px1 {
                let qx = px as f64 + 0.5 - o[0];
                let s = (qx * e2[1] - qy * e2[0]) / det;
                let t = (e1[0] * qy - e1[1] * qx) / det;
                if !(0.0..1.0).contains(&s) || !(0.0..1.0).contains(&t) {
                    continue;
                }
                let z = d0 + s * du + t * dv;
                let idx = py as usize * w as usize + px as usize;
                if z <= depth[idx] {
                    continue;
                }
                let col = ((s * tw) as u32).min(tex.w - 1);
                let row = ((t * th) as u32).min(tex.h - 1);
                let [r, g, b, a] = skin.get(tex.x + col, tex.y + row);
                if cutout && a == 0 {
                    continue;
                }
                depth[idx] = z;
                let lit = |c: u8| (c as f64 * shade).round().clamp(0.0, 255.0) as u8;
                img.put(px, py, [lit(r), lit(g), lit(b)]);
            }
        }
    }

    /// Front view (base camera) on the left, back view (yaw + 180°) on the
    /// right, pasted onto the layout background.
    pub fn render_dual_panel(&self, skin: &SkinAtlas, layout: &PanelLayout, base_camera: &Camera) -> RgbImage {
        let (cw, ch) = layout.canvas_size();
        let mut canvas = RgbImage::filled(cw, ch, layout.background);
        let renderer = PreviewRenderer::new(RenderStyle {
            background: layout.background,
            ..self.style
        });
        let [front_at, back_at] = layout.panel_origins();
        for (camera, (x, y)) in [(*base_camera, front_at), (base_camera.back(), back_at)] {
            let panel = renderer.render_view(skin, &camera, layout.panel_width, layout.panel_height);
            canvas.blit(&panel, x, y);
        }
        canvas
    }
}

pub fn render_view(skin: &SkinAtlas, camera: &Camera, width: u32, height: u32) -> RgbImage {
    PreviewRenderer::default().render_view(skin, camera, width, height)
}

pub fn render_dual_panel(skin: &SkinAtlas, layout: &PanelLayout, base_camera: &Camera) -> RgbImage {
    PreviewRenderer::default().render_dual_panel(skin, layout, base_camera)
}
