//! Minimal owned pixel buffers.
//!
//! Both image types are row-major with (0,0) at the top-left. They are kept
//! deliberately small: everything in this crate works on 8-bit channels and
//! nearest-neighbour sampling, so there is no need for a generic image trait.

use std::io::Cursor;

use image::{ImageFormat, ImageReader};
use thiserror::Error;

pub type Rgb = [u8; 3];
pub type Rgba = [u8; 4];

pub const WHITE: Rgb = [255, 255, 255];

#[derive(Debug, Error)]
pub enum PngError {
    #[error("DecodeError: {0}")]
    Decode(String),
    #[error("EncodeError: {0}")]
    Encode(String),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ImageBuf<P> {
    width: u32,
    height: u32,
    pixels: Vec<P>,
}

pub type RgbImage = ImageBuf<Rgb>;
pub type RgbaImage = ImageBuf<Rgba>;

impl<P: Copy> ImageBuf<P> {
    /// Creates an image filled with `fill`.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(width: u32, height: u32, fill: P) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        Self {
            width,
            height,
            pixels: vec![fill; width as usize * height as usize],
        }
    }

    /// Wraps a row-major pixel vector. Returns `None` when the length does
    /// not match or a dimension is zero.
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<P>) -> Option<Self> {
        if width == 0 || height == 0 || pixels.len() != width as usize * height as usize {
            return None;
        }
        Some(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> P) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> P {
        self.pixels[self.index(x, y)]
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, p: P) {
        let i = self.index(x, y);
        self.pixels[i] = p;
    }

    pub fn pixels(&self) -> &[P] {
        &self.pixels
    }

    pub fn map<Q: Copy>(&self, f: impl Fn(P) -> Q) -> ImageBuf<Q> {
        ImageBuf {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    /// Copies `src` into `self` with its top-left corner at (`x0`, `y0`).
    /// Parts falling outside `self` are clipped.
    pub fn blit(&mut self, src: &Self, x0: u32, y0: u32) {
        for y in 0..src.height {
            let ty = y0 + y;
            if ty >= self.height {
                break;
            }
            for x in 0..src.width {
                let tx = x0 + x;
                if tx >= self.width {
                    break;
                }
                self.put(tx, ty, src.get(x, y));
            }
        }
    }

    pub fn crop(&self, x0: u32, y0: u32, width: u32, height: u32) -> Self {
        assert!(
            x0 + width <= self.width && y0 + height <= self.height,
            "crop window out of bounds"
        );
        Self::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y))
    }

    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| {
            self.get(self.width - 1 - x, y)
        })
    }

    /// Nearest-neighbour resize. Output pixel (x, y) samples the source pixel
    /// containing the point `((x + 0.5) * w / W, (y + 0.5) * h / H)`.
    pub fn resize_nearest(&self, width: u32, height: u32) -> Self {
        let sw = self.width as u64;
        let sh = self.height as u64;
        let (dw, dh) = (width as u64, height as u64);
        Self::from_fn(width, height, |x, y| {
            // floor(((2x + 1) * sw) / (2 * dw)) keeps this in exact integer math
            let sx = ((2 * x as u64 + 1) * sw) / (2 * dw);
            let sy = ((2 * y as u64 + 1) * sh) / (2 * dh);
            self.get(sx.min(sw - 1) as u32, sy.min(sh - 1) as u32)
        })
    }
}

impl<P> std::fmt::Debug for ImageBuf<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImageBuf")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl RgbImage {
    pub fn to_rgba(&self) -> RgbaImage {
        self.map(|[r, g, b]| [r, g, b, 255])
    }

    pub fn as_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, PngError> {
        encode(
            self.width,
            self.height,
            self.as_bytes(),
            image::ExtendedColorType::Rgb8,
        )
    }
}

impl RgbaImage {
    pub fn as_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, PngError> {
        encode(
            self.width,
            self.height,
            self.as_bytes(),
            image::ExtendedColorType::Rgba8,
        )
    }
}

fn encode(
    width: u32,
    height: u32,
    raw: Vec<u8>,
    color: image::ExtendedColorType,
) -> Result<Vec<u8>, PngError> {
    use image::ImageEncoder;
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(&raw, width, height, color)
        .map_err(|e| PngError::Encode(e.to_string()))?;
    Ok(out)
}

/// Decodes any PNG (palette, grey, 16-bit, ...) into 8-bit RGBA.
pub fn decode_png_rgba(data: &[u8]) -> Result<RgbaImage, PngError> {
    let img = ImageReader::with_format(Cursor::new(data), ImageFormat::Png)
        .decode()
        .map_err(|e| PngError::Decode(e.to_string()))?
        .into_rgba8();
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0).collect();
    RgbaImage::from_pixels(w, h, pixels).ok_or_else(|| PngError::Decode("empty image".into()))
}

/// Decodes a PNG into RGB, compositing any alpha over white.
pub fn decode_png_rgb(data: &[u8]) -> Result<RgbImage, PngError> {
    Ok(decode_png_rgba(data)?.map(over_white))
}

/// Alpha-over-white with rounding: `round(c·a/255 + 255·(255−a)/255)`.
#[inline]
pub fn over_white([r, g, b, a]: Rgba) -> Rgb {
    let a = a as u32;
    let blend = |c: u8| ((c as u32 * a + 255 * (255 - a) + 127) / 255) as u8;
    [blend(r), blend(g), blend(b)]
}
