//! Grayscale rasters, binary masks and the shared pixel-level operations
//! (decoding, mean intensity, dark-foreground binarization, histogram statistics).

mod pgm;
mod stats;

pub use pgm::{decode_pgm, encode_pgm};
pub use stats::{histogram_stats, HistogramStats, ZERO_CLAMP_EPSILON};

use crate::error::{Error, Result};

/// 8-bit grayscale raster stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} image needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    /// Copies out the pixels of `rect`.
    pub fn crop(&self, rect: Rect) -> Result<GrayImage> {
        if rect.x1 > self.width || rect.y1 > self.height || rect.is_empty() {
            return Err(Error::Dimension(format!(
                "crop window {rect:?} does not fit a {}x{} image",
                self.width, self.height
            )));
        }
        GrayImage::from_fn(rect.width(), rect.height(), |x, y| {
            self.get(rect.x0 + x, rect.y0 + y)
        })
    }
}

/// Half-open axis-aligned pixel window `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn width(&self) -> usize {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> usize {
        self.y1.saturating_sub(self.y0)
    }

    pub fn is_empty(&self) -> bool {
        self.width() == 0 || self.height() == 0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

/// Row-major boolean raster; `true` marks foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} mask needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Renders the mask as a 0/255 image for debug dumps.
    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }
}

/// Encodings accepted by [`load_gray`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
    Bmp,
    Jpeg,
    Gif,
}

impl ImageFormat {
    /// Picks a format from a file extension (case-insensitive).
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "pgm" => Some(Self::Pgm),
            "png" => Some(Self::Png),
            "bmp" => Some(Self::Bmp),
            "jpg" | "jpeg" => Some(Self::Jpeg),
            "gif" => Some(Self::Gif),
            _ => None,
        }
    }

    /// Sniffs the format from the leading magic bytes.
    pub fn detect(bytes: &[u8]) -> Option<Self> {
        match bytes {
            [b'P', b'5', ..] => Some(Self::Pgm),
            [0x89, b'P', b'N', b'G', ..] => Some(Self::Png),
            [b'B', b'M', ..] => Some(Self::Bmp),
            [0xFF, 0xD8, 0xFF, ..] => Some(Self::Jpeg),
            [b'G', b'I', b'F', b'8', ..] => Some(Self::Gif),
            _ => None,
        }
    }
}

/// BT.601 luma with round-half-up, evaluated in integers so it is exact.
#[inline]
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000) as u8
}

/// Decodes `bytes` into a grayscale raster, converting color with [`luminance`].
pub fn load_gray(bytes: &[u8], format: ImageFormat) -> Result<GrayImage> {
    let external = match format {
        ImageFormat::Pgm => return decode_pgm(bytes),
        ImageFormat::Png => image::ImageFormat::Png,
        ImageFormat::Bmp => image::ImageFormat::Bmp,
        ImageFormat::Jpeg => image::ImageFormat::Jpeg,
        ImageFormat::Gif => image::ImageFormat::Gif,
    };
    let decoded = image::load_from_memory_with_format(bytes, external).map_err(|e| match e {
        image::ImageError::Unsupported(u) => Error::UnsupportedFormat(u.to_string()),
        // the external decoders do not report byte positions
        other => Error::Decode {
            offset: 0,
            reason: other.to_string(),
        },
    })?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb.pixels().map(|p| luminance(p[0], p[1], p[2])).collect();
    GrayImage::new(w as usize, h as usize, data)
}

/// Decodes with the format sniffed from magic bytes.
pub fn load_gray_auto(bytes: &[u8]) -> Result<GrayImage> {
    let format = ImageFormat::detect(bytes)
        .ok_or_else(|| Error::UnsupportedFormat("unrecognized magic bytes".to_string()))?;
    load_gray(bytes, format)
}

/// Arithmetic mean of all intensities.
pub fn mean_intensity(img: &GrayImage) -> f64 {
    let sum: u64 = img.data.iter().map(|&v| v as u64).sum();
    sum as f64 / img.data.len() as f64
}

/// Marks every pixel with intensity `<= threshold` as foreground.
pub fn binarize_dark(img: &GrayImage, threshold: f64) -> BitMask {
    BitMask {
        width: img.width,
        height: img.height,
        bits: img.data.iter().map(|&v| v as f64 <= threshold).collect(),
    }
}
