//! Square 8-bit rasters and their PNG persistence.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

/// A square single-channel 8-bit raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    side: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(side: usize, pixels: Vec<u8>) -> Result<Self> {
        if side < 2 {
            return Err(Error::BadParameter(format!("raster side {side} < 2")));
        }
        if pixels.len() != side * side {
            return Err(Error::BadParameter(format!(
                "{} pixels for a {side}x{side} raster",
                pixels.len()
            )));
        }
        Ok(Self { side, pixels })
    }

    pub fn filled(side: usize, value: u8) -> Result<Self> {
        Self::new(side, vec![value; side * side])
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.pixels[r * self.side..(r + 1) * self.side]
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.side + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.side + col] = value;
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        encode_png(self.side, png::ColorType::Grayscale, &self.pixels)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_png()?)?;
        Ok(())
    }
}

/// Three square planes of equal side, stored separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub red: GrayImage,
    pub green: GrayImage,
    pub blue: GrayImage,
}

impl RgbImage {
    pub fn merge(red: GrayImage, green: GrayImage, blue: GrayImage) -> Result<Self> {
        if red.side() != green.side() || green.side() != blue.side() {
            return Err(Error::BadParameter("planes differ in size".into()));
        }
        Ok(Self { red, green, blue })
    }

    pub fn side(&self) -> usize {
        self.red.side()
    }

    pub fn planes(&self) -> [&GrayImage; 3] {
        [&self.red, &self.green, &self.blue]
    }

    pub fn planes_mut(&mut self) -> [&mut GrayImage; 3] {
        [&mut self.red, &mut self.green, &mut self.blue]
    }

    /// Interleaved R,G,B bytes.
    pub fn interleaved(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.red.pixels().len() * 3);
        for ((r, g), b) in self
            .red
            .pixels()
            .iter()
            .zip(self.green.pixels())
            .zip(self.blue.pixels())
        {
            out.extend_from_slice(&[*r, *g, *b]);
        }
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        encode_png(self.side(), png::ColorType::Rgb, &self.interleaved())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_png()?)?;
        Ok(())
    }
}

/// A decoded PNG: either one plane or three.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Raster {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl Raster {
    /// The plane carrying the waveform: the image itself, or its green plane.
    pub fn waveform_plane(&self) -> &GrayImage {
        match self {
            Raster::Gray(g) => g,
            Raster::Rgb(rgb) => &rgb.green,
        }
    }

    pub fn into_rgb(self) -> Result<RgbImage> {
        match self {
            Raster::Rgb(rgb) => Ok(rgb),
            Raster::Gray(_) => Err(Error::Png("expected an RGB image".into())),
        }
    }
}

fn encode_png(side: usize, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, side as u32, side as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Balanced);
        let mut writer = enc.write_header()?;
        writer.write_image_data(data)?;
        writer.finish()?;
    }
    Ok(out)
}

/// Decodes an 8-bit square grayscale or RGB PNG without alpha.
pub fn decode_png(bytes: &[u8]) -> Result<Raster> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info()?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Png(format!("unsupported bit depth {:?}", info.bit_depth)));
    }
    if info.width != info.height {
        return Err(Error::Png(format!(
            "image is {}x{}, expected square",
            info.width, info.height
        )));
    }
    let side = info.width as usize;
    buf.truncate(info.buffer_size());
    match info.color_type {
        png::ColorType::Grayscale => Ok(Raster::Gray(GrayImage::new(side, buf)?)),
        png::ColorType::Rgb => {
            let mut planes = [
                Vec::with_capacity(side * side),
                Vec::with_capacity(side * side),
                Vec::with_capacity(side * side),
            ];
            for px in buf.chunks_exact(3) {
                for (plane, v) in planes.iter_mut().zip(px) {
                    plane.push(*v);
                }
            }
            let [r, g, b] = planes;
            Ok(Raster::Rgb(RgbImage::merge(
                GrayImage::new(side, r)?,
                GrayImage::new(side, g)?,
                GrayImage::new(side, b)?,
            )?))
        }
        other => Err(Error::Png(format!("unsupported color type {other:?}"))),
    }
}

pub fn load_png(path: impl AsRef<Path>) -> Result<Raster> {
    decode_png(&fs::read(path)?)
}
