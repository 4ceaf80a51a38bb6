use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use crate::error::{Error, Result};
use crate::types::{code, GrayImage, InstanceMap, RgbImage, TriLabelMap, Validate};

fn encode_png(img: DynamicImage) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    img.write_to(&mut Cursor::new(&mut buf), ImageFormat::Png)?;
    Ok(buf)
}

fn open(path: &Path) -> Result<DynamicImage> {
    let bytes = std::fs::read(path)?;
    Ok(image::load_from_memory(&bytes)?)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_trilabel(map: &TriLabelMap, path: &Path) -> Result<()> {
    map.validate()?;
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(map.width as u32, map.height as u32, map.labels.clone())
            .expect("buffer length checked by validate");
    super::write_atomic(path, &encode_png(DynamicImage::ImageLuma8(buf))?)
}

pub fn read_trilabel(path: &Path) -> Result<TriLabelMap> {
    let img = match open(path)? {
        DynamicImage::ImageLuma8(buf) => buf,
        other => {
            return Err(Error::Format(format!(
                "label map must be 8-bit grayscale, found {:?}",
                other.color()
            )))
        }
    };
    let (width, height) = (img.width() as usize, img.height() as usize);
    let labels = img.into_raw();
    if let Some(i) = labels.iter().position(|&c| c > code::IGNORED) {
        return Err(Error::Format(format!(
            "label value {} at pixel ({}, {}) not in {{0, 1, 2}}",
            labels[i],
            i % width,
            i / width
        )));
    }
    Ok(TriLabelMap {
        width,
        height,
        labels,
    })
}

pub fn write_instances(map: &InstanceMap, path: &Path) -> Result<()> {
    let mut raw = Vec::with_capacity(map.ids.len());
    for &id in &map.ids {
        let id = u16::try_from(id)
            .map_err(|_| Error::Format(format!("instance id {id} exceeds 16 bits")))?;
        raw.push(id);
    }
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(map.width as u32, map.height as u32, raw)
            .ok_or_else(|| Error::Format("instance buffer size mismatch".into()))?;
    super::write_atomic(path, &encode_png(DynamicImage::ImageLuma16(buf))?)
}

/// Reads a 16- or 8-bit grayscale instance map. Ids are compacted to `1..=K`
/// keeping their relative order, so already gap-free maps are unchanged.
pub fn read_instances(path: &Path) -> Result<InstanceMap> {
    let (width, height, ids): (usize, usize, Vec<u32>) = match open(path)? {
        DynamicImage::ImageLuma16(buf) => (
            buf.width() as usize,
            buf.height() as usize,
            buf.into_raw().into_iter().map(u32::from).collect(),
        ),
        DynamicImage::ImageLuma8(buf) => (
            buf.width() as usize,
            buf.height() as usize,
            buf.into_raw().into_iter().map(u32::from).collect(),
        ),
        other => {
            return Err(Error::Format(format!(
                "instance map must be grayscale, found {:?}",
                other.color()
            )))
        }
    };
    let mut present: Vec<u32> = ids.iter().copied().filter(|&id| id > 0).collect();
    present.sort_unstable();
    present.dedup();
    let ids = ids
        .into_iter()
        .map(|id| match id {
            0 => 0,
            _ => present.binary_search(&id).unwrap() as u32 + 1,
        })
        .collect();
    Ok(InstanceMap { width, height, ids })
}

pub fn write_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    img.validate()?;
    let raw: Vec<u8> = img.samples.iter().map(|&v| quantize(v)).collect();
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width as u32, img.height as u32, raw)
            .expect("buffer length checked by validate");
    super::write_atomic(path, &encode_png(DynamicImage::ImageRgb8(buf))?)
}

/// Any color PNG is accepted and converted to 8-bit RGB first.
pub fn read_rgb(path: &Path) -> Result<RgbImage> {
    let buf = open(path)?.to_rgb8();
    let (width, height) = (buf.width() as usize, buf.height() as usize);
    let samples = buf.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect();
    Ok(RgbImage {
        width,
        height,
        samples,
        illumination: [1.0; 3],
    })
}

pub fn write_gray(img: &GrayImage, path: &Path) -> Result<()> {
    img.validate()?;
    let raw: Vec<u8> = img.samples.iter().map(|&v| quantize(v)).collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width as u32, img.height as u32, raw)
            .expect("buffer length checked by validate");
    super::write_atomic(path, &encode_png(DynamicImage::ImageLuma8(buf))?)
}

pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let buf = open(path)?.to_luma8();
    let (width, height) = (buf.width() as usize, buf.height() as usize);
    let samples = buf.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect();
    Ok(GrayImage {
        width,
        height,
        samples,
    })
}
