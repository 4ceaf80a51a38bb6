use crate::error::{Error, Result};
use crate::types::{ProbMap, RgbImage};

/// Square patches laid out at a fixed stride, the last row and column pulled
/// back so they end exactly on the image border.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchGrid {
    pub patch_size: usize,
    pub overlap: usize,
    /// Top-left corners, row-major (y outer, x inner).
    pub origins: Vec<(usize, usize)>,
}

impl PatchGrid {
    pub fn stride(&self) -> usize {
        self.patch_size - self.overlap
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }
}

fn axis_origins(dim: usize, patch: usize, stride: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut o = 0;
    loop {
        out.push(o);
        if o + patch >= dim {
            break;
        }
        o += stride;
        if o + patch > dim {
            o = dim - patch;
        }
    }
    out
}

pub fn tile(width: usize, height: usize, patch_size: usize, overlap: usize) -> Result<PatchGrid> {
    if patch_size == 0 || patch_size > width || patch_size > height {
        return Err(Error::PatchTooLarge {
            patch: patch_size,
            width,
            height,
        });
    }
    if overlap >= patch_size {
        return Err(Error::OutOfRange(format!(
            "overlap {overlap} must be smaller than patch size {patch_size}"
        )));
    }
    let stride = patch_size - overlap;
    let xs = axis_origins(width, patch_size, stride);
    let ys = axis_origins(height, patch_size, stride);
    let origins = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .collect();
    Ok(PatchGrid {
        patch_size,
        overlap,
        origins,
    })
}

/// Cuts a `patch_w` x `patch_h` window at `origin`.
pub fn crop(map: &ProbMap, origin: (usize, usize), patch_w: usize, patch_h: usize) -> Result<ProbMap> {
    let (ox, oy) = origin;
    if ox + patch_w > map.width || oy + patch_h > map.height {
        return Err(Error::OutOfRange(format!(
            "patch {patch_w}x{patch_h} at ({ox}, {oy}) exceeds {}x{}",
            map.width, map.height
        )));
    }
    let mut values = Vec::with_capacity(patch_w * patch_h);
    for y in oy..oy + patch_h {
        let row = y * map.width;
        values.extend_from_slice(&map.values[row + ox..row + ox + patch_w]);
    }
    Ok(ProbMap {
        width: patch_w,
        height: patch_h,
        values,
    })
}

/// RGB counterpart of [`crop`].
pub fn crop_rgb(img: &RgbImage, origin: (usize, usize), patch_w: usize, patch_h: usize) -> Result<RgbImage> {
    let (ox, oy) = origin;
    if ox + patch_w > img.width || oy + patch_h > img.height {
        return Err(Error::OutOfRange(format!(
            "patch {patch_w}x{patch_h} at ({ox}, {oy}) exceeds {}x{}",
            img.width, img.height
        )));
    }
    let mut samples = Vec::with_capacity(patch_w * patch_h * 3);
    for y in oy..oy + patch_h {
        let row = (y * img.width + ox) * 3;
        samples.extend_from_slice(&img.samples[row..row + patch_w * 3]);
    }
    Ok(RgbImage {
        width: patch_w,
        height: patch_h,
        samples,
        illumination: img.illumination,
    })
}

/// Averages overlapping patches back into a `width` x `height` map.
pub fn stitch(patches: &[((usize, usize), ProbMap)], width: usize, height: usize) -> Result<ProbMap> {
    let mut sum = vec![0.0f64; width * height];
    let mut count = vec![0u32; width * height];
    for ((ox, oy), patch) in patches {
        if ox + patch.width > width || oy + patch.height > height {
            return Err(Error::OutOfRange(format!(
                "patch {}x{} at ({ox}, {oy}) exceeds {width}x{height}",
                patch.width, patch.height
            )));
        }
        for py in 0..patch.height {
            let dst = (oy + py) * width + ox;
            let src = py * patch.width;
            for px in 0..patch.width {
                sum[dst + px] += patch.values[src + px];
                count[dst + px] += 1;
            }
        }
    }
    let mut values = Vec::with_capacity(width * height);
    for (i, (s, &c)) in sum.iter().zip(&count).enumerate() {
        if c == 0 {
            return Err(Error::Uncovered {
                x: i % width,
                y: i / width,
            });
        }
        values.push(s / f64::from(c));
    }
    Ok(ProbMap {
        width,
        height,
        values,
    })
}
