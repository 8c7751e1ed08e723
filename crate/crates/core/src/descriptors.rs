//! Descriptor frontends and descriptor-space transforms.

use std::path::Path;

use ndarray::{s, Array2, ArrayView2, Axis};

use crate::dataset::DescriptorSequence;
use crate::error::{argument, Error, Result};

/// Patches whose standard deviation falls below this are zeroed.
pub const PATCH_STD_FLOOR: f64 = 1e-8;

/// Returns a copy with every nonzero row scaled to unit Euclidean norm.
///
/// Zero rows stay zero; the result is flagged normalized only when no zero
/// row exists.
pub fn l2_normalize(seq: &DescriptorSequence) -> DescriptorSequence {
    let (data, all_nonzero) = l2_normalize_rows(seq.to_f64());
    let data = data.mapv(|v| v as f32);
    DescriptorSequence::new(data, all_nonzero).expect("unit rows stay finite")
}

/// Normalizes rows in place; returns whether every row was nonzero.
pub(crate) fn l2_normalize_rows(mut data: Array2<f64>) -> (Array2<f64>, bool) {
    let mut all_nonzero = true;
    for mut row in data.axis_iter_mut(Axis(0)) {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        } else {
            all_nonzero = false;
        }
    }
    (data, all_nonzero)
}

/// Thumbnail size and patch size for the patch-normalized frontend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThumbnailConfig {
    pub width: usize,
    pub height: usize,
    pub patch: usize,
}

impl Default for ThumbnailConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 32,
            patch: 8,
        }
    }
}

impl ThumbnailConfig {
    pub fn new(width: usize, height: usize, patch: usize) -> Result<Self> {
        if width == 0 || height == 0 || patch == 0 {
            return Err(argument("thumbnail dimensions must be positive"));
        }
        if !width.is_multiple_of(patch) || !height.is_multiple_of(patch) {
            return Err(argument(format!(
                "thumbnail {width}x{height} is not divisible into {patch}x{patch} patches"
            )));
        }
        Ok(Self {
            width,
            height,
            patch,
        })
    }

    pub fn descriptor_len(&self) -> usize {
        self.width * self.height
    }
}

/// Centered region of an image whose sides are integer multiples of the
/// thumbnail's sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropRegion {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
    pub cropped: bool,
}

/// Largest centered region of an `height×width` image that area-averages
/// exactly onto the thumbnail grid.
pub fn crop_region(height: usize, width: usize, cfg: &ThumbnailConfig) -> Result<CropRegion> {
    if height < cfg.height || width < cfg.width {
        return Err(argument(format!(
            "image {width}x{height} is smaller than the {}x{} thumbnail",
            cfg.width, cfg.height
        )));
    }
    let crop_h = height / cfg.height * cfg.height;
    let crop_w = width / cfg.width * cfg.width;
    Ok(CropRegion {
        top: (height - crop_h) / 2,
        left: (width - crop_w) / 2,
        height: crop_h,
        width: crop_w,
        cropped: crop_h != height || crop_w != width,
    })
}

/// SeqSLAM-style descriptor: area-averaged thumbnail with every patch
/// standardized to zero mean and unit population variance.
pub fn thumbnail_descriptor(image: ArrayView2<'_, f64>, cfg: &ThumbnailConfig) -> Result<Vec<f32>> {
    let (h, w) = image.dim();
    if h == 0 || w == 0 {
        return Err(argument("empty image"));
    }
    let crop = crop_region(h, w, cfg)?;
    let region = image.slice(s![
        crop.top..crop.top + crop.height,
        crop.left..crop.left + crop.width
    ]);
    let (fy, fx) = (crop.height / cfg.height, crop.width / cfg.width);
    let area = (fy * fx) as f64;
    let mut thumb = Array2::<f64>::zeros((cfg.height, cfg.width));
    for ((y, x), v) in thumb.indexed_iter_mut() {
        *v = region
            .slice(s![y * fy..(y + 1) * fy, x * fx..(x + 1) * fx])
            .sum()
            / area;
    }

    let p = cfg.patch;
    for py in (0..cfg.height).step_by(p) {
        for px in (0..cfg.width).step_by(p) {
            let mut patch = thumb.slice_mut(s![py..py + p, px..px + p]);
            let count = (p * p) as f64;
            let mean = patch.sum() / count;
            let var = patch.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
            let std = var.sqrt();
            if std < PATCH_STD_FLOOR {
                patch.fill(0.0);
            } else {
                patch.mapv_inplace(|v| (v - mean) / std);
            }
        }
    }
    Ok(thumb.iter().map(|&v| v as f32).collect())
}

/// Reads an 8-bit binary PGM (P5) into an intensity grid.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let image_err = |message: String| Error::Image {
        path: path.to_path_buf(),
        message,
    };
    let bytes = std::fs::read(path)?;
    if !bytes.starts_with(b"P5") {
        return Err(image_err("not a binary (P5) PGM".into()));
    }
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Pnm)
        .map_err(|e| image_err(e.to_string()))?;
    let image::DynamicImage::ImageLuma8(gray) = img else {
        return Err(image_err("only 8-bit grayscale PGM is supported".into()));
    };
    let (w, h) = gray.dimensions();
    Ok(Array2::from_shape_fn((h as usize, w as usize), |(y, x)| {
        f64::from(gray.get_pixel(x as u32, y as u32).0[0])
    }))
}

/// Window length for the Delta Descriptors transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeltaConfig {
    window: usize,
}

impl DeltaConfig {
    pub fn new(window: usize) -> Result<Self> {
        if window < 2 || !window.is_multiple_of(2) {
            return Err(argument(format!(
                "delta window must be even and at least 2, got {window}"
            )));
        }
        Ok(Self { window })
    }

    /// Smallest valid window covering a sequence length of `d_s` frames.
    pub fn for_sequence_length(d_s: usize) -> Self {
        let window = d_s.max(2).div_ceil(2) * 2;
        Self { window }
    }

    pub fn window(&self) -> usize {
        self.window
    }
}

/// Delta descriptors plus the original frame index of each output row.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSequence {
    pub descriptors: DescriptorSequence,
    pub frames: Vec<usize>,
}

/// Difference between the mean of the next `l/2` frames and the mean of the
/// previous `l/2` frames, centered on every frame with full support, then
/// L2-normalized. A sequence of `T` frames yields `T − l + 1` rows mapped to
/// frames `l/2 ..= T − l/2`.
pub fn delta_transform(seq: &DescriptorSequence, cfg: &DeltaConfig) -> Result<DeltaSequence> {
    let (data, frames) = delta_rows(seq, cfg)?;
    let (data, all_nonzero) = l2_normalize_rows(data);
    let descriptors = DescriptorSequence::new(data.mapv(|v| v as f32), all_nonzero)?;
    Ok(DeltaSequence {
        descriptors,
        frames,
    })
}

/// Unnormalized delta rows.
pub(crate) fn delta_rows(
    seq: &DescriptorSequence,
    cfg: &DeltaConfig,
) -> Result<(Array2<f64>, Vec<usize>)> {
    let l = cfg.window;
    let half = l / 2;
    let t_len = seq.len();
    if t_len < l {
        return Err(argument(format!(
            "delta window {l} needs at least {l} frames, got {t_len}"
        )));
    }
    let frames: Vec<usize> = (half..=t_len - half).collect();
    let mut out = Array2::<f64>::zeros((frames.len(), seq.dim()));
    let data = seq.data();
    let window_mean = |from: usize, dst: &mut [f64]| {
        dst.fill(0.0);
        for t in from..from + half {
            for (d, &v) in dst.iter_mut().zip(data.row(t).iter()) {
                *d += f64::from(v);
            }
        }
        for d in dst.iter_mut() {
            *d /= half as f64;
        }
    };
    let mut ahead = vec![0.0; seq.dim()];
    let mut behind = vec![0.0; seq.dim()];
    for (row, &t) in frames.iter().enumerate() {
        window_mean(t, &mut ahead);
        window_mean(t - half, &mut behind);
        for (j, o) in out.row_mut(row).iter_mut().enumerate() {
            *o = ahead[j] - behind[j];
        }
    }
    Ok((out, frames))
}
