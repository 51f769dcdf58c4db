//! 2-D scalar image type and shared sampling/filtering helpers.
//!
//! Images are row-major `height x width` arrays of `f32`. Everything that
//! computes statistics accumulates in `f64`; pixel storage stays `f32` so
//! that PFM round-trips are bit-exact.

use ndarray::Array2;

use crate::error::{Error, Result};

/// A single B-scan, fused output, gradient map, etc.
pub type Image = Array2<f32>;

/// `(min, max)` over all pixels.
pub fn min_max(img: &Image) -> (f32, f32) {
    let mut lo = f32::INFINITY;
    let mut hi = f32::NEG_INFINITY;
    for &v in img.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// max - min; 0 for constant images.
pub fn dynamic_range(img: &Image) -> f32 {
    let (lo, hi) = min_max(img);
    hi - lo
}

pub fn ensure_finite(img: &Image, what: &str) -> Result<()> {
    if img.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

pub fn same_shape(a: &Image, b: &Image, ctx: &str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "{ctx}: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Bilinear sample at fractional coordinates, clamped to the border value.
#[inline]
pub fn bilinear(img: &Image, y: f64, x: f64) -> f32 {
    let (h, w) = img.dim();
    let yc = y.clamp(0.0, (h - 1) as f64);
    let xc = x.clamp(0.0, (w - 1) as f64);
    let y0 = yc.floor() as usize;
    let x0 = xc.floor() as usize;
    let y1 = (y0 + 1).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let fy = (yc - y0 as f64) as f32;
    let fx = (xc - x0 as f64) as f32;
    let v00 = img[(y0, x0)];
    let v01 = img[(y0, x1)];
    let v10 = img[(y1, x0)];
    let v11 = img[(y1, x1)];
    let top = v00 + fx * (v01 - v00);
    let bot = v10 + fx * (v11 - v10);
    top + fy * (bot - top)
}

/// Mean squared difference over all pixels, accumulated in f64.
pub fn mean_sq_diff(a: &Image, b: &Image) -> f64 {
    let n = a.len().max(1) as f64;
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| {
            let d = (x - y) as f64;
            d * d
        })
        .sum::<f64>()
        / n
}

/// Sum of squared differences over all pixels.
pub fn ssd(a: &Image, b: &Image) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| {
            let d = (x - y) as f64;
            d * d
        })
        .sum::<f64>()
}

/// Normalized 1-D Gaussian kernel truncated at 3 sigma.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian blur with border replication. `sigma <= 0` is a no-op.
pub fn gaussian_smooth(img: &Image, sigma: f64) -> Image {
    if sigma <= 0.0 {
        return img.clone();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (h, w) = img.dim();
    let (hi, wi) = (h as i64, w as i64);

    // horizontal pass
    let mut tmp = Array2::<f32>::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f64;
            for (ki, &kv) in k.iter().enumerate() {
                let xi = (x as i64 + ki as i64 - r).clamp(0, wi - 1) as usize;
                acc += kv * img[(y, xi)] as f64;
            }
            tmp[(y, x)] = acc as f32;
        }
    }
    // vertical pass
    let mut out = Array2::<f32>::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0f64;
            for (ki, &kv) in k.iter().enumerate() {
                let yi = (y as i64 + ki as i64 - r).clamp(0, hi - 1) as usize;
                acc += kv * tmp[(yi, x)] as f64;
            }
            out[(y, x)] = acc as f32;
        }
    }
    out
}

/// Halve both dimensions by 2x2 block averaging (floor division; a trailing
/// odd row/column is dropped).
pub fn downsample_half(img: &Image) -> Image {
    let (h, w) = img.dim();
    let (oh, ow) = ((h / 2).max(1), (w / 2).max(1));
    let mut out = Array2::<f32>::zeros((oh, ow));
    for y in 0..oh {
        for x in 0..ow {
            let y0 = (2 * y).min(h - 1);
            let x0 = (2 * x).min(w - 1);
            let y1 = (2 * y + 1).min(h - 1);
            let x1 = (2 * x + 1).min(w - 1);
            out[(y, x)] = 0.25 * (img[(y0, x0)] + img[(y0, x1)] + img[(y1, x0)] + img[(y1, x1)]);
        }
    }
    out
}

/// Bilinear resize to an arbitrary target shape.
pub fn resize_bilinear(img: &Image, oh: usize, ow: usize) -> Image {
    let (h, w) = img.dim();
    let mut out = Array2::<f32>::zeros((oh, ow));
    let sy = if oh > 1 { (h - 1) as f64 / (oh - 1) as f64 } else { 0.0 };
    let sx = if ow > 1 { (w - 1) as f64 / (ow - 1) as f64 } else { 0.0 };
    for y in 0..oh {
        for x in 0..ow {
            out[(y, x)] = bilinear(img, y as f64 * sy, x as f64 * sx);
        }
    }
    out
}
