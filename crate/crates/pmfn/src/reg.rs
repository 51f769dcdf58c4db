//! Image registration: rigid translation for repeated-frame motion
//! correction, and a classical multi-resolution demons scheme that supplies
//! the deformable registration used by self-fusion.
//!
//! Conventions:
//! - `shift(img, t)` moves content by `t`: `out(y, x) = img(y - t.dy, x - t.dx)`.
//! - `register_rigid(moving, fixed)` returns the displacement of `moving`
//!   relative to `fixed`, i.e. `moving ~ shift(fixed, t)`; align with
//!   `shift(moving, -t)`.
//! - `warp(img, field)` is a backward warp: `out(y, x) = img(y + v, x + u)`.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{self, Image};
use crate::io::pfm;

/// Subpixel rigid displacement in pixels. `dx` is along columns, `dy` along rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Translation {
    pub dx: f64,
    pub dy: f64,
}

impl Translation {
    pub fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn negate(self) -> Self {
        Self { dx: -self.dx, dy: -self.dy }
    }

    pub fn magnitude(self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy).sqrt()
    }
}

/// Demons registration knobs. All sigmas are in pixels.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegParams {
    /// Coarse-to-fine pyramid depth; 1 = single resolution.
    pub pyramid_levels: usize,
    pub iterations_per_level: usize,
    /// Gaussian applied to each iteration's update (fluid-like regularization).
    pub smoothing_sigma_update: f64,
    /// Gaussian applied to the accumulated field (diffusion-like regularization).
    pub smoothing_sigma_field: f64,
    /// Multiplier on the demons force; 1.0 is the classical step.
    pub step_scale: f64,
}

impl Default for RegParams {
    fn default() -> Self {
        Self {
            pyramid_levels: 3,
            iterations_per_level: 30,
            smoothing_sigma_update: 1.0,
            smoothing_sigma_field: 1.5,
            step_scale: 1.0,
        }
    }
}

impl RegParams {
    pub fn validate(&self) -> Result<()> {
        if self.pyramid_levels < 1 {
            return Err(Error::Validation("pyramid_levels must be >= 1".into()));
        }
        if self.iterations_per_level == 0 {
            return Err(Error::Validation("iterations_per_level must be positive".into()));
        }
        for (name, v) in [
            ("smoothing_sigma_update", self.smoothing_sigma_update),
            ("smoothing_sigma_field", self.smoothing_sigma_field),
            ("step_scale", self.step_scale),
        ] {
            if !(v > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Per-pixel displacement field plus the smoothness evidence recorded at
/// construction time.
#[derive(Debug, Clone)]
pub struct DeformationField {
    /// Column displacement.
    pub u: Array2<f32>,
    /// Row displacement.
    pub v: Array2<f32>,
    pub meta: FieldMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldMeta {
    pub max_displacement: f64,
    /// Measured max |discrete Laplacian| over both components.
    pub max_laplacian: f64,
    /// Analytic bound ||lap(G_sigma)||_1 * max|pre-smoothing field|; the
    /// measured value can never exceed it because the final operation on the
    /// field is a Gaussian smoothing pass.
    pub smoothness_bound: f64,
    pub smoothing_sigma_field: f64,
}

impl DeformationField {
    pub fn zeros(h: usize, w: usize) -> Self {
        Self {
            u: Array2::zeros((h, w)),
            v: Array2::zeros((h, w)),
            meta: FieldMeta {
                max_displacement: 0.0,
                max_laplacian: 0.0,
                smoothness_bound: 0.0,
                smoothing_sigma_field: 0.0,
            },
        }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.u.dim()
    }

    pub fn negate(&self) -> Self {
        let mut out = self.clone();
        out.u.mapv_inplace(|x| -x);
        out.v.mapv_inplace(|x| -x);
        out
    }

    pub fn max_displacement(&self) -> f64 {
        self.u
            .iter()
            .zip(self.v.iter())
            .map(|(&a, &b)| ((a as f64).powi(2) + (b as f64).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }

    /// Max |5-point discrete Laplacian| over interior pixels of both planes.
    pub fn max_laplacian(&self) -> f64 {
        let mut m = 0.0f64;
        for plane in [&self.u, &self.v] {
            let (h, w) = plane.dim();
            for y in 1..h.saturating_sub(1) {
                for x in 1..w.saturating_sub(1) {
                    let lap = plane[(y - 1, x)] as f64
                        + plane[(y + 1, x)] as f64
                        + plane[(y, x - 1)] as f64
                        + plane[(y, x + 1)] as f64
                        - 4.0 * plane[(y, x)] as f64;
                    m = m.max(lap.abs());
                }
            }
        }
        m
    }
}

/// L1 norm of the discrete Laplacian of the separable Gaussian kernel.
/// For any field f, |lap(G*f)|_inf <= ||lap(G)||_1 * |f|_inf.
pub fn laplacian_kernel_bound(sigma: f64) -> f64 {
    let k = image::gaussian_kernel(sigma);
    let n = k.len();
    // second difference of the 1-D kernel, implicitly zero-padded
    let get = |i: i64| -> f64 {
        if i < 0 || i >= n as i64 {
            0.0
        } else {
            k[i as usize]
        }
    };
    let mut d2_abs = 0.0;
    for i in -1..=(n as i64) {
        d2_abs += (get(i - 1) - 2.0 * get(i) + get(i + 1)).abs();
    }
    // lap(Gx*Gy) = (d2 Gx)*Gy + Gx*(d2 Gy); ||G||_1 = 1
    2.0 * d2_abs
}

// ---------------------------------------------------------------------------
// rigid
// ---------------------------------------------------------------------------

/// Subpixel translation of an image, bilinear with border clamp.
/// `shift(img, (0,0))` is the identity bit-for-bit.
pub fn shift(img: &Image, t: Translation) -> Image {
    if t.dx == 0.0 && t.dy == 0.0 {
        return img.clone();
    }
    let (h, w) = img.dim();
    let mut out = Array2::<f32>::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            out[(y, x)] = image::bilinear(img, y as f64 - t.dy, x as f64 - t.dx);
        }
    }
    out
}

/// Exhaustive integer NCC search within `bound`, refined to subpixel by
/// 1-D quadratic peak interpolation in each axis.
pub fn register_rigid(moving: &Image, fixed: &Image, bound: usize) -> Result<Translation> {
    image::same_shape(moving, fixed, "register_rigid")?;
    let (h, w) = fixed.dim();
    if bound > h / 2 || bound > w / 2 {
        return Err(Error::Validation(format!(
            "search bound {bound} exceeds half image size ({h}x{w})"
        )));
    }
    if image::dynamic_range(moving) == 0.0 || image::dynamic_range(fixed) == 0.0 {
        return Err(Error::Degenerate(
            "register_rigid: constant image has no registrable content".into(),
        ));
    }

    let b = bound as i64;
    let side = (2 * b + 1) as usize;
    let mut scores = vec![f64::NEG_INFINITY; side * side];
    for dy in -b..=b {
        for dx in -b..=b {
            let idx = ((dy + b) as usize) * side + (dx + b) as usize;
            scores[idx] = ncc_at(moving, fixed, dy, dx);
        }
    }

    // deterministic argmax: first occurrence in scan order wins ties
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    if !scores[best].is_finite() {
        return Err(Error::Degenerate(
            "register_rigid: no valid overlap produced a correlation score".into(),
        ));
    }
    let by = (best / side) as i64 - b;
    let bx = (best % side) as i64 - b;

    let peak = |dy: i64, dx: i64| -> f64 {
        if dy < -b || dy > b || dx < -b || dx > b {
            f64::NEG_INFINITY
        } else {
            scores[((dy + b) as usize) * side + (dx + b) as usize]
        }
    };
    let sub_dx = parabola_offset(peak(by, bx - 1), peak(by, bx), peak(by, bx + 1));
    let sub_dy = parabola_offset(peak(by - 1, bx), peak(by, bx), peak(by + 1, bx));

    Ok(Translation::new(bx as f64 + sub_dx, by as f64 + sub_dy))
}

/// NCC between `moving` sampled at `(y+dy, x+dx)` and `fixed` over the valid
/// overlap for an integer candidate displacement.
fn ncc_at(moving: &Image, fixed: &Image, dy: i64, dx: i64) -> f64 {
    let (h, w) = fixed.dim();
    let y0 = (-dy).max(0) as usize;
    let y1 = (h as i64 - dy.max(0)) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = (w as i64 - dx.max(0)) as usize;
    if y1 <= y0 || x1 <= x0 {
        return f64::NEG_INFINITY;
    }
    let n = ((y1 - y0) * (x1 - x0)) as f64;
    let mut sa = 0.0;
    let mut sb = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for y in y0..y1 {
        let my = (y as i64 + dy) as usize;
        for x in x0..x1 {
            let a = moving[(my, (x as i64 + dx) as usize)] as f64;
            let bv = fixed[(y, x)] as f64;
            sa += a;
            sb += bv;
            saa += a * a;
            sbb += bv * bv;
            sab += a * bv;
        }
    }
    let cov = sab - sa * sb / n;
    let va = saa - sa * sa / n;
    let vb = sbb - sb * sb / n;
    if va <= 0.0 || vb <= 0.0 {
        return f64::NEG_INFINITY;
    }
    cov / (va * vb).sqrt()
}

/// Offset of the vertex of the parabola through (-1,ym), (0,y0), (1,yp),
/// clamped to [-0.5, 0.5]. Non-finite neighbors (peak at the search border)
/// yield 0.
fn parabola_offset(ym: f64, y0: f64, yp: f64) -> f64 {
    if !ym.is_finite() || !yp.is_finite() {
        return 0.0;
    }
    let denom = ym - 2.0 * y0 + yp;
    if denom.abs() < 1e-12 {
        return 0.0;
    }
    ((ym - yp) / (2.0 * denom)).clamp(-0.5, 0.5)
}

// ---------------------------------------------------------------------------
// deformable
// ---------------------------------------------------------------------------

/// Backward warp by a displacement field: `out(y,x) = img(y + v, x + u)`,
/// bilinear with border clamp. A zero field is the identity bit-for-bit.
pub fn warp(img: &Image, field: &DeformationField) -> Result<Image> {
    if img.dim() != field.dim() {
        return Err(Error::ShapeMismatch(format!(
            "warp: image {:?} vs field {:?}",
            img.dim(),
            field.dim()
        )));
    }
    let (h, w) = img.dim();
    let mut out = Array2::<f32>::zeros((h, w));
    for y in 0..h {
        for x in 0..w {
            let u = field.u[(y, x)];
            let v = field.v[(y, x)];
            if u == 0.0 && v == 0.0 {
                out[(y, x)] = img[(y, x)];
            } else {
                out[(y, x)] = image::bilinear(img, y as f64 + v as f64, x as f64 + u as f64);
            }
        }
    }
    Ok(out)
}

/// Multi-resolution demons. The returned field never increases SSD: the
/// best intermediate field (including the zero field) is kept.
pub fn register_deformable(
    moving: &Image,
    fixed: &Image,
    params: &RegParams,
) -> Result<DeformationField> {
    image::same_shape(moving, fixed, "register_deformable")?;
    params.validate()?;
    let (h, w) = fixed.dim();

    // build pyramids, coarsest last
    let levels = effective_levels(h, w, params.pyramid_levels);
    let mut pyr_m = vec![moving.clone()];
    let mut pyr_f = vec![fixed.clone()];
    for _ in 1..levels {
        pyr_m.push(image::downsample_half(pyr_m.last().unwrap()));
        pyr_f.push(image::downsample_half(pyr_f.last().unwrap()));
    }

    let mut u: Array2<f32> = Array2::zeros(pyr_f[levels - 1].dim());
    let mut v: Array2<f32> = Array2::zeros(pyr_f[levels - 1].dim());
    let mut presmooth_max = 0.0f64;

    for li in (0..levels).rev() {
        let f_l = &pyr_f[li];
        let m_l = &pyr_m[li];
        if u.dim() != f_l.dim() {
            let (lh, lw) = f_l.dim();
            let (ph, pw) = u.dim();
            let sy = lh as f64 / ph as f64;
            let sx = lw as f64 / pw as f64;
            u = image::resize_bilinear(&u, lh, lw);
            v = image::resize_bilinear(&v, lh, lw);
            u.mapv_inplace(|x| x * sx as f32);
            v.mapv_inplace(|x| x * sy as f32);
        }
        // intensity scale enters the force denominator; see demons_iteration
        let scale = intensity_scale(f_l);
        let (gy, gx) = central_gradient(f_l);
        for _ in 0..params.iterations_per_level {
            presmooth_max = demons_iteration(m_l, f_l, &gy, &gx, &mut u, &mut v, params, scale);
        }
    }

    let sigma = params.smoothing_sigma_field;
    let bound = laplacian_kernel_bound(sigma) * presmooth_max;
    let mut field = DeformationField {
        u,
        v,
        meta: FieldMeta {
            max_displacement: 0.0,
            max_laplacian: 0.0,
            smoothness_bound: bound,
            smoothing_sigma_field: sigma,
        },
    };
    field.meta.max_displacement = field.max_displacement();
    field.meta.max_laplacian = field.max_laplacian();

    // post-condition guard: never hand back a field worse than no field
    let before = image::ssd(moving, fixed);
    let after = image::ssd(&warp(moving, &field)?, fixed);
    if !(after <= before) {
        return Ok(DeformationField::zeros(h, w));
    }
    Ok(field)
}

fn effective_levels(h: usize, w: usize, requested: usize) -> usize {
    let mut levels = 1usize;
    let (mut hh, mut ww) = (h, w);
    while levels < requested && hh >= 16 && ww >= 16 {
        hh /= 2;
        ww /= 2;
        levels += 1;
    }
    levels
}

/// One demons update. Returns the max displacement magnitude of the field
/// right before its final smoothing pass (feeds the smoothness bound).
#[allow(clippy::too_many_arguments)]
fn demons_iteration(
    moving: &Image,
    fixed: &Image,
    grad_y: &Image,
    grad_x: &Image,
    u: &mut Array2<f32>,
    v: &mut Array2<f32>,
    params: &RegParams,
    intensity_scale: f64,
) -> f64 {
    let (h, w) = fixed.dim();
    let field = DeformationField {
        u: u.clone(),
        v: v.clone(),
        meta: FieldMeta {
            max_displacement: 0.0,
            max_laplacian: 0.0,
            smoothness_bound: 0.0,
            smoothing_sigma_field: 0.0,
        },
    };
    let warped = warp(moving, &field).expect("shapes agree");

    let mut du = Array2::<f32>::zeros((h, w));
    let mut dv = Array2::<f32>::zeros((h, w));
    // classical demons force with Thirion's normalization; kappa rescales the
    // diff^2 term so intensities and displacements share units
    let kappa = 1.0 / (intensity_scale * intensity_scale).max(1e-12);
    for y in 0..h {
        for x in 0..w {
            let diff = (fixed[(y, x)] - warped[(y, x)]) as f64;
            let gx = grad_x[(y, x)] as f64;
            let gy = grad_y[(y, x)] as f64;
            let denom = gx * gx + gy * gy + diff * diff * kappa;
            if denom > 1e-12 {
                let s = params.step_scale * diff / denom;
                du[(y, x)] = (s * gx) as f32;
                dv[(y, x)] = (s * gy) as f32;
            }
        }
    }
    let du = image::gaussian_smooth(&du, params.smoothing_sigma_update);
    let dv = image::gaussian_smooth(&dv, params.smoothing_sigma_update);
    for y in 0..h {
        for x in 0..w {
            u[(y, x)] += du[(y, x)];
            v[(y, x)] += dv[(y, x)];
        }
    }
    let mut presmooth_max = 0.0f64;
    for (a, b) in u.iter().zip(v.iter()) {
        presmooth_max = presmooth_max.max(((*a as f64).powi(2) + (*b as f64).powi(2)).sqrt());
    }
    *u = image::gaussian_smooth(u, params.smoothing_sigma_field);
    *v = image::gaussian_smooth(v, params.smoothing_sigma_field);
    presmooth_max
}

fn intensity_scale(img: &Image) -> f64 {
    (image::dynamic_range(img) as f64).max(1e-6)
}

/// Central-difference gradient with replicated borders; returns (d/dy, d/dx).
fn central_gradient(img: &Image) -> (Image, Image) {
    let (h, w) = img.dim();
    let mut gy = Array2::<f32>::zeros((h, w));
    let mut gx = Array2::<f32>::zeros((h, w));
    for y in 0..h {
        let ym = y.saturating_sub(1);
        let yp = (y + 1).min(h - 1);
        for x in 0..w {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(w - 1);
            gy[(y, x)] = 0.5 * (img[(yp, x)] - img[(ym, x)]);
            gx[(y, x)] = 0.5 * (img[(y, xp)] - img[(y, xm)]);
        }
    }
    (gy, gx)
}

// ---------------------------------------------------------------------------
// field serialization: two PFM planes + JSON metadata
// ---------------------------------------------------------------------------

pub fn save_field(field: &DeformationField, stem: &Path) -> Result<()> {
    let u_path = stem.with_extension("u.pfm");
    let v_path = stem.with_extension("v.pfm");
    let meta_path = stem.with_extension("meta.json");
    pfm::write_pfm(&u_path, &field.u)?;
    pfm::write_pfm(&v_path, &field.v)?;
    let json = serde_json::to_string_pretty(&field.meta)?;
    std::fs::write(meta_path, json)?;
    Ok(())
}

pub fn load_field(stem: &Path) -> Result<DeformationField> {
    let u = pfm::read_pfm(&stem.with_extension("u.pfm"))?;
    let v = pfm::read_pfm(&stem.with_extension("v.pfm"))?;
    if u.dim() != v.dim() {
        return Err(Error::ShapeMismatch("deformation field planes differ".into()));
    }
    let meta: FieldMeta =
        serde_json::from_str(&std::fs::read_to_string(stem.with_extension("meta.json"))?)?;
    Ok(DeformationField { u, v, meta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_image(h: usize, w: usize) -> Image {
        Image::from_shape_fn((h, w), |(y, x)| (x as f32) + 0.3 * (y as f32))
    }

    /// Smooth synthetic slice with two blobs; enough texture for NCC.
    fn textured(h: usize, w: usize) -> Image {
        Image::from_shape_fn((h, w), |(y, x)| {
            let yy = y as f32 / h as f32;
            let xx = x as f32 / w as f32;
            0.5 + 0.3 * (6.0 * xx).sin() * (5.0 * yy).cos()
                + 0.2 * (-((xx - 0.3).powi(2) + (yy - 0.6).powi(2)) / 0.02).exp()
        })
    }

    #[test]
    fn shift_zero_is_identity() {
        let img = textured(16, 16);
        assert_eq!(shift(&img, Translation::new(0.0, 0.0)), img);
    }

    #[test]
    fn integer_shift_matches_index_shift_on_ramp() {
        let img = ramp_image(12, 12);
        let s = shift(&img, Translation::new(0.0, 3.0));
        for y in 3..12 {
            for x in 0..12 {
                assert!((s[(y, x)] - img[(y - 3, x)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn integer_shift_round_trip() {
        let img = textured(20, 20);
        let fwd = shift(&img, Translation::new(2.0, -3.0));
        let back = shift(&fwd, Translation::new(-2.0, 3.0));
        // interior only; borders were clamped
        for y in 3..17 {
            for x in 3..17 {
                assert!((back[(y, x)] - img[(y, x)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn register_rigid_identity() {
        let img = textured(32, 32);
        let t = register_rigid(&img, &img, 8).unwrap();
        assert!(t.magnitude() < 1e-6, "got {t:?}");
    }

    #[test]
    fn register_rigid_recovers_planted_translation() {
        let img = textured(64, 64);
        let planted = Translation::new(3.0, -2.0);
        let moving = shift(&img, planted);
        let t = register_rigid(&moving, &img, 8).unwrap();
        assert!((t.dx - 3.0).abs() <= 0.5, "dx {}", t.dx);
        assert!((t.dy + 2.0).abs() <= 0.5, "dy {}", t.dy);
    }

    #[test]
    fn register_rigid_rejects_constant_image() {
        let img = Image::from_elem((16, 16), 1.0);
        let other = textured(16, 16);
        assert!(matches!(
            register_rigid(&img, &other, 4),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn register_rigid_rejects_oversized_bound() {
        let img = textured(16, 16);
        assert!(matches!(
            register_rigid(&img, &img, 9),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn warp_zero_field_is_identity() {
        let img = textured(10, 14);
        let f = DeformationField::zeros(10, 14);
        assert_eq!(warp(&img, &f).unwrap(), img);
    }

    #[test]
    fn warp_constant_unit_field_shifts_columns() {
        let img = ramp_image(8, 8);
        let mut f = DeformationField::zeros(8, 8);
        f.u.fill(1.0);
        let out = warp(&img, &f).unwrap();
        for y in 0..8 {
            for x in 0..7 {
                assert!((out[(y, x)] - img[(y, x + 1)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn warp_then_inverse_is_near_identity_on_smooth_image() {
        let img = textured(48, 48);
        let mut f = DeformationField::zeros(48, 48);
        for y in 0..48 {
            for x in 0..48 {
                f.u[(y, x)] = 1.2 * ((y as f32) / 48.0 * std::f32::consts::PI).sin();
                f.v[(y, x)] = -0.8 * ((x as f32) / 48.0 * std::f32::consts::PI).sin();
            }
        }
        let fwd = warp(&img, &f).unwrap();
        let back = warp(&fwd, &f.negate()).unwrap();
        let range = image::dynamic_range(&img) as f64;
        let mut max_err = 0.0f64;
        for y in 4..44 {
            for x in 4..44 {
                max_err = max_err.max((back[(y, x)] - img[(y, x)]).abs() as f64);
            }
        }
        assert!(max_err < 0.05 * range, "max_err {max_err}, range {range}");
    }

    #[test]
    fn deformable_identity_produces_tiny_field() {
        let img = textured(32, 32);
        let f = register_deformable(&img, &img, &RegParams::default()).unwrap();
        assert!(f.max_displacement() < 0.1, "{}", f.max_displacement());
    }

    #[test]
    fn deformable_halves_ssd_on_sinusoidal_warp() {
        let img = textured(64, 64);
        let mut f = DeformationField::zeros(64, 64);
        for y in 0..64 {
            for x in 0..64 {
                f.u[(y, x)] = 2.0 * ((y as f32) / 64.0 * 2.0 * std::f32::consts::PI).sin();
                f.v[(y, x)] = 2.0 * ((x as f32) / 64.0 * 2.0 * std::f32::consts::PI).cos();
            }
        }
        let moving = warp(&img, &f).unwrap();
        let before = image::ssd(&moving, &img);
        let reg = register_deformable(&moving, &img, &RegParams::default()).unwrap();
        let after = image::ssd(&warp(&moving, &reg).unwrap(), &img);
        assert!(after <= 0.5 * before, "before {before}, after {after}");
    }

    #[test]
    fn deformable_recovers_mean_translation() {
        let img = textured(64, 64);
        let moving = shift(&img, Translation::new(2.0, 0.0));
        // moving(y,x) = img(y, x-2), so warping moving by u=-2 recovers img
        let reg = register_deformable(&moving, &img, &RegParams::default()).unwrap();
        let mut su = 0.0f64;
        let mut sv = 0.0f64;
        let mut n = 0.0f64;
        for y in 8..56 {
            for x in 8..56 {
                su += reg.u[(y, x)] as f64;
                sv += reg.v[(y, x)] as f64;
                n += 1.0;
            }
        }
        let (mu, mv) = (su / n, sv / n);
        assert!((mu + 2.0).abs() < 0.5, "mean u {mu}");
        assert!(mv.abs() < 0.5, "mean v {mv}");
    }

    #[test]
    fn field_smoothness_within_recorded_bound() {
        let img = textured(48, 48);
        let moving = shift(&img, Translation::new(1.5, -1.0));
        let reg = register_deformable(&moving, &img, &RegParams::default()).unwrap();
        assert!(
            reg.meta.max_laplacian <= reg.meta.smoothness_bound + 1e-6,
            "lap {} bound {}",
            reg.meta.max_laplacian,
            reg.meta.smoothness_bound
        );
    }

    #[test]
    fn field_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let img = textured(32, 32);
        let moving = shift(&img, Translation::new(1.0, 1.0));
        let reg = register_deformable(&moving, &img, &RegParams::default()).unwrap();
        let stem = dir.path().join("field");
        save_field(&reg, &stem).unwrap();
        let back = load_field(&stem).unwrap();
        assert_eq!(reg.u, back.u);
        assert_eq!(reg.v, back.v);
    }
}
