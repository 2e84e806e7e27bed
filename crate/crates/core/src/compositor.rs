//! Soft blending of rendered strokes, canvas padding and patch tiling.

use crate::error::{PaintError, Result};
use crate::raster::Raster;
use crate::renderer::{Footprint, PatchBuffer};
use crate::stroke::{PatchOrigin, PATCH_SIDE};

/// How a layer mask enters the blend.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MaskingMode {
    /// `out = M·(1 − alpha·mask) + rgb·mask`: paint never touches pixels
    /// outside the mask.
    #[default]
    Confined,
    /// `out = M·(1 − alpha) + rgb·mask`: alpha is left unmasked, so opaque
    /// strokes darken masked-out pixels.
    Literal,
}

impl MaskingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            MaskingMode::Confined => "confined",
            MaskingMode::Literal => "literal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "confined" => Some(MaskingMode::Confined),
            "literal" => Some(MaskingMode::Literal),
            _ => None,
        }
    }
}

/// A padded RGB canvas whose size is a multiple of the patch side.
#[derive(Clone, Debug, PartialEq)]
pub struct Canvas {
    pub rgb: Raster,
    pub pad_right: usize,
    pub pad_bottom: usize,
    pub width: usize,
    pub height: usize,
}

impl Canvas {
    pub fn padded_width(&self) -> usize {
        self.rgb.width()
    }

    pub fn padded_height(&self) -> usize {
        self.rgb.height()
    }

    pub fn grid(&self) -> GridGeometry {
        GridGeometry::for_canvas(self)
    }

    /// The canvas with its padding cropped away.
    pub fn unpad(&self) -> Raster {
        self.rgb
            .crop(0, 0, self.width, self.height)
            .expect("canvas padding invariant")
    }

    /// A canvas of the same geometry filled with `color`.
    pub fn filled_like(&self, color: &[f64]) -> Canvas {
        Canvas {
            rgb: Raster::filled(self.padded_width(), self.padded_height(), color),
            pad_right: self.pad_right,
            pad_bottom: self.pad_bottom,
            width: self.width,
            height: self.height,
        }
    }

    pub fn same_geometry(&self, other: &Canvas) -> bool {
        self.rgb.width() == other.rgb.width()
            && self.rgb.height() == other.rgb.height()
            && self.width == other.width
            && self.height == other.height
    }
}

/// Grid of `side`×`side` patches covering a padded canvas, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridGeometry {
    pub cols: usize,
    pub rows: usize,
    pub side: usize,
}

impl GridGeometry {
    pub fn new(padded_width: usize, padded_height: usize) -> Self {
        GridGeometry {
            cols: padded_width / PATCH_SIDE,
            rows: padded_height / PATCH_SIDE,
            side: PATCH_SIDE,
        }
    }

    pub fn for_canvas(c: &Canvas) -> Self {
        GridGeometry::new(c.padded_width(), c.padded_height())
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn origin(&self, index: usize) -> PatchOrigin {
        PatchOrigin::new(
            (index % self.cols) * self.side,
            (index / self.cols) * self.side,
        )
    }

    pub fn index_of(&self, origin: PatchOrigin) -> Option<usize> {
        if !origin.x.is_multiple_of(self.side) || !origin.y.is_multiple_of(self.side) {
            return None;
        }
        let (c, r) = (origin.x / self.side, origin.y / self.side);
        (c < self.cols && r < self.rows).then_some(r * self.cols + c)
    }

    pub fn origins(&self) -> Vec<PatchOrigin> {
        (0..self.len()).map(|i| self.origin(i)).collect()
    }
}

/// Binary mask of one semantic layer, padded to canvas geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticMask {
    /// Single channel, every value exactly 0.0 or 1.0.
    pub mask: Raster,
    pub layer_id: usize,
    /// Label value in the source label map; `None` for the implicit
    /// whole-canvas layer.
    pub label: Option<u8>,
    /// Number of set pixels in the unpadded region.
    pub pixel_area: usize,
}

impl SemanticMask {
    /// The single layer covering the whole canvas.
    pub fn full(padded_width: usize, padded_height: usize, width: usize, height: usize) -> Self {
        SemanticMask {
            mask: Raster::filled(padded_width, padded_height, &[1.0]),
            layer_id: 0,
            label: None,
            pixel_area: width * height,
        }
    }

    /// True if every pixel of the padded mask is set.
    pub fn is_full(&self) -> bool {
        self.mask.data().iter().all(|&v| v == 1.0)
    }

    /// Fraction of set pixels inside the patch at `origin`.
    pub fn coverage(&self, origin: PatchOrigin, side: usize) -> f64 {
        let mut n = 0usize;
        for y in origin.y..origin.y + side {
            for x in origin.x..origin.x + side {
                if self.mask.get(x, y, 0) != 0.0 {
                    n += 1;
                }
            }
        }
        n as f64 / (side * side) as f64
    }
}

/// `out = M·(1 − alpha) + rgb` per pixel and channel.
pub fn blend(canvas_patch: &Raster, stroke: &PatchBuffer) -> Result<Raster> {
    canvas_patch.check_same_shape(&stroke.rgb, "blend")?;
    let mut out = canvas_patch.clone();
    for (i, px) in out.data_mut().chunks_exact_mut(3).enumerate() {
        let a = stroke.alpha.data()[i];
        let rgb = &stroke.rgb.data()[3 * i..3 * i + 3];
        for c in 0..3 {
            px[c] = blend_value(px[c], a, rgb[c]);
        }
    }
    Ok(out)
}

/// Blend confined to a binary mask patch; see [`MaskingMode`].
pub fn blend_masked(
    canvas_patch: &Raster,
    stroke: &PatchBuffer,
    mask_patch: &Raster,
    mode: MaskingMode,
) -> Result<Raster> {
    canvas_patch.check_same_shape(&stroke.rgb, "blend_masked")?;
    if mask_patch.width() != canvas_patch.width()
        || mask_patch.height() != canvas_patch.height()
        || mask_patch.channels() != 1
    {
        return Err(PaintError::shape("mask patch does not match canvas patch"));
    }
    let mut out = canvas_patch.clone();
    for (i, px) in out.data_mut().chunks_exact_mut(3).enumerate() {
        let a = stroke.alpha.data()[i];
        let m = mask_patch.data()[i];
        let rgb = &stroke.rgb.data()[3 * i..3 * i + 3];
        for c in 0..3 {
            px[c] = blend_value_masked(px[c], a, rgb[c], m, mode);
        }
    }
    Ok(out)
}

#[inline]
pub(crate) fn blend_value(m: f64, a: f64, premul: f64) -> f64 {
    (m * (1.0 - a) + premul).min(1.0)
}

#[inline]
pub(crate) fn blend_value_masked(m: f64, a: f64, premul: f64, mask: f64, mode: MaskingMode) -> f64 {
    let keep = match mode {
        MaskingMode::Confined => 1.0 - a * mask,
        MaskingMode::Literal => 1.0 - a,
    };
    (m * keep + premul * mask).min(1.0)
}

/// Composite one rasterized stroke of flat `color` onto `patch` in place,
/// touching only its footprint. Produces the same values as [`blend`] /
/// [`blend_masked`] on the expanded buffer.
pub fn blend_footprint(
    patch: &mut Raster,
    fp: &Footprint,
    color: [f64; 3],
    mask: Option<&Raster>,
    mode: MaskingMode,
) {
    let w = patch.width();
    let data = patch.data_mut();
    let mut i = 0;
    for y in fp.y0..fp.y0 + fp.height {
        for x in fp.x0..fp.x0 + fp.width {
            let a = fp.alpha[i];
            let base = 3 * (y * w + x);
            match mask {
                None => {
                    for c in 0..3 {
                        data[base + c] = blend_value(data[base + c], a, a * color[c]);
                    }
                }
                Some(m) => {
                    let mv = m.data()[y * w + x];
                    for c in 0..3 {
                        data[base + c] =
                            blend_value_masked(data[base + c], a, a * color[c], mv, mode);
                    }
                }
            }
            i += 1;
        }
    }
}

/// Replicate the right column and bottom row of `img` until both sides are
/// multiples of the patch side.
pub fn pad_to_grid(img: &Raster) -> Result<Canvas> {
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return Err(PaintError::Geometry("cannot pad an empty image".into()));
    }
    let pw = w.div_ceil(PATCH_SIDE) * PATCH_SIDE;
    let ph = h.div_ceil(PATCH_SIDE) * PATCH_SIDE;
    let rgb = Raster::from_fn(pw, ph, img.channels(), |x, y, c| {
        img.get(x.min(w - 1), y.min(h - 1), c)
    });
    Ok(Canvas {
        rgb,
        pad_right: pw - w,
        pad_bottom: ph - h,
        width: w,
        height: h,
    })
}

fn check_origin(r: &Raster, o: PatchOrigin) -> Result<()> {
    if !o.x.is_multiple_of(PATCH_SIDE) || !o.y.is_multiple_of(PATCH_SIDE) {
        return Err(PaintError::Geometry(format!(
            "origin ({}, {}) is not aligned to the {PATCH_SIDE}-pixel grid",
            o.x, o.y
        )));
    }
    if o.x + PATCH_SIDE > r.width() || o.y + PATCH_SIDE > r.height() {
        return Err(PaintError::Geometry(format!(
            "patch at ({}, {}) exceeds the {}x{} canvas",
            o.x,
            o.y,
            r.width(),
            r.height()
        )));
    }
    Ok(())
}

/// Crop grid-aligned patches out of any raster with canvas geometry.
pub fn crop_patches(r: &Raster, origins: &[PatchOrigin]) -> Result<Vec<Raster>> {
    origins
        .iter()
        .map(|&o| {
            check_origin(r, o)?;
            r.crop(o.x, o.y, PATCH_SIDE, PATCH_SIDE)
        })
        .collect()
}

/// Paste patches back at their origins, overwriting each full footprint.
pub fn paste_patches(r: &mut Raster, patches: &[Raster], origins: &[PatchOrigin]) -> Result<()> {
    if patches.len() != origins.len() {
        return Err(PaintError::shape(format!(
            "{} patches for {} origins",
            patches.len(),
            origins.len()
        )));
    }
    for (p, &o) in patches.iter().zip(origins) {
        check_origin(r, o)?;
        if p.width() != PATCH_SIDE || p.height() != PATCH_SIDE {
            return Err(PaintError::shape("patch is not patch-sized"));
        }
        r.paste(p, o.x, o.y)?;
    }
    Ok(())
}
