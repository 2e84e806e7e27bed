//! The 13-parameter quadratic Bézier brush stroke and per-layer stroke batches.
//!
//! Stroke coordinates are normalized to the patch they live in: `(0, 0)` is the
//! top-left corner of the patch and `(1, 1)` the bottom-right. Radii are
//! fractions of the patch side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PaintError, Result};
use crate::raster::Raster;

/// Side of an optimization patch, in pixels.
pub const PATCH_SIDE: usize = 128;

/// Number of scalar parameters per stroke.
pub const PARAM_COUNT: usize = 13;

/// Smallest admissible radius: one pixel at patch scale.
pub const MIN_RADIUS: f64 = 1.0 / PATCH_SIDE as f64;

/// Largest admissible radius.
pub const MAX_RADIUS: f64 = 0.5;

/// Parameter names in storage order.
pub const PARAM_NAMES: [&str; PARAM_COUNT] = [
    "x0", "y0", "x1", "y1", "x2", "y2", "r0", "r2", "o0", "o2", "r", "g", "b",
];

/// Indices into [`Stroke::params`].
pub mod param {
    pub const X0: usize = 0;
    pub const Y0: usize = 1;
    pub const X1: usize = 2;
    pub const Y1: usize = 3;
    pub const X2: usize = 4;
    pub const Y2: usize = 5;
    pub const R0: usize = 6;
    pub const R2: usize = 7;
    pub const O0: usize = 8;
    pub const O2: usize = 9;
    pub const RED: usize = 10;
    pub const GREEN: usize = 11;
    pub const BLUE: usize = 12;
}

/// A brush stroke: start, control and end points of a quadratic Bézier curve,
/// radius and opacity at both ends, and a flat RGB color.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stroke {
    params: [f64; PARAM_COUNT],
}

impl Stroke {
    pub fn new(
        start: (f64, f64),
        control: (f64, f64),
        end: (f64, f64),
        radii: (f64, f64),
        opacities: (f64, f64),
        color: [f64; 3],
    ) -> Self {
        Stroke {
            params: [
                start.0,
                start.1,
                control.0,
                control.1,
                end.0,
                end.1,
                radii.0,
                radii.1,
                opacities.0,
                opacities.1,
                color[0],
                color[1],
                color[2],
            ],
        }
    }

    pub fn from_params(params: [f64; PARAM_COUNT]) -> Self {
        Stroke { params }
    }

    #[inline]
    pub fn params(&self) -> &[f64; PARAM_COUNT] {
        &self.params
    }

    #[inline]
    pub fn params_mut(&mut self) -> &mut [f64; PARAM_COUNT] {
        &mut self.params
    }

    /// Control points `[P0, P1, P2]` in patch-normalized coordinates.
    #[inline]
    pub fn points(&self) -> [(f64, f64); 3] {
        let p = &self.params;
        [(p[0], p[1]), (p[2], p[3]), (p[4], p[5])]
    }

    #[inline]
    pub fn radii(&self) -> (f64, f64) {
        (self.params[param::R0], self.params[param::R2])
    }

    #[inline]
    pub fn opacities(&self) -> (f64, f64) {
        (self.params[param::O0], self.params[param::O2])
    }

    #[inline]
    pub fn color(&self) -> [f64; 3] {
        [
            self.params[param::RED],
            self.params[param::GREEN],
            self.params[param::BLUE],
        ]
    }

    /// Check every field against its admissible box. Returns the first
    /// violated invariant as `(field name, reason)`.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        for (i, &v) in self.params.iter().enumerate() {
            let name = PARAM_NAMES[i];
            if !v.is_finite() {
                return Err((name, format!("{name} is not finite")));
            }
            let ok = match i {
                param::R0 | param::R2 => v > 0.0 && v <= MAX_RADIUS,
                _ => (0.0..=1.0).contains(&v),
            };
            if !ok {
                let bounds = match i {
                    param::R0 | param::R2 => "(0, 0.5]",
                    _ => "[0, 1]",
                };
                return Err((name, format!("{name} = {v} outside {bounds}")));
            }
        }
        Ok(())
    }

    /// Project into the admissible box, with radii floored at `min_radius`.
    /// The caller guarantees the parameters are finite.
    pub fn clamped(&self, min_radius: f64) -> Stroke {
        let mut out = *self;
        for (i, v) in out.params.iter_mut().enumerate() {
            *v = match i {
                param::R0 | param::R2 => v.clamp(min_radius, MAX_RADIUS),
                _ => v.clamp(0.0, 1.0),
            };
        }
        out
    }
}

/// Top-left pixel of a patch in padded-canvas coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatchOrigin {
    pub x: usize,
    pub y: usize,
}

impl PatchOrigin {
    pub fn new(x: usize, y: usize) -> Self {
        PatchOrigin { x, y }
    }
}

/// Strokes assigned to one patch, in compositing order.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchStrokes {
    pub origin: PatchOrigin,
    pub strokes: Vec<Stroke>,
}

/// All strokes painted on one semantic layer during one pass.
///
/// Straight out of [`init_strokes`] every patch holds the same number of
/// strokes; mask filtering may leave patches with fewer.
#[derive(Clone, Debug, PartialEq)]
pub struct StrokeBatch {
    pub layer_id: usize,
    /// Label value of the layer's mask in the input label map, if any.
    pub mask_label: Option<u8>,
    /// 1-based pass index.
    pub pass: usize,
    pub patches: Vec<PatchStrokes>,
}

impl StrokeBatch {
    pub fn stroke_count(&self) -> usize {
        self.patches.iter().map(|p| p.strokes.len()).sum()
    }

    pub fn iter_strokes(&self) -> impl Iterator<Item = (&PatchOrigin, &Stroke)> {
        self.patches
            .iter()
            .flat_map(|p| p.strokes.iter().map(move |s| (&p.origin, s)))
    }

    /// Validate every stroke and the patch placement against `canvas_size`
    /// (padded width, height).
    pub fn validate(&self, canvas_size: Option<(usize, usize)>) -> Result<()> {
        for (pi, patch) in self.patches.iter().enumerate() {
            let o = patch.origin;
            if o.x % PATCH_SIDE != 0 || o.y % PATCH_SIDE != 0 {
                return Err(PaintError::Geometry(format!(
                    "patch {pi} origin ({}, {}) is not aligned to the {PATCH_SIDE}-pixel grid",
                    o.x, o.y
                )));
            }
            if let Some((w, h)) = canvas_size {
                if o.x + PATCH_SIDE > w || o.y + PATCH_SIDE > h {
                    return Err(PaintError::Geometry(format!(
                        "patch {pi} origin ({}, {}) lies outside the {w}x{h} canvas",
                        o.x, o.y
                    )));
                }
            }
            for (si, s) in patch.strokes.iter().enumerate() {
                if let Err((_, why)) = s.validate() {
                    return Err(PaintError::config(format!(
                        "patch {pi}, stroke {si}: {why}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// How freshly initialized strokes are laid out in each patch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrokeInit {
    pub strokes_per_patch: usize,
    /// Initial radius `r0 = r2`, as a fraction of the patch side.
    pub thickness: f64,
    /// Uniform midpoint jitter as a fraction of one grid cell. Zero keeps the
    /// exact regular array.
    pub jitter: f64,
    pub seed: u64,
}

impl StrokeInit {
    pub fn regular(strokes_per_patch: usize, thickness: f64) -> Self {
        StrokeInit {
            strokes_per_patch,
            thickness,
            jitter: 0.0,
            seed: 0,
        }
    }
}

/// Columns and rows of the most-square grid holding `t` cells.
pub fn grid_shape(t: usize) -> (usize, usize) {
    let cols = (t as f64).sqrt().ceil() as usize;
    let cols = cols.max(1);
    // guard against floating sqrt error on perfect squares
    let cols = if (cols - 1) * (cols - 1) >= t && cols > 1 {
        cols - 1
    } else {
        cols
    };
    let rows = t.div_ceil(cols);
    (cols, rows)
}

/// Lay out `init.strokes_per_patch` short horizontal dabs per patch on a
/// cell-centered regular grid, colored by the reference pixel under each
/// stroke midpoint.
pub fn init_strokes(
    reference_patches: &[Raster],
    origins: &[PatchOrigin],
    init: &StrokeInit,
) -> Result<StrokeBatch> {
    let t = init.strokes_per_patch;
    if t == 0 {
        return Err(PaintError::config("strokes per patch must be at least 1"));
    }
    if !init.thickness.is_finite() || init.thickness <= 0.0 || init.thickness > MAX_RADIUS {
        return Err(PaintError::config(format!(
            "thickness {} outside (0, {MAX_RADIUS}]",
            init.thickness
        )));
    }
    if !init.jitter.is_finite() || !(0.0..=1.0).contains(&init.jitter) {
        return Err(PaintError::config(format!(
            "jitter {} outside [0, 1]",
            init.jitter
        )));
    }
    if reference_patches.len() != origins.len() {
        return Err(PaintError::shape(format!(
            "{} reference patches for {} origins",
            reference_patches.len(),
            origins.len()
        )));
    }
    let thickness = init.thickness.max(MIN_RADIUS);
    let (cols, rows) = grid_shape(t);
    let cell_w = 1.0 / cols as f64;
    let cell_h = 1.0 / rows as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(init.seed);

    let mut patches = Vec::with_capacity(origins.len());
    for (reference, &origin) in reference_patches.iter().zip(origins) {
        if reference.channels() != 3 || reference.width() == 0 || reference.height() == 0 {
            return Err(PaintError::shape(
                "reference patch must be a non-empty RGB raster",
            ));
        }
        let mut strokes = Vec::with_capacity(t);
        for k in 0..t {
            let (c, r) = (k % cols, k / cols);
            let mut mx = (c as f64 + 0.5) * cell_w;
            let mut my = (r as f64 + 0.5) * cell_h;
            if init.jitter > 0.0 {
                mx += (rng.random::<f64>() - 0.5) * init.jitter * cell_w;
                my += (rng.random::<f64>() - 0.5) * init.jitter * cell_h;
            }
            let half = 0.5 * cell_w;
            let px = ((mx * reference.width() as f64) as usize).min(reference.width() - 1);
            let py = ((my * reference.height() as f64) as usize).min(reference.height() - 1);
            let rgb = reference.pixel(px, py);
            let color = [
                rgb[0].clamp(0.0, 1.0),
                rgb[1].clamp(0.0, 1.0),
                rgb[2].clamp(0.0, 1.0),
            ];
            strokes.push(Stroke::new(
                ((mx - half).clamp(0.0, 1.0), my),
                (mx, my),
                ((mx + half).clamp(0.0, 1.0), my),
                (thickness, thickness),
                (1.0, 1.0),
                color,
            ));
        }
        patches.push(PatchStrokes { origin, strokes });
    }
    Ok(StrokeBatch {
        layer_id: 0,
        mask_label: None,
        pass: 1,
        patches,
    })
}

/// Project every stroke of `batch` into its admissible box. Non-finite
/// parameters are reported, not clamped.
pub fn clamp_strokes(batch: &StrokeBatch, min_radius: f64) -> Result<StrokeBatch> {
    let mut out = batch.clone();
    for (pi, patch) in out.patches.iter_mut().enumerate() {
        clamp_stroke_slice(&mut patch.strokes, min_radius).map_err(|e| match e {
            PaintError::NumericFault {
                stroke,
                detail,
                iteration,
                ..
            } => PaintError::NumericFault {
                patch: pi,
                stroke,
                iteration,
                detail,
            },
            other => other,
        })?;
    }
    Ok(out)
}

pub(crate) fn clamp_stroke_slice(strokes: &mut [Stroke], min_radius: f64) -> Result<()> {
    for (si, s) in strokes.iter_mut().enumerate() {
        if let Some(i) = s.params.iter().position(|v| !v.is_finite()) {
            return Err(PaintError::NumericFault {
                patch: 0,
                stroke: si,
                iteration: None,
                detail: format!("{} = {}", PARAM_NAMES[i], s.params[i]),
            });
        }
        *s = s.clamped(min_radius);
    }
    Ok(())
}
