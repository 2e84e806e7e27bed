use crate::compositor::SemanticMask;
use crate::error::{PaintError, Result};
use crate::raster::Raster;
use crate::renderer::rasterize;
use crate::stroke::{Stroke, StrokeBatch, PATCH_SIDE};

/// Share of the stroke's alpha mass landing on set pixels of `mask_patch`.
/// A stroke with no mass counts as fully inside.
pub fn inside_fraction(stroke: &Stroke, mask_patch: &Raster) -> f64 {
    let fp = rasterize(stroke, mask_patch.width());
    let (mut inside, mut total) = (0.0, 0.0);
    let mut i = 0;
    for y in fp.y0..fp.y0 + fp.height {
        for x in fp.x0..fp.x0 + fp.width {
            let a = fp.alpha[i];
            total += a;
            inside += a * mask_patch.get(x, y, 0);
            i += 1;
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        1.0
    }
}

/// Drop strokes whose inside fraction falls below `gamma`, keeping the
/// order of survivors. Returns the filtered batch and the removal count.
pub fn filter_strokes_by_mask(
    batch: &StrokeBatch,
    mask: &SemanticMask,
    gamma: f64,
) -> Result<(StrokeBatch, usize)> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(PaintError::config(format!("gamma {gamma} outside [0, 1]")));
    }
    let mut out = batch.clone();
    let mut removed = 0;
    for patch in &mut out.patches {
        let o = patch.origin;
        let mask_patch = mask.mask.crop(o.x, o.y, PATCH_SIDE, PATCH_SIDE)?;
        let before = patch.strokes.len();
        patch
            .strokes
            .retain(|s| inside_fraction(s, &mask_patch) >= gamma);
        removed += before - patch.strokes.len();
    }
    Ok((out, removed))
}
