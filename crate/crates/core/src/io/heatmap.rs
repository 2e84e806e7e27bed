use crate::error::Result;
use crate::raster::Raster;
use crate::renderer::rasterize;
use crate::stroke::StrokeBatch;
use crate::stroke_file::PaintingMeta;

/// Accumulated stroke alpha over the unpadded canvas, normalized so the
/// peak is 1. An empty record gives an all-zero raster.
pub fn density_heatmap(record: &[StrokeBatch], meta: &PaintingMeta) -> Result<Raster> {
    let (pw, ph) = meta.padded_size();
    let mut acc = Raster::new(pw, ph, 1);
    for batch in record {
        batch.validate(Some((pw, ph)))?;
        for (origin, stroke) in batch.iter_strokes() {
            let fp = rasterize(stroke, meta.patch_side);
            let mut i = 0;
            for y in fp.y0..fp.y0 + fp.height {
                let row = (origin.y + y) * pw + origin.x;
                for x in fp.x0..fp.x0 + fp.width {
                    acc.data_mut()[row + x] += fp.alpha[i];
                    i += 1;
                }
            }
        }
    }
    let mut out = acc.crop(0, 0, meta.width, meta.height)?;
    let peak = out.data().iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        for v in out.data_mut() {
            *v /= peak;
        }
    }
    Ok(out)
}
