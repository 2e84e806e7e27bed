//! Reconstruction objectives: pixel L1, cosine perceptual loss over a
//! pluggable feature extractor, their weighted combination, and the per-patch
//! error grid that drives selective attention.

mod external;
mod features;

pub use external::{read_feature_file, write_feature_file, PrecomputedFeatures};
pub use features::PyramidExtractor;

use crate::compositor::{Canvas, GridGeometry};
use crate::error::{PaintError, Result};
use crate::raster::Raster;

/// Norm stabilizer for cosine similarity.
pub const COSINE_EPS: f64 = 1e-8;

/// Multi-level feature maps of one image; each map has one channel vector per
/// spatial position.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStack {
    pub maps: Vec<Raster>,
}

impl FeatureStack {
    pub fn position_count(&self) -> usize {
        self.maps.iter().map(|m| m.width() * m.height()).sum()
    }

    fn check_compatible(&self, other: &FeatureStack) -> Result<()> {
        if self.maps.len() != other.maps.len() {
            return Err(PaintError::shape(format!(
                "feature stacks have {} and {} layers",
                self.maps.len(),
                other.maps.len()
            )));
        }
        for (a, b) in self.maps.iter().zip(&other.maps) {
            a.check_same_shape(b, "feature layer")?;
        }
        Ok(())
    }
}

/// Maps an RGB raster to a feature stack.
pub trait FeatureExtractor: Send + Sync {
    fn extract(&self, img: &Raster) -> Result<FeatureStack>;

    /// Pull a gradient with respect to the features back onto the image.
    fn backward(&self, _img: &Raster, _grad: &FeatureStack) -> Result<Raster> {
        Err(PaintError::Extractor(
            "extractor is not differentiable".into(),
        ))
    }

    fn is_differentiable(&self) -> bool {
        false
    }
}

/// The built-in extractor.
pub fn default_feature_extractor() -> PyramidExtractor {
    PyramidExtractor::default()
}

/// Weights of the pixel and perceptual terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let w = LossWeights { alpha, beta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha.is_finite()
            && self.beta.is_finite()
            && self.alpha >= 0.0
            && self.beta >= 0.0
            && self.alpha + self.beta > 0.0;
        if ok {
            Ok(())
        } else {
            Err(PaintError::config(format!(
                "loss weights alpha={} beta={} must be non-negative with a positive sum",
                self.alpha, self.beta
            )))
        }
    }
}

/// Mean absolute difference over all pixels and channels.
pub fn l1_loss(c: &Raster, i: &Raster) -> Result<f64> {
    c.check_same_shape(i, "l1_loss")?;
    let n = c.data().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = c
        .data()
        .iter()
        .zip(i.data())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(sum / n as f64)
}

/// Cosine similarity with both vectors augmented by a constant `COSINE_EPS`
/// component, so zero vectors are well defined and identical vectors score 1.
#[inline]
pub fn stabilized_cosine(v: &[f64], w: &[f64]) -> f64 {
    let e2 = COSINE_EPS * COSINE_EPS;
    let mut vw = e2;
    let mut vv = e2;
    let mut ww = e2;
    for (a, b) in v.iter().zip(w) {
        vw += a * b;
        vv += a * a;
        ww += b * b;
    }
    vw / (vv.sqrt() * ww.sqrt())
}

/// `1 − mean cosine` between feature stacks of the canvas and the reference,
/// averaged over every position of every layer.
pub fn perceptual_loss(c: &Raster, i: &Raster, fx: &dyn FeatureExtractor) -> Result<f64> {
    c.check_same_shape(i, "perceptual_loss")?;
    let target = fx.extract(i)?;
    let canvas = fx.extract(c)?;
    perceptual_from_features(&canvas, &target)
}

pub fn perceptual_from_features(canvas: &FeatureStack, target: &FeatureStack) -> Result<f64> {
    canvas.check_compatible(target)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (w, v) in canvas.maps.iter().zip(&target.maps) {
        let ch = w.channels();
        for (wp, vp) in w.data().chunks_exact(ch).zip(v.data().chunks_exact(ch)) {
            sum += stabilized_cosine(vp, wp);
            count += 1;
        }
    }
    if count == 0 {
        return Err(PaintError::Extractor("empty feature stack".into()));
    }
    Ok(1.0 - sum / count as f64)
}

/// Perceptual loss of `c` against precomputed reference features, with its
/// gradient with respect to `c`.
pub fn perceptual_loss_and_grad(
    c: &Raster,
    target: &FeatureStack,
    fx: &dyn FeatureExtractor,
) -> Result<(f64, Raster)> {
    let canvas = fx.extract(c)?;
    canvas.check_compatible(target)?;
    let count = canvas.position_count();
    if count == 0 {
        return Err(PaintError::Extractor("empty feature stack".into()));
    }
    let e2 = COSINE_EPS * COSINE_EPS;
    let scale = -1.0 / count as f64;
    let mut sum = 0.0;
    let mut grads = Vec::with_capacity(canvas.maps.len());
    for (w, v) in canvas.maps.iter().zip(&target.maps) {
        let ch = w.channels();
        let mut g = Raster::new(w.width(), w.height(), ch);
        for ((wp, vp), gp) in w
            .data()
            .chunks_exact(ch)
            .zip(v.data().chunks_exact(ch))
            .zip(g.data_mut().chunks_exact_mut(ch))
        {
            let (mut vw, mut vv, mut ww) = (e2, e2, e2);
            for (a, b) in vp.iter().zip(wp) {
                vw += a * b;
                vv += a * a;
                ww += b * b;
            }
            let (nv, nw) = (vv.sqrt(), ww.sqrt());
            let cos = vw / (nv * nw);
            sum += cos;
            // ∂cos/∂w = v/(|v||w|) − cos·w/|w|²
            for k in 0..ch {
                gp[k] = scale * (vp[k] / (nv * nw) - cos * wp[k] / ww);
            }
        }
        grads.push(g);
    }
    let grad = fx.backward(c, &FeatureStack { maps: grads })?;
    Ok((1.0 - sum / count as f64, grad))
}

/// Mean over patch pairs of `alpha·l1 + beta·perceptual`. The extractor is
/// only consulted when `beta > 0`.
pub fn combined_loss(
    canvas_patches: &[Raster],
    reference_patches: &[Raster],
    weights: LossWeights,
    fx: Option<&dyn FeatureExtractor>,
) -> Result<f64> {
    weights.validate()?;
    if canvas_patches.len() != reference_patches.len() {
        return Err(PaintError::shape(format!(
            "{} canvas patches vs {} reference patches",
            canvas_patches.len(),
            reference_patches.len()
        )));
    }
    if canvas_patches.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (c, i) in canvas_patches.iter().zip(reference_patches) {
        let mut l = weights.alpha * l1_loss(c, i)?;
        if weights.beta > 0.0 {
            let fx =
                fx.ok_or_else(|| PaintError::config("beta > 0 requires a feature extractor"))?;
            l += weights.beta * perceptual_loss(c, i, fx)?;
        }
        total += l;
    }
    Ok(total / canvas_patches.len() as f64)
}

/// Per-patch scalar grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorGrid {
    pub cols: usize,
    pub rows: usize,
    pub values: Vec<f64>,
}

impl ErrorGrid {
    pub fn geometry(&self) -> GridGeometry {
        GridGeometry {
            cols: self.cols,
            rows: self.rows,
            side: crate::stroke::PATCH_SIDE,
        }
    }
}

/// Mean L1 of each grid patch, restricted to unpadded pixels. Patches lying
/// entirely in the padding score 0.
pub fn patch_error_map(c: &Canvas, i: &Canvas) -> Result<ErrorGrid> {
    if !c.same_geometry(i) || c.rgb.channels() != i.rgb.channels() {
        return Err(PaintError::Geometry(
            "canvas and reference geometry differ".into(),
        ));
    }
    let grid = c.grid();
    let ch = c.rgb.channels();
    let mut values = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let o = grid.origin(idx);
        let x_end = (o.x + grid.side).min(c.width);
        let y_end = (o.y + grid.side).min(c.height);
        let mut sum = 0.0;
        let mut n = 0usize;
        for y in o.y..y_end {
            for x in o.x..x_end {
                for (a, b) in c.rgb.pixel(x, y).iter().zip(i.rgb.pixel(x, y)) {
                    sum += (a - b).abs();
                }
                n += ch;
            }
        }
        values.push(if n == 0 { 0.0 } else { sum / n as f64 });
    }
    Ok(ErrorGrid {
        cols: grid.cols,
        rows: grid.rows,
        values,
    })
}
