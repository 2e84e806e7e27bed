//! Gradient descent on the strokes of a batch of patches.
//!
//! Each patch is an independent problem: its strokes only ever touch its own
//! pixels, so the batch loss (a mean over patches) separates and patches are
//! optimized in parallel. Gradients still carry the 1/N factor of the mean.

use rayon::prelude::*;

use crate::compositor::{blend_footprint, MaskingMode};
use crate::error::{PaintError, Result};
use crate::objectives::{perceptual_loss_and_grad, FeatureExtractor, FeatureStack, LossWeights};
use crate::painter::adam::{adam_step, AdamHyper, AdamState};
use crate::painter::style::OptimizerSettings;
use crate::raster::Raster;
use crate::renderer::{alpha_vjp, rasterize, Footprint};
use crate::stroke::{
    clamp_stroke_slice, param, PatchStrokes, Stroke, StrokeBatch, MIN_RADIUS, PARAM_COUNT,
    PATCH_SIDE,
};

/// Everything a patch loss needs besides the strokes.
#[derive(Clone, Copy)]
pub struct PatchContext<'a> {
    pub reference: &'a Raster,
    pub canvas: &'a Raster,
    pub mask: Option<&'a Raster>,
    pub masking: MaskingMode,
    pub weights: LossWeights,
    pub features: Option<(&'a dyn FeatureExtractor, &'a FeatureStack)>,
}

/// Composite `strokes` in order onto a copy of `canvas`.
pub fn render_patch(
    strokes: &[Stroke],
    canvas: &Raster,
    mask: Option<&Raster>,
    masking: MaskingMode,
) -> Raster {
    let mut out = canvas.clone();
    for s in strokes {
        let fp = rasterize(s, PATCH_SIDE);
        blend_footprint(&mut out, &fp, s.color(), mask, masking);
    }
    out
}

/// Patch loss and its gradient with respect to every stroke parameter.
pub fn patch_loss_and_grad(
    strokes: &[Stroke],
    ctx: &PatchContext,
) -> Result<(f64, Vec<[f64; PARAM_COUNT]>)> {
    let w = ctx.canvas.width();
    if ctx.canvas.channels() != 3 || w != PATCH_SIDE || ctx.canvas.height() != PATCH_SIDE {
        return Err(PaintError::shape(
            "canvas patch must be a patch-sized RGB raster",
        ));
    }
    ctx.canvas
        .check_same_shape(ctx.reference, "reference patch")?;

    // Forward, keeping the canvas values under each footprint.
    let mut m = ctx.canvas.clone();
    let mut tape: Vec<(Footprint, Vec<f64>)> = Vec::with_capacity(strokes.len());
    for s in strokes {
        let fp = rasterize(s, PATCH_SIDE);
        let mut under = Vec::with_capacity(3 * fp.alpha.len());
        for y in fp.y0..fp.y0 + fp.height {
            let row = 3 * (y * w + fp.x0);
            under.extend_from_slice(&m.data()[row..row + 3 * fp.width]);
        }
        blend_footprint(&mut m, &fp, s.color(), ctx.mask, ctx.masking);
        tape.push((fp, under));
    }

    let n = m.data().len() as f64;
    let mut loss = 0.0;
    let mut g: Vec<f64> = Vec::with_capacity(m.data().len());
    for (a, b) in m.data().iter().zip(ctx.reference.data()) {
        let d = a - b;
        loss += d.abs();
        g.push(if d > 0.0 {
            ctx.weights.alpha / n
        } else if d < 0.0 {
            -ctx.weights.alpha / n
        } else {
            0.0
        });
    }
    loss *= ctx.weights.alpha / n;
    if ctx.weights.beta > 0.0 {
        let (fx, target) = ctx
            .features
            .ok_or_else(|| PaintError::config("beta > 0 requires a feature extractor"))?;
        let (lp, gp) = perceptual_loss_and_grad(&m, target, fx)?;
        loss += ctx.weights.beta * lp;
        for (gi, pi) in g.iter_mut().zip(gp.data()) {
            *gi += ctx.weights.beta * pi;
        }
    }

    // Reverse pass through the blend chain.
    let mut grads = vec![[0.0; PARAM_COUNT]; strokes.len()];
    for (j, s) in strokes.iter().enumerate().rev() {
        let (fp, under) = &tape[j];
        let col = s.color();
        let mut upstream = vec![0.0; fp.alpha.len()];
        let mut gcol = [0.0; 3];
        let mut i = 0;
        for y in fp.y0..fp.y0 + fp.height {
            for x in fp.x0..fp.x0 + fp.width {
                let a = fp.alpha[i];
                let mv = ctx.mask.map_or(1.0, |mk| mk.data()[y * w + x]);
                let base = 3 * (y * w + x);
                let mut da = 0.0;
                for c in 0..3 {
                    let gc = g[base + c];
                    let prev = under[3 * i + c];
                    let (dout_da, keep) = match ctx.masking {
                        MaskingMode::Confined => (mv * (col[c] - prev), 1.0 - a * mv),
                        MaskingMode::Literal => (col[c] * mv - prev, 1.0 - a),
                    };
                    da += gc * dout_da;
                    gcol[c] += gc * a * mv;
                    g[base + c] = gc * keep;
                }
                upstream[i] = da;
                i += 1;
            }
        }
        let mut gj = alpha_vjp(s, PATCH_SIDE, fp, &upstream);
        gj[param::RED] = gcol[0];
        gj[param::GREEN] = gcol[1];
        gj[param::BLUE] = gcol[2];
        grads[j] = gj;
    }
    Ok((loss, grads))
}

/// Result of optimizing one patch.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchOutcome {
    pub strokes: Vec<Stroke>,
    pub initial_loss: f64,
    /// Loss of the returned strokes, the best seen over all iterates.
    pub final_loss: f64,
}

/// Optimize one patch's strokes, returning the best iterate. `scale` is the
/// gradient factor of the surrounding batch mean.
pub fn optimize_patch(
    init: &[Stroke],
    ctx: &PatchContext,
    settings: &OptimizerSettings,
    scale: f64,
) -> Result<PatchOutcome> {
    let mut strokes = init.to_vec();
    let mut state = AdamState::new(strokes.len() * PARAM_COUNT);
    let mut flat = vec![0.0; strokes.len() * PARAM_COUNT];
    let mut flat_grad = vec![0.0; strokes.len() * PARAM_COUNT];
    let mut best: Option<(f64, Vec<Stroke>)> = None;
    let mut initial = 0.0;
    for it in 0..=settings.iterations {
        let (loss, grads) = patch_loss_and_grad(&strokes, ctx).map_err(|e| e.at_iteration(it))?;
        if !loss.is_finite() {
            return Err(PaintError::NumericFault {
                patch: 0,
                stroke: 0,
                iteration: Some(it),
                detail: format!("loss is {loss}"),
            });
        }
        if it == 0 {
            initial = loss;
        }
        if best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, strokes.clone()));
        }
        if it == settings.iterations {
            break;
        }
        for (k, (s, gs)) in strokes.iter().zip(&grads).enumerate() {
            flat[k * PARAM_COUNT..(k + 1) * PARAM_COUNT].copy_from_slice(s.params());
            for (dst, g) in flat_grad[k * PARAM_COUNT..(k + 1) * PARAM_COUNT]
                .iter_mut()
                .zip(gs)
            {
                *dst = g * scale;
            }
        }
        let hyper = AdamHyper {
            lr: settings.lr_at(it),
            beta1: settings.beta1,
            beta2: settings.beta2,
            eps: settings.eps,
        };
        adam_step(&mut flat, &flat_grad, &mut state, &hyper).map_err(|e| e.at_iteration(it))?;
        for (k, s) in strokes.iter_mut().enumerate() {
            s.params_mut()
                .copy_from_slice(&flat[k * PARAM_COUNT..(k + 1) * PARAM_COUNT]);
        }
        clamp_stroke_slice(&mut strokes, MIN_RADIUS).map_err(|e| e.at_iteration(it))?;
    }
    let (final_loss, strokes) = best.expect("at least one iterate is evaluated");
    Ok(PatchOutcome {
        strokes,
        initial_loss: initial,
        final_loss,
    })
}

/// Inputs of a batch optimization, one entry per patch of the batch.
pub struct BatchProblem<'a> {
    pub reference_patches: &'a [Raster],
    pub canvas_patches: &'a [Raster],
    pub mask_patches: Option<&'a [Raster]>,
    pub masking: MaskingMode,
    pub weights: LossWeights,
    pub extractor: Option<&'a dyn FeatureExtractor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchOutcome {
    pub batch: StrokeBatch,
    pub initial_losses: Vec<f64>,
    pub final_losses: Vec<f64>,
}

impl BatchOutcome {
    pub fn initial_loss(&self) -> f64 {
        mean(&self.initial_losses)
    }

    pub fn final_loss(&self) -> f64 {
        mean(&self.final_losses)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Optimize every patch of `batch` against its reference. Runs on the
/// current rayon pool; results do not depend on the number of threads.
pub fn optimize_patch_batch(
    batch: &StrokeBatch,
    problem: &BatchProblem,
    settings: &OptimizerSettings,
) -> Result<BatchOutcome> {
    let n = batch.patches.len();
    if problem.reference_patches.len() != n
        || problem.canvas_patches.len() != n
        || problem.mask_patches.is_some_and(|m| m.len() != n)
    {
        return Err(PaintError::shape(format!(
            "batch of {n} patches with mismatched inputs"
        )));
    }
    problem.weights.validate()?;
    let extractor = if problem.weights.beta > 0.0 {
        let fx = problem
            .extractor
            .ok_or_else(|| PaintError::config("beta > 0 requires a feature extractor"))?;
        if !fx.is_differentiable() {
            return Err(PaintError::config(
                "beta > 0 requires a differentiable feature extractor",
            ));
        }
        Some(fx)
    } else {
        None
    };
    let scale = if n == 0 { 0.0 } else { 1.0 / n as f64 };

    let outcomes: Vec<PatchOutcome> = (0..n)
        .into_par_iter()
        .map(|k| {
            let target = match extractor {
                Some(fx) => Some(fx.extract(&problem.reference_patches[k])?),
                None => None,
            };
            let ctx = PatchContext {
                reference: &problem.reference_patches[k],
                canvas: &problem.canvas_patches[k],
                mask: problem.mask_patches.map(|m| &m[k]),
                masking: problem.masking,
                weights: problem.weights,
                features: extractor.zip(target.as_ref()),
            };
            optimize_patch(&batch.patches[k].strokes, &ctx, settings, scale).map_err(|e| match e {
                PaintError::NumericFault {
                    stroke,
                    iteration,
                    detail,
                    ..
                } => PaintError::NumericFault {
                    patch: k,
                    stroke,
                    iteration,
                    detail,
                },
                other => other,
            })
        })
        .collect::<Result<_>>()?;

    let mut out = batch.clone();
    let mut initial_losses = Vec::with_capacity(n);
    let mut final_losses = Vec::with_capacity(n);
    for (patch, o) in out.patches.iter_mut().zip(outcomes) {
        *patch = PatchStrokes {
            origin: patch.origin,
            strokes: o.strokes,
        };
        initial_losses.push(o.initial_loss);
        final_losses.push(o.final_loss);
    }
    Ok(BatchOutcome {
        batch: out,
        initial_losses,
        final_losses,
    })
}
