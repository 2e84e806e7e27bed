//! Coarse-to-fine painting: schedule, per-pass optimization over selected
//! patches, mask filtering, guarded pasting and the stroke record.

pub mod adam;
pub mod filter;
pub mod optimize;
pub mod style;

use std::time::Instant;

use crate::attention::{select_top_v, uniform_patches, AttentionMode};
use crate::compositor::{blend_footprint, crop_patches, pad_to_grid, Canvas, SemanticMask};
use crate::error::{PaintError, Result};
use crate::io::heatmap::density_heatmap;
use crate::io::masks::{load_mask_layers, LabelMap};
use crate::objectives::{
    l1_loss, patch_error_map, perceptual_loss, FeatureExtractor, PyramidExtractor,
};
use crate::raster::Raster;
use crate::renderer::rasterize;
use crate::stroke::{init_strokes, PatchOrigin, PatchStrokes, StrokeBatch, StrokeInit, PATCH_SIDE};
use crate::stroke_file::PaintingMeta;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use filter::{filter_strokes_by_mask, inside_fraction};
pub use optimize::{
    optimize_patch, optimize_patch_batch, patch_loss_and_grad, render_patch, BatchOutcome,
    BatchProblem, PatchContext, PatchOutcome,
};
pub use style::{
    build_schedule, schedule_strokes, schedule_thickness, LayerOverride, OptimizerSettings,
    PassSchedule, ScheduleEntry, Style, StyleConfig, ThicknessRule,
};

/// Mutable painting state threaded through the schedule.
#[derive(Clone, Debug)]
pub struct PaintingState {
    pub canvas: Canvas,
    pub reference: Canvas,
    pub layers: Vec<SemanticMask>,
    pub record: Vec<StrokeBatch>,
}

/// Bookkeeping of one schedule entry.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryReport {
    pub pass: usize,
    pub layer_id: usize,
    pub attention: AttentionMode,
    pub patches_selected: usize,
    pub patches_pasted: usize,
    pub strokes_per_patch: usize,
    pub thickness: f64,
    /// Strokes dropped by the mask filter.
    pub strokes_filtered: usize,
    /// Surviving strokes of patches whose paste was refused.
    pub strokes_rejected: usize,
    pub strokes_recorded: usize,
    /// Mean batch objective before and after optimization.
    pub loss_before: f64,
    pub loss_after: f64,
}

/// Canvas after one full pass over every layer.
#[derive(Clone, Debug, PartialEq)]
pub struct PassSnapshot {
    pub pass: usize,
    pub raster: Raster,
    pub l1: f64,
    pub perceptual: Option<f64>,
    pub strokes_added: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct Painting {
    /// Unpadded final canvas.
    pub raster: Raster,
    pub record: Vec<StrokeBatch>,
    pub meta: PaintingMeta,
    pub layers: Vec<SemanticMask>,
    pub schedule: PassSchedule,
    pub entries: Vec<EntryReport>,
    pub snapshots: Vec<PassSnapshot>,
    pub density: Raster,
    pub warnings: Vec<String>,
}

impl Painting {
    /// Recorded strokes per layer id, for every layer.
    pub fn layer_stroke_counts(&self) -> Vec<(usize, Option<u8>, usize)> {
        self.layers
            .iter()
            .map(|l| {
                let n = self
                    .record
                    .iter()
                    .filter(|b| b.layer_id == l.layer_id)
                    .map(|b| b.stroke_count())
                    .sum();
                (l.layer_id, l.label, n)
            })
            .collect()
    }

    pub fn stroke_count(&self) -> usize {
        self.record.iter().map(|b| b.stroke_count()).sum()
    }
}

fn entry_seed(seed: u64, entry: &ScheduleEntry) -> u64 {
    seed ^ ((entry.pass as u64) << 32) ^ (entry.layer_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Sum of absolute differences over the patch pixels that lie inside the
/// unpadded image.
fn unpadded_abs_error(
    patch: &Raster,
    reference: &Raster,
    origin: PatchOrigin,
    width: usize,
    height: usize,
) -> f64 {
    let xe = (origin.x + PATCH_SIDE).min(width) - origin.x;
    let ye = (origin.y + PATCH_SIDE).min(height) - origin.y;
    let mut sum = 0.0;
    for y in 0..ye {
        for x in 0..xe {
            for (a, b) in patch.pixel(x, y).iter().zip(reference.pixel(x, y)) {
                sum += (a - b).abs();
            }
        }
    }
    sum
}

/// Run one schedule entry: select patches, optimize fresh strokes on them,
/// filter by the layer mask and paste every patch that does not get worse.
pub fn run_pass(
    entry: &ScheduleEntry,
    state: &mut PaintingState,
    cfg: &StyleConfig,
    extractor: Option<&dyn FeatureExtractor>,
) -> Result<EntryReport> {
    let layer = state.layers.get(entry.layer_index).ok_or_else(|| {
        PaintError::config(format!(
            "schedule references missing layer {}",
            entry.layer_index
        ))
    })?;
    let mut report = EntryReport {
        pass: entry.pass,
        layer_id: entry.layer_id,
        attention: entry.attention,
        patches_selected: 0,
        patches_pasted: 0,
        strokes_per_patch: entry.strokes_per_patch,
        thickness: entry.thickness,
        strokes_filtered: 0,
        strokes_rejected: 0,
        strokes_recorded: 0,
        loss_before: 0.0,
        loss_after: 0.0,
    };
    let masked = !layer.is_full();
    let mask = masked.then_some(layer);
    let grid = state.canvas.grid();
    let selection = match entry.attention {
        AttentionMode::Uniform => uniform_patches(&grid, mask),
        AttentionMode::Selective => {
            let v = entry
                .v_patches
                .ok_or_else(|| PaintError::config("selective attention requires a patch budget"))?;
            let errors = patch_error_map(&state.canvas, &state.reference)?;
            select_top_v(&errors, v, mask)?
        }
    };
    if selection.selected.is_empty() {
        return Ok(report);
    }
    report.patches_selected = selection.selected.len();
    let origins: Vec<PatchOrigin> = selection.selected.iter().map(|&i| grid.origin(i)).collect();
    let reference_patches = crop_patches(&state.reference.rgb, &origins)?;
    let canvas_patches = crop_patches(&state.canvas.rgb, &origins)?;
    let mask_patches = if masked {
        Some(crop_patches(&layer.mask, &origins)?)
    } else {
        None
    };

    let init = StrokeInit {
        strokes_per_patch: entry.strokes_per_patch,
        thickness: entry.thickness,
        jitter: cfg.init_jitter,
        seed: entry_seed(cfg.seed, entry),
    };
    let mut batch = init_strokes(&reference_patches, &origins, &init)?;
    batch.layer_id = layer.layer_id;
    batch.mask_label = layer.label;
    batch.pass = entry.pass;

    let mut settings = cfg.optimizer;
    settings.iterations = entry.iterations;
    let problem = BatchProblem {
        reference_patches: &reference_patches,
        canvas_patches: &canvas_patches,
        mask_patches: mask_patches.as_deref(),
        masking: cfg.masking,
        weights: cfg.weights,
        extractor,
    };
    let outcome = optimize_patch_batch(&batch, &problem, &settings)?;
    report.loss_before = outcome.initial_loss();
    report.loss_after = outcome.final_loss();

    let optimized = if masked {
        let (filtered, removed) = filter_strokes_by_mask(&outcome.batch, layer, cfg.gamma)?;
        report.strokes_filtered = removed;
        filtered
    } else {
        outcome.batch
    };

    let (w, h) = (state.canvas.width, state.canvas.height);
    let mut kept = Vec::new();
    for (k, patch) in optimized.patches.into_iter().enumerate() {
        if patch.strokes.is_empty() {
            continue;
        }
        let mut painted = canvas_patches[k].clone();
        let mp = mask_patches.as_ref().map(|m| &m[k]);
        for s in &patch.strokes {
            let fp = rasterize(s, PATCH_SIDE);
            blend_footprint(&mut painted, &fp, s.color(), mp, cfg.masking);
        }
        let before = unpadded_abs_error(
            &canvas_patches[k],
            &reference_patches[k],
            patch.origin,
            w,
            h,
        );
        let after = unpadded_abs_error(&painted, &reference_patches[k], patch.origin, w, h);
        if after <= before {
            state
                .canvas
                .rgb
                .paste(&painted, patch.origin.x, patch.origin.y)?;
            report.patches_pasted += 1;
            report.strokes_recorded += patch.strokes.len();
            kept.push(PatchStrokes {
                origin: patch.origin,
                strokes: patch.strokes,
            });
        } else {
            report.strokes_rejected += patch.strokes.len();
        }
    }
    if !kept.is_empty() {
        state.record.push(StrokeBatch {
            layer_id: batch.layer_id,
            mask_label: batch.mask_label,
            pass: entry.pass,
            patches: kept,
        });
    }
    Ok(report)
}

/// Paint `image` with the given configuration. Without a label map the whole
/// canvas is a single layer. With `beta > 0` and no extractor the built-in
/// pyramid extractor is used.
pub fn run_painting(
    image: &Raster,
    labels: Option<&LabelMap>,
    cfg: &StyleConfig,
    extractor: Option<&dyn FeatureExtractor>,
) -> Result<Painting> {
    run_painting_with(image, labels, cfg, extractor, &mut |_| {})
}

/// [`run_painting`] with a callback invoked after every pass.
pub fn run_painting_with(
    image: &Raster,
    labels: Option<&LabelMap>,
    cfg: &StyleConfig,
    extractor: Option<&dyn FeatureExtractor>,
    on_pass: &mut dyn FnMut(&PassSnapshot),
) -> Result<Painting> {
    cfg.validate()?;
    if image.channels() != 3 {
        return Err(PaintError::shape(format!(
            "expected an RGB image, got {} channels",
            image.channels()
        )));
    }
    let builtin = PyramidExtractor::default();
    let extractor: &dyn FeatureExtractor = extractor.unwrap_or(&builtin);
    if cfg.weights.beta > 0.0 && !extractor.is_differentiable() {
        return Err(PaintError::config(
            "beta > 0 requires a differentiable feature extractor",
        ));
    }
    let reference = pad_to_grid(image)?;
    let mut warnings = Vec::new();
    let layers = match labels {
        Some(lm) => load_mask_layers(lm, &reference)?,
        None => {
            if cfg.style != Style::Realistic {
                warnings.push(format!(
                    "{} style without a label map: painting a single whole-canvas layer",
                    cfg.style.as_str()
                ));
            }
            vec![SemanticMask::full(
                reference.padded_width(),
                reference.padded_height(),
                reference.width,
                reference.height,
            )]
        }
    };
    let schedule = build_schedule(cfg, &layers)?;

    let mean = image.mean_color();
    let init_color = [
        mean[0].clamp(0.0, 1.0),
        mean[1].clamp(0.0, 1.0),
        mean[2].clamp(0.0, 1.0),
    ];
    let meta = PaintingMeta {
        width: reference.width,
        height: reference.height,
        pad_right: reference.pad_right,
        pad_bottom: reference.pad_bottom,
        patch_side: PATCH_SIDE,
        init_color,
        masking: cfg.masking,
    };
    let mut state = PaintingState {
        canvas: reference.filled_like(&init_color),
        reference,
        layers,
        record: Vec::new(),
    };

    let mut entries = Vec::with_capacity(schedule.entries.len());
    let mut snapshots = Vec::new();
    let total = schedule.pass_count();
    for pass in 1..=total {
        let started = Instant::now();
        let mut added = 0;
        for entry in schedule.entries.iter().filter(|e| e.pass == pass) {
            let layer = &state.layers[entry.layer_index];
            if layer.mask.data().iter().all(|&v| v == 0.0) {
                warnings.push(format!(
                    "pass {pass}: layer {} has an empty mask; skipped",
                    layer.layer_id
                ));
                continue;
            }
            let report = run_pass(entry, &mut state, cfg, Some(extractor))?;
            if report.strokes_rejected > 0 {
                warnings.push(format!(
                    "pass {pass}, layer {}: {} patches kept their previous content ({} strokes discarded)",
                    report.layer_id,
                    report.patches_selected - report.patches_pasted,
                    report.strokes_rejected
                ));
            }
            added += report.strokes_recorded;
            entries.push(report);
        }
        let raster = state.canvas.unpad();
        let l1 = l1_loss(&raster, image)?;
        let perceptual = if cfg.weights.beta > 0.0 {
            Some(perceptual_loss(&raster, image, extractor)?)
        } else {
            None
        };
        let snap = PassSnapshot {
            pass,
            raster,
            l1,
            perceptual,
            strokes_added: added,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_pass(&snap);
        snapshots.push(snap);
    }

    let density = density_heatmap(&state.record, &meta)?;
    Ok(Painting {
        raster: state.canvas.unpad(),
        record: state.record,
        meta,
        layers: state.layers,
        schedule,
        entries,
        snapshots,
        density,
        warnings,
    })
}

/// Re-render a stroke record onto its flat initial canvas. Masked batches
/// look up their layer by id in `layers`; it must be the layer list the
/// painting was made with.
pub fn replay(
    record: &[StrokeBatch],
    meta: &PaintingMeta,
    layers: &[SemanticMask],
) -> Result<Raster> {
    let (pw, ph) = meta.padded_size();
    if meta.patch_side != PATCH_SIDE {
        return Err(PaintError::Geometry(format!(
            "unsupported patch side {}",
            meta.patch_side
        )));
    }
    let mut canvas = Raster::filled(pw, ph, &meta.init_color);
    for batch in record {
        batch.validate(Some((pw, ph)))?;
        let mask = match batch.mask_label {
            None => None,
            Some(label) => {
                let layer = layers
                    .iter()
                    .find(|l| l.layer_id == batch.layer_id)
                    .ok_or_else(|| {
                        PaintError::config(format!(
                            "record references missing layer {}",
                            batch.layer_id
                        ))
                    })?;
                if layer.label != Some(label) {
                    return Err(PaintError::config(format!(
                        "layer {} has label {:?}, record expects {label}",
                        batch.layer_id, layer.label
                    )));
                }
                if layer.mask.width() != pw || layer.mask.height() != ph {
                    return Err(PaintError::Geometry(
                        "layer mask does not match the canvas".into(),
                    ));
                }
                (!layer.is_full()).then_some(&layer.mask)
            }
        };
        for patch in &batch.patches {
            let o = patch.origin;
            let mut p = canvas.crop(o.x, o.y, PATCH_SIDE, PATCH_SIDE)?;
            let mp = match mask {
                Some(m) => Some(m.crop(o.x, o.y, PATCH_SIDE, PATCH_SIDE)?),
                None => None,
            };
            for s in &patch.strokes {
                let fp = rasterize(s, PATCH_SIDE);
                blend_footprint(&mut p, &fp, s.color(), mp.as_ref(), meta.masking);
            }
            canvas.paste(&p, o.x, o.y)?;
        }
    }
    canvas.crop(0, 0, meta.width, meta.height)
}
