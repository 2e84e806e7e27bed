//! Recover a known stroke: render it onto a flat patch, start from a regular
//! initialization and optimize.

use patchpaint::compositor::MaskingMode;
use patchpaint::objectives::LossWeights;
use patchpaint::painter::{optimize_patch_batch, render_patch, BatchProblem, OptimizerSettings};
use patchpaint::raster::Raster;
use patchpaint::stroke::{init_strokes, PatchOrigin, Stroke, StrokeInit, PATCH_SIDE};

fn main() -> patchpaint::Result<()> {
    let canvas = Raster::filled(PATCH_SIDE, PATCH_SIDE, &[0.9, 0.9, 0.8]);
    let target = Stroke::new(
        (0.2, 0.7),
        (0.45, 0.2),
        (0.8, 0.55),
        (0.1, 0.06),
        (0.95, 0.8),
        [0.15, 0.3, 0.6],
    );
    let reference = render_patch(&[target], &canvas, None, MaskingMode::Confined);

    let origin = [PatchOrigin::new(0, 0)];
    let init = init_strokes(
        std::slice::from_ref(&reference),
        &origin,
        &StrokeInit::regular(1, 0.05),
    )?;
    let problem = BatchProblem {
        reference_patches: std::slice::from_ref(&reference),
        canvas_patches: std::slice::from_ref(&canvas),
        mask_patches: None,
        masking: MaskingMode::Confined,
        weights: LossWeights {
            alpha: 1.0,
            beta: 0.0,
        },
        extractor: None,
    };
    for iters in [0, 25, 100, 300] {
        let out =
            optimize_patch_batch(&init, &problem, &OptimizerSettings::with_iterations(iters))?;
        println!("{iters:>3} iterations: loss {:.5}", out.final_loss());
        if iters == 300 {
            let fit = out.batch.patches[0].strokes[0];
            println!(
                "target    {:?}",
                target.params().map(|v| (v * 1000.0).round() / 1000.0)
            );
            println!(
                "recovered {:?}",
                fit.params().map(|v| (v * 1000.0).round() / 1000.0)
            );
        }
    }
    Ok(())
}
