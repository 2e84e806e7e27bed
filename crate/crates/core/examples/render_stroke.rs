//! Rasterize one stroke, composite it onto a flat patch and inspect the
//! gradient of its total coverage.

use patchpaint::compositor::blend;
use patchpaint::io::save_image;
use patchpaint::raster::Raster;
use patchpaint::renderer::{alpha_vjp, rasterize, render_stroke};
use patchpaint::stroke::{Stroke, PARAM_NAMES, PATCH_SIDE};

fn main() -> patchpaint::Result<()> {
    let stroke = Stroke::new(
        (0.15, 0.8),
        (0.5, 0.05),
        (0.85, 0.7),
        (0.03, 0.09),
        (1.0, 0.6),
        [0.85, 0.25, 0.1],
    );
    let buffer = render_stroke(&stroke, PATCH_SIDE);
    let canvas = Raster::filled(PATCH_SIDE, PATCH_SIDE, &[0.95, 0.92, 0.85]);
    let painted = blend(&canvas, &buffer)?;

    let dir = std::env::temp_dir();
    save_image(&dir.join("stroke_alpha.png"), &buffer.alpha)?;
    save_image(&dir.join("stroke_on_canvas.png"), &painted)?;

    let fp = rasterize(&stroke, PATCH_SIDE);
    println!(
        "footprint {}x{} at ({}, {}), alpha mass {:.1} px",
        fp.width,
        fp.height,
        fp.x0,
        fp.y0,
        fp.total_alpha()
    );
    let grad = alpha_vjp(&stroke, PATCH_SIDE, &fp, &vec![1.0; fp.alpha.len()]);
    println!("d(alpha mass)/d(param):");
    for (name, g) in PARAM_NAMES.iter().zip(&grad).take(10) {
        println!("  {name:>3} {g:>10.2}");
    }
    println!("wrote {}", dir.join("stroke_on_canvas.png").display());
    Ok(())
}
