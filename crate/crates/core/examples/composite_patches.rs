//! Pad an odd-sized image to the patch grid, paint one stroke per patch with
//! both masking modes, and reassemble.

use patchpaint::compositor::{
    blend_footprint, crop_patches, pad_to_grid, paste_patches, MaskingMode,
};
use patchpaint::io::save_image;
use patchpaint::raster::Raster;
use patchpaint::renderer::rasterize;
use patchpaint::stroke::{Stroke, PATCH_SIDE};

fn main() -> patchpaint::Result<()> {
    let img = Raster::from_fn(300, 200, 3, |x, y, c| match c {
        0 => x as f64 / 300.0,
        1 => y as f64 / 200.0,
        _ => 0.5,
    });
    let canvas = pad_to_grid(&img)?;
    let grid = canvas.grid();
    println!(
        "{}x{} padded to {}x{}: {} patches ({}x{})",
        canvas.width,
        canvas.height,
        canvas.padded_width(),
        canvas.padded_height(),
        grid.len(),
        grid.cols,
        grid.rows
    );

    // lower-left triangle of every patch is "inside"
    let mask = Raster::from_fn(
        PATCH_SIDE,
        PATCH_SIDE,
        1,
        |x, y, _| if x < y { 1.0 } else { 0.0 },
    );
    let stroke = Stroke::new(
        (0.1, 0.5),
        (0.5, 0.1),
        (0.9, 0.5),
        (0.12, 0.12),
        (0.9, 0.9),
        [0.1, 0.1, 0.1],
    );
    let fp = rasterize(&stroke, PATCH_SIDE);
    let origins = grid.origins();

    for mode in [MaskingMode::Confined, MaskingMode::Literal] {
        let mut patches = crop_patches(&canvas.rgb, &origins)?;
        for p in &mut patches {
            blend_footprint(p, &fp, stroke.color(), Some(&mask), mode);
        }
        let mut out = canvas.clone();
        paste_patches(&mut out.rgb, &patches, &origins)?;
        let path = std::env::temp_dir().join(format!("composite_{}.png", mode.as_str()));
        save_image(&path, &out.unpad())?;
        println!("{:>9}: {}", mode.as_str(), path.display());
    }
    Ok(())
}
