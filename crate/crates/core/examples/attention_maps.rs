//! Per-patch error of a half-painted canvas and the patches each attention
//! mode would refine next.

use std::path::PathBuf;

use patchpaint::attention::{select_top_v, uniform_patches};
use patchpaint::compositor::pad_to_grid;
use patchpaint::io::load_image;
use patchpaint::objectives::patch_error_map;

fn main() -> patchpaint::Result<()> {
    let path = PathBuf::from(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/data/astronaut.png"
    ));
    let reference = pad_to_grid(&load_image(&path)?)?;
    // left half already matches, right half is still the flat start color
    let mut canvas = reference.filled_like(&reference.unpad().mean_color());
    let left = reference.rgb.crop(
        0,
        0,
        reference.padded_width() / 2,
        reference.padded_height(),
    )?;
    canvas.rgb.paste(&left, 0, 0)?;

    let errors = patch_error_map(&canvas, &reference)?;
    println!("patch L1 error:");
    for row in errors.values.chunks(errors.cols) {
        println!(
            "  {}",
            row.iter()
                .map(|e| format!("{e:.3}"))
                .collect::<Vec<_>>()
                .join("  ")
        );
    }

    let grid = canvas.grid();
    println!(
        "uniform selects {} patches",
        uniform_patches(&grid, None).selected.len()
    );
    let top = select_top_v(&errors, 4, None)?;
    let cells: Vec<String> = top
        .selected
        .iter()
        .map(|&i| format!("({}, {})", i % grid.cols, i / grid.cols))
        .collect();
    println!("selective V=4 picks (col, row): {}", cells.join(" "));
    Ok(())
}
