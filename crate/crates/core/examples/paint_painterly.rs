//! Painterly style with two semantic layers from a synthetic label map.
//! Writes the painting, its stroke density, the stroke record and the label map.
//!
//! cargo run --release --example paint_painterly -- [input.png] [out_dir]

use std::path::PathBuf;

use patchpaint::io::{load_image, save_image, LabelMap};
use patchpaint::painter::{run_painting, Style, StyleConfig};
use patchpaint::stroke_file::write_strokes;

fn main() -> patchpaint::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/tests/data/rocket.png"
        ))
    });
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("painterly"));
    std::fs::create_dir_all(&out)?;
    let image = load_image(&input)?;

    // central band as foreground, everything else as background
    let (w, h) = (image.width(), image.height());
    let labels = LabelMap::from_fn(w, h, |x, _| if x > w / 3 && x < 2 * w / 3 { 1 } else { 0 });

    let cfg = StyleConfig::preset(Style::Painterly);
    let painting = run_painting(&image, Some(&labels), &cfg, None)?;
    for snap in &painting.snapshots {
        println!(
            "pass {}  l1 {:.4}  +{} strokes",
            snap.pass, snap.l1, snap.strokes_added
        );
    }
    for (id, label, n) in painting.layer_stroke_counts() {
        println!("layer {id} (label {label:?}): {n} strokes");
    }
    save_image(&out.join("final.png"), &painting.raster)?;
    save_image(&out.join("heatmap.png"), &painting.density)?;
    std::fs::write(
        out.join("strokes.txt"),
        write_strokes(&painting.record, &painting.meta)?,
    )?;
    // replay needs the same label map
    image::GrayImage::from_raw(w as u32, h as u32, labels.labels.clone())
        .expect("label buffer matches its size")
        .save(out.join("labels.png"))?;
    println!("wrote {}", out.display());
    Ok(())
}
