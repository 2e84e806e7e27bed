//! Re-render a stroke file written by the painter.
//!
//! cargo run --release --example replay_strokes -- strokes.txt out.png [labels.png]

use std::path::PathBuf;

use patchpaint::compositor::SemanticMask;
use patchpaint::io::{load_label_map, load_mask_layers, save_image};
use patchpaint::painter::replay;
use patchpaint::raster::Raster;
use patchpaint::stroke_file::read_strokes;

fn main() -> patchpaint::Result<()> {
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let [strokes, out, rest @ ..] = args.as_slice() else {
        eprintln!("usage: replay_strokes STROKES OUT.png [LABELS.png]");
        std::process::exit(2);
    };
    let (record, meta) = read_strokes(&std::fs::read(strokes)?)?;
    let layers = match rest.first() {
        Some(labels) => {
            // only the geometry of the canvas matters for the masks
            let (pw, ph) = meta.padded_size();
            let canvas = patchpaint::compositor::Canvas {
                rgb: Raster::new(pw, ph, 3),
                pad_right: meta.pad_right,
                pad_bottom: meta.pad_bottom,
                width: meta.width,
                height: meta.height,
            };
            load_mask_layers(&load_label_map(labels)?, &canvas)?
        }
        None => {
            let (pw, ph) = meta.padded_size();
            vec![SemanticMask::full(pw, ph, meta.width, meta.height)]
        }
    };
    let raster = replay(&record, &meta, &layers)?;
    save_image(out, &raster)?;
    let n: usize = record.iter().map(|b| b.stroke_count()).sum();
    println!(
        "{n} strokes in {} batches -> {}",
        record.len(),
        out.display()
    );
    Ok(())
}
