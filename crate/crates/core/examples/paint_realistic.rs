//! Paint an image with the realistic preset and write the result.
//!
//! cargo run --release --example paint_realistic -- [input.png] [out.png] [iters]

use std::path::PathBuf;
use std::time::Instant;

use patchpaint::io::{load_image, save_image};
use patchpaint::objectives::LossWeights;
use patchpaint::painter::{run_painting_with, Style, StyleConfig};

fn main() -> patchpaint::Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/tests/data/chelsea.png"
        ))
    });
    let output = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("realistic.png"));
    let image = load_image(&input)?;

    let mut cfg = StyleConfig::preset(Style::Realistic);
    cfg.weights = LossWeights {
        alpha: 1.0,
        beta: 0.0,
    };
    if let Some(iters) = args.next().and_then(|s| s.parse().ok()) {
        cfg.optimizer.iterations = iters;
    }

    let started = Instant::now();
    let painting = run_painting_with(&image, None, &cfg, None, &mut |snap| {
        println!(
            "pass {}  l1 {:.4}  +{} strokes  {:.1}s",
            snap.pass, snap.l1, snap.strokes_added, snap.seconds
        );
    })?;
    save_image(&output, &painting.raster)?;
    println!(
        "{} strokes in {:.1}s -> {}",
        painting.stroke_count(),
        started.elapsed().as_secs_f64(),
        output.display()
    );
    Ok(())
}
