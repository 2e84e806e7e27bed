//! Compare pixel L1 and the pyramid perceptual loss on a few distortions,
//! then serve the same features from a precomputed feature file.

use std::path::PathBuf;

use patchpaint::io::load_image;
use patchpaint::objectives::{
    default_feature_extractor, l1_loss, perceptual_loss, read_feature_file, write_feature_file,
    FeatureExtractor, PrecomputedFeatures,
};
use patchpaint::raster::Raster;

fn main() -> patchpaint::Result<()> {
    let path = PathBuf::from(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/data/coffee.png"
    ));
    let img = load_image(&path)?;
    let (w, h) = (img.width(), img.height());

    let shifted = Raster::from_fn(w, h, 3, |x, y, c| img.get((x + 3).min(w - 1), y, c));
    let darker = Raster::from_fn(w, h, 3, |x, y, c| img.get(x, y, c) * 0.8);
    let flat = Raster::filled(w, h, &img.mean_color());

    let fx = default_feature_extractor();
    println!("{:<10} {:>8} {:>11}", "variant", "l1", "perceptual");
    for (name, other) in [
        ("shift 3px", &shifted),
        ("darker", &darker),
        ("mean color", &flat),
    ] {
        println!(
            "{name:<10} {:>8.4} {:>11.4}",
            l1_loss(other, &img)?,
            perceptual_loss(other, &img, &fx)?
        );
    }

    // features produced elsewhere can be loaded from disk
    let bytes = write_feature_file(&fx.extract(&img)?);
    let mut store = PrecomputedFeatures::new();
    store.insert(&img, read_feature_file(&bytes)?);
    println!(
        "precomputed: {} bytes, self loss {:.2e}",
        bytes.len(),
        perceptual_loss(&img, &img, &store)?
    );
    Ok(())
}
