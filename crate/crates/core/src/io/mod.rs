//! File-level plumbing: images, label maps, heatmaps, config files and the
//! run manifest.

pub mod config;
pub mod heatmap;
pub mod image_io;
pub mod manifest;
pub mod masks;

pub use config::{parse_layer_override, ConfigOverrides};
pub use heatmap::density_heatmap;
pub use image_io::{encode_png, load_image, quantize, save_image};
pub use manifest::{render_manifest, ManifestInputs};
pub use masks::{load_label_map, load_mask_layers, LabelMap};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
