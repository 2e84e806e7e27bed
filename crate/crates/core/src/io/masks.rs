use std::collections::BTreeMap;
use std::path::Path;

use image::ColorType;

use crate::compositor::{Canvas, SemanticMask};
use crate::error::{PaintError, Result};
use crate::raster::Raster;

/// Most distinct labels accepted in one label map.
pub const MAX_LABELS: usize = 64;

/// One 8-bit label per pixel, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(PaintError::shape(format!(
                "{} labels for a {width}x{height} map",
                labels.len()
            )));
        }
        Ok(LabelMap {
            width,
            height,
            labels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let labels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        LabelMap {
            width,
            height,
            labels,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }
}

/// Read an 8-bit grayscale label map.
pub fn load_label_map(path: &Path) -> Result<LabelMap> {
    let img = image::open(path)?;
    if img.color() != ColorType::L8 {
        return Err(PaintError::config(format!(
            "label map {} must be 8-bit grayscale, found {:?}",
            path.display(),
            img.color()
        )));
    }
    let g = img.to_luma8();
    let (w, h) = g.dimensions();
    LabelMap::new(w as usize, h as usize, g.into_raw())
}

/// Split a label map into one binary mask per distinct label, padded to the
/// canvas by edge replication. Layers are ordered by descending area (ties
/// by label value) and `layer_id` is that rank.
pub fn load_mask_layers(map: &LabelMap, canvas: &Canvas) -> Result<Vec<SemanticMask>> {
    if map.width != canvas.width || map.height != canvas.height {
        return Err(PaintError::shape(format!(
            "label map is {}x{}, image is {}x{}",
            map.width, map.height, canvas.width, canvas.height
        )));
    }
    let mut areas: BTreeMap<u8, usize> = BTreeMap::new();
    for &l in &map.labels {
        *areas.entry(l).or_default() += 1;
    }
    if areas.len() > MAX_LABELS {
        return Err(PaintError::config(format!(
            "label map has {} distinct labels; at most {MAX_LABELS} are supported",
            areas.len()
        )));
    }
    let mut order: Vec<(u8, usize)> = areas.into_iter().collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let (pw, ph) = (canvas.padded_width(), canvas.padded_height());
    let (w, h) = (map.width, map.height);
    Ok(order
        .into_iter()
        .enumerate()
        .map(|(rank, (label, area))| SemanticMask {
            mask: Raster::from_fn(pw, ph, 1, |x, y, _| {
                if map.get(x.min(w - 1), y.min(h - 1)) == label {
                    1.0
                } else {
                    0.0
                }
            }),
            layer_id: rank,
            label: Some(label),
            pixel_area: area,
        })
        .collect())
}
