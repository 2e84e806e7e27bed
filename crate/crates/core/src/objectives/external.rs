//! Externally computed feature maps, e.g. network activations exported by
//! another tool.
//!
//! File layout: an ASCII header
//!
//! ```text
//! patchpaint-features 1
//! layers K
//! C H W        (one line per layer)
//! ```
//!
//! followed immediately by the little-endian `f32` values of every layer in
//! order, each stored channel-major (`C` planes of `H`×`W`).

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::{FeatureExtractor, FeatureStack};
use crate::error::{PaintError, Result};
use crate::raster::Raster;

const TAG: &str = "patchpaint-features";

pub fn write_feature_file(stack: &FeatureStack) -> Vec<u8> {
    let mut header = String::new();
    let _ = writeln!(header, "{TAG} 1");
    let _ = writeln!(header, "layers {}", stack.maps.len());
    for m in &stack.maps {
        let _ = writeln!(header, "{} {} {}", m.channels(), m.height(), m.width());
    }
    let mut out = header.into_bytes();
    for m in &stack.maps {
        for c in 0..m.channels() {
            for y in 0..m.height() {
                for x in 0..m.width() {
                    out.extend_from_slice(&(m.get(x, y, c) as f32).to_le_bytes());
                }
            }
        }
    }
    out
}

pub fn read_feature_file(bytes: &[u8]) -> Result<FeatureStack> {
    let mut pos = 0usize;
    let line = |pos: &mut usize| -> Result<(usize, String)> {
        let start = *pos;
        let rest = &bytes[start..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| PaintError::parse(start, "unterminated header line"))?;
        *pos = start + end + 1;
        let s = std::str::from_utf8(&rest[..end])
            .map_err(|_| PaintError::parse(start, "header is not UTF-8"))?;
        Ok((start, s.to_string()))
    };
    let (at, first) = line(&mut pos)?;
    if first != format!("{TAG} 1") {
        return Err(PaintError::parse(
            at,
            format!("expected `{TAG} 1`, found `{first}`"),
        ));
    }
    let (at, layers) = line(&mut pos)?;
    let count: usize = layers
        .strip_prefix("layers ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| PaintError::parse(at, "expected `layers K`"))?;
    let mut shapes = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let (at, l) = line(&mut pos)?;
        let dims: Vec<usize> = l.split(' ').filter_map(|v| v.parse().ok()).collect();
        if dims.len() != 3 || dims.contains(&0) {
            return Err(PaintError::parse(at, format!("invalid layer shape `{l}`")));
        }
        shapes.push((dims[0], dims[1], dims[2]));
    }
    let mut maps = Vec::with_capacity(count);
    for (c, h, w) in shapes {
        let n = c * h * w;
        if bytes.len() < pos + 4 * n {
            return Err(PaintError::parse(pos, "feature data is truncated"));
        }
        let mut m = Raster::new(w, h, c);
        let mut k = pos;
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    let v = f32::from_le_bytes(bytes[k..k + 4].try_into().unwrap()) as f64;
                    if !v.is_finite() {
                        return Err(PaintError::parse(k, "non-finite feature value"));
                    }
                    m.set(x, y, ch, v);
                    k += 4;
                }
            }
        }
        pos = k;
        maps.push(m);
    }
    if pos != bytes.len() {
        return Err(PaintError::parse(pos, "trailing bytes after feature data"));
    }
    Ok(FeatureStack { maps })
}

/// Extractor backed by feature stacks computed elsewhere, looked up by the
/// exact content of the queried raster.
#[derive(Default, Clone)]
pub struct PrecomputedFeatures {
    entries: Vec<([u8; 32], FeatureStack)>,
}

fn fingerprint(img: &Raster) -> [u8; 32] {
    let mut h = Sha256::new();
    for d in [img.width(), img.height(), img.channels()] {
        h.update((d as u64).to_le_bytes());
    }
    for v in img.data() {
        h.update(v.to_le_bytes());
    }
    h.finalize().into()
}

impl PrecomputedFeatures {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, img: &Raster, features: FeatureStack) {
        let key = fingerprint(img);
        self.entries.retain(|(k, _)| *k != key);
        self.entries.push((key, features));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FeatureExtractor for PrecomputedFeatures {
    fn extract(&self, img: &Raster) -> Result<FeatureStack> {
        let key = fingerprint(img);
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, f)| f.clone())
            .ok_or_else(|| PaintError::Extractor("no precomputed features for this raster".into()))
    }
}
