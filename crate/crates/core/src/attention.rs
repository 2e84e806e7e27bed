//! Dynamic attention: which grid patches an optimization round works on.

use crate::compositor::{GridGeometry, SemanticMask};
use crate::error::{PaintError, Result};
use crate::objectives::ErrorGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttentionMode {
    /// Every eligible patch.
    Uniform,
    /// The `V` eligible patches with the highest L1 error.
    Selective,
}

impl AttentionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttentionMode::Uniform => "uniform",
            AttentionMode::Selective => "selective",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMap {
    pub mode: AttentionMode,
    /// Selected grid indices: row-major for uniform, by descending error for
    /// selective.
    pub selected: Vec<usize>,
    pub budget: Option<usize>,
    /// Error snapshot that justified a selective choice.
    pub errors: Option<ErrorGrid>,
}

fn eligible(grid: &GridGeometry, mask: Option<&SemanticMask>) -> Vec<usize> {
    (0..grid.len())
        .filter(|&i| mask.is_none_or(|m| m.coverage(grid.origin(i), grid.side) > 0.0))
        .collect()
}

/// All grid patches, or those overlapping `mask` when one is given.
pub fn uniform_patches(grid: &GridGeometry, mask: Option<&SemanticMask>) -> AttentionMap {
    AttentionMap {
        mode: AttentionMode::Uniform,
        selected: eligible(grid, mask),
        budget: None,
        errors: None,
    }
}

/// The `v` eligible patches with the largest error, ties broken toward the
/// smaller index.
pub fn select_top_v(
    errors: &ErrorGrid,
    v: usize,
    mask: Option<&SemanticMask>,
) -> Result<AttentionMap> {
    if v == 0 {
        return Err(PaintError::config("selective attention needs V >= 1"));
    }
    if let Some(bad) = errors.values.iter().find(|e| !e.is_finite() || **e < 0.0) {
        return Err(PaintError::config(format!(
            "patch error {bad} is not a finite non-negative value"
        )));
    }
    let grid = errors.geometry();
    let mut candidates = eligible(&grid, mask);
    candidates.sort_by(|&a, &b| {
        errors.values[b]
            .total_cmp(&errors.values[a])
            .then(a.cmp(&b))
    });
    candidates.truncate(v);
    Ok(AttentionMap {
        mode: AttentionMode::Selective,
        selected: candidates,
        budget: Some(v),
        errors: Some(errors.clone()),
    })
}
