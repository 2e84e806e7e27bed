//! Style presets and the pass/layer schedule derived from them.

use std::collections::BTreeMap;

use crate::attention::AttentionMode;
use crate::compositor::{MaskingMode, SemanticMask};
use crate::error::{PaintError, Result};
use crate::objectives::LossWeights;
use crate::stroke::{MAX_RADIUS, MIN_RADIUS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Realistic,
    Painterly,
    Abstract,
}

impl Style {
    pub fn as_str(&self) -> &'static str {
        match self {
            Style::Realistic => "realistic",
            Style::Painterly => "painterly",
            Style::Abstract => "abstract",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "realistic" => Some(Style::Realistic),
            "painterly" => Some(Style::Painterly),
            "abstract" => Some(Style::Abstract),
            _ => None,
        }
    }

    /// Selection budget used when the preset's own attention policy turns
    /// selective and no budget was configured.
    pub fn default_budget(&self) -> usize {
        match self {
            Style::Realistic | Style::Painterly => 8,
            Style::Abstract => 4,
        }
    }
}

/// How stroke radius evolves across passes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThicknessRule {
    /// `a_p = 2^(1-p) · a_1`
    Halving,
    Constant,
}

impl ThicknessRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            ThicknessRule::Halving => "halving",
            ThicknessRule::Constant => "constant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "halving" => Some(ThicknessRule::Halving),
            "constant" => Some(ThicknessRule::Constant),
            _ => None,
        }
    }
}

/// Per-layer settings for the abstract style.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerOverride {
    pub passes: usize,
    pub strokes_per_patch: usize,
    pub v_patches: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerSettings {
    /// Initial step size; decays along a half cosine to `lr_final`.
    pub lr: f64,
    pub lr_final: f64,
    /// Adam iterations per optimization round.
    pub iterations: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerSettings {
    pub fn with_iterations(iterations: usize) -> Self {
        OptimizerSettings {
            lr: 0.02,
            lr_final: 0.002,
            iterations,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// Step size at iteration `it` of `iterations`.
    pub fn lr_at(&self, it: usize) -> f64 {
        if self.iterations == 0 {
            return self.lr;
        }
        let phase = it as f64 / self.iterations as f64;
        self.lr_final
            + 0.5 * (self.lr - self.lr_final) * (1.0 + (std::f64::consts::PI * phase).cos())
    }
}

/// Every user-facing painting knob.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleConfig {
    pub style: Style,
    pub passes: usize,
    /// Fixed stroke budget per patch, overriding the style's rule.
    pub strokes_per_patch: Option<usize>,
    /// Base radius `a_1`, as a fraction of the patch side.
    pub thickness: f64,
    pub thickness_rule: ThicknessRule,
    /// Attention for every entry; `None` follows the style's policy.
    pub attention: Option<AttentionMode>,
    pub v_patches: Option<usize>,
    pub weights: LossWeights,
    /// Minimum fraction of a stroke's alpha mass that must land inside its
    /// layer mask.
    pub gamma: f64,
    pub layer_overrides: BTreeMap<usize, LayerOverride>,
    pub optimizer: OptimizerSettings,
    pub masking: MaskingMode,
    /// Midpoint jitter of initial strokes, as a fraction of a grid cell.
    pub init_jitter: f64,
    pub seed: u64,
}

impl StyleConfig {
    pub fn preset(style: Style) -> Self {
        match style {
            Style::Realistic => StyleConfig {
                style,
                passes: 4,
                strokes_per_patch: None,
                thickness: 8.0 / 128.0,
                thickness_rule: ThicknessRule::Halving,
                attention: None,
                v_patches: None,
                weights: LossWeights {
                    alpha: 1.0,
                    beta: 0.01,
                },
                gamma: 0.5,
                layer_overrides: BTreeMap::new(),
                optimizer: OptimizerSettings::with_iterations(250),
                masking: MaskingMode::Confined,
                init_jitter: 0.0,
                seed: 0,
            },
            Style::Painterly => StyleConfig {
                style,
                passes: 3,
                thickness: 10.0 / 128.0,
                weights: LossWeights {
                    alpha: 1.0,
                    beta: 0.0,
                },
                optimizer: OptimizerSettings::with_iterations(150),
                ..StyleConfig::preset(Style::Realistic)
            },
            Style::Abstract => StyleConfig {
                style,
                passes: 2,
                thickness: 12.0 / 128.0,
                thickness_rule: ThicknessRule::Constant,
                weights: LossWeights {
                    alpha: 1.0,
                    beta: 0.0,
                },
                optimizer: OptimizerSettings::with_iterations(150),
                ..StyleConfig::preset(Style::Realistic)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.passes == 0 {
            return Err(PaintError::config("passes must be at least 1"));
        }
        if self.strokes_per_patch == Some(0) {
            return Err(PaintError::config("strokes per patch must be at least 1"));
        }
        if !(self.thickness.is_finite() && self.thickness > 0.0 && self.thickness <= MAX_RADIUS) {
            return Err(PaintError::config(format!(
                "thickness {} outside (0, {MAX_RADIUS}]",
                self.thickness
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(PaintError::config(format!(
                "gamma {} outside [0, 1]",
                self.gamma
            )));
        }
        self.weights.validate()?;
        if self.attention == Some(AttentionMode::Selective) && self.v_patches.is_none() {
            return Err(PaintError::config(
                "selective attention requires a patch budget (v-patches)",
            ));
        }
        if self.v_patches == Some(0) {
            return Err(PaintError::config("v-patches must be at least 1"));
        }
        let o = &self.optimizer;
        if o.iterations == 0 {
            return Err(PaintError::config("iterations must be at least 1"));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(o.lr) || !(o.lr_final.is_finite() && o.lr_final >= 0.0) || !positive(o.eps) {
            return Err(PaintError::config(
                "learning rates and epsilon must be positive and finite",
            ));
        }
        if !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) {
            return Err(PaintError::config("Adam betas must lie in [0, 1)"));
        }
        if !(self.init_jitter.is_finite() && (0.0..=1.0).contains(&self.init_jitter)) {
            return Err(PaintError::config("init jitter must lie in [0, 1]"));
        }
        for (k, ov) in &self.layer_overrides {
            if ov.passes == 0 || ov.strokes_per_patch == 0 || ov.v_patches == 0 {
                return Err(PaintError::config(format!(
                    "layer override {k} has a zero entry"
                )));
            }
        }
        Ok(())
    }
}

/// Style's stroke budget per patch in pass `pass` (1-based).
pub fn schedule_strokes(pass: usize, style: Style) -> usize {
    match style {
        Style::Realistic => (pass + 5) * (pass + 5),
        Style::Painterly | Style::Abstract => 16,
    }
}

/// `2^(1-p) · a_1`, floored at the minimum radius.
pub fn schedule_thickness(pass: usize, base: f64) -> f64 {
    let p = pass.max(1) as i32;
    (base * 2f64.powi(1 - p)).max(MIN_RADIUS)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleEntry {
    pub pass: usize,
    /// Index into the layer list handed to [`build_schedule`].
    pub layer_index: usize,
    pub layer_id: usize,
    pub attention: AttentionMode,
    pub v_patches: Option<usize>,
    pub strokes_per_patch: usize,
    pub thickness: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PassSchedule {
    pub entries: Vec<ScheduleEntry>,
}

impl PassSchedule {
    pub fn pass_count(&self) -> usize {
        self.entries.iter().map(|e| e.pass).max().unwrap_or(0)
    }
}

/// Enumerate passes, visiting layers in descending mask area within each.
pub fn build_schedule(cfg: &StyleConfig, layers: &[SemanticMask]) -> Result<PassSchedule> {
    cfg.validate()?;
    if layers.is_empty() {
        return Err(PaintError::config("at least one layer is required"));
    }
    for k in cfg.layer_overrides.keys() {
        if !layers.iter().any(|l| l.layer_id == *k) {
            return Err(PaintError::config(format!(
                "layer override references missing layer {k}"
            )));
        }
    }
    let mut order: Vec<usize> = (0..layers.len()).collect();
    order.sort_by(|&a, &b| {
        layers[b]
            .pixel_area
            .cmp(&layers[a].pixel_area)
            .then(layers[a].layer_id.cmp(&layers[b].layer_id))
    });
    let total = cfg
        .layer_overrides
        .values()
        .map(|o| o.passes)
        .chain(std::iter::once(cfg.passes))
        .max()
        .unwrap_or(cfg.passes);

    let mut entries = Vec::new();
    for pass in 1..=total {
        for &li in &order {
            let layer = &layers[li];
            let ov = cfg.layer_overrides.get(&layer.layer_id);
            let layer_passes = ov.map_or(cfg.passes, |o| o.passes);
            if pass > layer_passes {
                continue;
            }
            let strokes = match (ov, cfg.strokes_per_patch) {
                (Some(o), _) => o.strokes_per_patch,
                (None, Some(t)) => t,
                (None, None) => schedule_strokes(pass, cfg.style),
            };
            let thickness = match cfg.thickness_rule {
                ThicknessRule::Halving => schedule_thickness(pass, cfg.thickness),
                ThicknessRule::Constant => cfg.thickness.max(MIN_RADIUS),
            };
            let attention = match (cfg.attention, cfg.style) {
                (Some(a), _) => a,
                (None, Style::Realistic) => AttentionMode::Uniform,
                (None, _) if pass == 1 => AttentionMode::Uniform,
                (None, _) => AttentionMode::Selective,
            };
            let v_patches = match attention {
                AttentionMode::Uniform => None,
                AttentionMode::Selective => Some(
                    ov.map(|o| o.v_patches)
                        .or(cfg.v_patches)
                        .unwrap_or(cfg.style.default_budget()),
                ),
            };
            entries.push(ScheduleEntry {
                pass,
                layer_index: li,
                layer_id: layer.layer_id,
                attention,
                v_patches,
                strokes_per_patch: strokes,
                thickness,
                iterations: cfg.optimizer.iterations,
            });
        }
    }
    Ok(PassSchedule { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;

    fn layer(id: usize, area: usize) -> SemanticMask {
        SemanticMask {
            mask: Raster::filled(128, 128, &[1.0]),
            layer_id: id,
            label: Some(id as u8),
            pixel_area: area,
        }
    }

    #[test]
    fn realistic_stroke_budget() {
        let t: Vec<usize> = (1..=4)
            .map(|p| schedule_strokes(p, Style::Realistic))
            .collect();
        assert_eq!(t, vec![36, 49, 64, 81]);
        for p in 1..6 {
            assert_eq!(schedule_strokes(p, Style::Painterly), 16);
        }
    }

    #[test]
    fn thickness_halves_down_to_floor() {
        let a1 = 8.0 / 128.0;
        assert_eq!(schedule_thickness(1, a1), a1);
        assert_eq!(schedule_thickness(3, a1), 2.0 / 128.0);
        for p in 1..=4 {
            assert_eq!(schedule_thickness(p, a1), 2f64.powi(1 - p as i32) * a1);
        }
        assert_eq!(schedule_thickness(12, a1), MIN_RADIUS);
    }

    #[test]
    fn realistic_single_layer_schedule() {
        let cfg = StyleConfig::preset(Style::Realistic);
        let s = build_schedule(&cfg, &[layer(0, 100)]).unwrap();
        assert_eq!(s.entries.len(), 4);
        let t: Vec<usize> = s.entries.iter().map(|e| e.strokes_per_patch).collect();
        assert_eq!(t, vec![36, 49, 64, 81]);
        assert!(s
            .entries
            .iter()
            .all(|e| e.attention == AttentionMode::Uniform));
    }

    #[test]
    fn painterly_visits_layers_by_area() {
        let mut cfg = StyleConfig::preset(Style::Painterly);
        cfg.passes = 2;
        let layers = [layer(0, 10), layer(1, 500), layer(2, 70)];
        let s = build_schedule(&cfg, &layers).unwrap();
        assert_eq!(s.entries.len(), 6);
        let seq: Vec<(usize, usize)> = s.entries.iter().map(|e| (e.pass, e.layer_id)).collect();
        assert_eq!(seq, vec![(1, 1), (1, 2), (1, 0), (2, 1), (2, 2), (2, 0)]);
        assert_eq!(s.entries[0].attention, AttentionMode::Uniform);
        assert_eq!(s.entries[3].attention, AttentionMode::Selective);
        assert_eq!(s.entries[3].v_patches, Some(8));
    }

    #[test]
    fn abstract_override_limits_layer_passes() {
        let mut cfg = StyleConfig::preset(Style::Abstract);
        cfg.passes = 3;
        cfg.layer_overrides.insert(
            2,
            LayerOverride {
                passes: 1,
                strokes_per_patch: 9,
                v_patches: 2,
            },
        );
        let layers = [layer(0, 300), layer(1, 200), layer(2, 100)];
        let s = build_schedule(&cfg, &layers).unwrap();
        let passes_of_2: Vec<usize> = s
            .entries
            .iter()
            .filter(|e| e.layer_id == 2)
            .map(|e| e.pass)
            .collect();
        assert_eq!(passes_of_2, vec![1]);
        assert_eq!(
            s.entries
                .iter()
                .find(|e| e.layer_id == 2)
                .unwrap()
                .strokes_per_patch,
            9
        );
        assert_eq!(s.entries.len(), 7);
        cfg.layer_overrides.insert(
            7,
            LayerOverride {
                passes: 1,
                strokes_per_patch: 1,
                v_patches: 1,
            },
        );
        assert!(build_schedule(&cfg, &layers).is_err());
    }

    #[test]
    fn validation_catches_bad_configs() {
        let mut cfg = StyleConfig::preset(Style::Realistic);
        cfg.attention = Some(AttentionMode::Selective);
        assert!(cfg.validate().is_err());
        cfg.v_patches = Some(3);
        assert!(cfg.validate().is_ok());
        cfg.gamma = 1.5;
        assert!(cfg.validate().is_err());
        assert!(build_schedule(&StyleConfig::preset(Style::Realistic), &[]).is_err());
    }

    #[test]
    fn cosine_decay_endpoints() {
        let o = OptimizerSettings::with_iterations(100);
        assert!((o.lr_at(0) - 0.02).abs() < 1e-15);
        assert!((o.lr_at(100) - 0.002).abs() < 1e-15);
        assert!(o.lr_at(50) < o.lr_at(10));
    }
}
