//! Flat key-value configuration shared by the config file and the command
//! line. Keys are the long flag names without dashes, e.g.
//! `strokes-per-patch = 16`.

use std::path::PathBuf;

use crate::attention::AttentionMode;
use crate::compositor::MaskingMode;
use crate::error::{PaintError, Result};
use crate::painter::{LayerOverride, Style, StyleConfig};

/// Settings that override a style preset. `None` leaves the lower layer's
/// value in place.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigOverrides {
    pub input: Option<PathBuf>,
    pub masks: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub style: Option<Style>,
    pub passes: Option<usize>,
    pub strokes_per_patch: Option<usize>,
    pub attention: Option<AttentionMode>,
    pub v_patches: Option<usize>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub thickness: Option<f64>,
    pub iters: Option<usize>,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
    pub snapshots: Option<bool>,
    pub paper_literal_masking: Option<bool>,
    pub layer_overrides: Vec<(usize, LayerOverride)>,
}

macro_rules! take_higher {
    ($lo:ident, $hi:ident, $($f:ident),*) => {
        $( if $hi.$f.is_some() { $lo.$f = $hi.$f.clone(); } )*
    };
}

impl ConfigOverrides {
    /// Combine with `higher`, whose set values win. Layer overrides from
    /// `higher` replace same-layer entries.
    pub fn merged(&self, higher: &ConfigOverrides) -> ConfigOverrides {
        let mut out = self.clone();
        take_higher!(
            out,
            higher,
            input,
            masks,
            out,
            style,
            passes,
            strokes_per_patch,
            attention,
            v_patches,
            gamma,
            alpha,
            beta,
            thickness,
            iters,
            lr,
            seed,
            snapshots,
            paper_literal_masking
        );
        for &(k, ov) in &higher.layer_overrides {
            out.layer_overrides.retain(|(j, _)| *j != k);
            out.layer_overrides.push((k, ov));
        }
        out
    }

    /// Preset for the chosen style with every set value applied.
    pub fn resolve(&self) -> Result<StyleConfig> {
        let mut cfg = StyleConfig::preset(self.style.unwrap_or(Style::Realistic));
        if let Some(v) = self.passes {
            cfg.passes = v;
        }
        if self.strokes_per_patch.is_some() {
            cfg.strokes_per_patch = self.strokes_per_patch;
        }
        if self.attention.is_some() {
            cfg.attention = self.attention;
        }
        if self.v_patches.is_some() {
            cfg.v_patches = self.v_patches;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.alpha {
            cfg.weights.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.weights.beta = v;
        }
        if let Some(v) = self.thickness {
            cfg.thickness = v;
        }
        if let Some(v) = self.iters {
            cfg.optimizer.iterations = v;
        }
        if let Some(v) = self.lr {
            // keep the decay ratio of the preset
            cfg.optimizer.lr_final = v * cfg.optimizer.lr_final / cfg.optimizer.lr;
            cfg.optimizer.lr = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.paper_literal_masking == Some(true) {
            cfg.masking = MaskingMode::Literal;
        }
        for &(k, ov) in &self.layer_overrides {
            cfg.layer_overrides.insert(k, ov);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse a TOML document of flat keys.
    pub fn from_toml(text: &str) -> Result<ConfigOverrides> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            PaintError::config(format!("config file: {}", e.message()))
        })?;
        let mut out = ConfigOverrides::default();
        for (key, value) in &table {
            let key = key.replace('_', "-");
            let int = || -> Result<usize> {
                value
                    .as_integer()
                    .and_then(|v| usize::try_from(v).ok())
                    .ok_or_else(|| {
                        PaintError::config(format!("{key} must be a non-negative integer"))
                    })
            };
            let float = || -> Result<f64> {
                value
                    .as_float()
                    .or_else(|| value.as_integer().map(|v| v as f64))
                    .ok_or_else(|| PaintError::config(format!("{key} must be a number")))
            };
            let string = || -> Result<&str> {
                value
                    .as_str()
                    .ok_or_else(|| PaintError::config(format!("{key} must be a string")))
            };
            let boolean = || -> Result<bool> {
                value
                    .as_bool()
                    .ok_or_else(|| PaintError::config(format!("{key} must be true or false")))
            };
            match key.as_str() {
                "input" => out.input = Some(string()?.into()),
                "masks" => out.masks = Some(string()?.into()),
                "out" => out.out = Some(string()?.into()),
                "style" => out.style = Some(parse_style(string()?)?),
                "passes" => out.passes = Some(int()?),
                "strokes-per-patch" => out.strokes_per_patch = Some(int()?),
                "attention" => out.attention = Some(parse_attention(string()?)?),
                "v-patches" => out.v_patches = Some(int()?),
                "gamma" => out.gamma = Some(float()?),
                "alpha" => out.alpha = Some(float()?),
                "beta" => out.beta = Some(float()?),
                "thickness" => out.thickness = Some(float()?),
                "iters" => out.iters = Some(int()?),
                "lr" => out.lr = Some(float()?),
                "seed" => out.seed = Some(int()? as u64),
                "snapshots" => out.snapshots = Some(boolean()?),
                "paper-literal-masking" => out.paper_literal_masking = Some(boolean()?),
                "layer-override" => {
                    let items: Vec<&toml::Value> = match value.as_array() {
                        Some(a) => a.iter().collect(),
                        None => vec![value],
                    };
                    for item in items {
                        let s = item.as_str().ok_or_else(|| {
                            PaintError::config("layer-override entries must be strings")
                        })?;
                        out.layer_overrides.push(parse_layer_override(s)?);
                    }
                }
                other => return Err(PaintError::config(format!("unknown config key `{other}`"))),
            }
        }
        Ok(out)
    }
}

pub fn parse_style(s: &str) -> Result<Style> {
    Style::parse(s).ok_or_else(|| PaintError::config(format!("unknown style `{s}`")))
}

pub fn parse_attention(s: &str) -> Result<AttentionMode> {
    match s {
        "uniform" => Ok(AttentionMode::Uniform),
        "selective" => Ok(AttentionMode::Selective),
        _ => Err(PaintError::config(format!("unknown attention mode `{s}`"))),
    }
}

/// Parse `K:P,T,V`.
pub fn parse_layer_override(s: &str) -> Result<(usize, LayerOverride)> {
    let bad = || PaintError::config(format!("layer override `{s}` is not of the form K:P,T,V"));
    let (k, rest) = s.split_once(':').ok_or_else(bad)?;
    let nums: Vec<usize> = rest
        .split(',')
        .map(|v| v.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let k: usize = k.trim().parse().map_err(|_| bad())?;
    match nums[..] {
        [passes, strokes_per_patch, v_patches] => Ok((
            k,
            LayerOverride {
                passes,
                strokes_per_patch,
                v_patches,
            },
        )),
        _ => Err(bad()),
    }
}
