use std::fmt::Write;

use crate::painter::{Painting, StyleConfig};

/// Provenance of a run that the painting itself does not carry.
#[derive(Clone, Debug, Default)]
pub struct ManifestInputs {
    pub input: String,
    pub input_sha256: String,
    pub masks: Option<(String, String)>,
    pub outputs: Vec<String>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "auto".to_string(), |v| v.to_string())
}

/// Key-value header, per-layer counts and a per-pass metric table.
pub fn render_manifest(inputs: &ManifestInputs, cfg: &StyleConfig, painting: &Painting) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "patchpaint-manifest 1");
    let _ = writeln!(s, "input = {}", inputs.input);
    let _ = writeln!(s, "input-sha256 = {}", inputs.input_sha256);
    match &inputs.masks {
        Some((path, sha)) => {
            let _ = writeln!(s, "masks = {path}");
            let _ = writeln!(s, "masks-sha256 = {sha}");
        }
        None => {
            let _ = writeln!(s, "masks = none");
        }
    }
    let _ = writeln!(s, "style = {}", cfg.style.as_str());
    let _ = writeln!(s, "passes = {}", cfg.passes);
    let _ = writeln!(s, "strokes-per-patch = {}", opt(cfg.strokes_per_patch));
    let _ = writeln!(s, "thickness = {}", cfg.thickness);
    let _ = writeln!(s, "thickness-rule = {}", cfg.thickness_rule.as_str());
    let _ = writeln!(s, "attention = {}", opt(cfg.attention.map(|a| a.as_str())));
    let _ = writeln!(s, "v-patches = {}", opt(cfg.v_patches));
    let _ = writeln!(s, "gamma = {}", cfg.gamma);
    let _ = writeln!(s, "alpha = {}", cfg.weights.alpha);
    let _ = writeln!(s, "beta = {}", cfg.weights.beta);
    let _ = writeln!(s, "iters = {}", cfg.optimizer.iterations);
    let _ = writeln!(s, "lr = {}", cfg.optimizer.lr);
    let _ = writeln!(s, "lr-final = {}", cfg.optimizer.lr_final);
    let _ = writeln!(
        s,
        "adam = {} {} {}",
        cfg.optimizer.beta1, cfg.optimizer.beta2, cfg.optimizer.eps
    );
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "init-jitter = {}", cfg.init_jitter);
    let _ = writeln!(s, "masking = {}", cfg.masking.as_str());
    for (k, o) in &cfg.layer_overrides {
        let _ = writeln!(
            s,
            "layer-override = {k}:{},{},{}",
            o.passes, o.strokes_per_patch, o.v_patches
        );
    }
    let m = &painting.meta;
    let _ = writeln!(s, "canvas = {} {}", m.width, m.height);
    let _ = writeln!(s, "padding = {} {}", m.pad_right, m.pad_bottom);
    let [r, g, b] = m.init_color;
    let _ = writeln!(s, "init-color = {r} {g} {b}");
    for o in &inputs.outputs {
        let _ = writeln!(s, "output = {o}");
    }
    for w in &painting.warnings {
        let _ = writeln!(s, "warning = {w}");
    }
    let _ = writeln!(s, "layers = {}", painting.layers.len());
    for (id, label, n) in painting.layer_stroke_counts() {
        let label = label.map_or_else(|| "none".to_string(), |l| l.to_string());
        let _ = writeln!(s, "layer.{id} = label={label} strokes={n}");
    }
    let _ = writeln!(s, "strokes-total = {}", painting.stroke_count());
    if let Some(last) = painting.snapshots.last() {
        let _ = writeln!(s, "final-l1 = {:.6}", last.l1);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "[passes]");
    let _ = writeln!(s, "pass\tl1\tperceptual\tstrokes\tseconds");
    for p in &painting.snapshots {
        let perc = p
            .perceptual
            .map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(
            s,
            "{}\t{:.6}\t{}\t{}\t{:.2}",
            p.pass, p.l1, perc, p.strokes_added, p.seconds
        );
    }
    s
}
