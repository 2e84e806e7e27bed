//! Canonical text serialization of a stroke record.
//!
//! ```text
//! patchpaint-strokes 1
//! canvas 300 200
//! padding 84 56
//! patch-side 128
//! init-color 0.41 0.52 0.6
//! masking confined
//! layers 1
//! layer 0 mask label=3 pass 1 patches 1
//! patch 0 128 strokes 1
//! stroke x0=0.1 y0=0.5 x1=0.25 y1=0.5 x2=0.4 y2=0.5 r0=0.0625 r2=0.0625 o0=1 o2=1 r=0.2 g=0.3 b=0.4
//! end
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! `read_strokes(write_strokes(x)) == x` bit for bit.

use std::fmt::Write as _;

use crate::compositor::MaskingMode;
use crate::error::{PaintError, Result};
use crate::stroke::{PatchOrigin, PatchStrokes, Stroke, StrokeBatch, PARAM_COUNT, PARAM_NAMES};

pub const FORMAT_TAG: &str = "patchpaint-strokes";
pub const FORMAT_VERSION: u32 = 1;

/// Everything besides the strokes needed to replay a painting.
#[derive(Clone, Debug, PartialEq)]
pub struct PaintingMeta {
    /// Unpadded width and height.
    pub width: usize,
    pub height: usize,
    pub pad_right: usize,
    pub pad_bottom: usize,
    pub patch_side: usize,
    /// Flat color the canvas starts from.
    pub init_color: [f64; 3],
    pub masking: MaskingMode,
}

impl PaintingMeta {
    pub fn padded_size(&self) -> (usize, usize) {
        (self.width + self.pad_right, self.height + self.pad_bottom)
    }
}

pub fn write_strokes(batches: &[StrokeBatch], meta: &PaintingMeta) -> Result<Vec<u8>> {
    let padded = meta.padded_size();
    for b in batches {
        b.validate(Some(padded))?;
    }
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_TAG} {FORMAT_VERSION}");
    let _ = writeln!(out, "canvas {} {}", meta.width, meta.height);
    let _ = writeln!(out, "padding {} {}", meta.pad_right, meta.pad_bottom);
    let _ = writeln!(out, "patch-side {}", meta.patch_side);
    let [r, g, b] = meta.init_color;
    let _ = writeln!(out, "init-color {r} {g} {b}");
    let _ = writeln!(out, "masking {}", meta.masking.as_str());
    let _ = writeln!(out, "layers {}", batches.len());
    for batch in batches {
        let mask = match batch.mask_label {
            Some(l) => format!("label={l}"),
            None => "none".to_string(),
        };
        let _ = writeln!(
            out,
            "layer {} mask {} pass {} patches {}",
            batch.layer_id,
            mask,
            batch.pass,
            batch.patches.len()
        );
        for patch in &batch.patches {
            let _ = writeln!(
                out,
                "patch {} {} strokes {}",
                patch.origin.x,
                patch.origin.y,
                patch.strokes.len()
            );
            for s in &patch.strokes {
                out.push_str("stroke");
                for (name, v) in PARAM_NAMES.iter().zip(s.params()) {
                    let _ = write!(out, " {name}={v}");
                }
                out.push('\n');
            }
        }
    }
    out.push_str("end\n");
    Ok(out.into_bytes())
}

/// Line cursor that remembers the byte offset of the current line.
struct Lines<'a> {
    text: &'a str,
    pos: usize,
    line_start: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        if self.pos >= self.text.len() {
            return Err(PaintError::parse(self.pos, "unexpected end of file"));
        }
        self.line_start = self.pos;
        let rest = &self.text[self.pos..];
        let (line, advance) = match rest.find('\n') {
            Some(i) => (&rest[..i], i + 1),
            None => (rest, rest.len()),
        };
        self.pos += advance;
        Ok(line)
    }

    fn err(&self, msg: impl Into<String>) -> PaintError {
        PaintError::parse(self.line_start, msg)
    }

    /// Next line, which must start with `keyword`; returns the remaining fields.
    fn record(&mut self, keyword: &str) -> Result<Vec<&'a str>> {
        let line = self.next_line()?;
        let mut fields = line.split(' ');
        match fields.next() {
            Some(k) if k == keyword => Ok(fields.collect()),
            _ => Err(self.err(format!("expected `{keyword}` record, found `{line}`"))),
        }
    }

    fn num<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.parse()
            .map_err(|_| self.err(format!("invalid {what} `{s}`")))
    }

    fn arity(&self, fields: &[&str], n: usize, keyword: &str) -> Result<()> {
        if fields.len() != n {
            return Err(self.err(format!(
                "`{keyword}` record needs {n} fields, got {}",
                fields.len()
            )));
        }
        Ok(())
    }
}

pub fn read_strokes(bytes: &[u8]) -> Result<(Vec<StrokeBatch>, PaintingMeta)> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| PaintError::parse(e.valid_up_to(), "not UTF-8"))?;
    let mut lines = Lines {
        text,
        pos: 0,
        line_start: 0,
    };

    let f = lines.record(FORMAT_TAG)?;
    lines.arity(&f, 1, FORMAT_TAG)?;
    let version: u32 = lines.num(f[0], "format version")?;
    if version != FORMAT_VERSION {
        return Err(lines.err(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }

    let f = lines.record("canvas")?;
    lines.arity(&f, 2, "canvas")?;
    let (width, height): (usize, usize) = (lines.num(f[0], "width")?, lines.num(f[1], "height")?);
    let f = lines.record("padding")?;
    lines.arity(&f, 2, "padding")?;
    let (pad_right, pad_bottom): (usize, usize) =
        (lines.num(f[0], "padding")?, lines.num(f[1], "padding")?);
    let f = lines.record("patch-side")?;
    lines.arity(&f, 1, "patch-side")?;
    let patch_side: usize = lines.num(f[0], "patch side")?;
    if patch_side != crate::stroke::PATCH_SIDE {
        return Err(lines.err(format!("unsupported patch side {patch_side}")));
    }
    let f = lines.record("init-color")?;
    lines.arity(&f, 3, "init-color")?;
    let mut init_color = [0.0; 3];
    for (c, s) in init_color.iter_mut().zip(&f) {
        *c = lines.num(s, "init color")?;
        if !(0.0..=1.0).contains(c) {
            return Err(lines.err(format!("init color {c} outside [0, 1]")));
        }
    }
    let f = lines.record("masking")?;
    lines.arity(&f, 1, "masking")?;
    let masking =
        MaskingMode::parse(f[0]).ok_or_else(|| lines.err(format!("unknown masking `{}`", f[0])))?;
    let f = lines.record("layers")?;
    lines.arity(&f, 1, "layers")?;
    let layer_count: usize = lines.num(f[0], "layer count")?;

    let meta = PaintingMeta {
        width,
        height,
        pad_right,
        pad_bottom,
        patch_side,
        init_color,
        masking,
    };
    let padded = meta.padded_size();
    if !padded.0.is_multiple_of(patch_side)
        || !padded.1.is_multiple_of(patch_side)
        || width == 0
        || height == 0
    {
        return Err(PaintError::parse(
            0,
            "canvas plus padding is not a positive multiple of the patch side",
        ));
    }

    let mut batches = Vec::with_capacity(layer_count.min(1 << 16));
    for _ in 0..layer_count {
        let f = lines.record("layer")?;
        lines.arity(&f, 7, "layer")?;
        if f[1] != "mask" || f[3] != "pass" || f[5] != "patches" {
            return Err(lines.err("malformed `layer` record"));
        }
        let layer_id: usize = lines.num(f[0], "layer id")?;
        let mask_label = match f[2] {
            "none" => None,
            s => match s.strip_prefix("label=") {
                Some(v) => Some(lines.num::<u8>(v, "mask label")?),
                None => return Err(lines.err(format!("invalid mask reference `{s}`"))),
            },
        };
        let pass: usize = lines.num(f[4], "pass index")?;
        let patch_count: usize = lines.num(f[6], "patch count")?;
        let mut patches = Vec::with_capacity(patch_count.min(1 << 16));
        for _ in 0..patch_count {
            let f = lines.record("patch")?;
            lines.arity(&f, 4, "patch")?;
            if f[2] != "strokes" {
                return Err(lines.err("malformed `patch` record"));
            }
            let origin =
                PatchOrigin::new(lines.num(f[0], "origin x")?, lines.num(f[1], "origin y")?);
            if !origin.x.is_multiple_of(patch_side)
                || !origin.y.is_multiple_of(patch_side)
                || origin.x + patch_side > padded.0
                || origin.y + patch_side > padded.1
            {
                return Err(lines.err(format!(
                    "patch origin ({}, {}) is misaligned or outside the canvas",
                    origin.x, origin.y
                )));
            }
            let n: usize = lines.num(f[3], "stroke count")?;
            let mut strokes = Vec::with_capacity(n.min(1 << 16));
            for _ in 0..n {
                let f = lines.record("stroke")?;
                lines.arity(&f, PARAM_COUNT, "stroke")?;
                let mut p = [0.0; PARAM_COUNT];
                for ((slot, field), name) in p.iter_mut().zip(&f).zip(PARAM_NAMES) {
                    let v = field
                        .strip_prefix(name)
                        .and_then(|r| r.strip_prefix('='))
                        .ok_or_else(|| {
                            lines.err(format!("expected field `{name}=`, found `{field}`"))
                        })?;
                    *slot = lines.num(v, name)?;
                }
                let stroke = Stroke::from_params(p);
                if let Err((_, why)) = stroke.validate() {
                    return Err(lines.err(format!("invariant violated: {why}")));
                }
                strokes.push(stroke);
            }
            patches.push(PatchStrokes { origin, strokes });
        }
        batches.push(StrokeBatch {
            layer_id,
            mask_label,
            pass,
            patches,
        });
    }
    let f = lines.record("end")?;
    lines.arity(&f, 0, "end")?;
    if lines.pos != text.len() {
        return Err(PaintError::parse(lines.pos, "trailing data after `end`"));
    }
    Ok((batches, meta))
}
