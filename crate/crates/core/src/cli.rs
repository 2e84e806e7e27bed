//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser};

use crate::error::{PaintError, Result};
use crate::io::config::{parse_attention, parse_style};
use crate::io::{
    encode_png, load_image, load_label_map, parse_layer_override, render_manifest, sha256_hex,
    ConfigOverrides, ManifestInputs,
};
use crate::painter::run_painting_with;
use crate::stroke_file::write_strokes;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "patchpaint",
    version,
    about = "Paint an image with optimized brush strokes"
)]
struct Args {
    #[arg(long)]
    input: Option<PathBuf>,
    /// 8-bit grayscale label map, one layer per distinct value
    #[arg(long)]
    masks: Option<PathBuf>,
    #[arg(long, value_parser = ["realistic", "painterly", "abstract"])]
    style: Option<String>,
    #[arg(long)]
    passes: Option<usize>,
    #[arg(long)]
    strokes_per_patch: Option<usize>,
    #[arg(long, value_parser = ["uniform", "selective"])]
    attention: Option<String>,
    #[arg(long)]
    v_patches: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    thickness: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, overrides_with = "no_snapshots", action = ArgAction::SetTrue)]
    snapshots: bool,
    #[arg(long, action = ArgAction::SetTrue)]
    no_snapshots: bool,
    /// Blend masked strokes as M(1-a) + rgb·mask
    #[arg(long, action = ArgAction::SetTrue)]
    paper_literal_masking: bool,
    /// Flat TOML file with the same keys as the long flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// K:P,T,V (repeatable)
    #[arg(long = "layer-override")]
    layer_override: Vec<String>,
    /// Worker threads for patch optimization (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, short, action = ArgAction::SetTrue)]
    quiet: bool,
}

impl Args {
    fn overrides(&self) -> Result<ConfigOverrides> {
        Ok(ConfigOverrides {
            input: self.input.clone(),
            masks: self.masks.clone(),
            out: self.out.clone(),
            style: self.style.as_deref().map(parse_style).transpose()?,
            passes: self.passes,
            strokes_per_patch: self.strokes_per_patch,
            attention: self.attention.as_deref().map(parse_attention).transpose()?,
            v_patches: self.v_patches,
            gamma: self.gamma,
            alpha: self.alpha,
            beta: self.beta,
            thickness: self.thickness,
            iters: self.iters,
            lr: self.lr,
            seed: self.seed,
            snapshots: if self.no_snapshots {
                Some(false)
            } else if self.snapshots {
                Some(true)
            } else {
                None
            },
            paper_literal_masking: self.paper_literal_masking.then_some(true),
            layer_overrides: self
                .layer_override
                .iter()
                .map(|s| parse_layer_override(s))
                .collect::<Result<_>>()?,
        })
    }
}

/// Exit code for an error category.
pub fn exit_code(err: &PaintError) -> i32 {
    match err {
        PaintError::InvalidConfig(_) => EXIT_CONFIG,
        PaintError::Io(_) | PaintError::Image(_) | PaintError::Parse { .. } => EXIT_IO,
        _ => EXIT_RUNTIME,
    }
}

/// Run the tool on `argv` (including the program name) and return the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("patchpaint: {e}");
            exit_code(&e)
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn run(args: &Args) -> Result<()> {
    let file = match &args.config {
        Some(path) => {
            let bytes = read_file(path)?;
            let text = String::from_utf8(bytes)
                .map_err(|_| PaintError::config("config file is not UTF-8"))?;
            ConfigOverrides::from_toml(&text)?
        }
        None => ConfigOverrides::default(),
    };
    let merged = file.merged(&args.overrides()?);
    let input = merged
        .input
        .clone()
        .ok_or_else(|| PaintError::config("--input is required"))?;
    let out_dir = merged
        .out
        .clone()
        .ok_or_else(|| PaintError::config("--out is required"))?;
    if args.workers == Some(0) {
        return Err(PaintError::config("--workers must be at least 1"));
    }
    let cfg = merged.resolve()?;
    let snapshots = merged.snapshots.unwrap_or(true);

    let input_bytes = read_file(&input)?;
    let image = load_image(&input)?;
    let (labels, masks) = match &merged.masks {
        Some(path) => {
            let bytes = read_file(path)?;
            (
                Some(load_label_map(path)?),
                Some((path.display().to_string(), sha256_hex(&bytes))),
            )
        }
        None => (None, None),
    };
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", out_dir.display())))?;

    let quiet = args.quiet;
    let mut progress = |snap: &crate::painter::PassSnapshot| {
        if !quiet {
            eprintln!(
                "pass {}: l1 {:.5}, {} strokes, {:.1} s",
                snap.pass, snap.l1, snap.strokes_added, snap.seconds
            );
        }
    };
    let mut paint = || run_painting_with(&image, labels.as_ref(), &cfg, None, &mut progress);
    let painting = match args.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PaintError::config(format!("cannot start {n} workers: {e}")))?
            .install(paint)?,
        None => paint()?,
    };

    let mut outputs = Vec::new();
    let mut emit = |name: String, bytes: &[u8]| -> Result<()> {
        write_file(&out_dir.join(&name), bytes)?;
        outputs.push(name);
        Ok(())
    };
    emit("final.png".into(), &encode_png(&painting.raster)?)?;
    if snapshots {
        for snap in &painting.snapshots {
            emit(
                format!("pass_{:02}.png", snap.pass),
                &encode_png(&snap.raster)?,
            )?;
        }
    }
    emit(
        "strokes.txt".into(),
        &write_strokes(&painting.record, &painting.meta)?,
    )?;
    emit("heatmap.png".into(), &encode_png(&painting.density)?)?;
    outputs.push("manifest.txt".into());
    let inputs = ManifestInputs {
        input: input.display().to_string(),
        input_sha256: sha256_hex(&input_bytes),
        masks,
        outputs,
    };
    write_file(
        &out_dir.join("manifest.txt"),
        render_manifest(&inputs, &cfg, &painting).as_bytes(),
    )?;
    Ok(())
}
