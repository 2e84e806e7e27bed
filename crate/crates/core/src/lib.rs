//! Stroke-based painting: an image is approximated by an ordered list of
//! quadratic Bézier brush strokes, optimized patch by patch with a
//! differentiable rasterizer, coarse to fine, optionally confined to
//! semantic layers.
//!
//! The usual entry point is [`painter::run_painting`]; the lower modules are
//! public for direct use and experimentation.

pub mod attention;
pub mod cli;
pub mod compositor;
pub mod error;
pub mod io;
pub mod objectives;
pub mod painter;
pub mod raster;
pub mod renderer;
pub mod stroke;
pub mod stroke_file;

pub use error::{PaintError, Result};
pub use raster::Raster;
pub use stroke::{Stroke, StrokeBatch};
