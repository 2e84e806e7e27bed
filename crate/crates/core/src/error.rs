use thiserror::Error;

/// Errors raised anywhere in the painting pipeline.
#[derive(Debug, Error)]
pub enum PaintError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numeric fault at patch {patch}, stroke {stroke}{}: {detail}", iteration_suffix(.iteration))]
    NumericFault {
        patch: usize,
        stroke: usize,
        iteration: Option<usize>,
        detail: String,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("feature extractor: {0}")]
    Extractor(String),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn iteration_suffix(iteration: &Option<usize>) -> String {
    match iteration {
        Some(i) => format!(", iteration {i}"),
        None => String::new(),
    }
}

impl PaintError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        PaintError::InvalidConfig(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        PaintError::ShapeMismatch(msg.into())
    }

    pub(crate) fn parse(offset: usize, msg: impl Into<String>) -> Self {
        PaintError::Parse {
            offset,
            message: msg.into(),
        }
    }

    /// Attach an optimizer iteration to a numeric fault.
    pub(crate) fn at_iteration(self, it: usize) -> Self {
        match self {
            PaintError::NumericFault {
                patch,
                stroke,
                detail,
                ..
            } => PaintError::NumericFault {
                patch,
                stroke,
                iteration: Some(it),
                detail,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, PaintError>;
