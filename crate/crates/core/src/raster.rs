use crate::error::{PaintError, Result};

/// Dense interleaved floating-point image, row-major, `channels` values per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Raster {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    /// A raster whose every pixel equals `value` (one entry per channel).
    pub fn filled(width: usize, height: usize, value: &[f64]) -> Self {
        let mut data = Vec::with_capacity(width * height * value.len());
        for _ in 0..width * height {
            data.extend_from_slice(value);
        }
        Raster {
            width,
            height,
            channels: value.len(),
            data,
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(PaintError::shape(format!(
                "{} values for a {width}x{height}x{channels} raster",
                data.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
        })
    }

    /// Build a raster by evaluating `f(x, y, channel)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Raster {
            width,
            height,
            channels,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        (y * self.width + x) * self.channels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.index(x, y) + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let i = self.index(x, y) + c;
        self.data[i] = v;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = self.index(x, y);
        &self.data[i..i + self.channels]
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn check_same_shape(&self, other: &Raster, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(PaintError::shape(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }

    /// Copy out the `w`×`h` block whose top-left pixel is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Raster> {
        if x + w > self.width || y + h > self.height {
            return Err(PaintError::Geometry(format!(
                "crop {w}x{h} at ({x}, {y}) exceeds {}x{} raster",
                self.width, self.height
            )));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(w * h * c);
        for row in y..y + h {
            let start = self.index(x, row);
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        Ok(Raster {
            width: w,
            height: h,
            channels: c,
            data,
        })
    }

    /// Overwrite the footprint of `patch` at `(x, y)`.
    pub fn paste(&mut self, patch: &Raster, x: usize, y: usize) -> Result<()> {
        if patch.channels != self.channels {
            return Err(PaintError::shape(format!(
                "paste of {}-channel patch into {}-channel raster",
                patch.channels, self.channels
            )));
        }
        if x + patch.width > self.width || y + patch.height > self.height {
            return Err(PaintError::Geometry(format!(
                "paste {}x{} at ({x}, {y}) exceeds {}x{} raster",
                patch.width, patch.height, self.width, self.height
            )));
        }
        let row_len = patch.width * patch.channels;
        for row in 0..patch.height {
            let dst = self.index(x, y + row);
            let src = row * row_len;
            self.data[dst..dst + row_len].copy_from_slice(&patch.data[src..src + row_len]);
        }
        Ok(())
    }

    /// Per-channel mean over all pixels.
    pub fn mean_color(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.channels];
        for px in self.data.chunks_exact(self.channels) {
            for (a, v) in acc.iter_mut().zip(px) {
                *a += v;
            }
        }
        let n = (self.width * self.height).max(1) as f64;
        acc.iter().map(|a| a / n).collect()
    }

    /// The raster rotated by 180 degrees.
    pub fn rotate_180(&self) -> Raster {
        Raster::from_fn(self.width, self.height, self.channels, |x, y, c| {
            self.get(self.width - 1 - x, self.height - 1 - y, c)
        })
    }
}
