//! Fixed-filter feature pyramid used as the default perceptual backbone.
//!
//! Four levels at scales 1, 1/2, 1/4, 1/8. At each level, five channels per
//! position: luminance, forward-difference horizontal and vertical gradients,
//! and two oriented difference-of-Gaussian responses. Every stage is linear,
//! so the adjoint is exact.

use super::{FeatureExtractor, FeatureStack};
use crate::error::{PaintError, Result};
use crate::raster::Raster;

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];
pub const PYRAMID_LEVELS: usize = 4;
pub const PYRAMID_CHANNELS: usize = 5;

#[derive(Clone, Debug)]
pub struct PyramidExtractor {
    levels: usize,
    narrow: Vec<f64>,
    wide: Vec<f64>,
}

impl Default for PyramidExtractor {
    fn default() -> Self {
        PyramidExtractor {
            levels: PYRAMID_LEVELS,
            narrow: gaussian_kernel(1.0),
            wide: gaussian_kernel(2.0),
        }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

#[derive(Clone, Debug)]
struct Plane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl Plane {
    fn zeros(w: usize, h: usize) -> Self {
        Plane {
            w,
            h,
            data: vec![0.0; w * h],
        }
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.w + x]
    }

    fn add(&mut self, other: &Plane) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

fn downsample(p: &Plane) -> Plane {
    let (w, h) = ((p.w / 2).max(1), (p.h / 2).max(1));
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let (x0, y0) = ((2 * x).min(p.w - 1), (2 * y).min(p.h - 1));
            let (x1, y1) = ((2 * x + 1).min(p.w - 1), (2 * y + 1).min(p.h - 1));
            out.data[y * w + x] =
                (p.at(x0, y0) + p.at(x1, y0) + p.at(x0, y1) + p.at(x1, y1)) * 0.25;
        }
    }
    out
}

fn downsample_adjoint(g: &Plane, w: usize, h: usize) -> Plane {
    let mut out = Plane::zeros(w, h);
    for y in 0..g.h {
        for x in 0..g.w {
            let v = g.at(x, y) * 0.25;
            let (x0, y0) = ((2 * x).min(w - 1), (2 * y).min(h - 1));
            let (x1, y1) = ((2 * x + 1).min(w - 1), (2 * y + 1).min(h - 1));
            out.data[y0 * w + x0] += v;
            out.data[y0 * w + x1] += v;
            out.data[y1 * w + x0] += v;
            out.data[y1 * w + x1] += v;
        }
    }
    out
}

/// `out[i] = in[i + 1] − in[i]` along `axis`, with replicated border.
fn forward_diff(p: &Plane, axis: Axis) -> Plane {
    let mut out = Plane::zeros(p.w, p.h);
    for y in 0..p.h {
        for x in 0..p.w {
            let next = match axis {
                Axis::X => p.at((x + 1).min(p.w - 1), y),
                Axis::Y => p.at(x, (y + 1).min(p.h - 1)),
            };
            out.data[y * p.w + x] = next - p.at(x, y);
        }
    }
    out
}

fn forward_diff_adjoint(g: &Plane, axis: Axis) -> Plane {
    let mut out = Plane::zeros(g.w, g.h);
    for y in 0..g.h {
        for x in 0..g.w {
            let v = g.at(x, y);
            let next = match axis {
                Axis::X => y * g.w + (x + 1).min(g.w - 1),
                Axis::Y => (y + 1).min(g.h - 1) * g.w + x,
            };
            out.data[next] += v;
            out.data[y * g.w + x] -= v;
        }
    }
    out
}

fn convolve(p: &Plane, kernel: &[f64], axis: Axis) -> Plane {
    let r = (kernel.len() / 2) as isize;
    let mut out = Plane::zeros(p.w, p.h);
    for y in 0..p.h {
        for x in 0..p.w {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                let off = k as isize - r;
                let v = match axis {
                    Axis::X => p.at((x as isize + off).clamp(0, p.w as isize - 1) as usize, y),
                    Axis::Y => p.at(x, (y as isize + off).clamp(0, p.h as isize - 1) as usize),
                };
                acc += kv * v;
            }
            out.data[y * p.w + x] = acc;
        }
    }
    out
}

fn convolve_adjoint(g: &Plane, kernel: &[f64], axis: Axis) -> Plane {
    let r = (kernel.len() / 2) as isize;
    let mut out = Plane::zeros(g.w, g.h);
    for y in 0..g.h {
        for x in 0..g.w {
            let v = g.at(x, y);
            for (k, kv) in kernel.iter().enumerate() {
                let off = k as isize - r;
                let idx = match axis {
                    Axis::X => y * g.w + (x as isize + off).clamp(0, g.w as isize - 1) as usize,
                    Axis::Y => (y as isize + off).clamp(0, g.h as isize - 1) as usize * g.w + x,
                };
                out.data[idx] += kv * v;
            }
        }
    }
    out
}

fn sub(a: &Plane, b: &Plane) -> Plane {
    Plane {
        w: a.w,
        h: a.h,
        data: a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect(),
    }
}

fn negate(a: &Plane) -> Plane {
    Plane {
        w: a.w,
        h: a.h,
        data: a.data.iter().map(|v| -v).collect(),
    }
}

impl PyramidExtractor {
    fn luminance(img: &Raster) -> Result<Plane> {
        let data = match img.channels() {
            1 => img.data().to_vec(),
            3 => img
                .data()
                .chunks_exact(3)
                .map(|p| LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2])
                .collect(),
            c => {
                return Err(PaintError::Extractor(format!(
                    "{c}-channel input is not supported"
                )))
            }
        };
        if img.width() == 0 || img.height() == 0 {
            return Err(PaintError::Extractor("empty input".into()));
        }
        Ok(Plane {
            w: img.width(),
            h: img.height(),
            data,
        })
    }

    /// Oriented DoG: difference of narrow and wide blurs along `across`,
    /// smoothed by the narrow blur along the other axis.
    fn dog(&self, p: &Plane, across: Axis) -> Plane {
        let along = match across {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        };
        let band = sub(
            &convolve(p, &self.narrow, across),
            &convolve(p, &self.wide, across),
        );
        convolve(&band, &self.narrow, along)
    }

    fn dog_adjoint(&self, g: &Plane, across: Axis) -> Plane {
        let along = match across {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        };
        let gb = convolve_adjoint(g, &self.narrow, along);
        let mut out = convolve_adjoint(&gb, &self.narrow, across);
        out.add(&negate(&convolve_adjoint(&gb, &self.wide, across)));
        out
    }

    fn level_planes(&self, img: &Raster) -> Result<Vec<Plane>> {
        let mut planes = vec![Self::luminance(img)?];
        for _ in 1..self.levels {
            let next = downsample(planes.last().unwrap());
            planes.push(next);
        }
        Ok(planes)
    }
}

impl FeatureExtractor for PyramidExtractor {
    fn extract(&self, img: &Raster) -> Result<FeatureStack> {
        let planes = self.level_planes(img)?;
        let mut maps = Vec::with_capacity(planes.len());
        for p in &planes {
            let chans = [
                p.clone(),
                forward_diff(p, Axis::X),
                forward_diff(p, Axis::Y),
                self.dog(p, Axis::X),
                self.dog(p, Axis::Y),
            ];
            let mut data = Vec::with_capacity(p.w * p.h * PYRAMID_CHANNELS);
            for i in 0..p.w * p.h {
                for c in &chans {
                    data.push(c.data[i]);
                }
            }
            maps.push(Raster::from_vec(p.w, p.h, PYRAMID_CHANNELS, data)?);
        }
        Ok(FeatureStack { maps })
    }

    fn backward(&self, img: &Raster, grad: &FeatureStack) -> Result<Raster> {
        let planes = self.level_planes(img)?;
        if grad.maps.len() != planes.len() {
            return Err(PaintError::shape(
                "feature gradient has the wrong number of layers",
            ));
        }
        let mut carry: Option<Plane> = None;
        for (level, p) in planes.iter().enumerate().rev() {
            let gm = &grad.maps[level];
            if gm.width() != p.w || gm.height() != p.h || gm.channels() != PYRAMID_CHANNELS {
                return Err(PaintError::shape(format!(
                    "feature gradient layer {level} has the wrong shape"
                )));
            }
            let channel = |c: usize| Plane {
                w: p.w,
                h: p.h,
                data: gm
                    .data()
                    .iter()
                    .skip(c)
                    .step_by(PYRAMID_CHANNELS)
                    .copied()
                    .collect(),
            };
            let mut g = channel(0);
            g.add(&forward_diff_adjoint(&channel(1), Axis::X));
            g.add(&forward_diff_adjoint(&channel(2), Axis::Y));
            g.add(&self.dog_adjoint(&channel(3), Axis::X));
            g.add(&self.dog_adjoint(&channel(4), Axis::Y));
            if let Some(c) = carry.take() {
                g.add(&downsample_adjoint(&c, p.w, p.h));
            }
            carry = Some(g);
        }
        let g = carry.expect("at least one level");
        match img.channels() {
            1 => Raster::from_vec(g.w, g.h, 1, g.data),
            _ => Ok(Raster::from_fn(g.w, g.h, 3, |x, y, c| LUMA[c] * g.at(x, y))),
        }
    }

    fn is_differentiable(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn channel_energy(m: &Raster, c: usize) -> f64 {
        m.data()
            .iter()
            .skip(c)
            .step_by(m.channels())
            .map(|v| v * v)
            .sum()
    }

    #[test]
    fn constant_input_has_no_gradient_response() {
        let fx = PyramidExtractor::default();
        let s = fx
            .extract(&Raster::filled(64, 64, &[0.3, 0.6, 0.2]))
            .unwrap();
        assert_eq!(s.maps.len(), 4);
        assert_eq!((s.maps[3].width(), s.maps[3].height()), (8, 8));
        for m in &s.maps {
            assert_eq!(channel_energy(m, 1), 0.0);
            assert_eq!(channel_energy(m, 2), 0.0);
        }
    }

    #[test]
    fn half_turn_preserves_level_energies() {
        let fx = PyramidExtractor::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let img = Raster::from_fn(64, 64, 3, |_, _, _| rng.random());
        let a = fx.extract(&img).unwrap();
        let b = fx.extract(&img.rotate_180()).unwrap();
        for (ma, mb) in a.maps.iter().zip(&b.maps) {
            for c in 0..PYRAMID_CHANNELS {
                let (ea, eb) = (channel_energy(ma, c), channel_energy(mb, c));
                assert!(
                    (ea - eb).abs() <= 1e-9 * ea.max(1.0),
                    "channel {c}: {ea} vs {eb}"
                );
            }
        }
    }

    #[test]
    fn step_edge_peaks_on_edge_column() {
        let fx = PyramidExtractor::default();
        let k = 21;
        let img = Raster::from_fn(48, 16, 1, |x, _, _| if x >= k { 1.0 } else { 0.0 });
        let m = &fx.extract(&img).unwrap().maps[0];
        // analytic response of the forward difference to a unit step at k:
        // 1 at column k-1, 0 elsewhere
        for y in 0..16 {
            for x in 0..48 {
                let expect = if x == k - 1 { 1.0 } else { 0.0 };
                assert_eq!(m.get(x, y, 1), expect);
            }
        }
    }

    #[test]
    fn backward_is_the_adjoint() {
        let fx = PyramidExtractor::default();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = Raster::from_fn(40, 24, 3, |_, _, _| rng.random::<f64>() - 0.5);
        let fxx = fx.extract(&x).unwrap();
        let y = FeatureStack {
            maps: fxx
                .maps
                .iter()
                .map(|m| {
                    Raster::from_fn(m.width(), m.height(), m.channels(), |_, _, _| {
                        rng.random::<f64>() - 0.5
                    })
                })
                .collect(),
        };
        let lhs: f64 = fxx
            .maps
            .iter()
            .zip(&y.maps)
            .map(|(a, b)| {
                a.data()
                    .iter()
                    .zip(b.data())
                    .map(|(p, q)| p * q)
                    .sum::<f64>()
            })
            .sum();
        let aty = fx.backward(&x, &y).unwrap();
        let rhs: f64 = x.data().iter().zip(aty.data()).map(|(p, q)| p * q).sum();
        assert!(
            (lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0),
            "{lhs} vs {rhs}"
        );
    }
}
