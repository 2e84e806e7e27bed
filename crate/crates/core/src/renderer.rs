//! Analytic, differentiable stroke rasterizer.
//!
//! Coverage model: the centerline `Q(t) = (1-t)²P0 + 2t(1-t)P1 + t²P2` is
//! sampled at `CURVE_SAMPLES` evenly spaced parameters. Each pixel takes the
//! nearest sample `u*` and gets
//!
//! ```text
//! alpha = o(t_u*) · sigmoid((r(t_u*)·side − d) / AA_WIDTH),  d = sqrt(|p − Q(t_u*)|² + CORE_SOFTENING²)
//! ```
//!
//! where `p` is the pixel center, distances are in pixels, and radius and
//! opacity are linearly interpolated along the stroke. Gradients treat `u*` as
//! locally constant.
//!
//! All geometry is evaluated in pixel units relative to the patch center,
//! which makes the rasterizer exactly mirror-symmetric for control points on a
//! dyadic lattice.

use crate::raster::Raster;
use crate::stroke::{param, Stroke, PARAM_COUNT};

/// Number of centerline samples.
pub const CURVE_SAMPLES: usize = 24;

/// Sigmoid falloff width, in pixels.
pub const AA_WIDTH: f64 = 1.0;

/// Softens the distance cone at the centerline so coverage is smooth there.
/// Shifts an edge at radius `R` outward by about `CORE_SOFTENING² / 2R` pixels.
pub const CORE_SOFTENING: f64 = 0.5;

/// Footprint margin beyond the stroke radius, in units of `AA_WIDTH`.
/// `sigmoid(-8) ≈ 3.4e-4`, so truncated coverage stays below the 0.001 floor.
pub const FOOTPRINT_MARGIN: f64 = 8.0;

/// Precomputed centerline samples of one stroke at a given patch side.
#[derive(Clone, Debug)]
pub(crate) struct CurveSamples {
    side: f64,
    half: f64,
    /// Sample points, centered pixel coordinates.
    q: [[f64; 2]; CURVE_SAMPLES],
    t: [f64; CURVE_SAMPLES],
    bernstein: [[f64; 3]; CURVE_SAMPLES],
    radius_px: [f64; CURVE_SAMPLES],
    opacity: [f64; CURVE_SAMPLES],
    /// Inclusive range of admissible pixel centers, centered coordinates.
    lo: [f64; 2],
    hi: [f64; 2],
}

impl CurveSamples {
    pub(crate) fn new(stroke: &Stroke, side: usize) -> Self {
        let sidef = side as f64;
        let half = sidef / 2.0;
        let p = stroke.params();
        let ctrl = [
            [p[param::X0] * sidef - half, p[param::Y0] * sidef - half],
            [p[param::X1] * sidef - half, p[param::Y1] * sidef - half],
            [p[param::X2] * sidef - half, p[param::Y2] * sidef - half],
        ];
        let (r0, r2) = stroke.radii();
        let (o0, o2) = stroke.opacities();
        let mut q = [[0.0; 2]; CURVE_SAMPLES];
        let mut t = [0.0; CURVE_SAMPLES];
        let mut bernstein = [[0.0; 3]; CURVE_SAMPLES];
        let mut radius_px = [0.0; CURVE_SAMPLES];
        let mut opacity = [0.0; CURVE_SAMPLES];
        for u in 0..CURVE_SAMPLES {
            let tu = u as f64 / (CURVE_SAMPLES - 1) as f64;
            let s = 1.0 - tu;
            let b = [s * s, 2.0 * tu * s, tu * tu];
            for axis in 0..2 {
                q[u][axis] = b[0] * ctrl[0][axis] + b[1] * ctrl[1][axis] + b[2] * ctrl[2][axis];
            }
            t[u] = tu;
            bernstein[u] = b;
            radius_px[u] = (s * r0 + tu * r2) * sidef;
            opacity[u] = s * o0 + tu * o2;
        }
        let pad = r0.max(r2) * sidef + FOOTPRINT_MARGIN * AA_WIDTH;
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for axis in 0..2 {
            let mn = ctrl[0][axis].min(ctrl[1][axis]).min(ctrl[2][axis]);
            let mx = ctrl[0][axis].max(ctrl[1][axis]).max(ctrl[2][axis]);
            lo[axis] = mn - pad;
            hi[axis] = mx + pad;
        }
        CurveSamples {
            side: sidef,
            half,
            q,
            t,
            bernstein,
            radius_px,
            opacity,
            lo,
            hi,
        }
    }

    #[inline]
    fn center(&self, i: usize) -> f64 {
        i as f64 + 0.5 - self.half
    }

    /// Contiguous pixel index range `[start, end)` along `axis` whose centers
    /// fall inside the footprint bounds.
    fn pixel_range(&self, axis: usize, n: usize) -> (usize, usize) {
        let mut start = n;
        let mut end = 0;
        let guess_lo = (self.lo[axis] + self.half - 1.5).floor().max(0.0) as usize;
        let guess_hi = ((self.hi[axis] + self.half + 1.5).ceil().max(0.0) as usize).min(n);
        for i in guess_lo.min(n)..guess_hi {
            let c = self.center(i);
            if c >= self.lo[axis] && c <= self.hi[axis] {
                start = start.min(i);
                end = i + 1;
            }
        }
        if start >= end {
            (0, 0)
        } else {
            (start, end)
        }
    }

    #[inline]
    fn nearest(&self, cx: f64, cy: f64) -> (usize, f64) {
        let mut best = f64::INFINITY;
        let mut bu = 0;
        for (u, q) in self.q.iter().enumerate() {
            let dx = cx - q[0];
            let dy = cy - q[1];
            let d2 = dx * dx + dy * dy;
            if d2 < best {
                best = d2;
                bu = u;
            }
        }
        (bu, best)
    }

    #[inline]
    fn alpha_from(&self, u: usize, d2: f64) -> f64 {
        let z = (self.radius_px[u] - (d2 + CORE_SOFTENING * CORE_SOFTENING).sqrt()) / AA_WIDTH;
        self.opacity[u] * sigmoid(z)
    }

    /// Alpha and its partial derivatives with respect to `x0 … o2`
    /// (parameter slots 0..10) at one pixel center, for a frozen sample `u`.
    #[inline]
    fn alpha_partials(&self, u: usize, cx: f64, cy: f64) -> (f64, [f64; 10]) {
        let dx = cx - self.q[u][0];
        let dy = cy - self.q[u][1];
        let d = (dx * dx + dy * dy + CORE_SOFTENING * CORE_SOFTENING).sqrt();
        let z = (self.radius_px[u] - d) / AA_WIDTH;
        let s = sigmoid(z);
        let o = self.opacity[u];
        let alpha = o * s;
        let ds = s * (1.0 - s) / AA_WIDTH;
        let tu = self.t[u];
        let mut g = [0.0; 10];
        // ∂alpha/∂Q = o·ds·(dx, dy)/d ; ∂Q/∂P_k = b_k·side
        let gx = o * ds * dx / d * self.side;
        let gy = o * ds * dy / d * self.side;
        let b = &self.bernstein[u];
        for k in 0..3 {
            g[2 * k] = gx * b[k];
            g[2 * k + 1] = gy * b[k];
        }
        g[param::R0] = o * ds * (1.0 - tu) * self.side;
        g[param::R2] = o * ds * tu * self.side;
        g[param::O0] = (1.0 - tu) * s;
        g[param::O2] = tu * s;
        (alpha, g)
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Coverage of one stroke, restricted to its bounding footprint.
///
/// Pixels outside the footprint have alpha exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Footprint {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
    /// Row-major alpha values over the footprint.
    pub alpha: Vec<f64>,
    nearest: Vec<u8>,
}

impl Footprint {
    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.width && y >= self.y0 && y < self.y0 + self.height
    }

    /// Alpha at patch pixel `(x, y)`; zero outside the footprint.
    pub fn alpha_at(&self, x: usize, y: usize) -> f64 {
        if self.contains(x, y) {
            self.alpha[(y - self.y0) * self.width + (x - self.x0)]
        } else {
            0.0
        }
    }

    /// Index of the centerline sample nearest to pixel `(x, y)`.
    pub fn nearest_sample(&self, x: usize, y: usize) -> Option<usize> {
        if self.contains(x, y) {
            Some(self.nearest[(y - self.y0) * self.width + (x - self.x0)] as usize)
        } else {
            None
        }
    }

    pub fn total_alpha(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// Rasterize `stroke` over a `side`×`side` patch.
pub fn rasterize(stroke: &Stroke, side: usize) -> Footprint {
    assert!(side >= 8, "patch side must be at least 8 pixels");
    let cs = CurveSamples::new(stroke, side);
    rasterize_samples(&cs, side)
}

fn rasterize_samples(cs: &CurveSamples, side: usize) -> Footprint {
    let (xs, xe) = cs.pixel_range(0, side);
    let (ys, ye) = cs.pixel_range(1, side);
    let (w, h) = (xe - xs, ye - ys);
    let mut alpha = Vec::with_capacity(w * h);
    let mut nearest = Vec::with_capacity(w * h);
    for y in ys..ye {
        let cy = cs.center(y);
        for x in xs..xe {
            let (u, d2) = cs.nearest(cs.center(x), cy);
            alpha.push(cs.alpha_from(u, d2));
            nearest.push(u as u8);
        }
    }
    Footprint {
        x0: xs,
        y0: ys,
        width: w,
        height: h,
        alpha,
        nearest,
    }
}

/// Vector-Jacobian product of the footprint alpha: given `upstream[i]` =
/// ∂L/∂alpha at footprint pixel `i`, returns ∂L/∂(x0 … o2) in slots 0..10.
/// Color slots are left at zero.
pub fn alpha_vjp(
    stroke: &Stroke,
    side: usize,
    footprint: &Footprint,
    upstream: &[f64],
) -> [f64; PARAM_COUNT] {
    debug_assert_eq!(upstream.len(), footprint.alpha.len());
    let cs = CurveSamples::new(stroke, side);
    let mut acc = [0.0; PARAM_COUNT];
    let mut i = 0;
    for y in footprint.y0..footprint.y0 + footprint.height {
        let cy = cs.center(y);
        for x in footprint.x0..footprint.x0 + footprint.width {
            let g = upstream[i];
            if g != 0.0 {
                let (_, p) = cs.alpha_partials(footprint.nearest[i] as usize, cs.center(x), cy);
                for k in 0..10 {
                    acc[k] += g * p[k];
                }
            }
            i += 1;
        }
    }
    acc
}

/// Rendered stroke: alpha and alpha-premultiplied color over a full patch.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchBuffer {
    /// Three channels, premultiplied: `rgb = alpha · color`.
    pub rgb: Raster,
    /// Single channel.
    pub alpha: Raster,
}

impl PatchBuffer {
    pub fn side(&self) -> usize {
        self.alpha.width()
    }
}

/// Per-parameter derivative rasters of a rendered stroke.
#[derive(Clone, Debug)]
pub struct StrokeGradient {
    /// `alpha[k]` holds ∂alpha/∂param_k, single channel.
    pub alpha: Vec<Raster>,
    /// `rgb[k]` holds ∂rgb/∂param_k, three channels.
    pub rgb: Vec<Raster>,
}

fn expand(fp: &Footprint, color: [f64; 3], side: usize) -> PatchBuffer {
    let mut alpha = Raster::new(side, side, 1);
    let mut rgb = Raster::new(side, side, 3);
    let mut i = 0;
    for y in fp.y0..fp.y0 + fp.height {
        for x in fp.x0..fp.x0 + fp.width {
            let a = fp.alpha[i];
            alpha.set(x, y, 0, a);
            for (c, col) in color.iter().enumerate() {
                rgb.set(x, y, c, a * col);
            }
            i += 1;
        }
    }
    PatchBuffer { rgb, alpha }
}

/// Render a valid stroke into a `side`×`side` patch buffer.
pub fn render_stroke(stroke: &Stroke, side: usize) -> PatchBuffer {
    let fp = rasterize(stroke, side);
    expand(&fp, stroke.color(), side)
}

/// Render a stroke together with the derivative of every output pixel with
/// respect to all 13 parameters.
pub fn render_stroke_with_grad(stroke: &Stroke, side: usize) -> (PatchBuffer, StrokeGradient) {
    let cs = CurveSamples::new(stroke, side);
    let fp = rasterize_samples(&cs, side);
    let color = stroke.color();
    let buffer = expand(&fp, color, side);
    let mut ga: Vec<Raster> = (0..PARAM_COUNT)
        .map(|_| Raster::new(side, side, 1))
        .collect();
    let mut gc: Vec<Raster> = (0..PARAM_COUNT)
        .map(|_| Raster::new(side, side, 3))
        .collect();
    let mut i = 0;
    for y in fp.y0..fp.y0 + fp.height {
        let cy = cs.center(y);
        for x in fp.x0..fp.x0 + fp.width {
            let (a, p) = cs.alpha_partials(fp.nearest[i] as usize, cs.center(x), cy);
            for k in 0..10 {
                ga[k].set(x, y, 0, p[k]);
                for (c, col) in color.iter().enumerate() {
                    gc[k].set(x, y, c, p[k] * col);
                }
            }
            for c in 0..3 {
                gc[param::RED + c].set(x, y, c, a);
            }
            i += 1;
        }
    }
    (buffer, StrokeGradient { alpha: ga, rgb: gc })
}
