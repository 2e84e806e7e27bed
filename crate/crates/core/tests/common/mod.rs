#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use patchpaint::compositor::MaskingMode;
use patchpaint::io::{load_image, LabelMap};
use patchpaint::objectives::LossWeights;
use patchpaint::painter::{patch_loss_and_grad, PatchContext};
use patchpaint::raster::Raster;
use patchpaint::renderer::{alpha_vjp, rasterize, Footprint};
use patchpaint::stroke::{Stroke, PARAM_COUNT, PATCH_SIDE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TEST_IMAGES: [&str; 5] = ["astronaut", "chelsea", "coffee", "rocket", "hubble"];

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn test_image(name: &str) -> Raster {
    load_image(&data_path(&format!("{name}.png"))).expect("test image")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_raster(rng: &mut ChaCha8Rng, w: usize, h: usize, c: usize) -> Raster {
    Raster::from_fn(w, h, c, |_, _, _| rng.random::<f64>())
}

/// Random valid stroke with control points kept away from the patch border.
pub fn random_stroke(rng: &mut ChaCha8Rng) -> Stroke {
    let mut pt = || (rng.random_range(0.15..0.85), rng.random_range(0.15..0.85));
    let (p0, p1, p2) = (pt(), pt(), pt());
    Stroke::new(
        p0,
        p1,
        p2,
        (rng.random_range(0.02..0.15), rng.random_range(0.02..0.15)),
        (rng.random_range(0.3..1.0), rng.random_range(0.3..1.0)),
        [rng.random(), rng.random(), rng.random()],
    )
}

fn nudged(s: &Stroke, k: usize, delta: f64) -> Stroke {
    let mut p = *s.params();
    p[k] += delta;
    Stroke::from_params(p)
}

fn bbox(fp: &Footprint) -> (usize, usize, usize, usize) {
    (fp.x0, fp.y0, fp.width, fp.height)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FdStats {
    pub compared: usize,
    pub excluded: usize,
    pub failures: usize,
    pub max_rel: f64,
}

impl FdStats {
    fn record(&mut self, analytic: f64, fd: f64, tol: f64) {
        if fd.abs() <= 1e-6 {
            return;
        }
        let rel = (analytic - fd).abs() / fd.abs();
        self.compared += 1;
        self.max_rel = self.max_rel.max(rel);
        if rel >= tol {
            self.failures += 1;
        }
    }
}

/// Central differences of per-pixel alpha against the renderer's
/// vector-Jacobian product, for `strokes` random strokes and `pixels` random
/// covered pixels each. Pixels whose nearest sample or footprint membership
/// changes under the perturbation are excluded.
pub fn renderer_fd_check(strokes: usize, pixels: usize, h: f64, tol: f64, seed: u64) -> FdStats {
    let mut r = rng(seed);
    let mut stats = FdStats::default();
    for _ in 0..strokes {
        let s = random_stroke(&mut r);
        let fp = rasterize(&s, PATCH_SIDE);
        let covered: Vec<usize> = (0..fp.alpha.len())
            .filter(|&i| fp.alpha[i] > 1e-3)
            .collect();
        assert!(!covered.is_empty());
        let chosen: Vec<(usize, usize)> = (0..pixels)
            .map(|_| {
                let i = covered[r.random_range(0..covered.len())];
                (fp.x0 + i % fp.width, fp.y0 + i / fp.width)
            })
            .collect();
        let analytic: Vec<[f64; PARAM_COUNT]> = chosen
            .iter()
            .map(|&(x, y)| {
                let mut up = vec![0.0; fp.alpha.len()];
                up[(y - fp.y0) * fp.width + (x - fp.x0)] = 1.0;
                alpha_vjp(&s, PATCH_SIDE, &fp, &up)
            })
            .collect();
        for k in 0..10 {
            let plus = rasterize(&nudged(&s, k, h), PATCH_SIDE);
            let minus = rasterize(&nudged(&s, k, -h), PATCH_SIDE);
            for (j, &(x, y)) in chosen.iter().enumerate() {
                let u = fp.nearest_sample(x, y);
                if plus.nearest_sample(x, y) != u || minus.nearest_sample(x, y) != u {
                    stats.excluded += 1;
                    continue;
                }
                let fd = (plus.alpha_at(x, y) - minus.alpha_at(x, y)) / (2.0 * h);
                stats.record(analytic[j][k], fd, tol);
            }
        }
    }
    stats
}

#[derive(Debug, Default, Clone, Copy)]
pub struct EndToEndStats {
    pub coords: FdStats,
    /// Largest `|g − g_fd| / |g_fd|` over per-stroke gradient vectors.
    pub max_vector_rel: f64,
    pub vectors: usize,
}

/// Gradient of render→blend→L1 on natural-image patches against central
/// differences of the loss. Strokes have constant radius and opacity along
/// the curve, so alpha is continuous where the nearest sample switches; the
/// switches still put kinks in the loss, which central differences straddle.
/// A parameter is excluded when the perturbation moves a footprint boundary
/// across a pixel center.
pub fn end_to_end_fd_check(
    cases: usize,
    strokes_per_case: usize,
    h: f64,
    tol: f64,
    seed: u64,
) -> EndToEndStats {
    let mut r = rng(seed);
    let mut stats = EndToEndStats::default();
    for case in 0..cases {
        let img = test_image(TEST_IMAGES[case % TEST_IMAGES.len()]);
        let (ox, oy) = (
            r.random_range(0..=img.width() - PATCH_SIDE),
            r.random_range(0..=img.height() - PATCH_SIDE),
        );
        let reference = img.crop(ox, oy, PATCH_SIDE, PATCH_SIDE).unwrap();
        let canvas = Raster::filled(PATCH_SIDE, PATCH_SIDE, &reference.mean_color());
        let strokes: Vec<Stroke> = (0..strokes_per_case)
            .map(|_| {
                let s = random_stroke(&mut r);
                let mut p = *s.params();
                p[7] = p[6];
                p[9] = p[8];
                Stroke::from_params(p)
            })
            .collect();
        let mask = Raster::from_fn(PATCH_SIDE, PATCH_SIDE, 1, |x, y, _| {
            if x + y < 150 {
                1.0
            } else {
                0.0
            }
        });
        let (mask, masking) = match case % 3 {
            0 => (None, MaskingMode::Confined),
            1 => (Some(&mask), MaskingMode::Confined),
            _ => (Some(&mask), MaskingMode::Literal),
        };
        let ctx = PatchContext {
            reference: &reference,
            canvas: &canvas,
            mask,
            masking,
            weights: LossWeights {
                alpha: 1.0,
                beta: 0.0,
            },
            features: None,
        };
        let (_, grads) = patch_loss_and_grad(&strokes, &ctx).unwrap();
        for j in 0..strokes.len() {
            let (mut diff2, mut norm2) = (0.0, 0.0);
            for k in 0..PARAM_COUNT {
                let mut plus = strokes.clone();
                plus[j] = nudged(&strokes[j], k, h);
                let mut minus = strokes.clone();
                minus[j] = nudged(&strokes[j], k, -h);
                let b0 = bbox(&rasterize(&strokes[j], PATCH_SIDE));
                if bbox(&rasterize(&plus[j], PATCH_SIDE)) != b0
                    || bbox(&rasterize(&minus[j], PATCH_SIDE)) != b0
                {
                    stats.coords.excluded += 1;
                    continue;
                }
                let lp = patch_loss_and_grad(&plus, &ctx).unwrap().0;
                let lm = patch_loss_and_grad(&minus, &ctx).unwrap().0;
                let fd = (lp - lm) / (2.0 * h);
                stats.coords.record(grads[j][k], fd, tol);
                diff2 += (grads[j][k] - fd).powi(2);
                norm2 += fd * fd;
            }
            if norm2 > 0.0 {
                stats.vectors += 1;
                stats.max_vector_rel = stats.max_vector_rel.max((diff2 / norm2).sqrt());
            }
        }
    }
    stats
}

/// Label map with a disc of label 200 on a label 10 background.
pub fn disc_labels(w: usize, h: usize) -> LabelMap {
    let (cx, cy, rad) = (w as f64 * 0.55, h as f64 * 0.45, w.min(h) as f64 * 0.3);
    LabelMap::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        if dx * dx + dy * dy < rad * rad {
            200
        } else {
            10
        }
    })
}

/// Box-downsample an image by an integer factor, then crop.
pub fn shrink(img: &Raster, factor: usize, w: usize, h: usize) -> Raster {
    Raster::from_fn(w, h, img.channels(), |x, y, c| {
        let mut s = 0.0;
        for dy in 0..factor {
            for dx in 0..factor {
                s += img.get(x * factor + dx, y * factor + dy, c);
            }
        }
        s / (factor * factor) as f64
    })
}

/// Mean absolute difference, computed directly.
pub fn mean_abs(a: &Raster, b: &Raster) -> f64 {
    assert_eq!(a.data().len(), b.data().len());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
        / a.data().len() as f64
}
