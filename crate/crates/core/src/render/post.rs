//! Post-processing: bloom around the light marker and 8-bit tone mapping.

use serde::{Deserialize, Serialize};

use crate::image::{Image, Image8};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlowSettings {
    /// Mask values below this are dropped before blurring.
    pub threshold: f64,
    /// Kernel support radius in pixels; the Gaussian's sigma is a third of it.
    pub radius_px: f64,
    pub gain: f64,
}

impl Default for GlowSettings {
    fn default() -> Self {
        GlowSettings {
            threshold: 0.1,
            radius_px: 6.0,
            gain: 4.0,
        }
    }
}

impl GlowSettings {
    pub fn sigma(&self) -> f64 {
        (self.radius_px / 3.0).max(1e-6)
    }

    /// Unnormalized radial weight at squared pixel distance `d2`; zero
    /// outside the support disc.
    pub fn weight(&self, d2: f64) -> f64 {
        if d2 > self.radius_px * self.radius_px {
            0.0
        } else {
            let s = self.sigma();
            (-d2 / (2.0 * s * s)).exp()
        }
    }

    fn kernel_sum(&self) -> f64 {
        let r = self.radius_px.floor() as i64;
        let mut sum = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                sum += self.weight((dx * dx + dy * dy) as f64);
            }
        }
        sum
    }
}

/// Additive bloom: threshold the mask, blur it with a disc-truncated
/// Gaussian, scale by `gain` and add to every channel. Pixels farther than
/// `radius_px` from any above-threshold mask pixel are returned unchanged.
pub fn composite_glow(image: &Image, light_mask: &Image, glow: &GlowSettings) -> Image {
    assert_eq!(
        (image.width, image.height),
        (light_mask.width, light_mask.height),
        "mask dims must match image"
    );
    let (w, h) = (image.width as i64, image.height as i64);
    let r = glow.radius_px.floor() as i64;
    let norm = glow.kernel_sum();
    let mut out = image.clone();
    let lit: Vec<(i64, i64, f64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter_map(|(x, y)| {
            let m = light_mask.get(x as usize, y as usize, 0);
            (m >= glow.threshold && m > 0.0).then_some((x, y, m))
        })
        .collect();
    if lit.is_empty() || norm <= 0.0 {
        return out;
    }
    let mut bloom = vec![0.0; (w * h) as usize];
    for &(sx, sy, m) in &lit {
        for dy in -r..=r {
            let y = sy + dy;
            if y < 0 || y >= h {
                continue;
            }
            for dx in -r..=r {
                let x = sx + dx;
                if x < 0 || x >= w {
                    continue;
                }
                bloom[(y * w + x) as usize] += m * glow.weight((dx * dx + dy * dy) as f64);
            }
        }
    }
    for y in 0..h as usize {
        for x in 0..w as usize {
            let b = bloom[y * w as usize + x];
            if b > 0.0 {
                let add = glow.gain * b / norm;
                for c in 0..out.channels {
                    let i = out.idx(x, y, c);
                    out.data[i] += add;
                }
            }
        }
    }
    out
}

/// Clamp to `[0, 1]`, apply `v^(1/gamma)` and quantize with round-half-up.
pub fn tonemap(image: &Image, gamma: f64) -> Image8 {
    let inv = 1.0 / gamma;
    Image8 {
        width: image.width,
        height: image.height,
        channels: image.channels,
        data: image
            .data
            .iter()
            .map(|&v| {
                let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
                (v.powf(inv) * 255.0 + 0.5).floor() as u8
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use rand::Rng;

    #[test]
    fn tonemap_endpoints_and_midpoint() {
        let img = Image {
            width: 3,
            height: 1,
            channels: 1,
            data: vec![0.0, 1.0, 0.5],
        };
        assert_eq!(tonemap(&img, 1.0).data, vec![0, 255, 128]);
        assert_eq!(tonemap(&img, 2.2).data[..2], [0, 255]);
        let hot = Image {
            width: 2,
            height: 1,
            channels: 1,
            data: vec![7.0, -1.0],
        };
        assert_eq!(tonemap(&hot, 2.2).data, vec![255, 0]);
    }

    #[test]
    fn tonemap_preserves_order() {
        let mut rng = rng_from(9);
        for _ in 0..200 {
            let a: f64 = rng.gen_range(0.0..1.5);
            let b: f64 = rng.gen_range(0.0..1.5);
            let img = Image {
                width: 2,
                height: 1,
                channels: 1,
                data: vec![a, b],
            };
            let t = tonemap(&img, rng.gen_range(1.0..3.0)).data;
            if a <= b {
                assert!(t[0] <= t[1]);
            } else {
                assert!(t[0] >= t[1]);
            }
        }
    }

    #[test]
    fn empty_mask_is_identity() {
        let img = Image::from_fn(9, 7, 3, |x, y, c| (x * y + c) as f64 * 0.01);
        let mask = Image::new(9, 7, 1);
        assert_eq!(composite_glow(&img, &mask, &GlowSettings::default()), img);
    }

    #[test]
    fn single_pixel_bloom_is_radial_gaussian() {
        let glow = GlowSettings {
            threshold: 0.5,
            radius_px: 6.0,
            gain: 1.0,
        };
        let img = Image::new(21, 21, 3);
        let mut mask = Image::new(21, 21, 1);
        mask.set(10, 10, 0, 1.0);
        let out = composite_glow(&img, &mask, &glow);
        let s = glow.sigma();
        let peak = out.get(10, 10, 0);
        for y in 0..21i64 {
            for x in 0..21i64 {
                let (dx, dy) = (x - 10, y - 10);
                let d2 = (dx * dx + dy * dy) as f64;
                let v = out.get(x as usize, y as usize, 1);
                // Mirror symmetry: swapping and negating offsets changes nothing.
                let m = out.get((10 + dy) as usize, (10 - dx) as usize, 1);
                assert_eq!(v, m);
                if d2 <= 36.0 {
                    let oracle = peak * (-d2 / (2.0 * s * s)).exp();
                    assert!((v - oracle).abs() < 1e-12 * peak.max(1.0));
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn glow_leaves_far_pixels_untouched() {
        let img = Image::from_fn(40, 40, 3, |x, y, _| ((x + y) % 5) as f64 * 0.1);
        let mut mask = Image::new(40, 40, 1);
        mask.set(5, 5, 0, 1.0);
        mask.set(6, 5, 0, 0.05); // below threshold, ignored
        let g = GlowSettings::default();
        let out = composite_glow(&img, &mask, &g);
        for y in 0..40 {
            for x in 0..40 {
                let d2 = ((x as f64 - 5.0).powi(2) + (y as f64 - 5.0).powi(2)) as f64;
                if d2 > g.radius_px * g.radius_px {
                    for c in 0..3 {
                        assert!((out.get(x, y, c) - img.get(x, y, c)).abs() <= 1e-9);
                    }
                }
            }
        }
        assert!(out.get(5, 5, 0) > img.get(5, 5, 0));
    }
}
