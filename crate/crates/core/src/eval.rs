//! Full-reference image metrics and evaluation protocol helpers.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{read_png, Image};

/// Binary foreground mask; never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    bits: Vec<bool>,
    count: usize,
}

impl Mask {
    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: vec![height, width],
                got: vec![bits.len()],
            });
        }
        let count = bits.iter().filter(|b| **b).count();
        if count == 0 {
            return Err(Error::InvalidArgument("foreground mask is empty".into()));
        }
        Ok(Mask {
            width,
            height,
            bits,
            count,
        })
    }

    /// Pixels whose first channel exceeds 0.5.
    pub fn from_image(img: &Image) -> Result<Self> {
        let bits = (0..img.height)
            .flat_map(|y| (0..img.width).map(move |x| (x, y)))
            .map(|(x, y)| img.get(x, y, 0) > 0.5)
            .collect();
        Mask::from_bits(img.width, img.height, bits)
    }

    pub fn full(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![true; width * height],
            count: width * height,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Mask> {
        let bits = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| self.get(x0 + x, y0 + y))
            .collect();
        Mask::from_bits(w, h, bits)
    }
}

/// Restrict metric reductions to the mask's true pixels.
#[derive(Debug, Clone, Copy)]
pub struct MaskedView<'a> {
    pub image: &'a Image,
    pub mask: Option<&'a Mask>,
}

pub fn mask_foreground<'a>(image: &'a Image, mask: &'a Mask) -> Result<MaskedView<'a>> {
    if (mask.width, mask.height) != (image.width, image.height) {
        return Err(Error::ShapeMismatch {
            expected: vec![image.height, image.width],
            got: vec![mask.height, mask.width],
        });
    }
    Ok(MaskedView {
        image,
        mask: Some(mask),
    })
}

fn check_dims(a: &Image, b: &Image, mask: Option<&Mask>) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::ShapeMismatch {
            expected: vec![a.height, a.width, a.channels],
            got: vec![b.height, b.width, b.channels],
        });
    }
    if let Some(m) = mask {
        if (m.width, m.height) != (a.width, a.height) {
            return Err(Error::ShapeMismatch {
                expected: vec![a.height, a.width],
                got: vec![m.height, m.width],
            });
        }
    }
    Ok(())
}

pub fn mse(a: &Image, b: &Image, mask: Option<&Mask>) -> Result<f64> {
    check_dims(a, b, mask)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in 0..a.height {
        for x in 0..a.width {
            if mask.is_some_and(|m| !m.get(x, y)) {
                continue;
            }
            for c in 0..a.channels {
                let d = a.get(x, y, c) - b.get(x, y, c);
                sum += d * d;
            }
            n += a.channels;
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no pixels to compare".into()));
    }
    Ok(sum / n as f64)
}

pub fn rmse(a: &Image, b: &Image, mask: Option<&Mask>) -> Result<f64> {
    mse(a, b, mask).map(f64::sqrt)
}

/// Peak signal-to-noise ratio in dB; identical inputs give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image, max_val: f64, mask: Option<&Mask>) -> Result<f64> {
    let m = mse(a, b, mask)?;
    Ok(psnr_from_mse(m, max_val))
}

pub fn psnr_from_mse(mse: f64, max_val: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max_val * max_val / mse).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    pub max_val: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 8,
            k1: 0.01,
            k2: 0.03,
            max_val: 1.0,
        }
    }
}

/// Mean SSIM over all stride-1 windows of the channel-mean images.
///
/// Windows are uniform and use population statistics. With a mask, only
/// windows whose centre pixel lies in the mask contribute.
pub fn ssim(a: &Image, b: &Image, params: &SsimParams, mask: Option<&Mask>) -> Result<f64> {
    check_dims(a, b, mask)?;
    let w = params.window;
    if w == 0 || a.width < w || a.height < w {
        return Err(Error::InvalidArgument(format!(
            "image {}x{} smaller than SSIM window {w}",
            a.width, a.height
        )));
    }
    let ga = a.to_gray();
    let gb = b.to_gray();
    let c1 = (params.k1 * params.max_val).powi(2);
    let c2 = (params.k2 * params.max_val).powi(2);
    let n = (w * w) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=a.height - w {
        for x0 in 0..=a.width - w {
            if let Some(m) = mask {
                if !m.get(x0 + w / 2, y0 + w / 2) {
                    continue;
                }
            }
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in y0..y0 + w {
                for x in x0..x0 + w {
                    let p = ga.data[y * a.width + x];
                    let q = gb.data[y * a.width + x];
                    sa += p;
                    sb += q;
                    saa += p * p;
                    sbb += q * q;
                    sab += p * q;
                }
            }
            let (ma, mb) = (sa / n, sb / n);
            let va = (saa / n - ma * ma).max(0.0);
            let vb = (sbb / n - mb * mb).max(0.0);
            let cov = sab / n - ma * mb;
            let s = ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            total += s;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidArgument("mask selects no SSIM windows".into()));
    }
    Ok((total / count as f64).clamp(-1.0, 1.0))
}

/// Centre crop of `height × width`; odd remainders leave the extra pixel on
/// the bottom/right.
pub fn center_crop(img: &Image, height: usize, width: usize) -> Result<Image> {
    let (y0, x0) = crop_offset(img, height, width)?;
    Ok(img.crop(x0, y0, width, height))
}

pub fn crop_offset(img: &Image, height: usize, width: usize) -> Result<(usize, usize)> {
    if img.height < height || img.width < width {
        return Err(Error::InvalidArgument(format!(
            "image {}x{} smaller than crop {}x{}",
            img.height, img.width, height, width
        )));
    }
    Ok(((img.height - height) / 2, (img.width - width) / 2))
}

/// Light-direction index sequences over the 25 fixed directions of the
/// multi-illumination benchmark.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MitTrajectorySet {
    pub sequences: Vec<[u8; 14]>,
}

const MIT_TABLE: [[u8; 14]; 25] = [
    [23, 11, 0, 10, 1, 17, 6, 15, 5, 13, 12, 4, 16, 14],
    [14, 12, 4, 16, 15, 5, 13, 7, 11, 0, 10, 1, 17, 18],
    [0, 11, 23, 24, 2, 22, 3, 19, 18, 17, 9, 8, 12, 13],
    [11, 23, 24, 2, 22, 3, 19, 18, 17, 9, 8, 12, 13, 5],
    [23, 24, 2, 22, 3, 19, 18, 17, 9, 8, 12, 13, 5, 15],
    [24, 2, 22, 3, 19, 18, 17, 9, 8, 12, 13, 5, 15, 16],
    [2, 22, 3, 19, 18, 17, 9, 8, 12, 13, 5, 15, 16, 4],
    [12, 4, 16, 15, 5, 13, 7, 11, 0, 10, 1, 17, 18, 19],
    [4, 16, 15, 5, 13, 7, 11, 0, 10, 1, 17, 18, 19, 3],
    [16, 15, 5, 13, 7, 11, 0, 10, 1, 17, 18, 19, 3, 22],
    [5, 13, 7, 11, 0, 10, 1, 17, 18, 19, 3, 22, 2, 24],
    [1, 10, 0, 11, 23, 24, 2, 22, 3, 19, 18, 17, 9, 8],
    [3, 19, 18, 17, 9, 8, 11, 7, 13, 5, 15, 16, 4, 14],
    [6, 17, 1, 10, 0, 11, 23, 24, 2, 22, 20, 15, 16, 4],
    [7, 11, 0, 10, 1, 17, 18, 19, 3, 22, 21, 13, 12, 4],
    [8, 9, 17, 18, 19, 3, 22, 2, 24, 23, 11, 0, 10, 1],
    [9, 8, 11, 23, 24, 2, 22, 3, 19, 18, 17, 9, 8, 12],
    [10, 0, 11, 23, 24, 2, 22, 20, 15, 16, 4, 12, 13, 5],
    [13, 5, 15, 16, 4, 12, 7, 24, 2, 22, 3, 19, 18, 17],
    [17, 1, 10, 0, 11, 23, 24, 2, 22, 20, 15, 16, 4, 12],
    [19, 20, 21, 24, 23, 11, 0, 10, 9, 16, 15, 5, 13, 12],
    [20, 21, 24, 23, 11, 0, 10, 9, 16, 15, 5, 13, 12, 4],
    [21, 24, 23, 11, 0, 10, 9, 16, 15, 5, 13, 12, 4, 14],
    [22, 2, 24, 23, 11, 0, 10, 1, 18, 6, 15, 5, 13, 12],
    [18, 19, 20, 21, 24, 23, 11, 0, 10, 9, 16, 15, 5, 13],
];

/// The 25 fixed 14-step trajectories, verbatim.
pub fn mit_trajectories() -> MitTrajectorySet {
    MitTrajectorySet {
        sequences: MIT_TABLE.to_vec(),
    }
}

impl MitTrajectorySet {
    pub const DIRECTIONS: u8 = 25;

    pub fn validate(&self) -> Result<()> {
        if self.sequences.len() != 25 {
            return Err(Error::InvalidArgument(format!(
                "{} sequences, expected 25",
                self.sequences.len()
            )));
        }
        if let Some(bad) = self
            .sequences
            .iter()
            .flatten()
            .find(|&&i| i >= Self::DIRECTIONS)
        {
            return Err(Error::InvalidArgument(format!("direction index {bad} out of range")));
        }
        Ok(())
    }

    /// One line per trajectory: `<1-based id> [i, j, ...]`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, seq) in self.sequences.iter().enumerate() {
            let items: Vec<String> = seq.iter().map(u8::to_string).collect();
            s.push_str(&format!("{} [{}]\n", k + 1, items.join(", ")));
        }
        s
    }
}

/// Arrange a capture directory holding `dir_<i>.png` (i in 0..25) into 25
/// clip directories `traj_<k>/frame_%03d.png` following the fixed index
/// sequences. Returns the clip directories.
pub fn build_mit_clips(capture_dir: &Path, out_dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let set = mit_trajectories();
    let mut dirs = Vec::with_capacity(set.sequences.len());
    for (k, seq) in set.sequences.iter().enumerate() {
        let dir = out_dir.join(format!("traj_{:02}", k + 1));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (f, idx) in seq.iter().enumerate() {
            let src = capture_dir.join(format!("dir_{idx}.png"));
            let dst = dir.join(format!("frame_{:03}.png", f + 1));
            std::fs::copy(&src, &dst).map_err(|e| Error::io(&src, e))?;
        }
        dirs.push(dir);
    }
    Ok(dirs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub rmse: f64,
    /// `None` when the frames are identical (infinite PSNR).
    pub psnr: Option<f64>,
    pub ssim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub rmse: f64,
    /// Mean over finite-PSNR frames only.
    pub psnr: Option<f64>,
    pub psnr_frames: usize,
    pub psnr_identical_frames: usize,
    pub ssim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    None,
    Foreground,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub clip_id: String,
    pub per_frame: Vec<FrameMetrics>,
    pub means: MetricMeans,
    pub mask_mode: MaskMode,
    /// `[height, width]` of the centre crop, if any.
    pub crop: Option<[usize; 2]>,
}

pub fn frame_metrics(
    pred: &Image,
    gt: &Image,
    mask: Option<&Mask>,
    ssim_params: &SsimParams,
) -> Result<FrameMetrics> {
    let m = mse(pred, gt, mask)?;
    let p = psnr_from_mse(m, 1.0);
    Ok(FrameMetrics {
        rmse: m.sqrt(),
        psnr: p.is_finite().then_some(p),
        ssim: ssim(pred, gt, ssim_params, mask)?,
    })
}

/// Arithmetic means of the per-frame values.
pub fn aggregate(per_frame: &[FrameMetrics]) -> Result<MetricMeans> {
    if per_frame.is_empty() {
        return Err(Error::InvalidArgument("no frames to aggregate".into()));
    }
    let n = per_frame.len() as f64;
    let finite: Vec<f64> = per_frame.iter().filter_map(|f| f.psnr).collect();
    Ok(MetricMeans {
        rmse: per_frame.iter().map(|f| f.rmse).sum::<f64>() / n,
        psnr: (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64),
        psnr_frames: finite.len(),
        psnr_identical_frames: per_frame.len() - finite.len(),
        ssim: per_frame.iter().map(|f| f.ssim).sum::<f64>() / n,
    })
}

pub fn evaluate_clip(
    clip_id: &str,
    pred: &[Image],
    gt: &[Image],
    masks: Option<&[Mask]>,
    crop: Option<[usize; 2]>,
    ssim_params: &SsimParams,
) -> Result<MetricsReport> {
    if pred.len() != gt.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![gt.len()],
            got: vec![pred.len()],
        });
    }
    let per_frame = (0..pred.len())
        .into_par_iter()
        .map(|i| {
            let mask = masks.map(|m| &m[i.min(m.len() - 1)]);
            let (p, g, m) = match crop {
                Some([h, w]) => {
                    let (y0, x0) = crop_offset(&pred[i], h, w)?;
                    let m = mask.map(|m| m.crop(x0, y0, w, h)).transpose()?;
                    (pred[i].crop(x0, y0, w, h), gt[i].crop(x0, y0, w, h), m)
                }
                None => (pred[i].clone(), gt[i].clone(), mask.cloned()),
            };
            frame_metrics(&p, &g, m.as_ref(), ssim_params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport {
        clip_id: clip_id.to_string(),
        means: aggregate(&per_frame)?,
        per_frame,
        mask_mode: if masks.is_some() {
            MaskMode::Foreground
        } else {
            MaskMode::None
        },
        crop,
    })
}

/// Sorted `frame_*.png` files in `dir`.
pub fn list_frames(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut frames: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("frame_") && n.ends_with(".png"))
        })
        .collect();
    frames.sort();
    Ok(frames)
}

pub fn load_frames(dir: &Path) -> Result<Vec<Image>> {
    list_frames(dir)?
        .iter()
        .map(|p| read_png(p).map(|i| i.to_unit()))
        .collect()
}

/// Evaluate a predicted clip directory against ground truth. `mask_dir` may
/// hold `mask.png` (one mask for all frames) or per-frame `mask_%03d.png`.
pub fn evaluate_dirs(
    pred_dir: &Path,
    gt_dir: &Path,
    mask_dir: Option<&Path>,
    crop: Option<usize>,
) -> Result<MetricsReport> {
    let pred = load_frames(pred_dir)?;
    let gt = load_frames(gt_dir)?;
    if gt.is_empty() {
        return Err(Error::InvalidArgument(format!("no frames in {}", gt_dir.display())));
    }
    let masks = match mask_dir {
        None => None,
        Some(d) => {
            let single = d.join("mask.png");
            let imgs = if single.exists() {
                vec![read_png(&single)?.to_unit()]
            } else {
                (1..=gt.len())
                    .map(|i| read_png(d.join(format!("mask_{i:03}.png"))).map(|m| m.to_unit()))
                    .collect::<Result<Vec<_>>>()?
            };
            Some(imgs.iter().map(Mask::from_image).collect::<Result<Vec<_>>>()?)
        }
    };
    let clip_id = gt_dir
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_default();
    evaluate_clip(
        &clip_id,
        &pred,
        &gt,
        masks.as_deref(),
        crop.map(|c| [c, c]),
        &SsimParams::default(),
    )
}

/// Index `k` of the image octant `[45k°, 45(k+1)°)` with the highest mean
/// brightness, angles measured around the image centre with image right at
/// 0° and image up at 90°.
pub fn brightest_octant(img: &Image) -> usize {
    let gray = img.to_gray();
    let (cx, cy) = ((img.width as f64 - 1.0) / 2.0, (img.height as f64 - 1.0) / 2.0);
    let mut sum = [0.0; 8];
    let mut count = [0usize; 8];
    for y in 0..img.height {
        for x in 0..img.width {
            let (dx, dy) = (x as f64 - cx, cy - y as f64);
            if dx == 0.0 && dy == 0.0 {
                continue;
            }
            let k = octant_of(dy.atan2(dx).to_degrees());
            sum[k] += gray.data[y * img.width + x];
            count[k] += 1;
        }
    }
    (0..8)
        .map(|k| (k, if count[k] > 0 { sum[k] / count[k] as f64 } else { f64::NEG_INFINITY }))
        .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best })
        .0
}

pub fn octant_of(angle_deg: f64) -> usize {
    ((crate::lightfield::wrap_deg(angle_deg) / 45.0).floor() as usize).min(7)
}

pub fn octant_center_deg(k: usize) -> f64 {
    45.0 * k as f64 + 22.5
}

/// Whether the brightest octant's centre lies within `tol_deg` of `theta_deg`.
pub fn octant_matches(img: &Image, theta_deg: f64, tol_deg: f64) -> bool {
    let c = octant_center_deg(brightest_octant(img));
    crate::lightfield::shortest_delta(c, theta_deg).abs() <= tol_deg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use rand::Rng;

    fn random(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = rng_from(seed);
        Image::from_fn(w, h, 3, |_, _, _| rng.gen())
    }

    #[test]
    fn rmse_examples() {
        let a = random(9, 7, 1);
        assert_eq!(rmse(&a, &a, None).unwrap(), 0.0);
        let z = Image::new(5, 5, 3);
        let o = Image::from_fn(5, 5, 3, |_, _, _| 1.0);
        assert_eq!(rmse(&z, &o, None).unwrap(), 1.0);
        assert!(rmse(&z, &Image::new(5, 4, 3), None).is_err());
    }

    #[test]
    fn psnr_examples() {
        let z = Image::new(4, 4, 1);
        let b = Image::from_fn(4, 4, 1, |_, _, _| 0.1);
        // MSE = 0.1^2 = 0.01 in floating point.
        let m = mse(&z, &b, None).unwrap();
        assert_eq!(psnr_from_mse(0.01, 1.0), 20.0);
        assert!((psnr(&z, &b, 1.0, None).unwrap() - 10.0 * (1.0 / m).log10()).abs() < 1e-12);
        assert_eq!(psnr(&z, &z, 1.0, None).unwrap(), f64::INFINITY);
        let a = random(6, 6, 2);
        let c = random(6, 6, 3);
        assert_eq!(psnr(&a, &c, 1.0, None).unwrap(), psnr(&c, &a, 1.0, None).unwrap());
    }

    #[test]
    fn ssim_examples() {
        let p = SsimParams::default();
        let a = random(12, 10, 4);
        assert!((ssim(&a, &a, &p, None).unwrap() - 1.0).abs() < 1e-12);
        let b = random(12, 10, 5);
        assert_eq!(ssim(&a, &b, &p, None).unwrap(), ssim(&b, &a, &p, None).unwrap());
        assert!(ssim(&random(7, 7, 1), &random(7, 7, 2), &p, None).is_err());

        // 1-pixel checkerboard vs its inverse: every 8x8 window has mean 0.5,
        // variance 0.25 and covariance -0.25, so SSIM = (C2 - 0.5)/(C2 + 0.5).
        let chk = Image::from_fn(16, 16, 1, |x, y, _| ((x + y) % 2) as f64);
        let inv = Image::from_fn(16, 16, 1, |x, y, _| 1.0 - chk.get(x, y, 0));
        let c2 = 0.03f64.powi(2);
        let s = ssim(&chk, &inv, &p, None).unwrap();
        assert!((s - (c2 - 0.5) / (c2 + 0.5)).abs() < 1e-12, "{s}");
        assert!(s < 0.0);
    }

    #[test]
    fn masks() {
        let a = random(8, 8, 6);
        let mut b = a.clone();
        for y in 2..4 {
            for x in 2..4 {
                for c in 0..3 {
                    b.set(x, y, c, 1.0 - a.get(x, y, c));
                }
            }
        }
        let full = Mask::full(8, 8);
        assert_eq!(rmse(&a, &b, Some(&full)).unwrap(), rmse(&a, &b, None).unwrap());
        let bits = (0..64).map(|i| (2..4).contains(&(i % 8)) && (2..4).contains(&(i / 8))).collect();
        let local = Mask::from_bits(8, 8, bits).unwrap();
        assert!(rmse(&a, &b, Some(&local)).unwrap() > rmse(&a, &b, None).unwrap());
        assert!(Mask::from_bits(8, 8, vec![false; 64]).is_err());
        assert!(mask_foreground(&a, &local).is_ok());
        assert!(mask_foreground(&random(4, 4, 1), &local).is_err());
    }

    #[test]
    fn mit_table() {
        let t = mit_trajectories();
        t.validate().unwrap();
        assert_eq!(t.sequences.len(), 25);
        assert_eq!(t.sequences[0], [23, 11, 0, 10, 1, 17, 6, 15, 5, 13, 12, 4, 16, 14]);
        assert!(t.to_text().starts_with("1 [23, 11, 0, 10"));
    }

    #[test]
    fn crop_examples() {
        let img = Image::from_fn(768, 512, 1, |x, y, _| (y * 1000 + x) as f64);
        let c = center_crop(&img, 512, 512).unwrap();
        assert_eq!((c.width, c.height), (512, 512));
        assert_eq!(c.get(0, 0, 0), img.get(128, 0, 0));
        assert_eq!(center_crop(&c, 512, 512).unwrap(), c);
        let odd = Image::from_fn(5, 4, 1, |x, y, _| (y * 10 + x) as f64);
        let oc = center_crop(&odd, 2, 2).unwrap();
        assert_eq!(oc.get(0, 0, 0), odd.get(1, 1, 0));
        assert!(center_crop(&odd, 5, 5).is_err());
    }

    #[test]
    fn octants() {
        assert_eq!(octant_of(0.0), 0);
        assert_eq!(octant_of(44.9), 0);
        assert_eq!(octant_of(45.0), 1);
        assert_eq!(octant_of(-10.0), 7);
        for k in 0..8 {
            let t = octant_center_deg(k).to_radians();
            // Bright blob offset toward angle t from the centre.
            let img = Image::from_fn(16, 16, 3, |x, y, _| {
                let (dx, dy) = (x as f64 - 7.5 - 5.0 * t.cos(), 7.5 - y as f64 - 5.0 * t.sin());
                (-(dx * dx + dy * dy) / 4.0).exp()
            });
            assert_eq!(brightest_octant(&img), k);
            assert!(octant_matches(&img, octant_center_deg(k) + 40.0, 45.0));
            assert!(!octant_matches(&img, octant_center_deg(k) + 90.0, 45.0));
        }
    }

    #[test]
    fn aggregate_is_arithmetic_mean() {
        let f = [
            FrameMetrics { rmse: 0.1, psnr: Some(20.0), ssim: 0.9 },
            FrameMetrics { rmse: 0.3, psnr: None, ssim: 0.5 },
        ];
        let m = aggregate(&f).unwrap();
        assert!((m.rmse - 0.2).abs() < 1e-15 && (m.ssim - 0.7).abs() < 1e-15);
        assert_eq!((m.psnr, m.psnr_frames, m.psnr_identical_frames), (Some(20.0), 1, 1));
    }
}
