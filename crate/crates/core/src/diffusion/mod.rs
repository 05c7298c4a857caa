//! EDM-preconditioned controllable video denoising at toy scale.

pub mod checkpoint;
pub mod model;
pub mod nn;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::lightfield::ControlVolume;
use crate::seed::{child_rng, rng_from};

pub use model::{control_tensor, Layer, ToyConfig, ToyDenoiser};
pub use nn::Tensor;

/// EDM coefficients with σ_data = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precond {
    pub c_skip: f64,
    pub c_out: f64,
    pub c_in: f64,
    pub w: f64,
}

pub fn precondition(sigma: f64) -> Result<Precond> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
    }
    let s2 = sigma * sigma;
    Ok(Precond {
        c_skip: 1.0 / (1.0 + s2),
        c_out: sigma / (1.0 + s2).sqrt(),
        c_in: 1.0 / (1.0 + s2).sqrt(),
        w: (1.0 + s2) / s2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdmSchedule {
    pub sigmas: Vec<f64>,
    pub sigma_data: f64,
}

impl EdmSchedule {
    pub fn new(sigmas: Vec<f64>) -> Result<Self> {
        let s = EdmSchedule {
            sigmas,
            sigma_data: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() {
            return Err(Error::InvalidArgument("empty sigma schedule".into()));
        }
        if self.sigmas.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument("sigmas must be finite and > 0".into()));
        }
        if self.sigmas.windows(2).any(|p| p[1] >= p[0]) {
            return Err(Error::InvalidArgument("sigmas must strictly decrease".into()));
        }
        if self.sigma_data != 1.0 {
            return Err(Error::InvalidArgument("sigma_data is fixed at 1".into()));
        }
        Ok(())
    }

    /// `steps` levels from `sigma_max` down to `sigma_min`, spaced uniformly
    /// in `σ^(1/rho)`.
    pub fn karras(steps: usize, sigma_min: f64, sigma_max: f64, rho: f64) -> Result<Self> {
        if steps == 0 || !(sigma_min > 0.0) || sigma_max <= sigma_min {
            return Err(Error::InvalidArgument(format!(
                "bad schedule: steps={steps} sigma in [{sigma_min}, {sigma_max}]"
            )));
        }
        if steps == 1 {
            return EdmSchedule::new(vec![sigma_max]);
        }
        let (a, b) = (sigma_max.powf(1.0 / rho), sigma_min.powf(1.0 / rho));
        let sigmas = (0..steps)
            .map(|i| {
                let t = i as f64 / (steps - 1) as f64;
                (a + t * (b - a)).powf(rho)
            })
            .collect();
        EdmSchedule::new(sigmas)
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigmas[0]
    }
}

impl Default for EdmSchedule {
    fn default() -> Self {
        EdmSchedule::karras(24, 0.02, 80.0, 7.0).expect("valid default schedule")
    }
}

/// Φ: raw network output for noisy input `x` at noise level `sigma`.
pub trait Denoiser {
    fn phi(&self, x: &Tensor, sigma: f64, cond: &Tensor, control: &Tensor) -> Result<Tensor>;
}

impl Denoiser for ToyDenoiser {
    fn phi(&self, x: &Tensor, sigma: f64, cond: &Tensor, control: &Tensor) -> Result<Tensor> {
        let c_in = precondition(sigma)?.c_in;
        self.forward(&x.map(|v| v * c_in), sigma, cond, control)
            .map(|(phi, _)| phi)
    }
}

fn gaussian_like(shape: [usize; 4], rng: &mut impl Rng) -> Tensor {
    let [n, c, h, w] = shape;
    let data = (0..n * c * h * w).map(|_| rng.sample(StandardNormal)).collect();
    Tensor { n, c, h, w, data }
}

/// `clean + σ·ε`, ε ~ N(0, I) from `seed`.
pub fn add_noise(clean: &Tensor, sigma: f64, seed: u64) -> Result<Tensor> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
    }
    let eps = gaussian_like(clean.shape(), &mut rng_from(seed));
    Ok(noisy(clean, sigma, &eps))
}

fn noisy(clean: &Tensor, sigma: f64, eps: &Tensor) -> Tensor {
    let mut x = clean.clone();
    for (v, e) in x.data.iter_mut().zip(&eps.data) {
        *v += sigma * e;
    }
    x
}

fn check_step_shapes(x: &Tensor, cond: &Tensor, control: &Tensor) -> Result<()> {
    let [n, c, h, w] = x.shape();
    if c != 3 {
        return Err(Error::ShapeMismatch {
            expected: vec![n, 3, h, w],
            got: x.shape().to_vec(),
        });
    }
    cond.check_shape([1, 3, h, w])?;
    control.check_shape([n, ControlVolume::CHANNELS, h, w])
}

/// `c_skip·x + c_out·Φ(x, cond, Ψ(control))`.
pub fn denoise_step<D: Denoiser + ?Sized>(
    x_prev: &Tensor,
    sigma: f64,
    cond: &Tensor,
    control: &ControlVolume,
    model: &D,
) -> Result<Tensor> {
    denoise_tensor(x_prev, sigma, cond, &control_tensor(control), model)
}

fn denoise_tensor<D: Denoiser + ?Sized>(
    x: &Tensor,
    sigma: f64,
    cond: &Tensor,
    control: &Tensor,
    model: &D,
) -> Result<Tensor> {
    check_step_shapes(x, cond, control)?;
    let pc = precondition(sigma)?;
    let phi = model.phi(x, sigma, cond, control)?;
    phi.check_shape(x.shape())?;
    let mut out = x.clone();
    for (o, p) in out.data.iter_mut().zip(&phi.data) {
        *o = pc.c_skip * *o + pc.c_out * p;
    }
    Ok(out)
}

/// Deterministic first-order sampler: start at `σ_max·ε`, and at each level
/// move along `(x − D)/σ` to the next level; the last level returns `D`.
pub fn sample<D: Denoiser + ?Sized>(
    model: &D,
    first_frame: &Tensor,
    control: &ControlVolume,
    schedule: &EdmSchedule,
    seed: u64,
) -> Result<Tensor> {
    schedule.validate()?;
    let (n, h, w) = control.dims;
    let ctl = control_tensor(control);
    let mut x = gaussian_like([n, 3, h, w], &mut rng_from(seed));
    x.data.iter_mut().for_each(|v| *v *= schedule.sigma_max());
    for (i, &sigma) in schedule.sigmas.iter().enumerate() {
        let d = denoise_tensor(&x, sigma, first_frame, &ctl, model)?;
        match schedule.sigmas.get(i + 1) {
            None => return Ok(d),
            Some(&next) => {
                let r = next / sigma;
                for (xv, dv) in x.data.iter_mut().zip(&d.data) {
                    *xv = dv + r * (*xv - dv);
                }
            }
        }
    }
    unreachable!("schedule is non-empty")
}

/// Pixel values `v ∈ [0,1]` as `2v − 1`, frames stacked.
pub fn frames_to_tensor(frames: &[Image]) -> Result<Tensor> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidArgument("no frames".into()))?;
    let (h, w) = (first.height, first.width);
    let mut t = Tensor::zeros(frames.len(), 3, h, w);
    for (f, img) in frames.iter().enumerate() {
        if (img.height, img.width) != (h, w) || img.channels < 3 {
            return Err(Error::ShapeMismatch {
                expected: vec![h, w, 3],
                got: vec![img.height, img.width, img.channels],
            });
        }
        for c in 0..3 {
            let plane = t.plane_mut(f, c);
            for y in 0..h {
                for x in 0..w {
                    plane[y * w + x] = 2.0 * img.get(x, y, c) - 1.0;
                }
            }
        }
    }
    Ok(t)
}

pub fn tensor_to_frames(t: &Tensor) -> Vec<Image> {
    (0..t.n)
        .map(|f| {
            Image::from_fn(t.w, t.h, 3, |x, y, c| {
                ((t.get(f, c, y, x) + 1.0) * 0.5).clamp(0.0, 1.0)
            })
        })
        .collect()
}

/// One training clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub clean: Tensor,
    /// Clean first frame, `1 × 3 × H × W`.
    pub cond: Tensor,
    /// `N × 5 × H × W`.
    pub control: Tensor,
}

impl Example {
    pub fn new(id: impl Into<String>, clean: Tensor, control: &ControlVolume) -> Result<Self> {
        let control = control_tensor(control);
        if control.shape() != [clean.n, ControlVolume::CHANNELS, clean.h, clean.w] {
            return Err(Error::ShapeMismatch {
                expected: vec![clean.n, clean.h, clean.w],
                got: vec![control.n, control.h, control.w],
            });
        }
        let cond = Tensor::from_vec(1, 3, clean.h, clean.w, clean.frame(0).to_vec())?;
        Ok(Example {
            id: id.into(),
            clean,
            cond,
            control,
        })
    }
}

/// Noise level and noise for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub sigma: f64,
    pub eps: Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Update only the control branch.
    pub frozen_base: bool,
    /// Rescale the gradient when its global norm exceeds this.
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            momentum: 0.9,
            batch_size: 2,
            sigma_min: 0.02,
            sigma_max: 80.0,
            frozen_base: false,
            grad_clip: Some(1.0),
        }
    }
}

impl TrainConfig {
    /// Large-model setting kept for reference; AdamW is not implemented, so
    /// this only changes the learning rate.
    pub fn production_scale() -> Self {
        TrainConfig {
            lr: 5e-5,
            frozen_base: true,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.momentum) || self.batch_size == 0 {
            return Err(Error::InvalidArgument(format!("bad train config {self:?}")));
        }
        if !(self.sigma_min > 0.0) || self.sigma_max <= self.sigma_min {
            return Err(Error::InvalidArgument("bad sigma range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub model: ToyDenoiser,
    pub velocity: Vec<f64>,
    pub step: u64,
    pub seed: u64,
    pub config: TrainConfig,
}

impl TrainState {
    pub fn new(model: ToyDenoiser, config: TrainConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(TrainState {
            velocity: vec![0.0; model.n_params()],
            model,
            step: 0,
            seed,
            config,
        })
    }

    pub fn frozen_base(&self) -> bool {
        self.config.frozen_base
    }
}

/// `mean_b mean_e w(σ_b)·(D_b − x⁰_b)²` for any denoiser.
pub fn weighted_loss<D: Denoiser + ?Sized>(model: &D, batch: &[&Example], draws: &[Draw]) -> Result<f64> {
    check_batch(batch, draws)?;
    let mut total = 0.0;
    for (ex, dr) in batch.iter().zip(draws) {
        let x = noisy(&ex.clean, dr.sigma, &dr.eps);
        let d = denoise_tensor(&x, dr.sigma, &ex.cond, &ex.control, model)?;
        let w = precondition(dr.sigma)?.w;
        let se: f64 = d.data.iter().zip(&ex.clean.data).map(|(a, b)| (a - b) * (a - b)).sum();
        total += w * se / ex.clean.len() as f64;
    }
    Ok(total / batch.len() as f64)
}

fn check_batch(batch: &[&Example], draws: &[Draw]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if batch.len() != draws.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![batch.len()],
            got: vec![draws.len()],
        });
    }
    Ok(())
}

/// Loss and its gradient with respect to every parameter.
pub fn loss_and_grad(model: &ToyDenoiser, batch: &[&Example], draws: &[Draw]) -> Result<(f64, Vec<f64>)> {
    check_batch(batch, draws)?;
    let mut grad = vec![0.0; model.n_params()];
    let mut total = 0.0;
    let nb = batch.len() as f64;
    for (ex, dr) in batch.iter().zip(draws) {
        let pc = precondition(dr.sigma)?;
        let x = noisy(&ex.clean, dr.sigma, &dr.eps);
        check_step_shapes(&x, &ex.cond, &ex.control)?;
        let (phi, cache) = model.forward(&x.map(|v| v * pc.c_in), dr.sigma, &ex.cond, &ex.control)?;
        let ne = ex.clean.len() as f64;
        let mut dphi = phi.clone();
        let mut se = 0.0;
        for i in 0..phi.data.len() {
            let r = pc.c_skip * x.data[i] + pc.c_out * phi.data[i] - ex.clean.data[i];
            se += r * r;
            dphi.data[i] = 2.0 * pc.w * pc.c_out * r / (ne * nb);
        }
        total += pc.w * se / ne;
        model.backward(&cache, &dphi, &mut grad);
    }
    Ok((total / nb, grad))
}

/// Log-uniform σ and Gaussian ε per example, from a per-step stream.
pub fn draw_noise(batch: &[&Example], cfg: &TrainConfig, rng: &mut impl Rng) -> Vec<Draw> {
    let (lo, hi) = (cfg.sigma_min.ln(), cfg.sigma_max.ln());
    batch
        .iter()
        .map(|ex| {
            let sigma = rng.gen_range(lo..hi).exp();
            Draw {
                sigma,
                eps: gaussian_like(ex.clean.shape(), rng),
            }
        })
        .collect()
}

/// One SGD-with-momentum update on `batch`; returns the pre-update loss.
pub fn training_step(state: &mut TrainState, batch: &[&Example], batch_ids: &[usize]) -> Result<f64> {
    let mut rng = child_rng(state.seed, "train-step", state.step);
    let draws = draw_noise(batch, &state.config, &mut rng);
    training_step_with(state, batch, batch_ids, &draws)
}

pub fn training_step_with(
    state: &mut TrainState,
    batch: &[&Example],
    batch_ids: &[usize],
    draws: &[Draw],
) -> Result<f64> {
    let (loss, mut grad) = loss_and_grad(&state.model, batch, draws)?;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss {
            loss,
            sigma: draws.iter().map(|d| d.sigma).collect(),
            batch: batch_ids.to_vec(),
        });
    }
    let trainable: Vec<bool> = if state.config.frozen_base {
        state.model.base_mask().iter().map(|b| !b).collect()
    } else {
        vec![true; grad.len()]
    };
    if let Some(clip) = state.config.grad_clip {
        let norm = grad
            .iter()
            .zip(&trainable)
            .filter(|(_, t)| **t)
            .map(|(g, _)| g * g)
            .sum::<f64>()
            .sqrt();
        if norm > clip {
            grad.iter_mut().for_each(|g| *g *= clip / norm);
        }
    }
    let (lr, mu) = (state.config.lr, state.config.momentum);
    for i in 0..grad.len() {
        if trainable[i] {
            state.velocity[i] = mu * state.velocity[i] + grad[i];
            state.model.params[i] -= lr * state.velocity[i];
        }
    }
    state.step += 1;
    Ok(loss)
}

/// Run `steps` updates, drawing batches uniformly from `data`. `on_step`
/// sees `(step, loss)` after each update.
pub fn train(
    state: &mut TrainState,
    data: &[Example],
    steps: u64,
    mut on_step: impl FnMut(u64, f64),
) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("no training examples".into()));
    }
    for _ in 0..steps {
        let mut rng = child_rng(state.seed, "train-batch", state.step);
        let ids: Vec<usize> = (0..state.config.batch_size)
            .map(|_| rng.gen_range(0..data.len()))
            .collect();
        let batch: Vec<&Example> = ids.iter().map(|&i| &data[i]).collect();
        let loss = training_step(state, &batch, &ids)?;
        on_step(state.step, loss);
    }
    Ok(())
}

/// Loss on fixed noise levels and fixed noise, for comparing checkpoints.
pub fn fixed_eval_loss<D: Denoiser + ?Sized>(
    model: &D,
    data: &[Example],
    sigmas: &[f64],
    seed: u64,
) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, ex) in data.iter().enumerate() {
        let mut rng = child_rng(seed, "eval-noise", i as u64);
        let draws: Vec<Draw> = sigmas
            .iter()
            .map(|&sigma| Draw {
                sigma,
                eps: gaussian_like(ex.clean.shape(), &mut rng),
            })
            .collect();
        let batch = vec![ex; draws.len()];
        total += weighted_loss(model, &batch, &draws)? * draws.len() as f64;
        count += draws.len();
    }
    if count == 0 {
        return Err(Error::InvalidArgument("no evaluation examples".into()));
    }
    Ok(total / count as f64)
}

/// Default evaluation noise levels: log-spaced over the training range.
pub fn eval_sigmas() -> Vec<f64> {
    (0..8)
        .map(|i| (0.02f64.ln() + (80.0f64.ln() - 0.02f64.ln()) * i as f64 / 7.0).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradCheck {
    pub layer: Layer,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Compare analytic gradients with central differences at `per_layer`
/// random parameters of every layer.
pub fn gradient_check(
    model: &ToyDenoiser,
    batch: &[&Example],
    draws: &[Draw],
    per_layer: usize,
    h: f64,
    seed: u64,
) -> Result<Vec<GradCheck>> {
    let (_, grad) = loss_and_grad(model, batch, draws)?;
    let mut rng = rng_from(seed);
    let mut probe = model.clone();
    let mut out = Vec::new();
    for e in model.layout.clone() {
        for _ in 0..per_layer {
            let i = e.offset + rng.gen_range(0..e.len);
            let orig = probe.params[i];
            probe.params[i] = orig + h;
            let lp = weighted_loss(&probe, batch, draws)?;
            probe.params[i] = orig - h;
            let lm = weighted_loss(&probe, batch, draws)?;
            probe.params[i] = orig;
            let numeric = (lp - lm) / (2.0 * h);
            let analytic = grad[i];
            let scale = analytic.abs().max(numeric.abs()).max(1e-8);
            out.push(GradCheck {
                layer: e.layer,
                index: i,
                analytic,
                numeric,
                rel_err: (analytic - numeric).abs() / scale,
            });
        }
    }
    Ok(out)
}
