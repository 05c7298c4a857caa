//! Toy controllable video denoiser Φ with control branch Ψ.
//!
//! Per frame: encoder (full res, half res), middle block, a frame-mean
//! temporal mixing layer, then a decoder with a skip connection. Ψ mirrors
//! the encoder and middle block on the control volume; its features enter
//! through zero-initialized 1×1 projections.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::nn::{
    broadcast_add, concat, conv2d, conv2d_backward, frame_mean, frame_sum, silu, silu_backward,
    split_channels, upsample2, upsample2_backward, ConvShape, Tensor,
};
use crate::error::{Error, Result};
use crate::lightfield::ControlVolume;
use crate::seed::rng_from;

/// Base input: scaled noisy frame, first-frame conditioning, noise level, xy.
pub const BASE_IN: usize = 9;
/// Ψ input: 5 control channels, periodic azimuth pair, xy.
pub const CTRL_IN: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyConfig {
    /// Channels at full resolution.
    pub c1: usize,
    /// Channels at half resolution and in the middle block.
    pub c2: usize,
    pub init_seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            c1: 12,
            c2: 24,
            init_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Enc1,
    Enc2,
    Mid,
    Temporal,
    Dec,
    Out,
    Ctl1,
    Ctl2,
    Ctl3,
    Zero1,
    Zero2,
    Zero3,
}

impl Layer {
    pub const ALL: [Layer; 12] = [
        Layer::Enc1,
        Layer::Enc2,
        Layer::Mid,
        Layer::Temporal,
        Layer::Dec,
        Layer::Out,
        Layer::Ctl1,
        Layer::Ctl2,
        Layer::Ctl3,
        Layer::Zero1,
        Layer::Zero2,
        Layer::Zero3,
    ];

    /// Part of the base denoiser Φ (as opposed to the control branch Ψ).
    pub fn is_base(self) -> bool {
        matches!(
            self,
            Layer::Enc1 | Layer::Enc2 | Layer::Mid | Layer::Temporal | Layer::Dec | Layer::Out
        )
    }

    pub fn is_zero_projection(self) -> bool {
        matches!(self, Layer::Zero1 | Layer::Zero2 | Layer::Zero3)
    }

    pub fn name(self) -> &'static str {
        match self {
            Layer::Enc1 => "enc1",
            Layer::Enc2 => "enc2",
            Layer::Mid => "mid",
            Layer::Temporal => "temporal",
            Layer::Dec => "dec",
            Layer::Out => "out",
            Layer::Ctl1 => "ctl1",
            Layer::Ctl2 => "ctl2",
            Layer::Ctl3 => "ctl3",
            Layer::Zero1 => "zero1",
            Layer::Zero2 => "zero2",
            Layer::Zero3 => "zero3",
        }
    }

    pub fn shape(self, cfg: &ToyConfig) -> ConvShape {
        let (c1, c2) = (cfg.c1, cfg.c2);
        let conv = |c_in, c_out, k, stride| ConvShape {
            c_in,
            c_out,
            k,
            stride,
        };
        match self {
            Layer::Enc1 => conv(BASE_IN, c1, 3, 1),
            Layer::Enc2 => conv(c1, c2, 3, 2),
            Layer::Mid => conv(c2, c2, 3, 1),
            Layer::Temporal => conv(c2, c2, 1, 1),
            Layer::Dec => conv(c2 + c1, c1, 3, 1),
            Layer::Out => conv(c1, 3, 3, 1),
            Layer::Ctl1 => conv(CTRL_IN, c1, 3, 1),
            Layer::Ctl2 => conv(c1, c2, 3, 2),
            Layer::Ctl3 => conv(c2, c2, 3, 1),
            Layer::Zero1 => conv(c1, c1, 1, 1),
            Layer::Zero2 | Layer::Zero3 => conv(c2, c2, 1, 1),
        }
    }
}

/// One layer's slice of the flat parameter vector: weights then biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub layer: Layer,
    pub shape: ConvShapeSpec,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvShapeSpec {
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub stride: usize,
}

impl From<ConvShape> for ConvShapeSpec {
    fn from(s: ConvShape) -> Self {
        ConvShapeSpec {
            c_in: s.c_in,
            c_out: s.c_out,
            k: s.k,
            stride: s.stride,
        }
    }
}

pub fn layout(cfg: &ToyConfig) -> Vec<ParamEntry> {
    let mut offset = 0;
    Layer::ALL
        .iter()
        .map(|&layer| {
            let s = layer.shape(cfg);
            let len = s.weight_len() + s.c_out;
            let e = ParamEntry {
                layer,
                shape: s.into(),
                offset,
                len,
            };
            offset += len;
            e
        })
        .collect()
}

/// Trainable toy denoiser; all parameters live in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDenoiser {
    pub config: ToyConfig,
    pub layout: Vec<ParamEntry>,
    pub params: Vec<f64>,
}

/// Intermediates kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    inp: Tensor,
    a1: Tensor,
    e1: Tensor,
    a2: Tensor,
    e2: Tensor,
    a3: Tensor,
    mm: Tensor,
    cat: Tensor,
    a4: Tensor,
    d: Tensor,
    cin: Tensor,
    q1: Tensor,
    p1: Tensor,
    q2: Tensor,
    p2: Tensor,
    q3: Tensor,
    p3: Tensor,
}

impl ToyDenoiser {
    pub fn new(config: ToyConfig) -> Self {
        let layout = layout(&config);
        let total = layout.last().map_or(0, |e| e.offset + e.len);
        let mut params = vec![0.0; total];
        let mut rng = rng_from(config.init_seed);
        for e in &layout {
            if e.layer.is_zero_projection() {
                continue;
            }
            let s = e.layer.shape(&config);
            let fan_in = (s.c_in * s.k * s.k) as f64;
            let gain = match e.layer {
                Layer::Out | Layer::Temporal => 0.1,
                _ => 1.0,
            };
            let normal = Normal::new(0.0, gain * (2.0 / fan_in).sqrt()).expect("finite std");
            for p in &mut params[e.offset..e.offset + s.weight_len()] {
                *p = normal.sample(&mut rng);
            }
        }
        ToyDenoiser {
            config,
            layout,
            params,
        }
    }

    pub fn from_params(config: ToyConfig, params: Vec<f64>) -> Result<Self> {
        let mut m = ToyDenoiser::new(config);
        if params.len() != m.params.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![m.params.len()],
                got: vec![params.len()],
            });
        }
        m.params = params;
        Ok(m)
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn entry(&self, layer: Layer) -> &ParamEntry {
        &self.layout[Layer::ALL.iter().position(|&l| l == layer).expect("known layer")]
    }

    fn wb(&self, layer: Layer) -> (ConvShape, &[f64], &[f64]) {
        let e = self.entry(layer);
        let s = layer.shape(&self.config);
        let wl = s.weight_len();
        let p = &self.params[e.offset..e.offset + e.len];
        (s, &p[..wl], &p[wl..])
    }

    fn conv(&self, layer: Layer, x: &Tensor) -> Tensor {
        let (s, w, b) = self.wb(layer);
        conv2d(&s, w, b, x)
    }

    /// Indices of base-denoiser parameters.
    pub fn base_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.params.len()];
        for e in &self.layout {
            if e.layer.is_base() {
                mask[e.offset..e.offset + e.len].iter_mut().for_each(|m| *m = true);
            }
        }
        mask
    }

    /// Raw network output for the already scaled input `c_in·x`.
    pub fn forward(
        &self,
        x_scaled: &Tensor,
        sigma: f64,
        cond: &Tensor,
        control: &Tensor,
    ) -> Result<(Tensor, Cache)> {
        let [n, c, h, w] = x_scaled.shape();
        if c != 3 || h % 2 != 0 || w % 2 != 0 || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "denoiser input must be N×3×H×W with even H, W; got {:?}",
                x_scaled.shape()
            )));
        }
        cond.check_shape([1, 3, h, w])?;
        control.check_shape([n, ControlVolume::CHANNELS, h, w])?;

        let inp = base_input(x_scaled, sigma, cond);
        let cin = control_input(control);

        let a1 = self.conv(Layer::Enc1, &inp);
        let q1 = self.conv(Layer::Ctl1, &cin);
        let p1 = silu(&q1);
        let mut e1 = silu(&a1);
        e1.add_assign(&self.conv(Layer::Zero1, &p1));

        let a2 = self.conv(Layer::Enc2, &e1);
        let q2 = self.conv(Layer::Ctl2, &p1);
        let p2 = silu(&q2);
        let mut e2 = silu(&a2);
        e2.add_assign(&self.conv(Layer::Zero2, &p2));

        let a3 = self.conv(Layer::Mid, &e2);
        let q3 = self.conv(Layer::Ctl3, &p2);
        let p3 = silu(&q3);
        let mut m = silu(&a3);
        m.add_assign(&self.conv(Layer::Zero3, &p3));

        let mm = frame_mean(&m);
        let mut t = m.clone();
        broadcast_add(&mut t, &self.conv(Layer::Temporal, &mm));

        let cat = concat(&upsample2(&t), &e1);
        let a4 = self.conv(Layer::Dec, &cat);
        let d = silu(&a4);
        let phi = self.conv(Layer::Out, &d);
        Ok((
            phi,
            Cache {
                inp,
                a1,
                e1,
                a2,
                e2,
                a3,
                mm,
                cat,
                a4,
                d,
                cin,
                q1,
                p1,
                q2,
                p2,
                q3,
                p3,
            },
        ))
    }

    /// Accumulate `∂L/∂params` into `grad` given `∂L/∂Φ`.
    pub fn backward(&self, cache: &Cache, dphi: &Tensor, grad: &mut [f64]) {
        let mut put = |layer: Layer, dw: Vec<f64>, db: Vec<f64>| {
            let e = self.entry(layer);
            let g = &mut grad[e.offset..e.offset + e.len];
            let wl = dw.len();
            for (a, b) in g[..wl].iter_mut().zip(&dw) {
                *a += b;
            }
            for (a, b) in g[wl..].iter_mut().zip(&db) {
                *a += b;
            }
        };
        let back = |layer: Layer, x: &Tensor, dy: &Tensor, need_dx: bool| {
            let (s, w, _) = self.wb(layer);
            conv2d_backward(&s, w, x, dy, need_dx)
        };

        let (dd, dw, db) = back(Layer::Out, &cache.d, dphi, true);
        put(Layer::Out, dw, db);
        let da4 = silu_backward(&cache.a4, &dd.expect("dx"));
        let (dcat, dw, db) = back(Layer::Dec, &cache.cat, &da4, true);
        put(Layer::Dec, dw, db);
        let (du, mut de1) = split_channels(&dcat.expect("dx"), self.config.c2);
        let dt = upsample2_backward(&du);

        // t = m + T(mean(m)) broadcast over frames.
        let n = dt.n as f64;
        let dtemp = frame_sum(&dt);
        let (dmm, dw, db) = back(Layer::Temporal, &cache.mm, &dtemp, true);
        put(Layer::Temporal, dw, db);
        let mut dm = dt;
        broadcast_add(&mut dm, &dmm.expect("dx").map(|v| v / n));

        let (dp3, dw, db) = back(Layer::Zero3, &cache.p3, &dm, true);
        put(Layer::Zero3, dw, db);
        let dq3 = silu_backward(&cache.q3, &dp3.expect("dx"));
        let (dp2_mid, dw, db) = back(Layer::Ctl3, &cache.p2, &dq3, true);
        put(Layer::Ctl3, dw, db);
        let da3 = silu_backward(&cache.a3, &dm);
        let (de2, dw, db) = back(Layer::Mid, &cache.e2, &da3, true);
        put(Layer::Mid, dw, db);
        let de2 = de2.expect("dx");

        let (dp2, dw, db) = back(Layer::Zero2, &cache.p2, &de2, true);
        put(Layer::Zero2, dw, db);
        let mut dp2 = dp2.expect("dx");
        dp2.add_assign(&dp2_mid.expect("dx"));
        let dq2 = silu_backward(&cache.q2, &dp2);
        let (dp1_enc, dw, db) = back(Layer::Ctl2, &cache.p1, &dq2, true);
        put(Layer::Ctl2, dw, db);
        let da2 = silu_backward(&cache.a2, &de2);
        let (de1_enc, dw, db) = back(Layer::Enc2, &cache.e1, &da2, true);
        put(Layer::Enc2, dw, db);
        de1.add_assign(&de1_enc.expect("dx"));

        let (dp1, dw, db) = back(Layer::Zero1, &cache.p1, &de1, true);
        put(Layer::Zero1, dw, db);
        let mut dp1 = dp1.expect("dx");
        dp1.add_assign(&dp1_enc.expect("dx"));
        let dq1 = silu_backward(&cache.q1, &dp1);
        let (_, dw, db) = back(Layer::Ctl1, &cache.cin, &dq1, false);
        put(Layer::Ctl1, dw, db);
        let da1 = silu_backward(&cache.a1, &de1);
        let (_, dw, db) = back(Layer::Enc1, &cache.inp, &da1, false);
        put(Layer::Enc1, dw, db);
    }

    /// Fill zero projections with small random values (tests and ablations).
    pub fn randomize_projections(&mut self, seed: u64, scale: f64) {
        let mut rng = rng_from(seed);
        for e in self.layout.clone() {
            if e.layer.is_zero_projection() {
                for p in &mut self.params[e.offset..e.offset + e.len] {
                    *p = rng.gen_range(-scale..scale);
                }
            }
        }
    }
}

/// Image-plane coordinates in `[-1, 1]`, x to the right, y up.
fn coord(i: usize, n: usize) -> f64 {
    2.0 * (i as f64 + 0.5) / n as f64 - 1.0
}

fn base_input(x_scaled: &Tensor, sigma: f64, cond: &Tensor) -> Tensor {
    let [n, _, h, w] = x_scaled.shape();
    let mut inp = Tensor::zeros(n, BASE_IN, h, w);
    let noise_level = sigma.ln() / 4.0;
    for f in 0..n {
        for c in 0..3 {
            inp.plane_mut(f, c).copy_from_slice(x_scaled.plane(f, c));
            inp.plane_mut(f, 3 + c).copy_from_slice(cond.plane(0, c));
        }
        inp.plane_mut(f, 6).iter_mut().for_each(|v| *v = noise_level);
        fill_coords(&mut inp, f, 7, h, w);
    }
    inp
}

fn fill_coords(t: &mut Tensor, f: usize, c: usize, h: usize, w: usize) {
    let px = t.plane_mut(f, c);
    for y in 0..h {
        for x in 0..w {
            px[y * w + x] = coord(x, w);
        }
    }
    let py = t.plane_mut(f, c + 1);
    for y in 0..h {
        for x in 0..w {
            py[y * w + x] = -coord(y, h);
        }
    }
}

fn control_input(control: &Tensor) -> Tensor {
    let [n, _, h, w] = control.shape();
    let mut cin = Tensor::zeros(n, CTRL_IN, h, w);
    for f in 0..n {
        for c in 0..ControlVolume::CHANNELS {
            cin.plane_mut(f, c).copy_from_slice(control.plane(f, c));
        }
        let theta: Vec<f64> = control
            .plane(f, 0)
            .iter()
            .map(|t| t * std::f64::consts::TAU)
            .collect();
        for (v, t) in cin.plane_mut(f, 5).iter_mut().zip(&theta) {
            *v = t.sin();
        }
        for (v, t) in cin.plane_mut(f, 6).iter_mut().zip(&theta) {
            *v = t.cos();
        }
        fill_coords(&mut cin, f, 7, h, w);
    }
    cin
}

/// `N × H × W × 5` control volume as an `N × 5 × H × W` tensor.
pub fn control_tensor(cv: &ControlVolume) -> Tensor {
    let (n, h, w) = cv.dims;
    let mut t = Tensor::zeros(n, ControlVolume::CHANNELS, h, w);
    for f in 0..n {
        for y in 0..h {
            for x in 0..w {
                for c in 0..ControlVolume::CHANNELS {
                    let i = t.idx(f, c, y, x);
                    t.data[i] = cv.get(f, y, x, c);
                }
            }
        }
    }
    t
}
