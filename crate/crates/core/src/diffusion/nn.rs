//! Minimal f64 tensor ops with hand-written backward passes.

use crate::error::{Error, Result};

/// Frames × channels × height × width, planar.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Tensor {
            n,
            c,
            h,
            w,
            data: vec![0.0; n * c * h * w],
        }
    }

    pub fn from_vec(n: usize, c: usize, h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * c * h * w {
            return Err(Error::ShapeMismatch {
                expected: vec![n, c, h, w],
                got: vec![data.len()],
            });
        }
        Ok(Tensor { n, c, h, w, data })
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.n, self.c, self.h, self.w]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn idx(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        ((n * self.c + c) * self.h + y) * self.w + x
    }

    #[inline]
    pub fn get(&self, n: usize, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.idx(n, c, y, x)]
    }

    pub fn plane(&self, n: usize, c: usize) -> &[f64] {
        let s = self.h * self.w;
        let o = (n * self.c + c) * s;
        &self.data[o..o + s]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [f64] {
        let s = self.h * self.w;
        let o = (n * self.c + c) * s;
        &mut self.data[o..o + s]
    }

    pub fn frame(&self, n: usize) -> &[f64] {
        let s = self.c * self.h * self.w;
        &self.data[n * s..(n + 1) * s]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn check_shape(&self, expected: [usize; 4]) -> Result<()> {
        if self.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected: expected.to_vec(),
                got: self.shape().to_vec(),
            });
        }
        Ok(())
    }

    fn with_data(&self, data: Vec<f64>) -> Tensor {
        Tensor {
            n: self.n,
            c: self.c,
            h: self.h,
            w: self.w,
            data,
        }
    }
}

/// Square-kernel 2D convolution with zero padding `k / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub stride: usize,
}

impl ConvShape {
    pub fn weight_len(&self) -> usize {
        self.c_out * self.c_in * self.k * self.k
    }

    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        let p = self.k / 2;
        (
            (h + 2 * p - self.k) / self.stride + 1,
            (w + 2 * p - self.k) / self.stride + 1,
        )
    }

    /// Valid output index range along one axis for kernel tap `kk`.
    #[inline]
    fn range(&self, kk: usize, n_in: usize, n_out: usize) -> (usize, usize) {
        let p = self.k / 2;
        // in = out * s + kk - p must lie in [0, n_in).
        let lo = if kk >= p {
            0
        } else {
            (p - kk).div_ceil(self.stride)
        };
        let hi_num = n_in + p;
        let hi = if hi_num > kk {
            ((hi_num - kk - 1) / self.stride + 1).min(n_out)
        } else {
            0
        };
        (lo, hi.max(lo))
    }
}

pub fn conv2d(shape: &ConvShape, weight: &[f64], bias: &[f64], x: &Tensor) -> Tensor {
    debug_assert_eq!(x.c, shape.c_in);
    let (ho, wo) = shape.out_hw(x.h, x.w);
    let (k, s, p) = (shape.k, shape.stride, shape.k / 2);
    let mut y = Tensor::zeros(x.n, shape.c_out, ho, wo);
    for n in 0..x.n {
        for o in 0..shape.c_out {
            let plane = y.plane_mut(n, o);
            plane.iter_mut().for_each(|v| *v = bias[o]);
            for i in 0..shape.c_in {
                let inp = x.plane(n, i);
                for ky in 0..k {
                    let (y0, y1) = shape.range(ky, x.h, ho);
                    for kx in 0..k {
                        let wv = weight[((o * shape.c_in + i) * k + ky) * k + kx];
                        let (x0, x1) = shape.range(kx, x.w, wo);
                        for oy in y0..y1 {
                            let iy = oy * s + ky - p;
                            let orow = &mut plane[oy * wo..(oy + 1) * wo];
                            let irow = &inp[iy * x.w..(iy + 1) * x.w];
                            if s == 1 {
                                let off = kx as isize - p as isize;
                                for ox in x0..x1 {
                                    orow[ox] += wv * irow[(ox as isize + off) as usize];
                                }
                            } else {
                                for ox in x0..x1 {
                                    orow[ox] += wv * irow[ox * s + kx - p];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    y
}

/// Returns `(dx, dw, db)`; `dx` is skipped when `need_dx` is false.
pub fn conv2d_backward(
    shape: &ConvShape,
    weight: &[f64],
    x: &Tensor,
    dy: &Tensor,
    need_dx: bool,
) -> (Option<Tensor>, Vec<f64>, Vec<f64>) {
    let (ho, wo) = (dy.h, dy.w);
    let (k, s, p) = (shape.k, shape.stride, shape.k / 2);
    let mut dw = vec![0.0; shape.weight_len()];
    let mut db = vec![0.0; shape.c_out];
    let mut dx = need_dx.then(|| Tensor::zeros(x.n, x.c, x.h, x.w));
    for n in 0..x.n {
        for o in 0..shape.c_out {
            let g = dy.plane(n, o);
            db[o] += g.iter().sum::<f64>();
            for i in 0..shape.c_in {
                let inp = x.plane(n, i);
                for ky in 0..k {
                    let (y0, y1) = shape.range(ky, x.h, ho);
                    for kx in 0..k {
                        let widx = ((o * shape.c_in + i) * k + ky) * k + kx;
                        let wv = weight[widx];
                        let (x0, x1) = shape.range(kx, x.w, wo);
                        let mut acc = 0.0;
                        for oy in y0..y1 {
                            let iy = oy * s + ky - p;
                            let grow = &g[oy * wo..(oy + 1) * wo];
                            let irow = &inp[iy * x.w..(iy + 1) * x.w];
                            for ox in x0..x1 {
                                acc += grow[ox] * irow[ox * s + kx - p];
                            }
                        }
                        dw[widx] += acc;
                        if let Some(dx) = dx.as_mut() {
                            let w_in = x.w;
                            let dplane = dx.plane_mut(n, i);
                            for oy in y0..y1 {
                                let iy = oy * s + ky - p;
                                let grow = &g[oy * wo..(oy + 1) * wo];
                                let drow = &mut dplane[iy * w_in..(iy + 1) * w_in];
                                for ox in x0..x1 {
                                    drow[ox * s + kx - p] += wv * grow[ox];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (dx, dw, db)
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub fn silu(x: &Tensor) -> Tensor {
    x.with_data(x.data.iter().map(|&v| v * sigmoid(v)).collect())
}

/// Gradient through SiLU given its pre-activation input.
pub fn silu_backward(pre: &Tensor, dy: &Tensor) -> Tensor {
    pre.with_data(
        pre.data
            .iter()
            .zip(&dy.data)
            .map(|(&v, &g)| {
                let s = sigmoid(v);
                g * s * (1.0 + v * (1.0 - s))
            })
            .collect(),
    )
}

pub fn upsample2(x: &Tensor) -> Tensor {
    let mut y = Tensor::zeros(x.n, x.c, x.h * 2, x.w * 2);
    for n in 0..x.n {
        for c in 0..x.c {
            let src = x.plane(n, c).to_vec();
            let w2 = x.w * 2;
            let dst = y.plane_mut(n, c);
            for yy in 0..x.h * 2 {
                for xx in 0..w2 {
                    dst[yy * w2 + xx] = src[(yy / 2) * x.w + xx / 2];
                }
            }
        }
    }
    y
}

pub fn upsample2_backward(dy: &Tensor) -> Tensor {
    let (h, w) = (dy.h / 2, dy.w / 2);
    let mut dx = Tensor::zeros(dy.n, dy.c, h, w);
    for n in 0..dy.n {
        for c in 0..dy.c {
            let g = dy.plane(n, c);
            let d = dx.plane_mut(n, c);
            for yy in 0..dy.h {
                for xx in 0..dy.w {
                    d[(yy / 2) * w + xx / 2] += g[yy * dy.w + xx];
                }
            }
        }
    }
    dx
}

/// Channel concatenation `[a, b]`.
pub fn concat(a: &Tensor, b: &Tensor) -> Tensor {
    debug_assert_eq!((a.n, a.h, a.w), (b.n, b.h, b.w));
    let mut out = Tensor::zeros(a.n, a.c + b.c, a.h, a.w);
    let (fa, fb) = (a.c * a.h * a.w, b.c * b.h * b.w);
    for n in 0..a.n {
        let o = n * (fa + fb);
        out.data[o..o + fa].copy_from_slice(a.frame(n));
        out.data[o + fa..o + fa + fb].copy_from_slice(b.frame(n));
    }
    out
}

pub fn split_channels(t: &Tensor, ca: usize) -> (Tensor, Tensor) {
    let cb = t.c - ca;
    let hw = t.h * t.w;
    let mut a = Tensor::zeros(t.n, ca, t.h, t.w);
    let mut b = Tensor::zeros(t.n, cb, t.h, t.w);
    for n in 0..t.n {
        let f = t.frame(n);
        a.data[n * ca * hw..(n + 1) * ca * hw].copy_from_slice(&f[..ca * hw]);
        b.data[n * cb * hw..(n + 1) * cb * hw].copy_from_slice(&f[ca * hw..]);
    }
    (a, b)
}

/// Mean over frames, kept as a single-frame tensor.
pub fn frame_mean(x: &Tensor) -> Tensor {
    let fs = x.c * x.h * x.w;
    let mut m = Tensor::zeros(1, x.c, x.h, x.w);
    for n in 0..x.n {
        for (a, b) in m.data.iter_mut().zip(&x.data[n * fs..(n + 1) * fs]) {
            *a += b;
        }
    }
    let inv = 1.0 / x.n as f64;
    m.data.iter_mut().for_each(|v| *v *= inv);
    m
}

/// Add a single-frame tensor to every frame.
pub fn broadcast_add(x: &mut Tensor, one: &Tensor) {
    let fs = x.c * x.h * x.w;
    for n in 0..x.n {
        for (a, b) in x.data[n * fs..(n + 1) * fs].iter_mut().zip(&one.data) {
            *a += b;
        }
    }
}

/// Sum over frames (adjoint of broadcasting).
pub fn frame_sum(x: &Tensor) -> Tensor {
    let mut m = frame_mean(x);
    let n = x.n as f64;
    m.data.iter_mut().for_each(|v| *v *= n);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use rand::Rng;

    fn rand_tensor(n: usize, c: usize, h: usize, w: usize, seed: u64) -> Tensor {
        let mut rng = rng_from(seed);
        Tensor::from_vec(n, c, h, w, (0..n * c * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
    }

    /// Direct definition of the convolution, no range bookkeeping.
    fn conv_naive(s: &ConvShape, wt: &[f64], b: &[f64], x: &Tensor) -> Tensor {
        let (ho, wo) = s.out_hw(x.h, x.w);
        let p = (s.k / 2) as isize;
        let mut y = Tensor::zeros(x.n, s.c_out, ho, wo);
        for n in 0..x.n {
            for o in 0..s.c_out {
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut acc = b[o];
                        for i in 0..s.c_in {
                            for ky in 0..s.k {
                                for kx in 0..s.k {
                                    let iy = (oy * s.stride + ky) as isize - p;
                                    let ix = (ox * s.stride + kx) as isize - p;
                                    if iy >= 0 && ix >= 0 && (iy as usize) < x.h && (ix as usize) < x.w {
                                        acc += wt[((o * s.c_in + i) * s.k + ky) * s.k + kx]
                                            * x.get(n, i, iy as usize, ix as usize);
                                    }
                                }
                            }
                        }
                        let id = y.idx(n, o, oy, ox);
                        y.data[id] = acc;
                    }
                }
            }
        }
        y
    }

    #[test]
    fn conv_matches_naive() {
        for (k, stride, h, w) in [(3, 1, 6, 5), (3, 2, 8, 8), (1, 1, 4, 4), (3, 2, 7, 5)] {
            let s = ConvShape { c_in: 3, c_out: 4, k, stride };
            let x = rand_tensor(2, 3, h, w, 1);
            let wt = rand_tensor(1, 1, 1, s.weight_len(), 2).data;
            let b = vec![0.1, -0.2, 0.3, 0.0];
            let a = conv2d(&s, &wt, &b, &x);
            let e = conv_naive(&s, &wt, &b, &x);
            assert_eq!(a.shape(), e.shape());
            for (u, v) in a.data.iter().zip(&e.data) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_backward_is_adjoint() {
        // <conv(x), g> is linear in x and w, so its gradients are exact.
        for stride in [1, 2] {
            let s = ConvShape { c_in: 2, c_out: 3, k: 3, stride };
            let x = rand_tensor(2, 2, 6, 6, 3);
            let wt = rand_tensor(1, 1, 1, s.weight_len(), 4).data;
            let b = vec![0.0; 3];
            let y = conv2d(&s, &wt, &b, &x);
            let g = rand_tensor(y.n, y.c, y.h, y.w, 5);
            let (dx, dw, db) = conv2d_backward(&s, &wt, &x, &g, true);
            let dx = dx.unwrap();
            let dot = |t: &Tensor| t.data.iter().zip(&g.data).map(|(a, b)| a * b).sum::<f64>();
            let base = dot(&conv2d(&s, &wt, &b, &x));
            let mut rng = rng_from(6);
            for _ in 0..10 {
                let i = rng.gen_range(0..x.len());
                let mut xp = x.clone();
                xp.data[i] += 1.0;
                assert!((dot(&conv2d(&s, &wt, &b, &xp)) - base - dx.data[i]).abs() < 1e-9);
                let j = rng.gen_range(0..wt.len());
                let mut wp = wt.clone();
                wp[j] += 1.0;
                assert!((dot(&conv2d(&s, &wp, &b, &x)) - base - dw[j]).abs() < 1e-9);
            }
            let sum_g: f64 = (0..g.n).map(|n| g.plane(n, 1).iter().sum::<f64>()).sum();
            assert!((db[1] - sum_g).abs() < 1e-12);
        }
    }

    #[test]
    fn upsample_concat_roundtrip() {
        let x = rand_tensor(2, 3, 3, 4, 7);
        let u = upsample2(&x);
        assert_eq!(u.get(1, 2, 5, 7), x.get(1, 2, 2, 3));
        let back = upsample2_backward(&u);
        for (a, b) in back.data.iter().zip(&x.data) {
            assert!((a - 4.0 * b).abs() < 1e-12);
        }
        let y = rand_tensor(2, 2, 3, 4, 8);
        let (a, b) = split_channels(&concat(&x, &y), 3);
        assert_eq!((a, b), (x, y));
    }

    #[test]
    fn silu_derivative() {
        let x = rand_tensor(1, 1, 1, 50, 9).map(|v| v * 6.0);
        let ones = x.map(|_| 1.0);
        let d = silu_backward(&x, &ones);
        let h = 1e-6;
        for (i, &v) in x.data.iter().enumerate() {
            let f = |t: f64| t / (1.0 + (-t).exp());
            let fd = (f(v + h) - f(v - h)) / (2.0 * h);
            assert!((fd - d.data[i]).abs() < 1e-8);
        }
    }
}
