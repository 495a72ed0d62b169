//! Forward and backward kernels for every layer type of the network.
//!
//! Convolutions are stride 1 with zero "same" padding (`k / 2`) and run as
//! im2col followed by a GEMM. Backward functions accumulate parameter
//! gradients into the given buffers (`+=`) and return the input gradient.

use crate::error::{Error, Result};

use super::tensor::Tensor4;

/// `C = alpha * op(A) * op(B) + beta * C` with row-major storage.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    beta: f64,
    c: &mut [f64],
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_trans { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_trans { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: slice lengths checked above cover every index reached with these strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Shape of a convolution's weight tensor `(out, in, k, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
}

impl ConvShape {
    pub fn weight_len(&self) -> usize {
        self.cout * self.cin * self.k * self.k
    }

    fn check(&self, x: &Tensor4, w: &[f64], b: &[f64]) -> Result<()> {
        if x.channels() != self.cin {
            return Err(Error::ShapeMismatch(format!(
                "conv expects {} input channels, got {}",
                self.cin,
                x.channels()
            )));
        }
        if w.len() != self.weight_len() || b.len() != self.cout {
            return Err(Error::ShapeMismatch(format!(
                "conv weights {} / bias {} for shape {self:?}",
                w.len(),
                b.len()
            )));
        }
        if self.k % 2 == 0 {
            return Err(Error::ShapeMismatch("conv kernel size must be odd".into()));
        }
        Ok(())
    }
}

fn im2col(x: &[f64], cin: usize, h: usize, w: usize, k: usize, cols: &mut [f64]) {
    let pad = (k / 2) as isize;
    let hw = h * w;
    for ci in 0..cin {
        let plane = &x[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut cols[row * hw..(row + 1) * hw];
                let dy = ky as isize - pad;
                let dx = kx as isize - pad;
                for y in 0..h {
                    let sy = y as isize + dy;
                    let out = &mut dst[y * w..(y + 1) * w];
                    if sy < 0 || sy >= h as isize {
                        out.fill(0.0);
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    for (x_out, o) in out.iter_mut().enumerate() {
                        let sx = x_out as isize + dx;
                        *o = if sx < 0 || sx >= w as isize { 0.0 } else { src[sx as usize] };
                    }
                }
            }
        }
    }
}

fn col2im(cols: &[f64], cin: usize, h: usize, w: usize, k: usize, dx_out: &mut [f64]) {
    let pad = (k / 2) as isize;
    let hw = h * w;
    for ci in 0..cin {
        let plane = &mut dx_out[ci * hw..(ci + 1) * hw];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &cols[row * hw..(row + 1) * hw];
                let dy = ky as isize - pad;
                let dx = kx as isize - pad;
                for y in 0..h {
                    let sy = y as isize + dy;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    for x_out in 0..w {
                        let sx = x_out as isize + dx;
                        if sx >= 0 && sx < w as isize {
                            dst[sx as usize] += src[y * w + x_out];
                        }
                    }
                }
            }
        }
    }
}

pub fn conv2d_forward(x: &Tensor4, w: &[f64], b: &[f64], shape: ConvShape) -> Result<Tensor4> {
    shape.check(x, w, b)?;
    let [n, _, h, wd] = x.dims();
    let hw = h * wd;
    let kk = shape.cin * shape.k * shape.k;
    let mut out = Tensor4::zeros([n, shape.cout, h, wd]);
    let mut cols = if shape.k == 1 { Vec::new() } else { vec![0.0; kk * hw] };
    for i in 0..n {
        let y = out.sample_mut(i);
        for (co, bias) in b.iter().enumerate() {
            y[co * hw..(co + 1) * hw].fill(*bias);
        }
        let input: &[f64] = if shape.k == 1 {
            x.sample(i)
        } else {
            im2col(x.sample(i), shape.cin, h, wd, shape.k, &mut cols);
            &cols
        };
        gemm(shape.cout, kk, hw, w, false, input, false, 1.0, y);
    }
    Ok(out)
}

/// Returns `dx`; adds into `dw` and `db`.
pub fn conv2d_backward(
    x: &Tensor4,
    w: &[f64],
    shape: ConvShape,
    dy: &Tensor4,
    dw: &mut [f64],
    db: &mut [f64],
) -> Tensor4 {
    let [n, _, h, wd] = x.dims();
    let hw = h * wd;
    let kk = shape.cin * shape.k * shape.k;
    let mut dx = Tensor4::zeros(x.dims());
    let mut cols = if shape.k == 1 { Vec::new() } else { vec![0.0; kk * hw] };
    let mut dcols = vec![0.0; kk * hw];
    for i in 0..n {
        let g = dy.sample(i);
        for (co, acc) in db.iter_mut().enumerate() {
            *acc += g[co * hw..(co + 1) * hw].iter().sum::<f64>();
        }
        let input: &[f64] = if shape.k == 1 {
            x.sample(i)
        } else {
            im2col(x.sample(i), shape.cin, h, wd, shape.k, &mut cols);
            &cols
        };
        // dW += dY * cols^T
        gemm(shape.cout, hw, kk, g, false, input, true, 1.0, dw);
        if shape.k == 1 {
            // dX = W^T * dY directly
            gemm(kk, shape.cout, hw, w, true, g, false, 0.0, dx.sample_mut(i));
        } else {
            gemm(kk, shape.cout, hw, w, true, g, false, 0.0, &mut dcols);
            col2im(&dcols, shape.cin, h, wd, shape.k, dx.sample_mut(i));
        }
    }
    dx
}

pub fn relu_forward(x: &Tensor4) -> Tensor4 {
    Tensor4::from_raw(x.dims(), x.data().iter().map(|v| v.max(0.0)).collect())
}

/// Gradient through a ReLU given its output.
pub fn relu_backward(y: &Tensor4, dy: &Tensor4) -> Tensor4 {
    let data = y
        .data()
        .iter()
        .zip(dy.data())
        .map(|(o, g)| if *o > 0.0 { *g } else { 0.0 })
        .collect();
    Tensor4::from_raw(y.dims(), data)
}

/// 2x2 max pooling, stride 2. Also returns the flat input index of each winner.
pub fn maxpool2_forward(x: &Tensor4) -> Result<(Tensor4, Vec<usize>)> {
    let [n, c, h, w] = x.dims();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::ShapeMismatch(format!("cannot pool a {h}x{w} map by 2")));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut argmax = Vec::with_capacity(out.capacity());
    let data = x.data();
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + 2 * oy * w + 2 * ox;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = base + (2 * oy + dy) * w + 2 * ox + dx;
                    if data[idx] > data[best] {
                        best = idx;
                    }
                }
                out.push(data[best]);
                argmax.push(best);
            }
        }
    }
    Ok((Tensor4::from_raw([n, c, oh, ow], out), argmax))
}

pub fn maxpool2_backward(input_dims: [usize; 4], argmax: &[usize], dy: &Tensor4) -> Tensor4 {
    let mut dx = Tensor4::zeros(input_dims);
    let d = dx.data_mut();
    for (g, &idx) in dy.data().iter().zip(argmax) {
        d[idx] += g;
    }
    dx
}

/// Nearest-neighbor 2x upsampling.
pub fn upsample2_forward(x: &Tensor4) -> Tensor4 {
    let [n, c, h, w] = x.dims();
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let data = x.data();
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            let row = &data[base + (oy / 2) * w..base + (oy / 2 + 1) * w];
            for ox in 0..ow {
                out.push(row[ox / 2]);
            }
        }
    }
    Tensor4::from_raw([n, c, oh, ow], out)
}

pub fn upsample2_backward(dy: &Tensor4) -> Tensor4 {
    let [n, c, oh, ow] = dy.dims();
    let (h, w) = (oh / 2, ow / 2);
    let mut dx = Tensor4::zeros([n, c, h, w]);
    let g = dy.data();
    let d = dx.data_mut();
    for plane in 0..n * c {
        for oy in 0..oh {
            for ox in 0..ow {
                d[plane * h * w + (oy / 2) * w + ox / 2] += g[plane * oh * ow + oy * ow + ox];
            }
        }
    }
    dx
}

/// Channel concatenation `[a, b]`.
pub fn concat_forward(a: &Tensor4, b: &Tensor4) -> Result<Tensor4> {
    let [n, ca, h, w] = a.dims();
    let [nb, cb, hb, wb] = b.dims();
    if (n, h, w) != (nb, hb, wb) {
        return Err(Error::ShapeMismatch(format!(
            "concat {:?} with {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let mut out = Vec::with_capacity(n * (ca + cb) * h * w);
    for i in 0..n {
        out.extend_from_slice(a.sample(i));
        out.extend_from_slice(b.sample(i));
    }
    Ok(Tensor4::from_raw([n, ca + cb, h, w], out))
}

/// Splits a concat gradient back into the `ca` leading and remaining channels.
pub fn concat_backward(dy: &Tensor4, ca: usize) -> (Tensor4, Tensor4) {
    let [n, c, h, w] = dy.dims();
    let cb = c - ca;
    let hw = h * w;
    let mut da = Vec::with_capacity(n * ca * hw);
    let mut db = Vec::with_capacity(n * cb * hw);
    for i in 0..n {
        let s = dy.sample(i);
        da.extend_from_slice(&s[..ca * hw]);
        db.extend_from_slice(&s[ca * hw..]);
    }
    (
        Tensor4::from_raw([n, ca, h, w], da),
        Tensor4::from_raw([n, cb, h, w], db),
    )
}

/// Smallest and largest probability the sigmoid head emits, so outputs stay
/// strictly inside (0, 1).
pub const PROB_FLOOR: f64 = f64::EPSILON / 2.0;
pub const PROB_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn sigmoid_forward(x: &Tensor4) -> Tensor4 {
    Tensor4::from_raw(
        x.dims(),
        x.data()
            .iter()
            .map(|v| sigmoid(*v).clamp(PROB_FLOOR, PROB_CEIL))
            .collect(),
    )
}

/// Gradient through a sigmoid given its output.
pub fn sigmoid_backward(y: &Tensor4, dy: &Tensor4) -> Tensor4 {
    Tensor4::from_raw(
        y.dims(),
        y.data()
            .iter()
            .zip(dy.data())
            .map(|(p, g)| g * p * (1.0 - p))
            .collect(),
    )
}

/// Parameters of an additive attention gate.
///
/// `alpha = sigmoid(psi . relu(theta . x + phi . g + b_phi) + b_psi)` with
/// `theta`, `phi`, `psi` all 1x1 convolutions, and the gate output is
/// `alpha * x` broadcast over the skip channels. When `g` has half the
/// spatial size of `x`, `phi . g` is upsampled 2x (nearest) before the sum.
#[derive(Debug, Clone, Copy)]
pub struct GateParams<'a> {
    /// `(inter, skip_channels)`
    pub theta: &'a [f64],
    /// `(inter, gating_channels)`
    pub phi: &'a [f64],
    /// `(inter)`
    pub phi_bias: &'a [f64],
    /// `(1, inter)`
    pub psi: &'a [f64],
    /// `(1)`
    pub psi_bias: &'a [f64],
}

pub struct GateGrads<'a> {
    pub theta: &'a mut [f64],
    pub phi: &'a mut [f64],
    pub phi_bias: &'a mut [f64],
    pub psi: &'a mut [f64],
    pub psi_bias: &'a mut [f64],
}

/// Intermediate values kept for the gate's backward pass.
#[derive(Debug, Clone)]
pub struct GateCache {
    pub(crate) q: Tensor4,
    pub alpha: Tensor4,
    upsampled: bool,
}

fn gate_shapes(skip: &Tensor4, gating: &Tensor4, p: &GateParams) -> Result<(ConvShape, ConvShape, ConvShape, bool)> {
    let upsampled = match (gating.height(), gating.width()) {
        (h, w) if (h, w) == (skip.height(), skip.width()) => false,
        (h, w) if (2 * h, 2 * w) == (skip.height(), skip.width()) => true,
        _ => {
            return Err(Error::ShapeMismatch(format!(
                "gating {:?} is not compatible with skip {:?}",
                gating.dims(),
                skip.dims()
            )))
        }
    };
    if skip.batch() != gating.batch() {
        return Err(Error::ShapeMismatch("gate batch sizes differ".into()));
    }
    let inter = p.phi_bias.len();
    let theta = ConvShape {
        cin: skip.channels(),
        cout: inter,
        k: 1,
    };
    let phi = ConvShape {
        cin: gating.channels(),
        cout: inter,
        k: 1,
    };
    let psi = ConvShape {
        cin: inter,
        cout: 1,
        k: 1,
    };
    if p.theta.len() != theta.weight_len()
        || p.phi.len() != phi.weight_len()
        || p.psi.len() != psi.weight_len()
        || p.psi_bias.len() != 1
    {
        return Err(Error::ShapeMismatch("attention gate parameter sizes".into()));
    }
    Ok((theta, phi, psi, upsampled))
}

fn add_into(a: &mut Tensor4, b: &Tensor4) {
    for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
        *x += y;
    }
}

fn scale_by_alpha(x: &Tensor4, alpha: &Tensor4) -> Tensor4 {
    let [n, c, h, w] = x.dims();
    let hw = h * w;
    let mut out = Vec::with_capacity(x.len());
    for i in 0..n {
        let a = alpha.sample(i);
        let s = x.sample(i);
        for ch in 0..c {
            out.extend(s[ch * hw..(ch + 1) * hw].iter().zip(a).map(|(v, a)| v * a));
        }
    }
    Tensor4::from_raw(x.dims(), out)
}

pub fn attention_gate_forward(
    skip: &Tensor4,
    gating: &Tensor4,
    p: &GateParams,
) -> Result<(Tensor4, GateCache)> {
    let (theta_s, phi_s, psi_s, upsampled) = gate_shapes(skip, gating, p)?;
    let no_bias = vec![0.0; theta_s.cout];
    let mut sum = conv2d_forward(skip, p.theta, &no_bias, theta_s)?;
    let phi = conv2d_forward(gating, p.phi, p.phi_bias, phi_s)?;
    let phi = if upsampled { upsample2_forward(&phi) } else { phi };
    add_into(&mut sum, &phi);
    let q = relu_forward(&sum);
    let psi = conv2d_forward(&q, p.psi, p.psi_bias, psi_s)?;
    let alpha = Tensor4::from_raw(psi.dims(), psi.data().iter().map(|v| sigmoid(*v)).collect());
    let out = scale_by_alpha(skip, &alpha);
    Ok((out, GateCache { q, alpha, upsampled }))
}

/// Returns `(d_skip, d_gating)`; adds into the parameter gradients.
pub fn attention_gate_backward(
    skip: &Tensor4,
    gating: &Tensor4,
    p: &GateParams,
    cache: &GateCache,
    dout: &Tensor4,
    grads: &mut GateGrads,
) -> Result<(Tensor4, Tensor4)> {
    let (theta_s, phi_s, psi_s, _) = gate_shapes(skip, gating, p)?;
    let [n, c, h, w] = skip.dims();
    let hw = h * w;

    let mut dskip = scale_by_alpha(dout, &cache.alpha);
    let mut dpsi = Tensor4::zeros([n, 1, h, w]);
    for i in 0..n {
        let s = skip.sample(i);
        let g = dout.sample(i);
        let a = cache.alpha.sample(i);
        let d = dpsi.sample_mut(i);
        for ch in 0..c {
            for px in 0..hw {
                d[px] += g[ch * hw + px] * s[ch * hw + px];
            }
        }
        for px in 0..hw {
            d[px] *= a[px] * (1.0 - a[px]);
        }
    }
    let dq = conv2d_backward(&cache.q, p.psi, psi_s, &dpsi, grads.psi, grads.psi_bias);
    let dsum = relu_backward(&cache.q, &dq);
    let dphi = if cache.upsampled {
        upsample2_backward(&dsum)
    } else {
        dsum.clone()
    };
    let dgating = conv2d_backward(gating, p.phi, phi_s, &dphi, grads.phi, grads.phi_bias);
    let mut no_bias_grad = vec![0.0; theta_s.cout];
    let dskip_theta = conv2d_backward(skip, p.theta, theta_s, &dsum, grads.theta, &mut no_bias_grad);
    add_into(&mut dskip, &dskip_theta);
    Ok((dskip, dgating))
}
