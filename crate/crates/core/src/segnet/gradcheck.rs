//! Central finite-difference checks of every backward kernel.
//!
//! ReLU and max pooling make the network piecewise smooth. A difference
//! quotient that straddles a kink measures a one-sided mix and says nothing
//! about the analytic gradient, so every probe also compares the activation
//! pattern with the unperturbed pass and retries with a smaller step when it
//! changes. Probes that still cross a kink at the smallest step are counted
//! as skipped.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::layers::{
    attention_gate_backward, attention_gate_forward, concat_backward, concat_forward,
    conv2d_backward, conv2d_forward, maxpool2_backward, maxpool2_forward, relu_backward,
    relu_forward, sigmoid_backward, sigmoid_forward, upsample2_backward, upsample2_forward,
    ConvShape, GateGrads, GateParams,
};
use super::loss::bce_loss;
use super::net::UNet;
use super::tensor::Tensor4;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const REL_TOLERANCE: f64 = 1e-4;
const MIN_STEP: f64 = 1e-9;

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub name: String,
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.max_rel_error < REL_TOLERANCE
    }
}

/// Compares `analytic` with central differences of `f` around `x`.
///
/// `f` returns the loss and an activation pattern; probes whose pattern
/// differs from the one at `x` are retried with a step ten times smaller.
pub fn check_vector<P: PartialEq>(
    name: &str,
    x: &[f64],
    analytic: &[f64],
    step: f64,
    mut f: impl FnMut(&[f64]) -> Result<(f64, P)>,
) -> Result<GradCheckReport> {
    assert_eq!(x.len(), analytic.len());
    let (_, base) = f(x)?;
    let mut probe = x.to_vec();
    let mut report = GradCheckReport {
        name: name.to_string(),
        checked: 0,
        skipped: 0,
        max_rel_error: 0.0,
    };
    for i in 0..x.len() {
        let mut h = step;
        let numeric = loop {
            probe[i] = x[i] + h;
            let (up, p_up) = f(&probe)?;
            probe[i] = x[i] - h;
            let (down, p_down) = f(&probe)?;
            probe[i] = x[i];
            if p_up == base && p_down == base {
                break Some((up - down) / (2.0 * h));
            }
            h /= 10.0;
            if h < MIN_STEP {
                break None;
            }
        };
        match numeric {
            Some(n) => {
                report.checked += 1;
                report.max_rel_error = report.max_rel_error.max(rel_error(analytic[i], n));
            }
            None => report.skipped += 1,
        }
    }
    Ok(report)
}

/// Checks every parameter tensor of `net` under the BCE loss.
pub fn check_network(net: &UNet, x: &Tensor4, target: &Tensor4, step: f64) -> Result<Vec<GradCheckReport>> {
    let (_, grads) = net.loss_and_grad(x, target)?;
    let mut probe = net.clone();
    let mut out = Vec::with_capacity(grads.len());
    for (k, g) in grads.iter().enumerate() {
        let values = net.params().iter().nth(k).expect("same layout").data.clone();
        let report = check_vector(&g.name, &values, &g.data, step, |v| {
            probe.params_mut().iter_mut().nth(k).expect("same layout").data.copy_from_slice(v);
            let cache = probe.forward_cached(x)?;
            let (loss, _) = bce_loss(cache.output(), target)?;
            Ok((loss, cache.activation_pattern()))
        })?;
        probe.params_mut().iter_mut().nth(k).expect("same layout").data.copy_from_slice(&values);
        out.push(report);
    }
    Ok(out)
}

struct Rand(ChaCha8Rng);

impl Rand {
    fn vec(&mut self, len: usize, scale: f64) -> Vec<f64> {
        let d = Uniform::new(-scale, scale);
        (0..len).map(|_| d.sample(&mut self.0)).collect()
    }

    fn tensor(&mut self, dims: [usize; 4], scale: f64) -> Tensor4 {
        Tensor4::from_raw(dims, self.vec(dims.iter().product(), scale))
    }
}

/// `sum(r * y)`: a random linear read-out whose gradient with respect to `y`
/// is `r`.
fn dot(r: &Tensor4, y: &Tensor4) -> f64 {
    r.data().iter().zip(y.data()).map(|(a, b)| a * b).sum()
}

fn relu_pattern(t: &Tensor4) -> Vec<bool> {
    t.data().iter().map(|v| *v > 0.0).collect()
}

/// Per-layer checks on small random tensors: convolution (3x3 and 1x1),
/// ReLU, max pooling, upsampling, skip concatenation, the attention gate and
/// the sigmoid head with BCE.
pub fn check_layers(seed: u64, step: f64) -> Result<Vec<GradCheckReport>> {
    let mut rng = Rand(ChaCha8Rng::seed_from_u64(seed));
    let mut out = Vec::new();

    for k in [3, 1] {
        let s = ConvShape { cin: 3, cout: 2, k };
        let x = rng.tensor([2, 3, 5, 4], 1.0);
        let w = rng.vec(s.weight_len(), 0.5);
        let b = rng.vec(2, 0.5);
        let r = rng.tensor([2, 2, 5, 4], 1.0);
        let mut dw = vec![0.0; w.len()];
        let mut db = vec![0.0; 2];
        let dx = conv2d_backward(&x, &w, s, &r, &mut dw, &mut db);
        let name = format!("conv{k}x{k}");
        out.push(check_vector(&format!("{name}.input"), x.data(), dx.data(), step, |v| {
            let t = Tensor4::from_raw(x.dims(), v.to_vec());
            Ok((dot(&r, &conv2d_forward(&t, &w, &b, s)?), ()))
        })?);
        out.push(check_vector(&format!("{name}.weight"), &w, &dw, step, |v| {
            Ok((dot(&r, &conv2d_forward(&x, v, &b, s)?), ()))
        })?);
        out.push(check_vector(&format!("{name}.bias"), &b, &db, step, |v| {
            Ok((dot(&r, &conv2d_forward(&x, &w, v, s)?), ()))
        })?);
    }

    let x = rng.tensor([2, 2, 4, 4], 1.0);
    let r = rng.tensor(x.dims(), 1.0);
    let y = relu_forward(&x);
    let dx = relu_backward(&y, &r);
    out.push(check_vector("relu", x.data(), dx.data(), step, |v| {
        let y = relu_forward(&Tensor4::from_raw(x.dims(), v.to_vec()));
        Ok((dot(&r, &y), relu_pattern(&y)))
    })?);

    let x = rng.tensor([2, 2, 4, 6], 1.0);
    let (y, argmax) = maxpool2_forward(&x)?;
    let r = rng.tensor(y.dims(), 1.0);
    let dx = maxpool2_backward(x.dims(), &argmax, &r);
    out.push(check_vector("maxpool2", x.data(), dx.data(), step, |v| {
        let (y, idx) = maxpool2_forward(&Tensor4::from_raw(x.dims(), v.to_vec()))?;
        Ok((dot(&r, &y), idx))
    })?);

    let x = rng.tensor([2, 3, 3, 2], 1.0);
    let r = rng.tensor([2, 3, 6, 4], 1.0);
    let dx = upsample2_backward(&r);
    out.push(check_vector("upsample2", x.data(), dx.data(), step, |v| {
        Ok((dot(&r, &upsample2_forward(&Tensor4::from_raw(x.dims(), v.to_vec()))), ()))
    })?);

    let a = rng.tensor([2, 2, 3, 3], 1.0);
    let b = rng.tensor([2, 3, 3, 3], 1.0);
    let r = rng.tensor([2, 5, 3, 3], 1.0);
    let (da, db) = concat_backward(&r, 2);
    out.push(check_vector("concat.skip", a.data(), da.data(), step, |v| {
        Ok((dot(&r, &concat_forward(&Tensor4::from_raw(a.dims(), v.to_vec()), &b)?), ()))
    })?);
    out.push(check_vector("concat.decoder", b.data(), db.data(), step, |v| {
        Ok((dot(&r, &concat_forward(&a, &Tensor4::from_raw(b.dims(), v.to_vec()))?), ()))
    })?);

    out.extend(check_gate(&mut rng, step)?);

    let z = rng.tensor([2, 2, 3, 3], 3.0);
    let t = Tensor4::from_raw(z.dims(), rng.vec(z.len(), 1.0).iter().map(|v| (*v > 0.0) as u8 as f64).collect());
    let p = sigmoid_forward(&z);
    let (_, dp) = bce_loss(&p, &t)?;
    let dz = sigmoid_backward(&p, &dp);
    out.push(check_vector("sigmoid+bce", z.data(), dz.data(), step, |v| {
        let p = sigmoid_forward(&Tensor4::from_raw(z.dims(), v.to_vec()));
        Ok((bce_loss(&p, &t)?.0, ()))
    })?);
    Ok(out)
}

fn check_gate(rng: &mut Rand, step: f64) -> Result<Vec<GradCheckReport>> {
    let (cx, cg, f) = (4, 6, 2);
    let skip = rng.tensor([2, cx, 4, 4], 1.0);
    let gating = rng.tensor([2, cg, 2, 2], 1.0);
    let mut p: Vec<Vec<f64>> = vec![
        rng.vec(f * cx, 1.0),
        rng.vec(f * cg, 1.0),
        rng.vec(f, 0.5),
        rng.vec(f, 1.0),
        rng.vec(1, 0.5),
    ];
    let r = rng.tensor(skip.dims(), 1.0);
    fn params(p: &[Vec<f64>]) -> GateParams<'_> {
        GateParams {
            theta: &p[0],
            phi: &p[1],
            phi_bias: &p[2],
            psi: &p[3],
            psi_bias: &p[4],
        }
    }
    let (_, cache) = attention_gate_forward(&skip, &gating, &params(&p))?;
    let mut g: Vec<Vec<f64>> = p.iter().map(|v| vec![0.0; v.len()]).collect();
    let (d_skip, d_gating) = {
        let [g0, g1, g2, g3, g4] = &mut g[..] else { unreachable!() };
        attention_gate_backward(
            &skip,
            &gating,
            &params(&p),
            &cache,
            &r,
            &mut GateGrads {
                theta: g0,
                phi: g1,
                phi_bias: g2,
                psi: g3,
                psi_bias: g4,
            },
        )?
    };
    let eval = |s: &Tensor4, gt: &Tensor4, p: &[Vec<f64>]| -> Result<(f64, Vec<bool>)> {
        let (y, c) = attention_gate_forward(s, gt, &params(p))?;
        Ok((dot(&r, &y), relu_pattern(&c.q)))
    };
    let mut out = vec![
        check_vector("gate.skip", skip.data(), d_skip.data(), step, |v| {
            eval(&Tensor4::from_raw(skip.dims(), v.to_vec()), &gating, &p)
        })?,
        check_vector("gate.gating", gating.data(), d_gating.data(), step, |v| {
            eval(&skip, &Tensor4::from_raw(gating.dims(), v.to_vec()), &p)
        })?,
    ];
    let names = ["theta", "phi", "phi_bias", "psi", "psi_bias"];
    for k in 0..5 {
        let base = p[k].clone();
        out.push(check_vector(&format!("gate.{}", names[k]), &base, &g[k], step, |v| {
            p[k].copy_from_slice(v);
            eval(&skip, &gating, &p)
        })?);
        p[k] = base;
    }
    Ok(out)
}
