//! Small U-Net with an optional additive attention gate on every skip
//! connection.
//!
//! Encoder level `l` has `base * 2^l` channels and runs conv3-ReLU-conv3-ReLU
//! before a 2x2 max pool. The decoder upsamples the coarser feature 2x
//! (nearest), applies conv3-ReLU, concatenates the (possibly gated) skip in
//! front of it and runs conv3-ReLU-conv3-ReLU. A 1x1 head maps to the heart
//! and thorax channels followed by a sigmoid.

use std::mem;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::GrayImage;

use super::layers::{
    attention_gate_backward, attention_gate_forward, concat_backward, concat_forward,
    conv2d_backward, conv2d_forward, maxpool2_backward, maxpool2_forward, relu_backward,
    relu_forward, sigmoid_backward, sigmoid_forward, upsample2_backward, upsample2_forward,
    ConvShape, GateCache, GateGrads, GateParams,
};
use super::loss::bce_loss;
use super::tensor::Tensor4;

/// Heart and thorax.
pub const OUTPUT_CHANNELS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub input_size: usize,
    pub base_channels: usize,
    pub depth: usize,
    pub attention_gate: bool,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            input_size: 64,
            base_channels: 8,
            depth: 3,
            attention_gate: true,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.depth > 8 {
            return Err(Error::InvalidConfig(format!("depth {} not in 1..=8", self.depth)));
        }
        if self.base_channels < 4 {
            return Err(Error::InvalidConfig(format!(
                "base channels {} < 4",
                self.base_channels
            )));
        }
        if self.input_size == 0 || self.input_size % (1 << self.depth) != 0 {
            return Err(Error::InvalidConfig(format!(
                "input size {} is not divisible by 2^{}",
                self.input_size, self.depth
            )));
        }
        Ok(())
    }

    pub fn channels(&self, level: usize) -> usize {
        self.base_channels << level
    }
}

/// One named parameter tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Ordered collection of parameters (or of gradients with the same layout).
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    list: Vec<Param>,
}

impl Params {
    pub fn new(list: Vec<Param>) -> Result<Self> {
        for p in &list {
            if p.shape.iter().product::<usize>() != p.data.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{}: shape {:?} vs {} values",
                    p.name,
                    p.shape,
                    p.data.len()
                )));
            }
            if p.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::ShapeMismatch(format!("{}: non-finite value", p.name)));
            }
        }
        Ok(Self { list })
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Param> {
        self.list.iter()
    }

    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, Param> {
        self.list.iter_mut()
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.list.iter().find(|p| p.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.list.iter_mut().find(|p| p.name == name)
    }

    /// Total number of scalar values.
    pub fn count(&self) -> usize {
        self.list.iter().map(|p| p.data.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            list: self
                .list
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    data: vec![0.0; p.data.len()],
                })
                .collect(),
        }
    }

    pub fn into_vec(self) -> Vec<Param> {
        self.list
    }

    pub(crate) fn data(&self, i: usize) -> &[f64] {
        &self.list[i].data
    }
}

#[derive(Debug, Clone, Copy)]
struct Conv {
    w: usize,
    b: usize,
    shape: ConvShape,
}

#[derive(Debug, Clone, Copy)]
struct Gate {
    theta: usize,
    phi: usize,
    phi_bias: usize,
    psi: usize,
    psi_bias: usize,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    a: Conv,
    b: Conv,
}

#[derive(Debug, Clone, Copy)]
struct DecLevel {
    up: Conv,
    gate: Option<Gate>,
    block: Block,
}

/// Parameter spec: name, shape and He fan-in (`None` for zero init).
type Spec = (String, Vec<usize>, Option<usize>);

#[derive(Debug, Clone)]
struct Layout {
    enc: Vec<Block>,
    bottleneck: Block,
    dec: Vec<DecLevel>,
    head: Conv,
    specs: Vec<Spec>,
}

impl Layout {
    fn build(cfg: &NetConfig) -> Self {
        let mut specs: Vec<Spec> = Vec::new();
        let mut push = |name: String, shape: Vec<usize>, fan_in: Option<usize>| {
            specs.push((name, shape, fan_in));
            specs.len() - 1
        };
        let mut conv = |prefix: &str, cin: usize, cout: usize, k: usize| {
            let w = push(format!("{prefix}.weight"), vec![cout, cin, k, k], Some(cin * k * k));
            let b = push(format!("{prefix}.bias"), vec![cout], None);
            Conv {
                w,
                b,
                shape: ConvShape { cin, cout, k },
            }
        };
        fn block(prefix: &str, cin: usize, cout: usize, conv: &mut impl FnMut(&str, usize, usize, usize) -> Conv) -> Block {
            Block {
                a: conv(&format!("{prefix}.conv_a"), cin, cout, 3),
                b: conv(&format!("{prefix}.conv_b"), cout, cout, 3),
            }
        }

        let mut enc = Vec::with_capacity(cfg.depth);
        let mut cin = 1;
        for l in 0..cfg.depth {
            enc.push(block(&format!("enc{l}"), cin, cfg.channels(l), &mut conv));
            cin = cfg.channels(l);
        }
        let bottleneck = block("bottleneck", cin, cfg.channels(cfg.depth), &mut conv);
        let mut dec = Vec::with_capacity(cfg.depth);
        for l in 0..cfg.depth {
            let c = cfg.channels(l);
            let up = conv(&format!("dec{l}.up"), cfg.channels(l + 1), c, 3);
            dec.push(DecLevel {
                up,
                gate: None,
                block: block(&format!("dec{l}"), 2 * c, c, &mut conv),
            });
        }
        let head = conv("head", cfg.base_channels, OUTPUT_CHANNELS, 1);
        drop(conv);
        if cfg.attention_gate {
            for (l, level) in dec.iter_mut().enumerate() {
                let (cx, cg) = (cfg.channels(l), cfg.channels(l + 1));
                let f = (cx / 2).max(1);
                let p = format!("dec{l}.gate");
                level.gate = Some(Gate {
                    theta: push(format!("{p}.theta"), vec![f, cx, 1, 1], Some(cx)),
                    phi: push(format!("{p}.phi"), vec![f, cg, 1, 1], Some(cg)),
                    phi_bias: push(format!("{p}.phi_bias"), vec![f], None),
                    psi: push(format!("{p}.psi"), vec![1, f, 1, 1], Some(f)),
                    psi_bias: push(format!("{p}.psi_bias"), vec![1], None),
                });
            }
        }
        Self {
            enc,
            bottleneck,
            dec,
            head,
            specs,
        }
    }
}

/// FNV-1a, used to give each parameter its own RNG stream.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn init_params(specs: &[Spec], seed: u64) -> Params {
    let list = specs
        .iter()
        .map(|(name, shape, fan_in)| {
            let len = shape.iter().product();
            let data = match fan_in {
                None => vec![0.0; len],
                Some(fan_in) => {
                    let limit = (6.0 / *fan_in as f64).sqrt();
                    let dist = Uniform::new_inclusive(-limit, limit);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(name_hash(name));
                    dist.sample_iter(&mut rng).take(len).collect()
                }
            };
            Param {
                name: name.clone(),
                shape: shape.clone(),
                data,
            }
        })
        .collect();
    Params { list }
}

#[derive(Debug, Clone)]
struct BlockCache {
    input: Tensor4,
    h1: Tensor4,
    h2: Tensor4,
}

#[derive(Debug, Clone)]
struct DecCache {
    level: usize,
    gating: Tensor4,
    up: Tensor4,
    u: Tensor4,
    gate: Option<GateCache>,
    block: BlockCache,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    enc: Vec<(BlockCache, Vec<usize>)>,
    bottleneck: BlockCache,
    dec: Vec<DecCache>,
    head_input: Tensor4,
    output: Tensor4,
}

/// Which ReLUs were active and which inputs won each pooling window.
///
/// Two forward passes with equal patterns lie on the same smooth piece of
/// the network function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationPattern {
    pub active: Vec<bool>,
    pub argmax: Vec<usize>,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor4 {
        &self.output
    }

    pub fn into_output(self) -> Tensor4 {
        self.output
    }

    /// Attention coefficients per decoder level (finest first), if gated.
    pub fn attention(&self) -> Vec<&Tensor4> {
        let mut levels: Vec<&DecCache> = self.dec.iter().collect();
        levels.sort_by_key(|d| d.level);
        levels
            .into_iter()
            .filter_map(|d| d.gate.as_ref().map(|g| &g.alpha))
            .collect()
    }

    pub fn activation_pattern(&self) -> ActivationPattern {
        let mut active = Vec::new();
        let mut argmax = Vec::new();
        let mut relu = |t: &Tensor4| active.extend(t.data().iter().map(|v| *v > 0.0));
        for (b, idx) in &self.enc {
            relu(&b.h1);
            relu(&b.h2);
            argmax.extend_from_slice(idx);
        }
        relu(&self.bottleneck.h1);
        relu(&self.bottleneck.h2);
        for d in &self.dec {
            relu(&d.u);
            if let Some(g) = &d.gate {
                relu(&g.q);
            }
            relu(&d.block.h1);
            relu(&d.block.h2);
        }
        ActivationPattern { active, argmax }
    }
}

#[derive(Debug, Clone)]
pub struct UNet {
    config: NetConfig,
    layout: Layout,
    params: Params,
}

impl UNet {
    /// He-uniform weights and zero biases. Every parameter draws from its own
    /// stream, so the plain and gated variants share weights for one seed.
    pub fn new(config: NetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = Layout::build(&config);
        let params = init_params(&layout.specs, seed);
        Ok(Self {
            config,
            layout,
            params,
        })
    }

    /// Rebuilds a network from stored parameters, checking names and shapes.
    pub fn from_params(config: NetConfig, params: Params) -> Result<Self> {
        config.validate()?;
        let layout = Layout::build(&config);
        if params.len() != layout.specs.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameter tensors, got {}",
                layout.specs.len(),
                params.len()
            )));
        }
        for ((name, shape, _), p) in layout.specs.iter().zip(params.iter()) {
            if *name != p.name || *shape != p.shape {
                return Err(Error::ShapeMismatch(format!(
                    "parameter {} {:?} does not match expected {name} {shape:?}",
                    p.name, p.shape
                )));
            }
        }
        Ok(Self {
            config,
            layout,
            params,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    pub fn into_params(self) -> Params {
        self.params
    }

    /// Sets every gate to `alpha = 1` exactly (zero `psi`, large `psi` bias).
    pub fn open_gates(&mut self) {
        for level in &self.layout.dec {
            if let Some(g) = level.gate {
                self.params.list[g.psi].data.fill(0.0);
                self.params.list[g.psi_bias].data.fill(1e3);
            }
        }
    }

    fn conv(&self, c: Conv, x: &Tensor4) -> Result<Tensor4> {
        conv2d_forward(x, self.params.data(c.w), self.params.data(c.b), c.shape)
    }

    fn gate_params(&self, g: Gate) -> GateParams<'_> {
        GateParams {
            theta: self.params.data(g.theta),
            phi: self.params.data(g.phi),
            phi_bias: self.params.data(g.phi_bias),
            psi: self.params.data(g.psi),
            psi_bias: self.params.data(g.psi_bias),
        }
    }

    fn block_forward(&self, b: Block, input: Tensor4) -> Result<BlockCache> {
        let h1 = relu_forward(&self.conv(b.a, &input)?);
        let h2 = relu_forward(&self.conv(b.b, &h1)?);
        Ok(BlockCache { input, h1, h2 })
    }

    fn check_input(&self, x: &Tensor4) -> Result<()> {
        let s = self.config.input_size;
        let [n, c, h, w] = x.dims();
        if n == 0 || c != 1 || h != s || w != s {
            return Err(Error::ShapeMismatch(format!(
                "network expects (N, 1, {s}, {s}) input, got {:?}",
                x.dims()
            )));
        }
        Ok(())
    }

    /// Heart/thorax probabilities, shape `(N, 2, H, W)`, every value in (0, 1).
    pub fn forward(&self, x: &Tensor4) -> Result<Tensor4> {
        Ok(self.forward_cached(x)?.into_output())
    }

    pub fn forward_cached(&self, x: &Tensor4) -> Result<ForwardCache> {
        self.check_input(x)?;
        let mut enc = Vec::with_capacity(self.config.depth);
        let mut cur = x.clone();
        for b in &self.layout.enc {
            let cache = self.block_forward(*b, cur)?;
            let (pooled, argmax) = maxpool2_forward(&cache.h2)?;
            enc.push((cache, argmax));
            cur = pooled;
        }
        let bottleneck = self.block_forward(self.layout.bottleneck, cur)?;
        let mut cur = bottleneck.h2.clone();
        let mut dec = Vec::with_capacity(self.config.depth);
        for level in (0..self.config.depth).rev() {
            let d = self.layout.dec[level];
            let gating = cur;
            let up = upsample2_forward(&gating);
            let u = relu_forward(&self.conv(d.up, &up)?);
            let skip = &enc[level].0.h2;
            let (cat, gate) = match d.gate {
                Some(g) => {
                    let (gated, cache) = attention_gate_forward(skip, &gating, &self.gate_params(g))?;
                    (concat_forward(&gated, &u)?, Some(cache))
                }
                None => (concat_forward(skip, &u)?, None),
            };
            let block = self.block_forward(d.block, cat)?;
            cur = block.h2.clone();
            dec.push(DecCache {
                level,
                gating,
                up,
                u,
                gate,
                block,
            });
        }
        let output = sigmoid_forward(&self.conv(self.layout.head, &cur)?);
        Ok(ForwardCache {
            enc,
            bottleneck,
            dec,
            head_input: cur,
            output,
        })
    }

    /// Gradients of a scalar loss for every parameter, given the loss gradient
    /// with respect to the output probabilities.
    pub fn backward(&self, cache: &ForwardCache, d_output: &Tensor4) -> Result<Params> {
        cache.output.same_dims(d_output, "output gradient")?;
        let mut grads = self.params.zeros_like();
        let g = &mut grads.list;

        let d_logits = sigmoid_backward(&cache.output, d_output);
        let mut d = self.conv_backward(self.layout.head, &cache.head_input, &d_logits, g);

        let mut d_skips: Vec<Option<Tensor4>> = vec![None; self.config.depth];
        for dc in cache.dec.iter().rev() {
            let level = self.layout.dec[dc.level];
            let d_cat = self.block_backward(level.block, &dc.block, d, g);
            let c = self.config.channels(dc.level);
            let (d_gated, d_u) = concat_backward(&d_cat, c);
            let d_up = self.conv_backward(level.up, &dc.up, &relu_backward(&dc.u, &d_u), g);
            let mut d_gating = upsample2_backward(&d_up);
            let skip = &cache.enc[dc.level].0.h2;
            let d_skip = match (level.gate, &dc.gate) {
                (Some(gate), Some(gc)) => {
                    let (d_skip, d_g) = self.gate_backward(gate, skip, &dc.gating, gc, &d_gated, g)?;
                    for (a, b) in d_gating.data_mut().iter_mut().zip(d_g.data()) {
                        *a += b;
                    }
                    d_skip
                }
                _ => d_gated,
            };
            d_skips[dc.level] = Some(d_skip);
            d = d_gating;
        }

        d = self.block_backward(self.layout.bottleneck, &cache.bottleneck, d, g);
        for level in (0..self.config.depth).rev() {
            let (bc, argmax) = &cache.enc[level];
            let mut d_h2 = maxpool2_backward(bc.h2.dims(), argmax, &d);
            if let Some(ds) = &d_skips[level] {
                for (a, b) in d_h2.data_mut().iter_mut().zip(ds.data()) {
                    *a += b;
                }
            }
            d = self.block_backward(self.layout.enc[level], bc, d_h2, g);
        }
        Ok(grads)
    }

    fn conv_backward(&self, c: Conv, x: &Tensor4, dy: &Tensor4, g: &mut [Param]) -> Tensor4 {
        let mut dw = mem::take(&mut g[c.w].data);
        let mut db = mem::take(&mut g[c.b].data);
        let dx = conv2d_backward(x, self.params.data(c.w), c.shape, dy, &mut dw, &mut db);
        g[c.w].data = dw;
        g[c.b].data = db;
        dx
    }

    /// Takes the gradient at the block's output (after the second ReLU).
    fn block_backward(&self, b: Block, cache: &BlockCache, d_out: Tensor4, g: &mut [Param]) -> Tensor4 {
        let d = relu_backward(&cache.h2, &d_out);
        let d = self.conv_backward(b.b, &cache.h1, &d, g);
        let d = relu_backward(&cache.h1, &d);
        self.conv_backward(b.a, &cache.input, &d, g)
    }

    fn gate_backward(
        &self,
        gate: Gate,
        skip: &Tensor4,
        gating: &Tensor4,
        cache: &GateCache,
        d_out: &Tensor4,
        g: &mut [Param],
    ) -> Result<(Tensor4, Tensor4)> {
        let mut theta = mem::take(&mut g[gate.theta].data);
        let mut phi = mem::take(&mut g[gate.phi].data);
        let mut phi_bias = mem::take(&mut g[gate.phi_bias].data);
        let mut psi = mem::take(&mut g[gate.psi].data);
        let mut psi_bias = mem::take(&mut g[gate.psi_bias].data);
        let out = attention_gate_backward(
            skip,
            gating,
            &self.gate_params(gate),
            cache,
            d_out,
            &mut GateGrads {
                theta: &mut theta,
                phi: &mut phi,
                phi_bias: &mut phi_bias,
                psi: &mut psi,
                psi_bias: &mut psi_bias,
            },
        );
        g[gate.theta].data = theta;
        g[gate.phi].data = phi;
        g[gate.phi_bias].data = phi_bias;
        g[gate.psi].data = psi;
        g[gate.psi_bias].data = psi_bias;
        out
    }

    /// Mean binary cross-entropy against `(N, 2, H, W)` targets and its
    /// parameter gradients.
    pub fn loss_and_grad(&self, x: &Tensor4, target: &Tensor4) -> Result<(f64, Params)> {
        let cache = self.forward_cached(x)?;
        let (loss, d_out) = bce_loss(cache.output(), target)?;
        let grads = self.backward(&cache, &d_out)?;
        Ok((loss, grads))
    }

    /// Heart and thorax probability planes for each image, in batches.
    pub fn predict(&self, images: &[GrayImage], batch_size: usize) -> Result<Vec<[Vec<f64>; 2]>> {
        let mut out = Vec::with_capacity(images.len());
        for chunk in images.chunks(batch_size.max(1)) {
            let y = self.forward(&Tensor4::from_images(chunk)?)?;
            for n in 0..chunk.len() {
                out.push([y.plane(n, 0).to_vec(), y.plane(n, 1).to_vec()]);
            }
        }
        Ok(out)
    }

    pub fn loss(&self, x: &Tensor4, target: &Tensor4) -> Result<f64> {
        Ok(bce_loss(&self.forward(x)?, target)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segnet::layers::sigmoid;

    fn tiny(attention: bool) -> NetConfig {
        NetConfig {
            input_size: 8,
            base_channels: 4,
            depth: 2,
            attention_gate: attention,
        }
    }

    fn input(n: usize, size: usize) -> Tensor4 {
        let data = (0..n * size * size)
            .map(|i| ((i * 37 + 11) % 64) as f64 / 63.0)
            .collect();
        Tensor4::new([n, 1, size, size], data).unwrap()
    }

    #[test]
    fn config_rules() {
        assert!(NetConfig::default().validate().is_ok());
        let mut c = NetConfig::default();
        c.input_size = 60;
        assert!(c.validate().is_err());
        c.input_size = 64;
        c.base_channels = 3;
        assert!(c.validate().is_err());
    }

    #[test]
    fn output_shape_and_range() {
        let net = UNet::new(NetConfig::default(), 1).unwrap();
        let y = net.forward(&input(1, 64)).unwrap();
        assert_eq!(y.dims(), [1, 2, 64, 64]);
        assert!(y.data().iter().all(|p| *p > 0.0 && *p < 1.0));
        assert_eq!(y, net.forward(&input(1, 64)).unwrap());
        assert!(net.forward(&input(1, 32)).is_err());
    }

    #[test]
    fn zero_head_gives_sigmoid_of_bias() {
        let mut net = UNet::new(tiny(true), 2).unwrap();
        net.params_mut().get_mut("head.weight").unwrap().data.fill(0.0);
        net.params_mut().get_mut("head.bias").unwrap().data = vec![0.3, -1.2];
        let y = net.forward(&input(2, 8)).unwrap();
        for n in 0..2 {
            assert!(y.plane(n, 0).iter().all(|p| *p == sigmoid(0.3)));
            assert!(y.plane(n, 1).iter().all(|p| *p == sigmoid(-1.2)));
        }
    }

    #[test]
    fn open_gates_match_plain_net() {
        let plain = UNet::new(tiny(false), 9).unwrap();
        let mut gated = UNet::new(tiny(true), 9).unwrap();
        for p in plain.params().iter() {
            assert_eq!(Some(p), gated.params().get(&p.name));
        }
        gated.open_gates();
        let x = input(2, 8);
        assert_eq!(plain.forward(&x).unwrap(), gated.forward(&x).unwrap());
        let cache = gated.forward_cached(&x).unwrap();
        assert_eq!(cache.attention().len(), 2);
    }

    #[test]
    fn params_round_trip_through_from_params() {
        let net = UNet::new(tiny(true), 4).unwrap();
        let again = UNet::from_params(tiny(true), net.params().clone()).unwrap();
        assert_eq!(again.params(), net.params());
        assert!(UNet::from_params(tiny(false), net.params().clone()).is_err());
    }

    #[test]
    fn duplicated_batch_keeps_mean_gradient() {
        let net = UNet::new(tiny(true), 5).unwrap();
        let x = input(1, 8);
        let t = Tensor4::new([1, 2, 8, 8], (0..128).map(|i| (i % 3 == 0) as u8 as f64).collect()).unwrap();
        let x2 = Tensor4::new([2, 1, 8, 8], [x.data(), x.data()].concat()).unwrap();
        let t2 = Tensor4::new([2, 2, 8, 8], [t.data(), t.data()].concat()).unwrap();
        let (l1, g1) = net.loss_and_grad(&x, &t).unwrap();
        let (l2, g2) = net.loss_and_grad(&x2, &t2).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.iter().zip(g2.iter()) {
            for (u, v) in a.data.iter().zip(&b.data) {
                assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
            }
        }
    }

    #[test]
    fn zero_loss_gradient_configuration() {
        let net = UNet::new(tiny(true), 6).unwrap();
        let x = input(1, 8);
        // soft targets equal to the predictions put BCE at its minimum
        let target = net.forward(&x).unwrap();
        let (_, grads) = net.loss_and_grad(&x, &target).unwrap();
        assert!(grads.iter().all(|p| p.data.iter().all(|v| v.abs() < 1e-12)));
    }
}
