//! Joint image/mask augmentation.
//!
//! Geometric operations (shear along x or y, uniform scaling, grid
//! distortion) are inverse-mapped about the image center with identical
//! parameters for the image and both masks: bilinear for the image,
//! nearest-neighbor for masks. Samples falling outside the canvas read as 0.
//! Gaussian blur touches the image only.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{bilinear_zero, gaussian_blur, nearest_zero};
use crate::types::{BinaryMask, GrayImage, MaskPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AugmentKind {
    ShearX,
    ShearY,
    Scale,
    GridDistort,
    GaussianBlur,
}

impl AugmentKind {
    pub const ALL: [AugmentKind; 5] = [
        AugmentKind::ShearX,
        AugmentKind::ShearY,
        AugmentKind::Scale,
        AugmentKind::GridDistort,
        AugmentKind::GaussianBlur,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AugmentOp {
    /// `x_src = x - factor * (y - cy)`.
    ShearX { factor: f64 },
    /// `y_src = y - factor * (x - cx)`.
    ShearY { factor: f64 },
    /// Uniform zoom about the center; `factor < 1` shrinks the content.
    Scale { factor: f64 },
    /// Random displacement of the interior nodes of a `cells x cells` grid,
    /// each by at most `jitter` times the cell size, drawn from `seed`.
    GridDistort { cells: usize, jitter: f64, seed: u64 },
    GaussianBlur { sigma: f64 },
}

impl AugmentOp {
    pub fn kind(&self) -> AugmentKind {
        match self {
            AugmentOp::ShearX { .. } => AugmentKind::ShearX,
            AugmentOp::ShearY { .. } => AugmentKind::ShearY,
            AugmentOp::Scale { .. } => AugmentKind::Scale,
            AugmentOp::GridDistort { .. } => AugmentKind::GridDistort,
            AugmentOp::GaussianBlur { .. } => AugmentKind::GaussianBlur,
        }
    }

    pub fn is_geometric(&self) -> bool {
        self.kind() != AugmentKind::GaussianBlur
    }
}

impl fmt::Display for AugmentOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugmentOp::ShearX { factor } => write!(f, "shear_x({factor:.4})"),
            AugmentOp::ShearY { factor } => write!(f, "shear_y({factor:.4})"),
            AugmentOp::Scale { factor } => write!(f, "scale({factor:.4})"),
            AugmentOp::GridDistort { cells, jitter, .. } => {
                write!(f, "grid_distort({cells}x{cells}, {jitter:.3})")
            }
            AugmentOp::GaussianBlur { sigma } => write!(f, "gaussian_blur({sigma:.3})"),
        }
    }
}

/// Magnitude bounds used when sampling plans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentBounds {
    /// Shear factors are drawn from `[-shear, shear]`.
    pub shear: f64,
    pub scale: (f64, f64),
    pub grid_cells: usize,
    /// Maximum node displacement as a fraction of the cell size.
    pub grid_jitter: f64,
    pub blur_sigma: (f64, f64),
}

impl Default for AugmentBounds {
    fn default() -> Self {
        Self {
            shear: 0.1,
            scale: (0.85, 1.15),
            grid_cells: 4,
            grid_jitter: 0.05,
            blur_sigma: (0.5, 1.5),
        }
    }
}

/// One or two augmentations of distinct kinds, applied in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentPlan {
    ops: Vec<AugmentOp>,
    seed: u64,
}

impl AugmentPlan {
    pub fn new(ops: Vec<AugmentOp>, seed: u64) -> Result<Self> {
        if ops.is_empty() || ops.len() > 2 {
            return Err(Error::InvalidConfig(format!(
                "a plan holds one or two operations, got {}",
                ops.len()
            )));
        }
        if ops.len() == 2 && ops[0].kind() == ops[1].kind() {
            return Err(Error::InvalidConfig(
                "operations in a plan must be of distinct kinds".into(),
            ));
        }
        Ok(Self { ops, seed })
    }

    pub fn single(op: AugmentOp) -> Self {
        Self { ops: vec![op], seed: 0 }
    }

    /// Draws `k` in {1, 2} uniformly, then `k` distinct kinds without
    /// replacement, then each magnitude uniformly within `bounds`.
    pub fn sample<R: Rng>(rng: &mut R, bounds: &AugmentBounds) -> Self {
        let k = rng.gen_range(1..=2);
        let kinds: Vec<AugmentKind> = AugmentKind::ALL.choose_multiple(rng, k).copied().collect();
        let seed = rng.gen();
        let ops = kinds
            .into_iter()
            .map(|kind| match kind {
                AugmentKind::ShearX => AugmentOp::ShearX {
                    factor: rng.gen_range(-bounds.shear..=bounds.shear),
                },
                AugmentKind::ShearY => AugmentOp::ShearY {
                    factor: rng.gen_range(-bounds.shear..=bounds.shear),
                },
                AugmentKind::Scale => AugmentOp::Scale {
                    factor: rng.gen_range(bounds.scale.0..=bounds.scale.1),
                },
                AugmentKind::GridDistort => AugmentOp::GridDistort {
                    cells: bounds.grid_cells,
                    jitter: bounds.grid_jitter,
                    seed: rng.gen(),
                },
                AugmentKind::GaussianBlur => AugmentOp::GaussianBlur {
                    sigma: rng.gen_range(bounds.blur_sigma.0..=bounds.blur_sigma.1),
                },
            })
            .collect();
        Self { ops, seed }
    }

    pub fn ops(&self) -> &[AugmentOp] {
        &self.ops
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl fmt::Display for AugmentPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, op) in self.ops.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{op}")?;
        }
        Ok(())
    }
}

/// Output-to-source coordinate map of a geometric op.
enum InverseMap {
    Affine {
        // src = m * (p - c) + c
        m: [[f64; 2]; 2],
        center: (f64, f64),
    },
    Grid {
        cells: usize,
        // (cells + 1)^2 node displacements, row-major, (dx, dy)
        nodes: Vec<(f64, f64)>,
        cell_w: f64,
        cell_h: f64,
    },
}

impl InverseMap {
    fn for_op(op: &AugmentOp, height: usize, width: usize) -> Result<Self> {
        let center = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
        Ok(match *op {
            AugmentOp::ShearX { factor } => InverseMap::Affine {
                m: [[1.0, -factor], [0.0, 1.0]],
                center,
            },
            AugmentOp::ShearY { factor } => InverseMap::Affine {
                m: [[1.0, 0.0], [-factor, 1.0]],
                center,
            },
            AugmentOp::Scale { factor } => {
                if !(factor > 0.0) || !factor.is_finite() {
                    return Err(Error::DegenerateTransform(format!(
                        "scale factor {factor} must be positive"
                    )));
                }
                InverseMap::Affine {
                    m: [[1.0 / factor, 0.0], [0.0, 1.0 / factor]],
                    center,
                }
            }
            AugmentOp::GridDistort { cells, jitter, seed } => {
                if cells == 0 {
                    return Err(Error::DegenerateTransform("grid with zero cells".into()));
                }
                let cell_w = (width as f64 - 1.0) / cells as f64;
                let cell_h = (height as f64 - 1.0) / cells as f64;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut nodes = Vec::with_capacity((cells + 1) * (cells + 1));
                for gy in 0..=cells {
                    for gx in 0..=cells {
                        let interior = gx > 0 && gx < cells && gy > 0 && gy < cells;
                        let (ux, uy): (f64, f64) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                        nodes.push(if interior {
                            (ux * jitter * cell_w, uy * jitter * cell_h)
                        } else {
                            (0.0, 0.0)
                        });
                    }
                }
                InverseMap::Grid {
                    cells,
                    nodes,
                    cell_w,
                    cell_h,
                }
            }
            AugmentOp::GaussianBlur { .. } => unreachable!("blur is not geometric"),
        })
    }

    fn source(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            InverseMap::Affine { m, center } => {
                let (dx, dy) = (x - center.0, y - center.1);
                (
                    m[0][0] * dx + m[0][1] * dy + center.0,
                    m[1][0] * dx + m[1][1] * dy + center.1,
                )
            }
            InverseMap::Grid {
                cells,
                nodes,
                cell_w,
                cell_h,
            } => {
                let n = *cells;
                let gx = if *cell_w > 0.0 { x / cell_w } else { 0.0 };
                let gy = if *cell_h > 0.0 { y / cell_h } else { 0.0 };
                let ix = (gx.floor() as usize).min(n - 1);
                let iy = (gy.floor() as usize).min(n - 1);
                let (fx, fy) = (gx - ix as f64, gy - iy as f64);
                let node = |gx: usize, gy: usize| nodes[gy * (n + 1) + gx];
                let (a, b, c, d) = (node(ix, iy), node(ix + 1, iy), node(ix, iy + 1), node(ix + 1, iy + 1));
                let disp_x = (a.0 * (1.0 - fx) + b.0 * fx) * (1.0 - fy) + (c.0 * (1.0 - fx) + d.0 * fx) * fy;
                let disp_y = (a.1 * (1.0 - fx) + b.1 * fx) * (1.0 - fy) + (c.1 * (1.0 - fx) + d.1 * fx) * fy;
                (x + disp_x, y + disp_y)
            }
        }
    }
}

fn warp_image(image: &GrayImage, map: &InverseMap) -> Result<GrayImage> {
    let (h, w) = (image.height(), image.width());
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let (sx, sy) = map.source(c as f64, r as f64);
            out.push(bilinear_zero(image.data(), h, w, sx, sy));
        }
    }
    GrayImage::from_clamped(h, w, out)
}

fn warp_mask(mask: &BinaryMask, map: &InverseMap) -> Result<BinaryMask> {
    let (h, w) = (mask.height(), mask.width());
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let (sx, sy) = map.source(c as f64, r as f64);
            out.push(nearest_zero(mask.data(), h, w, sx, sy));
        }
    }
    BinaryMask::new(h, w, out)
}

/// Applies a plan to an image and its masks.
pub fn apply(image: &GrayImage, masks: &MaskPair, plan: &AugmentPlan) -> Result<(GrayImage, MaskPair)> {
    if image.height() != masks.height() || image.width() != masks.width() {
        return Err(Error::ShapeMismatch(format!(
            "image {}x{} vs masks {}x{}",
            image.height(),
            image.width(),
            masks.height(),
            masks.width()
        )));
    }
    let mut image = image.clone();
    let mut masks = masks.clone();
    for op in plan.ops() {
        match op {
            AugmentOp::GaussianBlur { sigma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::DegenerateTransform(format!(
                        "blur sigma {sigma} must be positive"
                    )));
                }
                let blurred = gaussian_blur(image.data(), image.height(), image.width(), *sigma);
                image = GrayImage::from_clamped(image.height(), image.width(), blurred)?;
            }
            geometric => {
                let map = InverseMap::for_op(geometric, image.height(), image.width())?;
                image = warp_image(&image, &map)?;
                masks = MaskPair::new(
                    warp_mask(masks.heart(), &map)?,
                    warp_mask(masks.thorax(), &map)?,
                )?;
            }
        }
    }
    Ok((image, masks))
}

/// Number of new samples produced by upsampling `n` samples by `fraction`.
pub fn upsample_count(n: usize, fraction: f64) -> usize {
    (fraction * n as f64).round() as usize
}

/// Which source each new sample comes from and how it is augmented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpsamplePlan {
    pub source: usize,
    pub plan: AugmentPlan,
}

/// Draws `round(fraction * n)` (source, plan) pairs, sources uniform over `0..n`.
pub fn plan_upsampling(
    n: usize,
    fraction: f64,
    seed: u64,
    bounds: &AugmentBounds,
) -> Result<Vec<UpsamplePlan>> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "upsampling fraction {fraction} must lie in (0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..upsample_count(n, fraction))
        .map(|_| {
            let source = rng.gen_range(0..n);
            let plan = AugmentPlan::sample(&mut rng, bounds);
            UpsamplePlan { source, plan }
        })
        .collect())
}

/// A new sample produced by augmentation, with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub image: GrayImage,
    pub masks: MaskPair,
    pub source: usize,
    pub plan: AugmentPlan,
}

/// Upsamples a dataset once; the result is meant to be stored, not regenerated per epoch.
pub fn upsample_dataset(
    samples: &[(GrayImage, MaskPair)],
    fraction: f64,
    seed: u64,
    bounds: &AugmentBounds,
) -> Result<Vec<AugmentedSample>> {
    plan_upsampling(samples.len(), fraction, seed, bounds)?
        .into_iter()
        .map(|UpsamplePlan { source, plan }| {
            let (image, masks) = &samples[source];
            let (image, masks) = apply(image, masks, &plan)?;
            Ok(AugmentedSample {
                image,
                masks,
                source,
                plan,
            })
        })
        .collect()
}
