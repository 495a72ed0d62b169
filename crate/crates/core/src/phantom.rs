//! Synthetic chest phantoms with analytic heart and thorax geometry.
//!
//! The thorax is an ellipse centered on the canvas, the heart a smaller
//! ellipse offset from that center. Masks are the rasterized ellipses
//! (a pixel is inside when its center satisfies the ellipse inequality), so
//! the ground-truth CTR of every sample is known exactly: `a_heart / a_thorax`.
//! Pixel centers sit at integer coordinates and the canvas center at
//! `(size - 1) / 2`, which makes a centered ellipse with semi-axis `a` span
//! `2 * round(a)` columns.

use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ctr::CARDIOMEGALY_CUTOFF;
use crate::error::{Error, Result};
use crate::types::{BinaryMask, GrayImage, MaskPair};

/// Gray levels of the phantom's tissue classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intensities {
    pub background: f64,
    pub lung: f64,
    pub heart: f64,
    pub bone: f64,
}

impl Default for Intensities {
    fn default() -> Self {
        Self {
            background: 0.45,
            lung: 0.15,
            heart: 0.7,
            bone: 0.85,
        }
    }
}

/// Geometry and appearance of one phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    /// Side of the square canvas in pixels.
    pub image_size: usize,
    /// Thorax semi-axes `(horizontal, vertical)`.
    pub thorax_axes: (f64, f64),
    /// Heart semi-axes `(horizontal, vertical)`.
    pub heart_axes: (f64, f64),
    /// Heart center relative to the thorax center `(dx, dy)`.
    pub heart_offset: (f64, f64),
    pub intensities: Intensities,
    /// Standard deviation of additive Gaussian pixel noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl PhantomSpec {
    /// Centered heart and thorax with circular-ish defaults on a canvas of `image_size`.
    pub fn centered(image_size: usize, heart_a: f64, thorax_a: f64) -> Self {
        let b_t = thorax_a.min(image_size as f64 / 2.0 - 1.0);
        Self {
            image_size,
            thorax_axes: (thorax_a, b_t),
            heart_axes: (heart_a, heart_a * 0.8),
            heart_offset: (0.0, 0.0),
            intensities: Intensities::default(),
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn center(&self) -> f64 {
        (self.image_size as f64 - 1.0) / 2.0
    }

    pub fn heart_center(&self) -> (f64, f64) {
        let c = self.center();
        (c + self.heart_offset.0, c + self.heart_offset.1)
    }

    pub fn analytic_ctr(&self) -> f64 {
        self.heart_axes.0 / self.thorax_axes.0
    }

    pub fn validate(&self) -> Result<()> {
        let size = self.image_size as f64;
        if self.image_size < 8 {
            return Err(Error::InvalidSpec(format!(
                "image size {} is below 8",
                self.image_size
            )));
        }
        let (a_t, b_t) = self.thorax_axes;
        let (a_h, b_h) = self.heart_axes;
        if !(a_t > 0.0 && b_t > 0.0 && a_h > 0.0 && b_h > 0.0) {
            return Err(Error::InvalidSpec("semi-axes must be positive".into()));
        }
        if a_h >= a_t {
            return Err(Error::InvalidSpec(format!(
                "heart semi-axis {a_h} must be below thorax semi-axis {a_t}"
            )));
        }
        let inside = |center: f64, half: f64| center - half >= -0.5 && center + half <= size - 0.5;
        let c = self.center();
        if !inside(c, a_t) || !inside(c, b_t) {
            return Err(Error::SpecOutOfBounds(format!(
                "thorax semi-axes ({a_t}, {b_t}) on a {}px canvas",
                self.image_size
            )));
        }
        let (hx, hy) = self.heart_center();
        if !inside(hx, a_h) || !inside(hy, b_h) {
            return Err(Error::SpecOutOfBounds(format!(
                "heart at ({hx}, {hy}) with semi-axes ({a_h}, {b_h})"
            )));
        }
        if hx - a_h <= c - a_t || hx + a_h >= c + a_t {
            return Err(Error::InvalidSpec(
                "heart must lie strictly inside the thorax horizontally".into(),
            ));
        }
        let i = &self.intensities;
        for v in [i.background, i.lung, i.heart, i.bone] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidSpec(format!("intensity {v} outside [0, 1]")));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidSpec("noise sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// A rendered phantom with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSample {
    pub image: GrayImage,
    pub masks: MaskPair,
    pub analytic_ctr: f64,
    /// Continuous heart width `2 * a_heart`.
    pub heart_width: f64,
    /// Continuous thorax width `2 * a_thorax`.
    pub thorax_width: f64,
    pub spec: PhantomSpec,
}

#[inline]
fn in_ellipse(x: f64, y: f64, cx: f64, cy: f64, a: f64, b: f64) -> bool {
    let dx = (x - cx) / a;
    let dy = (y - cy) / b;
    dx * dx + dy * dy <= 1.0
}

/// Rasterizes an ellipse by the pixel-center inclusion test.
pub fn rasterize_ellipse(
    size: usize,
    center: (f64, f64),
    axes: (f64, f64),
) -> Result<BinaryMask> {
    BinaryMask::from_fn(size, size, |r, c| {
        in_ellipse(c as f64, r as f64, center.0, center.1, axes.0, axes.1)
    })
}

/// Renders a phantom. Deterministic for a fixed spec (including seed).
pub fn generate(spec: &PhantomSpec) -> Result<PhantomSample> {
    spec.validate()?;
    let size = spec.image_size;
    let c = spec.center();
    let (a_t, b_t) = spec.thorax_axes;
    let (hx, hy) = spec.heart_center();
    let (a_h, _) = spec.heart_axes;

    let thorax = rasterize_ellipse(size, (c, c), spec.thorax_axes)?;
    let heart = rasterize_ellipse(size, (hx, hy), spec.heart_axes)?;

    let lv = spec.intensities;
    let wall = (size as f64 / 32.0).max(1.0);
    let rib_period = (b_t / 4.0).max(3.0);
    let rib_level = 0.5 * (lv.lung + lv.bone);
    let top = c - b_t;

    let mut data = vec![lv.background; size * size];
    for r in 0..size {
        for col in 0..size {
            let (x, y) = (col as f64, r as f64);
            let idx = r * size + col;
            if heart.get(r, col) {
                data[idx] = lv.heart;
            } else if thorax.get(r, col) {
                let phase = ((y - top) / rib_period).fract();
                data[idx] = if phase < 0.3 { rib_level } else { lv.lung };
            } else if in_ellipse(x, y, c, c, a_t + wall, b_t + wall) {
                data[idx] = lv.bone;
            }
        }
    }

    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_sigma)
            .map_err(|e| Error::InvalidSpec(format!("noise sigma: {e}")))?;
        for v in &mut data {
            *v += normal.sample(&mut rng);
        }
    }
    let image = GrayImage::from_clamped(size, size, data)?;

    Ok(PhantomSample {
        image,
        masks: MaskPair::new(heart, thorax)?,
        analytic_ctr: a_h / a_t,
        heart_width: 2.0 * a_h,
        thorax_width: 2.0 * a_t,
        spec: spec.clone(),
    })
}

/// Knobs for [`generate_dataset_with`] beyond count, CTR range and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOptions {
    pub image_size: usize,
    pub noise_sigma: f64,
    pub intensities: Intensities,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            image_size: 64,
            noise_sigma: 0.03,
            intensities: Intensities::default(),
        }
    }
}

/// Generates `n` phantoms on the default 64 px canvas.
///
/// `ceil(n / 2)` samples get an analytic CTR above 0.5, the rest at or below it.
pub fn generate_dataset(n: usize, ctr_range: (f64, f64), seed: u64) -> Result<Vec<PhantomSample>> {
    generate_dataset_with(n, ctr_range, seed, &DatasetOptions::default())
}

pub fn generate_dataset_with(
    n: usize,
    ctr_range: (f64, f64),
    seed: u64,
    options: &DatasetOptions,
) -> Result<Vec<PhantomSample>> {
    let (low, high) = ctr_range;
    if n < 2 {
        return Err(Error::InvalidConfig(format!("dataset size {n} is below 2")));
    }
    if !(0.0 < low && low < CARDIOMEGALY_CUTOFF && CARDIOMEGALY_CUTOFF < high && high < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "CTR range [{low}, {high}] must satisfy 0 < low < 0.5 < high < 1"
        )));
    }

    let positives = n.div_ceil(2);
    let mut labels: Vec<bool> = (0..n).map(|i| i < positives).collect();
    labels.shuffle(&mut sample_rng(seed, 0));

    labels
        .iter()
        .enumerate()
        .map(|(i, &positive)| {
            let mut rng = sample_rng(seed, i as u64 + 1);
            let spec = sample_spec(&mut rng, positive, low, high, options)?;
            generate(&spec)
        })
        .collect()
}

/// Independent stream per sample so samples can be generated in any order.
fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_spec(
    rng: &mut ChaCha8Rng,
    positive: bool,
    low: f64,
    high: f64,
    options: &DatasetOptions,
) -> Result<PhantomSpec> {
    let size = options.image_size as f64;
    let c = (size - 1.0) / 2.0;
    let scale = size / 64.0;

    let a_t = size * rng.gen_range(0.36..0.43);
    let b_t = (a_t * rng.gen_range(0.95..1.1)).min(c - scale);

    // Positive CTRs are drawn away from the cutoff so a_h / a_t stays > 0.5
    // after floating-point division.
    let ctr = if positive {
        rng.gen_range(CARDIOMEGALY_CUTOFF + 1e-3..high)
    } else {
        rng.gen_range(low..=CARDIOMEGALY_CUTOFF)
    };
    let a_h = ctr * a_t;
    let b_h = a_h * rng.gen_range(0.7..0.9);

    let slack = (a_t - a_h - 1.0).max(0.0);
    let max_dx = (2.0 * scale).min(slack).floor();
    let dx = if max_dx >= 1.0 {
        rng.gen_range(-max_dx..=max_dx).round()
    } else {
        0.0
    };
    let dy = (0.85 * b_t - b_h)
        .max(0.0)
        .round()
        .min((c + 0.5 - b_h).floor().max(0.0));

    Ok(PhantomSpec {
        image_size: options.image_size,
        thorax_axes: (a_t, b_t),
        heart_axes: (a_h, b_h),
        heart_offset: (dx, dy),
        intensities: options.intensities,
        noise_sigma: options.noise_sigma,
        seed: rng.gen(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctr::compute_ctr;
    use crate::postproc::extract_box;
    use crate::types::Structure;

    /// Independent width oracle: per row, count pixels whose centers satisfy
    /// the ellipse inequality; return the widest row.
    fn widest_row(size: usize, cx: f64, cy: f64, a: f64, b: f64) -> usize {
        (0..size)
            .map(|r| {
                (0..size)
                    .filter(|&col| {
                        let dx = (col as f64 - cx) / a;
                        let dy = (r as f64 - cy) / b;
                        dx * dx + dy * dy <= 1.0
                    })
                    .count()
            })
            .max()
            .unwrap()
    }

    #[test]
    fn half_ctr_phantom() {
        let spec = PhantomSpec::centered(64, 15.0, 30.0);
        let s = generate(&spec).unwrap();
        assert_eq!(s.analytic_ctr, 0.5);
        let hb = extract_box(s.masks.heart(), Structure::Heart).unwrap();
        let tb = extract_box(s.masks.thorax(), Structure::Thorax).unwrap();
        let c = spec.center();
        assert_eq!(hb.width(), widest_row(64, c, c, 15.0, 12.0));
        assert_eq!(tb.width(), widest_row(64, c, c, 30.0, spec.thorax_axes.1));
        let m = compute_ctr(&hb, &tb).unwrap();
        assert!((m.ctr - 0.5).abs() <= 0.02, "ctr {}", m.ctr);
        // Widths within 1 px of 2a + 1.
        assert!((hb.width() as f64 - 31.0).abs() <= 1.0);
        assert!((tb.width() as f64 - 61.0).abs() <= 1.0);
    }

    #[test]
    fn noiseless_is_piecewise_constant() {
        let spec = PhantomSpec::centered(64, 12.0, 28.0);
        let s = generate(&spec).unwrap();
        let lv = spec.intensities;
        let rib = 0.5 * (lv.lung + lv.bone);
        let levels = [lv.background, lv.lung, lv.heart, lv.bone, rib];
        assert!(s.image.data().iter().all(|v| levels.contains(v)));
        for r in 0..64 {
            for c in 0..64 {
                if s.masks.heart().get(r, c) {
                    assert_eq!(s.image.get(r, c), lv.heart);
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let mut spec = PhantomSpec::centered(64, 12.0, 28.0);
        spec.noise_sigma = 0.05;
        spec.seed = 99;
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn out_of_bounds() {
        let spec = PhantomSpec::centered(64, 15.0, 40.0);
        assert!(matches!(generate(&spec), Err(Error::SpecOutOfBounds(_))));
        let spec = PhantomSpec::centered(64, 30.0, 20.0);
        assert!(matches!(generate(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn noise_stays_in_range() {
        let mut spec = PhantomSpec::centered(64, 12.0, 28.0);
        spec.noise_sigma = 0.5;
        spec.seed = 3;
        let s = generate(&spec).unwrap();
        assert!(s.image.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn dataset_is_balanced() {
        let set = generate_dataset(10, (0.35, 0.65), 7).unwrap();
        assert_eq!(set.len(), 10);
        assert_eq!(set.iter().filter(|s| s.analytic_ctr > 0.5).count(), 5);
        let set = generate_dataset(2, (0.35, 0.65), 7).unwrap();
        assert_eq!(set.iter().filter(|s| s.analytic_ctr > 0.5).count(), 1);
        let set = generate_dataset(7, (0.35, 0.65), 7).unwrap();
        assert_eq!(set.iter().filter(|s| s.analytic_ctr > 0.5).count(), 4);
    }

    #[test]
    fn dataset_is_deterministic() {
        let a: Vec<f64> = generate_dataset(12, (0.35, 0.65), 11)
            .unwrap()
            .iter()
            .map(|s| s.analytic_ctr)
            .collect();
        let b: Vec<f64> = generate_dataset(12, (0.35, 0.65), 11)
            .unwrap()
            .iter()
            .map(|s| s.analytic_ctr)
            .collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|c| (0.35..0.65).contains(c)));
    }

    #[test]
    fn dataset_rejects_bad_ranges() {
        assert!(generate_dataset(1, (0.35, 0.65), 0).is_err());
        assert!(generate_dataset(4, (0.55, 0.65), 0).is_err());
        assert!(generate_dataset(4, (0.35, 1.2), 0).is_err());
    }

    #[test]
    fn dataset_ground_truth_properties() {
        for s in generate_dataset(60, (0.35, 0.65), 5).unwrap() {
            let hb = extract_box(s.masks.heart(), Structure::Heart).unwrap();
            let tb = extract_box(s.masks.thorax(), Structure::Thorax).unwrap();
            assert!(hb.width() < tb.width());
            assert!(tb.x_min < hb.x_min && hb.x_max < tb.x_max);
            let m = compute_ctr(&hb, &tb).unwrap();
            let tol = 2.0 / s.thorax_width;
            assert!(
                (m.ctr - s.analytic_ctr).abs() <= tol,
                "ctr {} analytic {}",
                m.ctr,
                s.analytic_ctr
            );
        }
    }
}
