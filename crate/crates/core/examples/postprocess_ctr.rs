//! Noisy probability maps through threshold, erosion x2, dilation x1 and
//! largest-component selection, compared with threshold alone.

use ctrkit::phantom::{generate, PhantomSpec};
use ctrkit::postproc::{cleanup, masks_to_boxes, MorphConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Soft probabilities from a mask plus salt noise.
fn noisy(mask: &ctrkit::BinaryMask, density: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    mask.to_probabilities()
        .into_iter()
        .map(|p| {
            let base = if p > 0.5 { 0.9 } else { 0.1 };
            if rng.gen_bool(density) { 0.95 } else { base }
        })
        .collect()
}

fn main() -> ctrkit::Result<()> {
    let spec = PhantomSpec::centered(64, 13.0, 27.0);
    let s = generate(&spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let heart = noisy(s.masks.heart(), 0.15, &mut rng);
    let thorax = noisy(s.masks.thorax(), 0.15, &mut rng);

    let full = MorphConfig::default();
    let bare = MorphConfig::threshold_only(0.5);
    for (name, cfg) in [("threshold only", bare), ("erode2/dilate1", full)] {
        let on = cleanup(&heart, 64, 64, &cfg)?.count();
        let b = masks_to_boxes(&heart, &thorax, 64, 64, &cfg)?;
        let m = ctrkit::compute_ctr(&b.heart, &b.thorax)?;
        println!(
            "{name:<15} heart px {on:>4}  widths {}/{}  ctr {:.4} ({:?})  analytic {:.4}",
            m.heart_width, m.thorax_width, m.ctr, m.category, s.analytic_ctr
        );
    }
    Ok(())
}
