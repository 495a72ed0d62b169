use crate::error::{Error, Result};
use crate::sampling::bilinear_clamped;
use crate::types::{BinaryMask, GrayImage};

fn check_target(target: usize) -> Result<()> {
    if target < 8 {
        return Err(Error::InvalidConfig(format!("resize target {target} is below 8")));
    }
    Ok(())
}

/// Bilinear resize to a `target x target` square, pixel centers aligned.
pub fn resize(img: &GrayImage, target: usize) -> Result<GrayImage> {
    check_target(target)?;
    let (h, w) = (img.height(), img.width());
    let sx = w as f64 / target as f64;
    let sy = h as f64 / target as f64;
    let mut out = Vec::with_capacity(target * target);
    for r in 0..target {
        let y = (r as f64 + 0.5) * sy - 0.5;
        for c in 0..target {
            let x = (c as f64 + 0.5) * sx - 0.5;
            out.push(bilinear_clamped(img.data(), h, w, x, y));
        }
    }
    GrayImage::from_clamped(target, target, out)
}

/// Nearest-neighbor resize of a mask to a `target x target` square.
pub fn resize_mask(mask: &BinaryMask, target: usize) -> Result<BinaryMask> {
    check_target(target)?;
    let (h, w) = (mask.height(), mask.width());
    let src = |out: usize, n: usize| (((out as f64 + 0.5) * n as f64 / target as f64) as usize).min(n - 1);
    BinaryMask::from_fn(target, target, |r, c| mask.get(src(r, h), src(c, w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctr::compute_ctr;
    use crate::phantom::{generate, PhantomSpec};
    use crate::postproc::extract_box;
    use crate::types::Structure;

    #[test]
    fn same_size_is_identity() {
        let data: Vec<f64> = (0..64 * 64).map(|i| (i % 97) as f64 / 96.0).collect();
        let img = GrayImage::new(64, 64, data).unwrap();
        assert_eq!(resize(&img, 64).unwrap(), img);
        let m = BinaryMask::from_fn(64, 64, |r, c| (r * c) % 5 == 1).unwrap();
        assert_eq!(resize_mask(&m, 64).unwrap(), m);
    }

    #[test]
    fn constant_stays_constant() {
        let img = GrayImage::filled(37, 53, 0.3).unwrap();
        for t in [8, 20, 64, 100] {
            assert!(resize(&img, t).unwrap().data().iter().all(|v| *v == 0.3));
        }
    }

    #[test]
    fn target_below_eight_rejected() {
        let img = GrayImage::filled(16, 16, 0.3).unwrap();
        assert!(resize(&img, 4).is_err());
    }

    #[test]
    fn downscaled_phantom_keeps_ctr() {
        let spec = PhantomSpec::centered(128, 26.0, 56.0);
        let s = generate(&spec).unwrap();
        let heart = resize_mask(s.masks.heart(), 64).unwrap();
        let thorax = resize_mask(s.masks.thorax(), 64).unwrap();
        let m = compute_ctr(
            &extract_box(&heart, Structure::Heart).unwrap(),
            &extract_box(&thorax, Structure::Thorax).unwrap(),
        )
        .unwrap();
        assert!((m.ctr - s.analytic_ctr).abs() <= 0.03, "{} vs {}", m.ctr, s.analytic_ctr);
        let small = resize(&s.image, 64).unwrap();
        assert!(small.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
