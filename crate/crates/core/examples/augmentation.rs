//! Upsamples a phantom set by 75% with joint image/mask augmentation and
//! shows how each op moves the annotated CTR.

use ctrkit::augment::{apply, upsample_dataset, AugmentBounds, AugmentOp, AugmentPlan};
use ctrkit::phantom::generate_dataset;
use ctrkit::postproc::extract_box;
use ctrkit::{compute_ctr, MaskPair, Structure};

fn mask_ctr(m: &MaskPair) -> ctrkit::Result<f64> {
    let h = extract_box(m.heart(), Structure::Heart)?;
    let t = extract_box(m.thorax(), Structure::Thorax)?;
    Ok(compute_ctr(&h, &t)?.ctr)
}

fn main() -> ctrkit::Result<()> {
    let samples: Vec<_> = generate_dataset(8, (0.35, 0.65), 5)?
        .into_iter()
        .map(|s| (s.image, s.masks))
        .collect();

    let (image, masks) = &samples[0];
    println!("source ctr {:.4}", mask_ctr(masks)?);
    for op in [
        AugmentOp::ShearX { factor: 0.1 },
        AugmentOp::GridDistort { cells: 4, jitter: 0.2, seed: 3 },
        AugmentOp::Scale { factor: 1.1 },
        AugmentOp::GaussianBlur { sigma: 1.0 },
    ] {
        let (_, m) = apply(image, masks, &AugmentPlan::single(op))?;
        println!("{:<40} ctr {:.4}", format!("{op:?}"), mask_ctr(&m)?);
    }

    let extra = upsample_dataset(&samples, 0.75, 42, &AugmentBounds::default())?;
    println!("{} sources -> {} new samples", samples.len(), extra.len());
    for s in &extra {
        let kinds: Vec<_> = s.plan.ops().iter().map(|o| format!("{:?}", o.kind())).collect();
        println!("  from #{} [{}] ctr {:.4}", s.source, kinds.join(", "), mask_ctr(&s.masks)?);
    }
    Ok(())
}
