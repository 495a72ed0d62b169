//! Trains the attention U-Net on synthetic phantoms and reports held-out
//! Dice and CTR error.
//!
//!     cargo run --release --example train_unet -- --train 60 --epochs 8

use std::time::Instant;

use clap::Parser;
use ctrkit::eval::dice;
use ctrkit::phantom::generate_dataset;
use ctrkit::postproc::{masks_to_ctr, threshold, MorphConfig};
use ctrkit::segnet::{train_with, Dataset, NetConfig, TrainConfig};

#[derive(Parser)]
struct Args {
    #[arg(long, default_value_t = 60)]
    train: usize,
    #[arg(long, default_value_t = 16)]
    val: usize,
    #[arg(long, default_value_t = 16)]
    test: usize,
    #[arg(long, default_value_t = 8)]
    epochs: usize,
    #[arg(long, default_value_t = 8)]
    batch: usize,
    #[arg(long, default_value_t = 3e-3)]
    lr: f64,
    #[arg(long)]
    no_attention: bool,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write the best checkpoint here.
    #[arg(long)]
    save: Option<String>,
}

fn main() -> ctrkit::Result<()> {
    let args = Args::parse();
    let make = |n, seed| -> ctrkit::Result<_> {
        let s = generate_dataset(n, (0.35, 0.65), seed)?;
        Ok(s.into_iter().map(|p| (p.image, p.masks, p.analytic_ctr)).collect::<Vec<_>>())
    };
    let train_s = make(args.train, args.seed)?;
    let val_s = make(args.val, args.seed + 1)?;
    let test_s = make(args.test, args.seed + 2)?;
    let pairs = |v: &[(ctrkit::GrayImage, ctrkit::MaskPair, f64)]| {
        Dataset::from_samples(&v.iter().map(|(i, m, _)| (i.clone(), m.clone())).collect::<Vec<_>>())
    };

    let net_cfg = NetConfig {
        attention_gate: !args.no_attention,
        ..NetConfig::default()
    };
    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch,
        learning_rate: args.lr,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let out = train_with(&pairs(&train_s)?, &pairs(&val_s)?, net_cfg, &cfg, |r| {
        println!(
            "epoch {:>2}  train {:.4}  val {:.4}  lr {:.1e}  ({:.0}s)",
            r.epoch,
            r.train_loss,
            r.val_loss,
            r.lr,
            start.elapsed().as_secs_f64()
        );
    })?;
    println!("best epoch {} (val {:.4})", out.checkpoint.epoch, out.checkpoint.val_loss);

    if let Some(path) = &args.save {
        out.checkpoint.save(path)?;
    }
    let net = out.checkpoint.to_net()?;
    let images: Vec<_> = test_s.iter().map(|(i, _, _)| i.clone()).collect();
    let probs = net.predict(&images, args.batch)?;
    let size = net_cfg.input_size;
    let (mut dh, mut dt) = (0.0, 0.0);
    for ((_, masks, _), [h, t]) in test_s.iter().zip(&probs) {
        dh += dice(&threshold(h, size, size, 0.5)?, masks.heart())?;
        dt += dice(&threshold(t, size, size, 0.5)?, masks.thorax())?;
    }
    let n = test_s.len() as f64;
    println!("test dice heart {:.4} thorax {:.4}", dh / n, dt / n);
    let bare = MorphConfig {
        erosion_iters: 0,
        dilation_iters: 0,
        ..MorphConfig::default()
    };
    for (name, morph) in [("erode2/dilate1", MorphConfig::default()), ("threshold only", bare)] {
        let (mut err, mut ok) = (0.0, 0);
        for ((_, _, ctr), [h, t]) in test_s.iter().zip(&probs) {
            if let Ok(m) = masks_to_ctr(h, t, size, size, &morph) {
                err += (m.ctr - ctr).abs();
                ok += 1;
            }
        }
        println!("test ctr mae {:.4} over {ok} detections ({name})", err / ok.max(1) as f64);
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
