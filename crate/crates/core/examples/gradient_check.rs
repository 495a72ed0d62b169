//! Central-difference gradient checks for every layer and for a small
//! attention U-Net end to end.

use ctrkit::segnet::gradcheck::{check_layers, check_network, DEFAULT_STEP};
use ctrkit::segnet::{NetConfig, Tensor4, UNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ctrkit::Result<()> {
    let mut reports = check_layers(1, DEFAULT_STEP)?;

    let cfg = NetConfig { input_size: 8, base_channels: 4, depth: 2, attention_gate: true };
    let net = UNet::new(cfg, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = Tensor4::new([2, 1, 8, 8], (0..128).map(|_| rng.gen::<f64>()).collect())?;
    let y = Tensor4::new([2, 2, 8, 8], (0..256).map(|_| rng.gen_range(0.0..1.0)).collect())?;
    reports.extend(check_network(&net, &x, &y, DEFAULT_STEP)?);

    for r in &reports {
        println!(
            "{:<28} checked {:>4} skipped {:>3} max rel err {:.2e} {}",
            r.name,
            r.checked,
            r.skipped,
            r.max_rel_error,
            if r.passed() { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
