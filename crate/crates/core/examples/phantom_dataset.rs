//! Renders a small phantom dataset to disk and checks each mask-derived CTR
//! against the analytic one.
//!
//!     cargo run --example phantom_dataset -- /tmp/phantoms

use std::path::PathBuf;

use ctrkit::ingest::{write_manifest, write_sample, ManifestRecord};
use ctrkit::phantom::generate_dataset;
use ctrkit::postproc::extract_box;
use ctrkit::{binary_label, compute_ctr, Structure};

fn main() -> ctrkit::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "phantoms".into()));
    let samples = generate_dataset(12, (0.35, 0.65), 1)?;
    let mut records = Vec::new();
    println!("{:<14} {:>8} {:>8} {:>8}  label", "id", "analytic", "raster", "bound");
    for (i, s) in samples.iter().enumerate() {
        let id = format!("phantom_{i:05}");
        let heart = extract_box(s.masks.heart(), Structure::Heart)?;
        let thorax = extract_box(s.masks.thorax(), Structure::Thorax)?;
        let m = compute_ctr(&heart, &thorax)?;
        // two pixels of quantization in the worst case
        let bound = 2.0 / thorax.width() as f64;
        println!(
            "{id:<14} {:>8.4} {:>8.4} {:>8.4}  {:?}",
            s.analytic_ctr, m.ctr, bound, binary_label(s.analytic_ctr)
        );
        let files = write_sample(&out, &id, &s.image, &s.masks)?;
        let mut r = ManifestRecord::new(id, files.image);
        r.heart_mask = Some(files.heart_mask);
        r.thorax_mask = Some(files.thorax_mask);
        r.analytic_ctr = Some(s.analytic_ctr);
        r.label = Some(binary_label(s.analytic_ctr));
        records.push(r);
    }
    write_manifest(out.join("manifest.jsonl"), &records)?;
    println!("wrote {} samples under {}", records.len(), out.display());
    Ok(())
}
