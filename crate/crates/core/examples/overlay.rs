//! Draws annotated (red) and predicted (yellow) boxes on a phantom with the
//! two CTR values in a caption strip.
//!
//!     cargo run --example overlay -- /tmp/overlay.png

use ctrkit::cli::overlay::render_overlay;
use ctrkit::ingest::save_rgb;
use ctrkit::phantom::{generate, PhantomSpec};
use ctrkit::postproc::{extract_box, StructureBoxes};
use ctrkit::{BoundingBox, Structure};

fn main() -> ctrkit::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "overlay.png".into());
    let s = generate(&PhantomSpec::centered(128, 30.0, 52.0))?;
    let annotated = StructureBoxes {
        heart: extract_box(s.masks.heart(), Structure::Heart)?,
        thorax: extract_box(s.masks.thorax(), Structure::Thorax)?,
    };
    // a slightly wide prediction
    let h = annotated.heart;
    let predicted = StructureBoxes {
        heart: BoundingBox::new(h.x_min - 3, h.y_min, h.x_max + 2, h.y_max)?,
        thorax: annotated.thorax,
    };
    let img = render_overlay(&s.image, Some(&annotated), Some(&predicted));
    save_rgb(&img, &out)?;
    println!("{out}: {}x{}", img.width(), img.height());
    Ok(())
}
