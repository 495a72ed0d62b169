//! Writes heart/thorax rectangles as a VIA project, parses it back and
//! splits the image ids 80/10/10.

use ctrkit::ingest::{emit_via, parse_via, split, Annotation, SplitFractions};
use ctrkit::BoundingBox;

fn main() -> ctrkit::Result<()> {
    let mut anns = Vec::new();
    for i in 0..20 {
        let heart = BoundingBox::new(20 - i % 5, 30, 40 + i, 50)?;
        let thorax = BoundingBox::new(5, 5, 70, 70)?;
        anns.push(Annotation::new(format!("cxr_{i:03}.png"), heart, thorax)?);
    }
    let doc = emit_via(&anns);
    println!("{} bytes of VIA JSON", doc.len());
    let back = parse_via(&doc)?;
    assert_eq!(back, anns);
    for a in back.iter().take(3) {
        println!("{}  heart {}  thorax {}  ctr {:.4}", a.image_id, a.heart, a.thorax, a.annotated_ctr);
    }

    let ids: Vec<String> = back.iter().map(|a| a.image_id.clone()).collect();
    let parts = split(&ids, SplitFractions::default(), 0, None)?;
    println!(
        "split {}/{}/{}; test = {:?}",
        parts.train.len(),
        parts.validation.len(),
        parts.test.len(),
        parts.test
    );
    Ok(())
}
