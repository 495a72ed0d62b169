//! Line-delimited JSON manifest: one record per sample, paths relative to
//! the manifest's directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::AugmentPlan;
use crate::ctr::Label;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic_str;
use crate::types::{GrayImage, MaskPair};

use super::io::{load_image, load_mask, save_image, save_mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        })
    }
}

/// Where an augmented sample came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    pub plan: AugmentPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub image: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heart_mask: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thorax_mask: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_ctr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotated_ctr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl ManifestRecord {
    pub fn new(id: impl Into<String>, image: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            image: image.into(),
            heart_mask: None,
            thorax_mask: None,
            analytic_ctr: None,
            annotated_ctr: None,
            label: None,
            split: None,
            provenance: None,
        }
    }

    /// Annotated CTR when present, otherwise the analytic phantom value.
    pub fn reference_ctr(&self) -> Option<f64> {
        self.annotated_ctr.or(self.analytic_ctr)
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| {
                Error::MalformedDocument(format!("{}:{}: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

pub fn write_manifest(path: impl AsRef<Path>, records: &[ManifestRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("records always serialize"));
        text.push('\n');
    }
    write_atomic_str(path.as_ref(), &text)
}

/// Relative paths of one sample's files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleFiles {
    pub image: String,
    pub heart_mask: String,
    pub thorax_mask: String,
}

/// Writes `images/<id>.png` and `masks/<id>_{heart,thorax}.png` under `root`.
pub fn write_sample(root: &Path, id: &str, image: &GrayImage, masks: &MaskPair) -> Result<SampleFiles> {
    let files = SampleFiles {
        image: format!("images/{id}.png"),
        heart_mask: format!("masks/{id}_heart.png"),
        thorax_mask: format!("masks/{id}_thorax.png"),
    };
    save_image(image, root.join(&files.image))?;
    save_mask(masks.heart(), root.join(&files.heart_mask))?;
    save_mask(masks.thorax(), root.join(&files.thorax_mask))?;
    Ok(files)
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads a record's image and, when both mask paths are present, its masks.
pub fn load_sample(base: &Path, record: &ManifestRecord) -> Result<(GrayImage, Option<MaskPair>)> {
    let image = load_image(resolve(base, &record.image))?;
    let masks = match (&record.heart_mask, &record.thorax_mask) {
        (Some(h), Some(t)) => Some(MaskPair::new(
            load_mask(resolve(base, h))?,
            load_mask(resolve(base, t))?,
        )?),
        _ => None,
    };
    if let Some(m) = &masks {
        if m.height() != image.height() || m.width() != image.width() {
            return Err(Error::ShapeMismatch(format!(
                "{}: image and masks differ in size",
                record.id
            )));
        }
    }
    Ok((image, masks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::AugmentOp;
    use crate::types::BinaryMask;

    #[test]
    fn records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = ManifestRecord::new("p0", "images/p0.png");
        a.analytic_ctr = Some(0.4375);
        a.label = Some(Label::Negative);
        a.split = Some(SplitName::Train);
        let mut b = ManifestRecord::new("p0_aug0", "images/p0_aug0.png");
        b.provenance = Some(Provenance {
            source_id: "p0".into(),
            plan: AugmentPlan::single(AugmentOp::Scale { factor: 0.9 }),
        });
        let path = dir.path().join("manifest.jsonl");
        write_manifest(&path, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), vec![a, b]);
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(!text.contains("heart_mask"));
    }

    #[test]
    fn bad_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        fs::write(&path, "{\"id\": \"a\", \"image\": \"x.png\"}\nnot json\n").unwrap();
        let err = read_manifest(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }

    #[test]
    fn sample_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::filled(8, 8, 0.2).unwrap();
        let heart = BinaryMask::from_fn(8, 8, |r, c| r == c).unwrap();
        let thorax = BinaryMask::from_fn(8, 8, |r, _| r > 2).unwrap();
        let masks = MaskPair::new(heart, thorax).unwrap();
        let files = write_sample(dir.path(), "s1", &img, &masks).unwrap();
        let mut rec = ManifestRecord::new("s1", files.image);
        rec.heart_mask = Some(files.heart_mask);
        rec.thorax_mask = Some(files.thorax_mask);
        let (img2, masks2) = load_sample(dir.path(), &rec).unwrap();
        assert_eq!(img2, img);
        assert_eq!(masks2.unwrap(), masks);
    }
}
