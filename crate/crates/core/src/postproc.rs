//! Turning probability maps into boxes: thresholding, binary morphology,
//! largest-component selection and tight bounding boxes.
//!
//! Pixels outside the image count as background for both erosion and
//! dilation, so erosion eats into structures that touch the border.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ctr::{compute_ctr, CtrMeasurement};
use crate::error::{Error, Result};
use crate::types::{BinaryMask, BoundingBox, Structure};

/// 3x3 structuring element footprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StructuringElement {
    #[default]
    Square3,
    Cross3,
}

impl StructuringElement {
    /// `(dy, dx)` offsets of the footprint, center included.
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            StructuringElement::Square3 => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 0),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
            StructuringElement::Cross3 => &[(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)],
        }
    }
}

impl fmt::Display for StructuringElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructuringElement::Square3 => "square3",
            StructuringElement::Cross3 => "cross3",
        })
    }
}

impl std::str::FromStr for StructuringElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square3" | "square" => Ok(StructuringElement::Square3),
            "cross3" | "cross" => Ok(StructuringElement::Cross3),
            other => Err(Error::InvalidConfig(format!(
                "unknown structuring element {other:?} (expected square3 or cross3)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorphConfig {
    pub threshold: f64,
    pub erosion_iters: usize,
    pub dilation_iters: usize,
    pub element: StructuringElement,
}

impl Default for MorphConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            erosion_iters: 2,
            dilation_iters: 1,
            element: StructuringElement::Square3,
        }
    }
}

impl MorphConfig {
    /// Threshold only, no morphology.
    pub fn threshold_only(threshold: f64) -> Self {
        Self {
            threshold,
            erosion_iters: 0,
            dilation_iters: 0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} must lie in (0, 1)",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// `1` where `p >= t`, else `0`.
pub fn threshold(prob: &[f64], height: usize, width: usize, t: f64) -> Result<BinaryMask> {
    if prob.len() != height * width {
        return Err(Error::ShapeMismatch(format!(
            "probability map has {} values, expected {height}x{width}",
            prob.len()
        )));
    }
    BinaryMask::new(height, width, prob.iter().map(|&p| u8::from(p >= t)).collect())
}

pub fn erode(mask: &BinaryMask, element: StructuringElement) -> BinaryMask {
    morph(mask, element, true)
}

pub fn dilate(mask: &BinaryMask, element: StructuringElement) -> BinaryMask {
    morph(mask, element, false)
}

fn morph(mask: &BinaryMask, element: StructuringElement, erosion: bool) -> BinaryMask {
    let (h, w) = (mask.height() as isize, mask.width() as isize);
    let src = mask.data();
    let offsets = element.offsets();
    let mut out = vec![0u8; src.len()];
    for r in 0..h {
        for c in 0..w {
            let mut hit = erosion;
            for &(dy, dx) in offsets {
                let (rr, cc) = (r + dy, c + dx);
                let on = rr >= 0 && rr < h && cc >= 0 && cc < w && src[(rr * w + cc) as usize] != 0;
                if erosion && !on {
                    hit = false;
                    break;
                }
                if !erosion && on {
                    hit = true;
                    break;
                }
            }
            out[(r * w + c) as usize] = u8::from(hit);
        }
    }
    BinaryMask::new(mask.height(), mask.width(), out).expect("same shape as input")
}

/// Threshold, then `erosion_iters` erosions, then `dilation_iters` dilations.
pub fn cleanup(prob: &[f64], height: usize, width: usize, config: &MorphConfig) -> Result<BinaryMask> {
    let mut mask = threshold(prob, height, width, config.threshold)?;
    for _ in 0..config.erosion_iters {
        mask = erode(&mask, config.element);
    }
    for _ in 0..config.dilation_iters {
        mask = dilate(&mask, config.element);
    }
    Ok(mask)
}

/// Labels 8-connected components in raster order of their first pixel.
///
/// Returns the label image (0 = background, labels start at 1) and the area
/// of each component indexed by `label - 1`.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let (h, w) = (mask.height(), mask.width());
    let src = mask.data();
    let mut labels = vec![0u32; src.len()];
    let mut areas = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..src.len() {
        if src[start] == 0 || labels[start] != 0 {
            continue;
        }
        let label = areas.len() as u32 + 1;
        labels[start] = label;
        queue.push_back(start);
        let mut area = 0;
        while let Some(idx) = queue.pop_front() {
            area += 1;
            let (r, c) = (idx / w, idx % w);
            for rr in r.saturating_sub(1)..=(r + 1).min(h - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(w - 1) {
                    let n = rr * w + cc;
                    if src[n] != 0 && labels[n] == 0 {
                        labels[n] = label;
                        queue.push_back(n);
                    }
                }
            }
        }
        areas.push(area);
    }
    (labels, areas)
}

/// Keeps the 8-connected component of largest area.
///
/// Ties go to the component whose first pixel in raster order comes first.
pub fn largest_component(mask: &BinaryMask, structure: Structure) -> Result<BinaryMask> {
    let (labels, areas) = label_components(mask);
    let mut best: Option<(usize, usize)> = None;
    for (i, &area) in areas.iter().enumerate() {
        if best.map_or(true, |(_, a)| area > a) {
            best = Some((i, area));
        }
    }
    let (best, _) = best.ok_or(Error::EmptyMask(structure))?;
    let keep = best as u32 + 1;
    BinaryMask::new(
        mask.height(),
        mask.width(),
        labels.iter().map(|&l| u8::from(l == keep)).collect(),
    )
}

/// Tight box around all foreground pixels. `structure` only labels the error.
pub fn extract_box(mask: &BinaryMask, structure: Structure) -> Result<BoundingBox> {
    let w = mask.width();
    let mut bounds: Option<(usize, usize, usize, usize)> = None;
    for (idx, _) in mask.data().iter().enumerate().filter(|(_, v)| **v != 0) {
        let (r, c) = (idx / w, idx % w);
        bounds = Some(match bounds {
            None => (c, r, c, r),
            Some((x0, y0, x1, y1)) => (x0.min(c), y0.min(r), x1.max(c), y1.max(r)),
        });
    }
    let (x0, y0, x1, y1) = bounds.ok_or(Error::EmptyMask(structure))?;
    BoundingBox::new(x0, y0, x1, y1)
}

/// Boxes of both structures after cleanup and component selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureBoxes {
    pub heart: BoundingBox,
    pub thorax: BoundingBox,
}

/// One probability channel to its bounding box.
pub fn channel_to_box(
    prob: &[f64],
    height: usize,
    width: usize,
    structure: Structure,
    config: &MorphConfig,
) -> Result<(BinaryMask, BoundingBox)> {
    let cleaned = cleanup(prob, height, width, config)?;
    let component = largest_component(&cleaned, structure)?;
    let bbox = extract_box(&component, structure)?;
    Ok((component, bbox))
}

/// Full post-processing of a two-channel (heart, thorax) probability map.
pub fn masks_to_boxes(
    heart_prob: &[f64],
    thorax_prob: &[f64],
    height: usize,
    width: usize,
    config: &MorphConfig,
) -> Result<StructureBoxes> {
    let (_, heart) = channel_to_box(heart_prob, height, width, Structure::Heart, config)?;
    let (_, thorax) = channel_to_box(thorax_prob, height, width, Structure::Thorax, config)?;
    Ok(StructureBoxes { heart, thorax })
}

/// Post-processes a two-channel probability map and computes the CTR.
pub fn masks_to_ctr(
    heart_prob: &[f64],
    thorax_prob: &[f64],
    height: usize,
    width: usize,
    config: &MorphConfig,
) -> Result<CtrMeasurement> {
    let boxes = masks_to_boxes(heart_prob, thorax_prob, height, width, config)?;
    compute_ctr(&boxes.heart, &boxes.thorax)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&str]) -> BinaryMask {
        let h = rows.len();
        let w = rows[0].len();
        let data = rows
            .iter()
            .flat_map(|r| r.bytes().map(|b| u8::from(b == b'#')))
            .collect();
        BinaryMask::new(h, w, data).unwrap()
    }

    #[test]
    fn threshold_boundary_maps_to_one() {
        let m = threshold(&[0.7; 4], 2, 2, 0.5).unwrap();
        assert_eq!(m.count(), 4);
        let m = threshold(&[0.3; 4], 2, 2, 0.5).unwrap();
        assert_eq!(m.count(), 0);
        let m = threshold(&[0.5, 0.4999], 1, 2, 0.5).unwrap();
        assert_eq!(m.data(), &[1, 0]);
        assert!(threshold(&[0.5; 3], 2, 2, 0.5).is_err());
    }

    #[test]
    fn erosion_strips_border() {
        let full = BinaryMask::new(5, 5, vec![1; 25]).unwrap();
        let e = erode(&full, StructuringElement::Square3);
        let expect = mask(&[".....", ".###.", ".###.", ".###.", "....."]);
        assert_eq!(e, expect);
    }

    #[test]
    fn empty_stays_empty() {
        let m = BinaryMask::zeros(6, 4).unwrap();
        for el in [StructuringElement::Square3, StructuringElement::Cross3] {
            assert!(erode(&m, el).is_empty());
            assert!(dilate(&m, el).is_empty());
        }
    }

    #[test]
    fn cross_dilation_of_point() {
        let m = mask(&["...", ".#.", "..."]);
        assert_eq!(
            dilate(&m, StructuringElement::Cross3),
            mask(&[".#.", "###", ".#."])
        );
        assert_eq!(
            dilate(&m, StructuringElement::Square3),
            mask(&["###", "###", "###"])
        );
    }

    #[test]
    fn speck_removed_by_cleanup() {
        let mut prob = vec![0.0; 49];
        prob[3 * 7 + 3] = 0.9;
        let out = cleanup(&prob, 7, 7, &MorphConfig::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn default_cleanup_is_composition() {
        let prob: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 / 10.0).collect();
        let cfg = MorphConfig::default();
        let el = cfg.element;
        let expect = dilate(&erode(&erode(&threshold(&prob, 10, 10, 0.5).unwrap(), el), el), el);
        assert_eq!(cleanup(&prob, 10, 10, &cfg).unwrap(), expect);
    }

    #[test]
    fn largest_blob_kept() {
        let m = mask(&[
            "##.....", "##.....", "#......", "....###", "....###", "....###", "......#",
        ]);
        let out = largest_component(&m, Structure::Heart).unwrap();
        assert_eq!(out.count(), 10);
        assert!(!out.get(0, 0));
        assert!(out.get(6, 6));
    }

    #[test]
    fn single_blob_unchanged() {
        let m = mask(&["....", ".##.", "..#.", "...."]);
        assert_eq!(largest_component(&m, Structure::Heart).unwrap(), m);
    }

    #[test]
    fn ties_go_to_first_in_raster_order() {
        let m = mask(&["#..#", "....", "...."]);
        let out = largest_component(&m, Structure::Thorax).unwrap();
        assert!(out.get(0, 0) && !out.get(0, 3));
    }

    #[test]
    fn diagonal_pixels_connect() {
        let m = mask(&["#..", ".#.", "..#"]);
        let (_, areas) = label_components(&m);
        assert_eq!(areas, vec![3]);
    }

    #[test]
    fn empty_mask_errors() {
        let m = BinaryMask::zeros(3, 3).unwrap();
        assert!(matches!(
            largest_component(&m, Structure::Thorax),
            Err(Error::EmptyMask(Structure::Thorax))
        ));
        assert!(matches!(
            extract_box(&m, Structure::Heart),
            Err(Error::EmptyMask(Structure::Heart))
        ));
    }

    #[test]
    fn box_width_inclusive() {
        let m = BinaryMask::from_fn(12, 14, |r, c| (3..=10).contains(&c) && r % 3 == 1).unwrap();
        let b = extract_box(&m, Structure::Heart).unwrap();
        assert_eq!(b.width(), 8);
        assert_eq!((b.y_min, b.y_max), (1, 10));
        let m = BinaryMask::from_fn(5, 5, |r, c| r == 2 && c == 4).unwrap();
        let b = extract_box(&m, Structure::Heart).unwrap();
        assert_eq!((b.width(), b.height()), (1, 1));
    }

    #[test]
    fn heart_channel_empty_is_detection_failure() {
        let heart = vec![0.0; 64];
        let thorax = vec![1.0; 64];
        let err = masks_to_ctr(&heart, &thorax, 8, 8, &MorphConfig::threshold_only(0.5)).unwrap_err();
        assert!(matches!(err, Error::EmptyMask(Structure::Heart)));
    }

    #[test]
    fn element_parsing() {
        assert_eq!("cross3".parse::<StructuringElement>().unwrap(), StructuringElement::Cross3);
        assert_eq!("Square3".parse::<StructuringElement>().unwrap(), StructuringElement::Square3);
        assert!("disk".parse::<StructuringElement>().is_err());
    }
}
