//! VIA 2.x project JSON: rectangles labeled `heart` / `thorax` per image.
//!
//! Both the full project file (with `_via_img_metadata`) and the bare
//! region-data export (the metadata map alone) are accepted.

use serde_json::{json, Map, Value};

use crate::ctr::CtrMeasurement;
use crate::error::{Error, Result};
use crate::types::{BoundingBox, Structure};

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub image_id: String,
    pub heart: BoundingBox,
    pub thorax: BoundingBox,
    pub annotated_ctr: f64,
}

impl Annotation {
    pub fn new(image_id: impl Into<String>, heart: BoundingBox, thorax: BoundingBox) -> Result<Self> {
        let annotated_ctr = CtrMeasurement::from_widths(heart.width(), thorax.width())?.ctr;
        Ok(Self {
            image_id: image_id.into(),
            heart,
            thorax,
            annotated_ctr,
        })
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedDocument(msg.into())
}

fn number(attrs: &Map<String, Value>, key: &str, image: &str) -> Result<f64> {
    attrs
        .get(key)
        .and_then(Value::as_f64)
        .filter(|v| v.is_finite())
        .ok_or_else(|| malformed(format!("{image}: rect without numeric {key:?}")))
}

fn rect_to_box(attrs: &Map<String, Value>, image: &str) -> Result<BoundingBox> {
    let x = number(attrs, "x", image)?.round();
    let y = number(attrs, "y", image)?.round();
    let w = number(attrs, "width", image)?.round();
    let h = number(attrs, "height", image)?.round();
    if x < 0.0 || y < 0.0 || w < 1.0 || h < 1.0 {
        return Err(malformed(format!(
            "{image}: rect ({x}, {y}, {w}, {h}) is out of range"
        )));
    }
    let (x, y, w, h) = (x as usize, y as usize, w as usize, h as usize);
    BoundingBox::new(x, y, x + w - 1, y + h - 1)
}

fn structure_of(region: &Value) -> Option<Structure> {
    let label = region.get("region_attributes")?.get("label")?.as_str()?;
    match label.trim().to_ascii_lowercase().as_str() {
        "heart" => Some(Structure::Heart),
        "thorax" => Some(Structure::Thorax),
        _ => None,
    }
}

/// Parses a VIA document into one annotation per image, in document order.
///
/// Regions that are not rectangles or carry another label are ignored.
pub fn parse_via(document: &str) -> Result<Vec<Annotation>> {
    let root: Value =
        serde_json::from_str(document).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
    let metadata = match root.get("_via_img_metadata") {
        Some(m) => m,
        None => &root,
    }
    .as_object()
    .ok_or_else(|| malformed("image metadata is not an object"))?;

    let mut out = Vec::with_capacity(metadata.len());
    for (key, entry) in metadata {
        let image = entry
            .get("filename")
            .and_then(Value::as_str)
            .unwrap_or(key)
            .to_string();
        let regions = entry
            .get("regions")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed(format!("{image}: missing regions array")))?;

        let mut heart = None;
        let mut thorax = None;
        for region in regions {
            let Some(structure) = structure_of(region) else {
                continue;
            };
            let Some(shape) = region.get("shape_attributes").and_then(Value::as_object) else {
                return Err(malformed(format!("{image}: region without shape_attributes")));
            };
            if shape.get("name").and_then(Value::as_str) != Some("rect") {
                continue;
            }
            let slot = match structure {
                Structure::Heart => &mut heart,
                Structure::Thorax => &mut thorax,
            };
            if slot.is_some() {
                return Err(Error::DuplicateRegion {
                    image,
                    structure,
                });
            }
            *slot = Some(rect_to_box(shape, &image)?);
        }
        let missing = |structure| Error::MissingRegion {
            image: image.clone(),
            structure,
        };
        let heart = heart.ok_or_else(|| missing(Structure::Heart))?;
        let thorax = thorax.ok_or_else(|| missing(Structure::Thorax))?;
        out.push(Annotation::new(image, heart, thorax)?);
    }
    Ok(out)
}

fn rect_region(b: &BoundingBox, label: Structure) -> Value {
    json!({
        "shape_attributes": {
            "name": "rect",
            "x": b.x_min,
            "y": b.y_min,
            "width": b.width(),
            "height": b.height(),
        },
        "region_attributes": { "label": label.as_str() },
    })
}

/// Emits a minimal VIA 2.x project document.
pub fn emit_via(annotations: &[Annotation]) -> String {
    let mut metadata = Map::new();
    for a in annotations {
        metadata.insert(
            format!("{}-1", a.image_id),
            json!({
                "filename": a.image_id,
                "size": -1,
                "regions": [rect_region(&a.heart, Structure::Heart), rect_region(&a.thorax, Structure::Thorax)],
                "file_attributes": {},
            }),
        );
    }
    let doc = json!({
        "_via_settings": { "project": { "name": "ctrkit" } },
        "_via_img_metadata": metadata,
        "_via_attributes": {
            "region": { "label": { "type": "dropdown", "options": { "heart": "", "thorax": "" } } },
            "file": {},
        },
    });
    serde_json::to_string_pretty(&doc).expect("JSON values always serialize")
}
