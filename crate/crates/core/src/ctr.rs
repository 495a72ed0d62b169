//! Cardiothoracic ratio arithmetic and the clinical cutoffs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::BoundingBox;

/// Lower edge of the normal CTR band (inclusive).
pub const NORMAL_LOW: f64 = 0.42;
/// Upper edge of the normal CTR band (inclusive); anything above is cardiomegaly.
pub const CARDIOMEGALY_CUTOFF: f64 = 0.50;

/// CTR band relative to the normal range `[0.42, 0.50]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CtrCategory {
    BelowNormal,
    Normal,
    Cardiomegaly,
}

impl fmt::Display for CtrCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CtrCategory::BelowNormal => "below-normal",
            CtrCategory::Normal => "normal",
            CtrCategory::Cardiomegaly => "cardiomegaly",
        })
    }
}

/// Binary cardiomegaly label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            other => Err(Error::MalformedDocument(format!("unknown label {other:?}"))),
        }
    }
}

pub fn classify_ctr(ctr: f64) -> CtrCategory {
    if ctr < NORMAL_LOW {
        CtrCategory::BelowNormal
    } else if ctr <= CARDIOMEGALY_CUTOFF {
        CtrCategory::Normal
    } else {
        CtrCategory::Cardiomegaly
    }
}

/// Positive iff `ctr` is strictly above 0.5.
pub fn binary_label(ctr: f64) -> Label {
    if ctr > CARDIOMEGALY_CUTOFF {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Heart and thorax widths with their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtrMeasurement {
    pub heart_width: usize,
    pub thorax_width: usize,
    pub ctr: f64,
    pub category: CtrCategory,
}

impl CtrMeasurement {
    pub fn from_widths(heart_width: usize, thorax_width: usize) -> Result<Self> {
        if thorax_width == 0 {
            return Err(Error::ZeroThoraxWidth);
        }
        if heart_width == 0 {
            return Err(Error::InvalidBox("heart width is zero".into()));
        }
        let ctr = heart_width as f64 / thorax_width as f64;
        Ok(Self {
            heart_width,
            thorax_width,
            ctr,
            category: classify_ctr(ctr),
        })
    }

    pub fn label(&self) -> Label {
        binary_label(self.ctr)
    }
}

/// Ratio of the inclusive horizontal extents of the two boxes.
pub fn compute_ctr(heart_box: &BoundingBox, thorax_box: &BoundingBox) -> Result<CtrMeasurement> {
    if thorax_box.x_min > thorax_box.x_max {
        return Err(Error::ZeroThoraxWidth);
    }
    if heart_box.x_min > heart_box.x_max {
        return Err(Error::InvalidBox(format!("heart box {heart_box} is inverted")));
    }
    CtrMeasurement::from_widths(heart_box.width(), thorax_box.width())
}

/// Formats a ratio with the four decimals used in every emitted report.
pub fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}
