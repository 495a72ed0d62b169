//! Raster and geometry types shared by every stage of the pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two segmented structures, in output-channel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Heart,
    Thorax,
}

impl Structure {
    pub const ALL: [Structure; 2] = [Structure::Heart, Structure::Thorax];

    /// Output channel of the network carrying this structure.
    pub fn channel(self) -> usize {
        match self {
            Structure::Heart => 0,
            Structure::Thorax => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Structure::Heart => "heart",
            Structure::Thorax => "thorax",
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Normalized grayscale radiograph, row-major, every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(height, width, data.len())?;
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Builds an image, clamping every value into `[0, 1]`. NaN becomes 0.
    pub fn from_clamped(height: usize, width: usize, mut data: Vec<f64>) -> Result<Self> {
        check_dims(height, width, data.len())?;
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }
}

/// Binary segmentation mask, row-major, values in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(height, width, data.len())?;
        if let Some(bad) = data.iter().find(|v| **v > 1) {
            return Err(Error::InvalidImage(format!("mask value {bad} is not 0 or 1")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0; height * width])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        check_dims(height, width, height * width)?;
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(u8::from(f(r, c)));
            }
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col] != 0
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.data[row * self.width + col] = u8::from(on);
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|v| *v == 0)
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Pixelwise `self ⊆ other`. Masks of different shape are never subsets.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_shape(other)
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| *a == 0 || *b != 0)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| 1 - v).collect(),
        }
    }

    /// Mask as 0/1 floating-point values, suitable as a probability map.
    pub fn to_probabilities(&self) -> Vec<f64> {
        self.data.iter().map(|v| f64::from(*v)).collect()
    }
}

/// Heart and thorax masks of one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskPair {
    heart: BinaryMask,
    thorax: BinaryMask,
}

impl MaskPair {
    pub fn new(heart: BinaryMask, thorax: BinaryMask) -> Result<Self> {
        if !heart.same_shape(&thorax) {
            return Err(Error::ShapeMismatch(format!(
                "heart mask {}x{} vs thorax mask {}x{}",
                heart.height, heart.width, thorax.height, thorax.width
            )));
        }
        Ok(Self { heart, thorax })
    }

    pub fn heart(&self) -> &BinaryMask {
        &self.heart
    }

    pub fn thorax(&self) -> &BinaryMask {
        &self.thorax
    }

    pub fn get(&self, structure: Structure) -> &BinaryMask {
        match structure {
            Structure::Heart => &self.heart,
            Structure::Thorax => &self.thorax,
        }
    }

    pub fn height(&self) -> usize {
        self.heart.height
    }

    pub fn width(&self) -> usize {
        self.heart.width
    }

    pub fn into_parts(self) -> (BinaryMask, BinaryMask) {
        (self.heart, self.thorax)
    }
}

/// Axis-aligned pixel rectangle with inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BoundingBox {
    pub fn new(x_min: usize, y_min: usize, x_max: usize, y_max: usize) -> Result<Self> {
        if x_min > x_max || y_min > y_max {
            return Err(Error::InvalidBox(format!(
                "({x_min}, {y_min})-({x_max}, {y_max}) has min > max"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Inclusive horizontal pixel count.
    pub fn width(&self) -> usize {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> usize {
        self.y_max - self.y_min + 1
    }

    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }

    pub fn fits_in(&self, height: usize, width: usize) -> bool {
        self.x_max < width && self.y_max < height
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x_min, self.y_min, self.x_max, self.y_max)
    }
}

impl std::str::FromStr for BoundingBox {
    type Err = Error;

    /// Parses `x_min,y_min,x_max,y_max`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidBox(format!("{s:?}: {e}")))?;
        match parts.as_slice() {
            [x0, y0, x1, y1] => BoundingBox::new(*x0, *y0, *x1, *y1),
            _ => Err(Error::InvalidBox(format!(
                "{s:?}: expected x_min,y_min,x_max,y_max"
            ))),
        }
    }
}

fn check_dims(height: usize, width: usize, len: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidImage(format!(
            "dimensions {height}x{width} must be at least 1x1"
        )));
    }
    if height * width != len {
        return Err(Error::InvalidImage(format!(
            "{height}x{width} needs {} values, got {len}",
            height * width
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_image_rejects_out_of_range() {
        assert!(GrayImage::new(1, 2, vec![0.0, 1.5]).is_err());
        assert!(GrayImage::new(1, 2, vec![0.0]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
        let img = GrayImage::from_clamped(1, 3, vec![-0.5, 0.5, f64::NAN]).unwrap();
        assert_eq!(img.data(), &[0.0, 0.5, 0.0]);
    }

    #[test]
    fn mask_rejects_non_binary() {
        assert!(BinaryMask::new(1, 2, vec![0, 2]).is_err());
        let m = BinaryMask::new(1, 3, vec![0, 1, 1]).unwrap();
        assert_eq!(m.count(), 2);
        assert_eq!(m.complement().data(), &[1, 0, 0]);
    }

    #[test]
    fn mask_pair_requires_equal_shapes() {
        let a = BinaryMask::zeros(2, 2).unwrap();
        let b = BinaryMask::zeros(2, 3).unwrap();
        assert!(matches!(
            MaskPair::new(a, b),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn box_width_is_inclusive() {
        let b = BoundingBox::new(3, 0, 10, 4).unwrap();
        assert_eq!(b.width(), 8);
        assert_eq!(b.height(), 5);
        assert!(BoundingBox::new(4, 0, 3, 0).is_err());
        assert_eq!("3,0,10,4".parse::<BoundingBox>().unwrap(), b);
        assert!("3,0,10".parse::<BoundingBox>().is_err());
    }
}
