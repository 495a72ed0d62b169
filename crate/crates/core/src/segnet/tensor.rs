use crate::error::{Error, Result};
use crate::types::{GrayImage, MaskPair};

/// Dense `(batch, channels, height, width)` tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn new(dims: [usize; 4], data: Vec<f64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "dims {dims:?} need {len} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("tensor values must be finite".into()));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: [usize; 4]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub(crate) fn from_raw(dims: [usize; 4], data: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { dims, data }
    }

    /// Stacks single-channel images into an `(N, 1, H, W)` batch.
    pub fn from_images<'a>(images: impl IntoIterator<Item = &'a GrayImage>) -> Result<Self> {
        let mut dims = [0, 1, 0, 0];
        let mut data = Vec::new();
        for img in images {
            if dims[0] == 0 {
                dims[2] = img.height();
                dims[3] = img.width();
            } else if (dims[2], dims[3]) != (img.height(), img.width()) {
                return Err(Error::ShapeMismatch("images in a batch differ in size".into()));
            }
            dims[0] += 1;
            data.extend_from_slice(img.data());
        }
        if dims[0] == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Self::from_raw(dims, data))
    }

    /// Stacks mask pairs into an `(N, 2, H, W)` target batch (heart, thorax).
    pub fn from_masks<'a>(masks: impl IntoIterator<Item = &'a MaskPair>) -> Result<Self> {
        let mut dims = [0, 2, 0, 0];
        let mut data = Vec::new();
        for m in masks {
            if dims[0] == 0 {
                dims[2] = m.height();
                dims[3] = m.width();
            } else if (dims[2], dims[3]) != (m.height(), m.width()) {
                return Err(Error::ShapeMismatch("masks in a batch differ in size".into()));
            }
            dims[0] += 1;
            data.extend(m.heart().to_probabilities());
            data.extend(m.thorax().to_probabilities());
        }
        if dims[0] == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Self::from_raw(dims, data))
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn batch(&self) -> usize {
        self.dims[0]
    }

    pub fn channels(&self) -> usize {
        self.dims[1]
    }

    pub fn height(&self) -> usize {
        self.dims[2]
    }

    pub fn width(&self) -> usize {
        self.dims[3]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn sample_len(&self) -> usize {
        self.dims[1] * self.dims[2] * self.dims[3]
    }

    /// All channels of batch item `n`.
    pub fn sample(&self, n: usize) -> &[f64] {
        let len = self.sample_len();
        &self.data[n * len..(n + 1) * len]
    }

    pub fn sample_mut(&mut self, n: usize) -> &mut [f64] {
        let len = self.sample_len();
        &mut self.data[n * len..(n + 1) * len]
    }

    /// One `H x W` plane.
    pub fn plane(&self, n: usize, c: usize) -> &[f64] {
        let hw = self.dims[2] * self.dims[3];
        let start = (n * self.dims[1] + c) * hw;
        &self.data[start..start + hw]
    }

    pub(crate) fn same_dims(&self, other: &Tensor4, what: &str) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BinaryMask;

    #[test]
    fn construction_checks() {
        assert!(Tensor4::new([1, 1, 2, 2], vec![0.0; 3]).is_err());
        assert!(Tensor4::new([1, 1, 1, 2], vec![0.0, f64::NAN]).is_err());
        let t = Tensor4::new([2, 1, 1, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.sample(1), &[3.0, 4.0]);
        assert_eq!(t.plane(0, 0), &[1.0, 2.0]);
    }

    #[test]
    fn batches_from_samples() {
        let img = GrayImage::filled(3, 4, 0.5).unwrap();
        let t = Tensor4::from_images([&img, &img]).unwrap();
        assert_eq!(t.dims(), [2, 1, 3, 4]);
        let heart = BinaryMask::from_fn(3, 4, |r, _| r == 0).unwrap();
        let thorax = BinaryMask::from_fn(3, 4, |_, c| c == 0).unwrap();
        let pair = MaskPair::new(heart, thorax).unwrap();
        let t = Tensor4::from_masks([&pair]).unwrap();
        assert_eq!(t.dims(), [1, 2, 3, 4]);
        assert_eq!(t.plane(0, 0)[..4], [1.0; 4]);
        assert_eq!(t.plane(0, 1)[4], 1.0);
        assert!(Tensor4::from_images(std::iter::empty()).is_err());
    }
}
