//! Working image representations.
//!
//! [`Raster`] is the real-valued working buffer that operators consume and
//! produce; [`Raster8`] is the 8-bit form used for frames on disk, quantized
//! chain results and normalized projections.

use crate::error::{Error, Result};

/// Row-major H×W real-valued image.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParams(format!(
                "raster must be non-empty, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidParams(format!(
                "raster data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("raster contains non-finite values".into()));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "empty raster");
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    /// Builds a raster by evaluating `f(row, col)` for every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "empty raster");
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { height, width, data }
    }

    pub(crate) fn from_vec_unchecked(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Pixel access with replicated borders.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.data[r * self.width + c]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
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

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Raster {
        Raster {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Rounds half-up and clamps to `[0, 255]`.
    pub fn quantize(&self) -> Raster8 {
        Raster8 {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| round_half_up_u8(v)).collect(),
        }
    }
}

#[inline]
pub(crate) fn round_half_up_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Row-major H×W 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Raster8 {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl Raster8 {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParams(format!(
                "raster must be non-empty, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidParams(format!(
                "raster data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, value: u8) -> Self {
        assert!(height > 0 && width > 0, "empty raster");
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(height > 0 && width > 0, "empty raster");
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { height, width, data }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.width + col]
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn to_raster(&self) -> Raster {
        Raster {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f64::from(v)).collect(),
        }
    }
}

impl From<&Raster8> for Raster {
    fn from(img: &Raster8) -> Self {
        img.to_raster()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_rounds_half_up_and_clamps() {
        let r = Raster::new(1, 5, vec![0.49, 0.5, 254.5, 300.0, -3.0]).unwrap();
        assert_eq!(r.quantize().data(), &[0, 1, 255, 255, 0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Raster::new(0, 3, vec![]).is_err());
        assert!(Raster::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Raster::new(1, 1, vec![f64::NAN]).is_err());
        assert!(Raster8::new(2, 2, vec![0; 5]).is_err());
    }

    #[test]
    fn clamped_access_replicates_border() {
        let r = Raster::from_fn(2, 3, |r, c| (r * 3 + c) as f64);
        assert_eq!(r.get_clamped(-1, -1), 0.0);
        assert_eq!(r.get_clamped(5, 1), 4.0);
        assert_eq!(r.get_clamped(0, 9), 2.0);
    }
}
