//! Owned 8-bit image buffer, the unit every transform acts on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An owned H×W×C pixel buffer with 8-bit samples, stored row-major and
/// channel-interleaved. `channels` is 1 (grayscale) or 3 (RGB).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl Image {
    /// Builds an image, validating the shape invariants.
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::contract("image dimensions must be at least 1x1"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::contract(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::contract(format!(
                "data length {} does not match {}x{}x{} = {}",
                data.len(),
                width,
                height,
                channels,
                expected
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// A constant-valued image.
    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        let len = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, vec![value; len])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    /// Total pixel count (not samples): width × height.
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// True when `other` has the same width, height and channel count.
    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    #[inline]
    pub(crate) fn index(&self, x: u32, y: u32, c: u8) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize + c as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u8) -> u8 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: u8, value: u8) {
        let i = self.index(x, y, c);
        self.data[i] = value;
    }

    /// Rec. 601 luma as f64 per pixel; for grayscale images this is the
    /// channel itself. Values stay on the 0..=255 scale.
    pub fn luma(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.pixel_count());
        match self.channels {
            1 => out.extend(self.data.iter().map(|&v| v as f64)),
            _ => {
                for px in self.data.chunks_exact(3) {
                    out.push(0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Image::new(0, 4, 1, vec![]).is_err());
        assert!(Image::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(Image::new(2, 2, 1, vec![0; 3]).is_err());
    }

    #[test]
    fn indexing_is_row_major_interleaved() {
        let data: Vec<u8> = (0..12).collect();
        let img = Image::new(2, 2, 3, data).unwrap();
        assert_eq!(img.get(0, 0, 0), 0);
        assert_eq!(img.get(1, 0, 2), 5);
        assert_eq!(img.get(0, 1, 0), 6);
        assert_eq!(img.get(1, 1, 1), 10);
    }

    #[test]
    fn luma_of_gray_is_identity() {
        let img = Image::new(2, 1, 1, vec![10, 200]).unwrap();
        assert_eq!(img.luma(), vec![10.0, 200.0]);
    }
}
