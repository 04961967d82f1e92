use crate::error::{LfError, Result};

/// Interleaved 2D image, row-major in `(row, col, channel)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image2D {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Image2D {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(LfError::dims(format!(
                "image {height}x{width}x{channels} needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        Ok(Image2D { height, width, channels, data })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f32) -> Self {
        Image2D { height, width, channels, data: vec![value; height * width * channels] }
    }

    pub fn at(&self, row: usize, col: usize, ch: usize) -> f32 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    /// Rows of a single-channel image as nested vectors; handy in tests.
    pub fn to_rows(&self) -> Vec<Vec<f32>> {
        (0..self.height)
            .map(|r| (0..self.width).map(|c| self.at(r, c, 0)).collect())
            .collect()
    }

    pub(crate) fn same_shape(&self, other: &Image2D) -> Result<()> {
        if (self.height, self.width, self.channels) != (other.height, other.width, other.channels) {
            return Err(LfError::dims(format!(
                "image shapes differ: {}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )));
        }
        Ok(())
    }
}
