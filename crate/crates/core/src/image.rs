use crate::error::{Error, Result};
use crate::tensor_nn::{Scalar, Tensor};

/// Height x width x channels image, interleaved (HWC) row-major, values in
/// `[-1, 1]`. One channel is grayscale, three is RGB.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::shape(format!(
                "image dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::shape(format!(
                "{height}x{width}x{channels} image needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    /// Single-channel image from a function of `(row, col)`.
    pub fn gray_from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        let data = (0..height * width)
            .map(|i| f(i / width, i % width))
            .collect();
        Image {
            height,
            width,
            channels: 1,
            data,
        }
    }

    pub fn constant(height: usize, width: usize, channels: usize, value: f32) -> Self {
        Image {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f32 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    pub fn same_size(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Channel `c` as a row-major plane.
    pub fn plane(&self, c: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .map(|&v| v as f64)
            .collect()
    }

    /// Builds an image from per-channel planes.
    pub fn from_planes(height: usize, width: usize, planes: &[Vec<f64>]) -> Result<Self> {
        let channels = planes.len();
        let mut data = vec![0.0f32; height * width * channels];
        for (c, p) in planes.iter().enumerate() {
            if p.len() != height * width {
                return Err(Error::shape("plane size does not match image size"));
            }
            for (i, &v) in p.iter().enumerate() {
                data[i * channels + c] = v as f32;
            }
        }
        Image::new(height, width, channels, data)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Image {
        Image {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// `[1, C, H, W]` tensor.
    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.channels {
            out.extend(
                self.data
                    .iter()
                    .skip(c)
                    .step_by(self.channels)
                    .map(|&v| T::from_f64_lossy(v as f64)),
            );
        }
        Tensor::new(&[1, self.channels, self.height, self.width], out).expect("valid image")
    }

    /// Stacks same-sized images into a `[B, C, H, W]` tensor.
    pub fn batch_tensor<T: Scalar>(images: &[Image]) -> Result<Tensor<T>> {
        let first = images
            .first()
            .ok_or_else(|| Error::invalid("empty image batch"))?;
        let mut data = Vec::with_capacity(images.len() * first.data.len());
        for img in images {
            if !img.same_size(first) || img.channels != first.channels {
                return Err(Error::shape("images in a batch must share one size"));
            }
            data.extend(img.to_tensor::<T>().into_data());
        }
        Tensor::new(
            &[images.len(), first.channels, first.height, first.width],
            data,
        )
    }

    /// Sample `index` of a `[B, C, H, W]` tensor.
    pub fn from_batch<T: Scalar>(batch: &Tensor<T>, index: usize) -> Result<Image> {
        let (b, c, h, w) = batch.dims4()?;
        if index >= b {
            return Err(Error::shape(format!("sample {index} out of batch {b}")));
        }
        let src = &batch.data()[index * c * h * w..][..c * h * w];
        let mut data = vec![0.0f32; c * h * w];
        for ch in 0..c {
            for i in 0..h * w {
                data[i * c + ch] = src[ch * h * w + i].to_f64_lossy() as f32;
            }
        }
        Image::new(h, w, c, data)
    }
}
