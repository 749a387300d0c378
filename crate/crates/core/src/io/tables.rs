//! CSV text and preview images.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::spectral::SpectralVector;
use crate::tensor_nn::{Scalar, Tensor};

/// `radius,value` rows of a spectral vector.
pub fn phi_csv(v: &SpectralVector) -> String {
    let mut out = String::from("radius,value\n");
    for (r, x) in v.values.iter().enumerate() {
        out.push_str(&format!("{r},{x:?}\n"));
    }
    out
}

/// `row,col,value` rows of a 2-D map.
pub fn grid_csv(map: &Tensor<f64>) -> Result<String> {
    let (rows, cols) = map.dims2()?;
    let mut out = String::from("row,col,value\n");
    for r in 0..rows {
        for c in 0..cols {
            out.push_str(&format!("{r},{c},{:?}\n", map.data()[r * cols + c]));
        }
    }
    Ok(out)
}

/// `log(1 + |v|)` scaled so the largest entry is white.
pub fn log_magnitude_image(map: &Tensor<f64>) -> Result<Image> {
    let (rows, cols) = map.dims2()?;
    let logs: Vec<f64> = map.data().iter().map(|v| v.abs().ln_1p()).collect();
    let top = logs.iter().copied().fold(0.0, f64::max);
    let scale = if top > 0.0 { 2.0 / top } else { 0.0 };
    let data = logs.iter().map(|&l| (l * scale - 1.0) as f32).collect();
    Image::new(rows, cols, 1, data)
}

/// Tiles the first `cols * rows` samples of a `[B, 1, H, W]` batch.
pub fn sample_grid<T: Scalar>(batch: &Tensor<T>, cols: usize, rows: usize) -> Result<Image> {
    let (b, c, h, w) = batch.dims4()?;
    if c != 1 {
        return Err(Error::shape("sample grids need single-channel samples"));
    }
    let n = b.min(cols * rows);
    let rows = n.div_ceil(cols).max(1);
    let mut data = vec![-1.0f32; rows * h * cols * w];
    for i in 0..n {
        let (gr, gc) = (i / cols, i % cols);
        let src = &batch.data()[i * h * w..][..h * w];
        for y in 0..h {
            for x in 0..w {
                data[(gr * h + y) * cols * w + gc * w + x] = src[y * w + x].to_f64_lossy() as f32;
            }
        }
    }
    Image::new(rows * h, cols * w, 1, data)
}
