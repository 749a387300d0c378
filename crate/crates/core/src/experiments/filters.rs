//! Synthetic images and the small fixed filters used by the downsampling
//! demonstration.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::{SeededRng, Stream};
use crate::spectral;

/// `+1` where `row + col` is even, `-1` elsewhere.
pub fn make_checkerboard(size: usize) -> Result<Image> {
    if size == 0 || !size.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "checkerboard size must be even and positive, got {size}"
        )));
    }
    Ok(Image::gray_from_fn(size, size, |r, c| {
        if (r + c) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }))
}

/// Horizontal-plus-vertical linear ramp from `-1` at the top-left to `+1` at
/// the bottom-right.
pub fn make_ramp(height: usize, width: usize) -> Image {
    let span = (height + width).saturating_sub(2).max(1) as f32;
    Image::gray_from_fn(height, width, |r, c| 2.0 * (r + c) as f32 / span - 1.0)
}

/// Adds Gaussian noise with standard deviation `sigma`, clamped to `[-1, 1]`.
pub fn add_noise(image: &Image, sigma: f64, seed: u64) -> Image {
    let mut rng = SeededRng::new(seed, Stream::Data);
    let mut out = image.clone();
    for v in out.data_mut() {
        *v = (*v as f64 + sigma * rng.normal()).clamp(-1.0, 1.0) as f32;
    }
    out
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - m }) as usize
}

fn at(image: &Image, r: isize, c: isize, ch: usize) -> f32 {
    image.get(reflect(r, image.height()), reflect(c, image.width()), ch)
}

fn map_pixels(image: &Image, f: impl Fn(isize, isize, usize) -> f32) -> Image {
    let (h, w, ch) = (image.height(), image.width(), image.channels());
    let mut out = image.clone();
    let data = out.data_mut();
    for r in 0..h {
        for c in 0..w {
            for k in 0..ch {
                data[(r * w + c) * ch + k] = f(r as isize, c as isize, k);
            }
        }
    }
    out
}

/// 3x3 sharpening stencil `[[0,-1,0],[-1,5,-1],[0,-1,0]]` with reflect
/// padding, before clamping.
pub fn sharpen_unclamped(image: &Image) -> Image {
    map_pixels(image, |r, c, k| {
        5.0 * at(image, r, c, k)
            - at(image, r - 1, c, k)
            - at(image, r + 1, c, k)
            - at(image, r, c - 1, k)
            - at(image, r, c + 1, k)
    })
}

/// [`sharpen_unclamped`] clamped to `[-1, 1]`.
pub fn sharpen(image: &Image) -> Image {
    sharpen_unclamped(image).map(|v| v.clamp(-1.0, 1.0))
}

/// Separable `[1, 2, 1] / 4` blur along rows then columns, reflect padding.
pub fn gaussian_blur(image: &Image) -> Image {
    let rows = map_pixels(image, |r, c, k| {
        0.25 * at(image, r, c - 1, k) + 0.5 * at(image, r, c, k) + 0.25 * at(image, r, c + 1, k)
    });
    map_pixels(&rows, |r, c, k| {
        0.25 * at(&rows, r - 1, c, k) + 0.5 * at(&rows, r, c, k) + 0.25 * at(&rows, r + 1, c, k)
    })
}

/// Mean of each 2x2 block.
pub fn avgpool2(image: &Image) -> Result<Image> {
    let (h, w, ch) = (image.height(), image.width(), image.channels());
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::shape(format!(
            "average pooling needs even sizes, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut data = vec![0.0f32; oh * ow * ch];
    for r in 0..oh {
        for c in 0..ow {
            for k in 0..ch {
                let s = image.get(2 * r, 2 * c, k)
                    + image.get(2 * r, 2 * c + 1, k)
                    + image.get(2 * r + 1, 2 * c, k)
                    + image.get(2 * r + 1, 2 * c + 1, k);
                data[(r * ow + c) * ch + k] = 0.25 * s;
            }
        }
    }
    Image::new(oh, ow, ch, data)
}

/// Sum of the unnormalized radial profile over radii above half the
/// per-axis Nyquist radius `min(H, W) / 2`.
pub fn high_band_energy(image: &Image) -> Result<f64> {
    let gray = spectral::to_grayscale(image)?;
    let (h, w) = gray.dims2()?;
    let profile = spectral::radial_profile(gray.data(), h, w);
    let cutoff = h.min(w) as f64 / 4.0;
    Ok(profile
        .iter()
        .enumerate()
        .filter(|(r, _)| *r as f64 > cutoff)
        .map(|(_, v)| v)
        .sum())
}
