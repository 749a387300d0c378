//! Frequency-domain pipeline: grayscale reduction, 2-D DFT, centering,
//! azimuthal averaging into the reduced spectrum `phi`, band modulation and
//! average-spectrum difference maps.
//!
//! All spectral arithmetic runs in `f64` whatever the image precision.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::par::{self, Execution};
use crate::tensor_nn::Tensor;

/// Floor applied to the DC term when normalizing `phi`.
pub const PHI_EPS: f64 = 1e-8;

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// `rows x cols` complex spectrum in row-major order; `F(k, l)` sits at
/// `k * cols + l`. When `centered`, the DC term sits at
/// `(rows / 2, cols / 2)` instead of `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Complex64>,
    pub centered: bool,
}

impl Spectrum {
    pub fn at(&self, k: usize, l: usize) -> Complex64 {
        self.values[k * self.cols + l]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm()).collect()
    }
}

/// Mean spectral magnitude per integer radius bin, `v[0..=R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    pub values: Vec<f64>,
    pub normalized: bool,
}

impl SpectralVector {
    /// Largest radius bin `R`.
    pub fn max_radius(&self) -> usize {
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Largest radius bin for an `rows x cols` spectrum:
/// `round(sqrt((rows/2)^2 + (cols/2)^2))`.
pub fn max_radius_bin(rows: usize, cols: usize) -> usize {
    let (a, b) = (rows as f64 / 2.0, cols as f64 / 2.0);
    (a * a + b * b).sqrt().round() as usize
}

/// Length of `phi` for images of the given size.
pub fn phi_len(rows: usize, cols: usize) -> usize {
    max_radius_bin(rows, cols) + 1
}

/// Signed offset of index `i` from the center after `fftshift`.
#[inline]
fn centered_offset(i: usize, n: usize) -> isize {
    ((i + n / 2) % n) as isize - (n / 2) as isize
}

/// Radius bin of each pixel of an *uncentered* spectrum.
fn bin_map_uncentered(rows: usize, cols: usize) -> Vec<usize> {
    let mut bins = Vec::with_capacity(rows * cols);
    for k in 0..rows {
        let dk = centered_offset(k, rows) as f64;
        for l in 0..cols {
            let dl = centered_offset(l, cols) as f64;
            bins.push((dk * dk + dl * dl).sqrt().round() as usize);
        }
    }
    bins
}

/// Number of pixels assigned to each radius bin.
pub fn bin_counts(rows: usize, cols: usize) -> Vec<usize> {
    let mut counts = vec![0; phi_len(rows, cols)];
    for b in bin_map_uncentered(rows, cols) {
        counts[b] += 1;
    }
    counts
}

/// Luma reduction of an image to an `[H, W]` plane.
pub fn to_grayscale(image: &Image) -> Result<Tensor<f64>> {
    let (h, w) = (image.height(), image.width());
    let data = match image.channels() {
        1 => image.plane(0),
        3 => image
            .data()
            .chunks(3)
            .map(|p| LUMA[0] * p[0] as f64 + LUMA[1] * p[1] as f64 + LUMA[2] * p[2] as f64)
            .collect(),
        c => {
            return Err(Error::invalid(format!(
                "grayscale conversion needs 1 or 3 channels, got {c}"
            )))
        }
    };
    Tensor::new(&[h, w], data)
}

fn twiddles(n: usize, sign: f64) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(1.0, sign * 2.0 * PI * j as f64 / n as f64))
        .collect()
}

/// Separable DFT of a complex plane; `sign = -1` forward, `+1` inverse
/// (unnormalized).
fn dft2_complex(values: &[Complex64], rows: usize, cols: usize, sign: f64) -> Vec<Complex64> {
    let tw_c = twiddles(cols, sign);
    let tw_r = twiddles(rows, sign);
    let mut tmp = vec![Complex64::new(0.0, 0.0); rows * cols];
    for m in 0..rows {
        let src = &values[m * cols..][..cols];
        let dst = &mut tmp[m * cols..][..cols];
        for (l, d) in dst.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, &x) in src.iter().enumerate() {
                acc += x * tw_c[(l * n) % cols];
            }
            *d = acc;
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    for l in 0..cols {
        for k in 0..rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..rows {
                acc += tmp[m * cols + l] * tw_r[(k * m) % rows];
            }
            out[k * cols + l] = acc;
        }
    }
    out
}

fn dft2_plane(plane: &[f64], rows: usize, cols: usize) -> Vec<Complex64> {
    let values: Vec<Complex64> = plane.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft2_complex(&values, rows, cols, -1.0)
}

/// Uncentered 2-D DFT of an `[M, N]` real signal.
pub fn dft2(signal: &Tensor<f64>) -> Result<Spectrum> {
    let (rows, cols) = signal.dims2()?;
    Ok(Spectrum {
        rows,
        cols,
        values: dft2_plane(signal.data(), rows, cols),
        centered: false,
    })
}

/// Inverse DFT (with `1 / MN`) of an uncentered spectrum; returns the real part.
pub fn idft2_real(spectrum: &Spectrum) -> Result<Tensor<f64>> {
    if spectrum.centered {
        return Err(Error::invalid("inverse DFT needs an uncentered spectrum"));
    }
    let (m, n) = (spectrum.rows, spectrum.cols);
    let scale = 1.0 / (m * n) as f64;
    let out = dft2_complex(&spectrum.values, m, n, 1.0);
    Tensor::new(&[m, n], out.iter().map(|c| c.re * scale).collect())
}

fn roll(spectrum: &Spectrum, shift_r: usize, shift_c: usize) -> Vec<Complex64> {
    let (m, n) = (spectrum.rows, spectrum.cols);
    let mut out = vec![Complex64::new(0.0, 0.0); m * n];
    for k in 0..m {
        for l in 0..n {
            out[((k + shift_r) % m) * n + (l + shift_c) % n] = spectrum.values[k * n + l];
        }
    }
    out
}

/// Moves the DC term to `(M/2, N/2)` (floor division).
pub fn fftshift2(spectrum: &Spectrum) -> Result<Spectrum> {
    if spectrum.centered {
        return Err(Error::invalid("spectrum is already centered"));
    }
    Ok(Spectrum {
        values: roll(spectrum, spectrum.rows / 2, spectrum.cols / 2),
        centered: true,
        ..*spectrum
    })
}

/// Inverse of [`fftshift2`].
pub fn ifftshift2(spectrum: &Spectrum) -> Result<Spectrum> {
    if !spectrum.centered {
        return Err(Error::invalid("spectrum is not centered"));
    }
    let (m, n) = (spectrum.rows, spectrum.cols);
    Ok(Spectrum {
        values: roll(spectrum, m - m / 2, n - n / 2),
        centered: false,
        ..*spectrum
    })
}

fn average_by_bin(magnitudes: &[f64], bins: &[usize], len: usize) -> Vec<f64> {
    let mut sums = vec![0.0; len];
    let mut counts = vec![0usize; len];
    for (&m, &b) in magnitudes.iter().zip(bins) {
        sums[b] += m;
        counts[b] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect()
}

/// Mean `|F|` per integer radius bin `round(sqrt(dk^2 + dl^2))`, measured
/// from the centered DC term. Empty bins are zero.
pub fn azimuthal_average(spectrum: &Spectrum) -> Result<SpectralVector> {
    if !spectrum.centered {
        return Err(Error::invalid(
            "azimuthal average needs a centered spectrum",
        ));
    }
    let (m, n) = (spectrum.rows, spectrum.cols);
    let (ck, cl) = ((m / 2) as f64, (n / 2) as f64);
    let bins: Vec<usize> = (0..m * n)
        .map(|i| {
            let dk = (i / n) as f64 - ck;
            let dl = (i % n) as f64 - cl;
            (dk * dk + dl * dl).sqrt().round() as usize
        })
        .collect();
    Ok(SpectralVector {
        values: average_by_bin(&spectrum.magnitudes(), &bins, phi_len(m, n)),
        normalized: false,
    })
}

fn normalize_by_dc(mut values: Vec<f64>) -> Vec<f64> {
    let denom = values[0].max(PHI_EPS);
    for v in values.iter_mut() {
        *v /= denom;
    }
    values
}

/// Unnormalized azimuthal average of a grayscale plane.
pub fn radial_profile(plane: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let spec = dft2_plane(plane, rows, cols);
    let mags: Vec<f64> = spec.iter().map(|c| c.norm()).collect();
    average_by_bin(&mags, &bin_map_uncentered(rows, cols), phi_len(rows, cols))
}

/// Reduced spectral representation: grayscale, DFT, center, azimuthal
/// average, then divide by `max(v[0], PHI_EPS)`.
pub fn phi(image: &Image) -> Result<SpectralVector> {
    let gray = to_grayscale(image)?;
    let spec = fftshift2(&dft2(&gray)?)?;
    let v = azimuthal_average(&spec)?;
    Ok(SpectralVector {
        values: normalize_by_dc(v.values),
        normalized: true,
    })
}

/// [`phi`] over a batch of images, in input order.
pub fn phi_batch(exec: Execution, images: &[Image]) -> Result<Vec<SpectralVector>> {
    par::map(exec, images, phi).into_iter().collect()
}

/// State kept by [`phi_with_saved`] for [`phi_backward`].
#[derive(Debug, Clone)]
pub struct PhiSaved {
    spectrum: Vec<Complex64>,
    bins: Vec<usize>,
    counts: Vec<usize>,
    profile: Vec<f64>,
}

/// `phi` of one grayscale plane plus what its vector-Jacobian product needs.
pub fn phi_with_saved(plane: &[f64], rows: usize, cols: usize) -> (Vec<f64>, PhiSaved) {
    let spectrum = dft2_plane(plane, rows, cols);
    let bins = bin_map_uncentered(rows, cols);
    let len = phi_len(rows, cols);
    let mut counts = vec![0usize; len];
    for &b in &bins {
        counts[b] += 1;
    }
    let mags: Vec<f64> = spectrum.iter().map(|c| c.norm()).collect();
    let profile = average_by_bin(&mags, &bins, len);
    let phi = normalize_by_dc(profile.clone());
    (
        phi,
        PhiSaved {
            spectrum,
            bins,
            counts,
            profile,
        },
    )
}

/// Gradient of `<upstream, phi(plane)>` with respect to the plane.
///
/// `|F|` is differentiated as `F / |F|` (zero at `F = 0`), and the real
/// signal gradient of `F(k,l) = sum f(m,n) e^{-i theta}` is the real part of an
/// unnormalized inverse DFT.
pub fn phi_backward(saved: &PhiSaved, upstream: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let v = &saved.profile;
    let dc = v[0];
    let denom = dc.max(PHI_EPS);
    let mut dv: Vec<f64> = upstream.iter().map(|g| g / denom).collect();
    if dc > PHI_EPS {
        let s: f64 = upstream.iter().zip(v).map(|(g, x)| g * x).sum();
        dv[0] -= s / (denom * denom);
    }
    let gspec: Vec<Complex64> = saved
        .spectrum
        .iter()
        .zip(&saved.bins)
        .map(|(f, &b)| {
            let mag = f.norm();
            if mag <= 1e-300 {
                Complex64::new(0.0, 0.0)
            } else {
                f * (dv[b] / saved.counts[b] as f64 / mag)
            }
        })
        .collect();
    dft2_complex(&gspec, rows, cols, 1.0)
        .into_iter()
        .map(|c| c.re)
        .collect()
}

/// Scales `|F|` by `alpha` for every frequency whose radius bin lies in
/// `[r_lo * R, r_hi * R]` (`R` the largest bin), keeping phases, then inverts
/// and clamps to `[-1, 1]`. Channels are modulated independently; `alpha = 1`
/// returns the image unchanged.
pub fn band_modulate(image: &Image, r_lo: f64, r_hi: f64, alpha: f64) -> Result<Image> {
    if !(0.0..=1.0).contains(&r_lo) || !(0.0..=1.0).contains(&r_hi) || r_lo >= r_hi {
        return Err(Error::invalid(format!(
            "band [{r_lo}, {r_hi}] must satisfy 0 <= lo < hi <= 1"
        )));
    }
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::invalid(format!("alpha must be >= 0, got {alpha}")));
    }
    if alpha == 1.0 {
        return Ok(image.clone());
    }
    let (h, w) = (image.height(), image.width());
    let r_max = max_radius_bin(h, w) as f64;
    let (lo, hi) = (r_lo * r_max, r_hi * r_max);
    let bins = bin_map_uncentered(h, w);
    let planes = (0..image.channels())
        .map(|c| {
            let mut spec = dft2_plane(&image.plane(c), h, w);
            // bins depend on radius only, so conjugate pairs are scaled alike
            for (f, &b) in spec.iter_mut().zip(&bins) {
                let b = b as f64;
                if b >= lo && b <= hi {
                    *f *= alpha;
                }
            }
            let spectrum = Spectrum {
                rows: h,
                cols: w,
                values: spec,
                centered: false,
            };
            idft2_real(&spectrum).map(|t| {
                t.into_data()
                    .into_iter()
                    .map(|v| v.clamp(-1.0, 1.0))
                    .collect()
            })
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Image::from_planes(h, w, &planes)
}

/// `|E[F(a)] - E[F(b)]|` over centered grayscale spectra, as an `[M, N]` map.
pub fn mean_spectrum_diff(images_a: &[Image], images_b: &[Image]) -> Result<Tensor<f64>> {
    mean_spectrum_diff_with(Execution::default(), images_a, images_b)
}

pub fn mean_spectrum_diff_with(
    exec: Execution,
    images_a: &[Image],
    images_b: &[Image],
) -> Result<Tensor<f64>> {
    let first = images_a
        .first()
        .or(images_b.first())
        .ok_or_else(|| Error::invalid("both image lists must be nonempty"))?;
    if images_a.is_empty() || images_b.is_empty() {
        return Err(Error::invalid("both image lists must be nonempty"));
    }
    let (h, w) = (first.height(), first.width());
    if let Some(bad) = images_a
        .iter()
        .chain(images_b)
        .find(|i| !i.same_size(first))
    {
        return Err(Error::shape(format!(
            "image size {}x{} differs from {h}x{w}",
            bad.height(),
            bad.width()
        )));
    }
    let mean = |images: &[Image]| -> Result<Vec<Complex64>> {
        let spectra = par::map(exec, images, |img| -> Result<Spectrum> {
            fftshift2(&dft2(&to_grayscale(img)?)?)
        });
        let mut acc = vec![Complex64::new(0.0, 0.0); h * w];
        for s in spectra {
            for (a, v) in acc.iter_mut().zip(s?.values) {
                *a += v;
            }
        }
        let n = images.len() as f64;
        Ok(acc.into_iter().map(|c| c / n).collect())
    };
    let (ma, mb) = (mean(images_a)?, mean(images_b)?);
    Tensor::new(
        &[h, w],
        ma.iter().zip(&mb).map(|(a, b)| (a - b).norm()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checkerboard(n: usize) -> Vec<f64> {
        (0..n * n)
            .map(|i| {
                if (i / n + i % n).is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect()
    }

    #[test]
    fn grayscale_weights() {
        let white = Image::constant(1, 1, 3, 1.0);
        assert!((to_grayscale(&white).unwrap().data()[0] - 1.0).abs() < 1e-12);
        let red = Image::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(to_grayscale(&red).unwrap().data()[0], 0.299);
        let g = Image::gray_from_fn(2, 3, |r, c| (r * 3 + c) as f32 * 0.1);
        assert_eq!(to_grayscale(&g).unwrap().data(), g.plane(0).as_slice());
        assert!(to_grayscale(&Image::constant(2, 2, 2, 0.0)).is_err());
    }

    #[test]
    fn constant_and_impulse_spectra() {
        let s = dft2(&Tensor::full(&[4, 6], 0.5)).unwrap();
        assert!((s.at(0, 0).re - 12.0).abs() < 1e-12);
        for (i, v) in s.values.iter().enumerate().skip(1) {
            assert!(v.norm() < 1e-12, "bin {i}: {v}");
        }
        let mut imp = vec![0.0; 15];
        imp[0] = 1.0;
        let s = dft2(&Tensor::new(&[3, 5], imp).unwrap()).unwrap();
        assert!(s
            .values
            .iter()
            .all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn shift_moves_dc_and_round_trips() {
        let plane: Vec<f64> = (0..256).map(|i| (i as f64 * 0.37).sin()).collect();
        let s = dft2(&Tensor::new(&[16, 16], plane).unwrap()).unwrap();
        let c = fftshift2(&s).unwrap();
        assert_eq!(c.at(8, 8), s.at(0, 0));
        assert_eq!(c.at(0, 0), s.at(8, 8));
        assert!(fftshift2(&c).is_err());
        assert_eq!(ifftshift2(&c).unwrap(), s);
        // odd sizes too
        let s = dft2(&Tensor::new(&[3, 5], (0..15).map(|i| i as f64).collect()).unwrap()).unwrap();
        assert_eq!(ifftshift2(&fftshift2(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn azimuthal_average_dc_only_and_flat() {
        let mut values = vec![Complex64::new(0.0, 0.0); 64];
        values[4 * 8 + 4] = Complex64::new(3.0, 0.0);
        let s = Spectrum {
            rows: 8,
            cols: 8,
            values,
            centered: true,
        };
        let v = azimuthal_average(&s).unwrap();
        assert_eq!(v.values[0], 3.0);
        assert!(v.values[1..].iter().all(|&x| x == 0.0));
        let flat = Spectrum {
            values: vec![Complex64::new(0.0, 1.0); 64],
            ..s
        };
        let v = azimuthal_average(&flat).unwrap();
        let counts = bin_counts(8, 8);
        for (b, &x) in v.values.iter().enumerate() {
            assert_eq!(x, if counts[b] > 0 { 1.0 } else { 0.0 });
        }
        assert!(azimuthal_average(&Spectrum {
            centered: false,
            ..flat
        })
        .is_err());
    }

    #[test]
    fn phi_of_constant_and_zero_images() {
        let p = phi(&Image::constant(8, 8, 1, 0.4)).unwrap();
        assert_eq!(p.values[0], 1.0);
        assert!(p.values[1..].iter().all(|&v| v.abs() < 1e-12));
        assert!(p.normalized);
        let z = phi(&Image::constant(8, 8, 1, 0.0)).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn phi_of_offset_checkerboard() {
        let cb = checkerboard(16);
        let img = Image::gray_from_fn(16, 16, |r, c| ((cb[r * 16 + c] + 1.0) / 2.0) as f32);
        let p = phi(&img).unwrap();
        assert_eq!(p.len(), 12);
        let counts = bin_counts(16, 16);
        // DC = 128, F(8,8) = 128, one pixel out of counts[11]
        assert!((p.values[11] - 1.0 / counts[11] as f64).abs() < 1e-12);
        for (b, &v) in p.values.iter().enumerate().take(11).skip(1) {
            assert!(v.abs() < 1e-12, "bin {b}: {v}");
        }
    }

    #[test]
    fn bins_cover_every_pixel() {
        for (m, n) in [(16, 16), (5, 7), (1, 1), (32, 8)] {
            assert_eq!(bin_counts(m, n).iter().sum::<usize>(), m * n);
        }
    }

    #[test]
    fn band_modulate_identity_and_zeroing() {
        let img = Image::gray_from_fn(8, 8, |r, c| ((r * 8 + c) as f32 * 0.7).sin() * 0.5);
        let same = band_modulate(&img, 0.0, 1.0, 1.0).unwrap();
        for (a, b) in same.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-6);
        }
        let zero = band_modulate(&img, 0.0, 1.0, 0.0).unwrap();
        assert!(zero.data().iter().all(|v| v.abs() < 1e-6));
        assert!(band_modulate(&img, 0.5, 0.5, 1.0).is_err());
        assert!(band_modulate(&img, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn spectrum_diff_of_constants() {
        let a = [Image::constant(4, 4, 1, 0.5)];
        let b = [Image::constant(4, 4, 1, -0.25)];
        let d = mean_spectrum_diff(&a, &b).unwrap();
        for (i, &v) in d.data().iter().enumerate() {
            let expect = if i == 2 * 4 + 2 { 0.75 * 16.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-9);
        }
        assert!(mean_spectrum_diff(&a, &[]).is_err());
        assert!(mean_spectrum_diff(&a, &[Image::constant(4, 2, 1, 0.0)]).is_err());
    }
}
