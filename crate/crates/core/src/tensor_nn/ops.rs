//! Forward and backward kernels for the layer set.
//!
//! All 4-D tensors are `[batch, channels, height, width]` row-major. The
//! kernels are plain functions over [`Tensor`]s; [`crate::tensor_nn::Graph`]
//! records them and calls the matching backward kernel.

use crate::error::{Error, Result};
use crate::par::{self, Execution};

use super::tensor::{Scalar, Tensor};

/// Geometry of a square-kernel convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub batch: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeometry {
    pub fn new<T: Scalar>(
        input: &Tensor<T>,
        weight: &Tensor<T>,
        stride: usize,
        pad: usize,
    ) -> Result<Self> {
        let (batch, in_channels, height, width) = input.dims4()?;
        let (out_channels, wc, kh, kw) = weight.dims4()?;
        if wc != in_channels {
            return Err(Error::shape(format!(
                "conv2d: input has {in_channels} channels, kernel expects {wc}"
            )));
        }
        if kh != kw {
            return Err(Error::shape(format!("conv2d: non-square kernel {kh}x{kw}")));
        }
        if stride == 0 {
            return Err(Error::invalid("conv2d: stride must be positive"));
        }
        if height + 2 * pad < kh || width + 2 * pad < kw {
            return Err(Error::shape(format!(
                "conv2d: kernel {kh} larger than padded input {height}x{width} (pad {pad})"
            )));
        }
        Ok(ConvGeometry {
            batch,
            in_channels,
            out_channels,
            height,
            width,
            kernel: kh,
            stride,
            pad,
        })
    }

    pub fn out_height(&self) -> usize {
        (self.height + 2 * self.pad - self.kernel) / self.stride + 1
    }

    pub fn out_width(&self) -> usize {
        (self.width + 2 * self.pad - self.kernel) / self.stride + 1
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    fn columns(&self) -> usize {
        self.batch * self.out_height() * self.out_width()
    }

    /// Output positions `lo..hi` whose input coordinate for kernel tap `k`
    /// falls inside `0..extent`.
    fn valid_range(&self, k: usize, extent: usize, out: usize) -> (usize, usize) {
        let (s, p) = (self.stride, self.pad);
        // smallest o with o*s + k >= p
        let lo = if k >= p { 0 } else { (p - k).div_ceil(s) };
        // largest o with o*s + k - p < extent, plus one
        let hi = if extent + p <= k {
            0
        } else {
            (extent + p - k - 1) / s + 1
        };
        (lo.min(out), hi.min(out).max(lo.min(out)))
    }
}

/// Unfolds the input into a `[Cin*K*K, B*Ho*Wo]` patch matrix.
fn im2col<T: Scalar>(exec: Execution, g: &ConvGeometry, input: &[T]) -> Vec<T> {
    let (ho, wo) = (g.out_height(), g.out_width());
    let kk = g.kernel * g.kernel;
    let ncols = g.columns();
    let mut cols = vec![T::zero(); g.patch_len() * ncols];
    par::for_each_chunk_mut(exec, &mut cols, ncols, |row, dst| {
        let ci = row / kk;
        let ky = (row % kk) / g.kernel;
        let kx = row % g.kernel;
        let (y_lo, y_hi) = g.valid_range(ky, g.height, ho);
        let (x_lo, x_hi) = g.valid_range(kx, g.width, wo);
        if x_lo == x_hi {
            return;
        }
        for b in 0..g.batch {
            let plane =
                &input[(b * g.in_channels + ci) * g.height * g.width..][..g.height * g.width];
            let out = &mut dst[b * ho * wo..][..ho * wo];
            for oy in y_lo..y_hi {
                let iy = oy * g.stride + ky - g.pad;
                let src_row = &plane[iy * g.width..][..g.width];
                let out_row = &mut out[oy * wo..][x_lo..x_hi];
                if g.stride == 1 {
                    let ix = x_lo + kx - g.pad;
                    out_row.copy_from_slice(&src_row[ix..ix + out_row.len()]);
                } else {
                    for (i, o) in out_row.iter_mut().enumerate() {
                        *o = src_row[(x_lo + i) * g.stride + kx - g.pad];
                    }
                }
            }
        }
    });
    cols
}

/// Folds a patch-matrix gradient back onto the input, summing overlaps.
fn col2im<T: Scalar>(exec: Execution, g: &ConvGeometry, dcols: &[T]) -> Vec<T> {
    let (ho, wo) = (g.out_height(), g.out_width());
    let kk = g.kernel * g.kernel;
    let ncols = g.columns();
    let hw = g.height * g.width;
    // channel-major scratch so each channel is one contiguous chunk
    let mut scratch = vec![T::zero(); g.in_channels * g.batch * hw];
    par::for_each_chunk_mut(exec, &mut scratch, g.batch * hw, |ci, dst| {
        for tap in 0..kk {
            let (ky, kx) = (tap / g.kernel, tap % g.kernel);
            let (y_lo, y_hi) = g.valid_range(ky, g.height, ho);
            let (x_lo, x_hi) = g.valid_range(kx, g.width, wo);
            if x_lo == x_hi {
                continue;
            }
            let src = &dcols[(ci * kk + tap) * ncols..][..ncols];
            for b in 0..g.batch {
                let plane = &mut dst[b * hw..][..hw];
                let col = &src[b * ho * wo..][..ho * wo];
                for oy in y_lo..y_hi {
                    let iy = oy * g.stride + ky - g.pad;
                    let col_row = &col[oy * wo..][x_lo..x_hi];
                    let plane_row = &mut plane[iy * g.width..][..g.width];
                    if g.stride == 1 {
                        let ix = x_lo + kx - g.pad;
                        for (p, &v) in plane_row[ix..ix + col_row.len()].iter_mut().zip(col_row) {
                            *p = *p + v;
                        }
                    } else {
                        for (i, &v) in col_row.iter().enumerate() {
                            let p = &mut plane_row[(x_lo + i) * g.stride + kx - g.pad];
                            *p = *p + v;
                        }
                    }
                }
            }
        }
    });
    let mut out = vec![T::zero(); scratch.len()];
    for ci in 0..g.in_channels {
        for b in 0..g.batch {
            out[(b * g.in_channels + ci) * hw..][..hw]
                .copy_from_slice(&scratch[(ci * g.batch + b) * hw..][..hw]);
        }
    }
    out
}

/// Output of [`conv2d_forward`]; `cols` is kept for the backward pass.
pub struct ConvForward<T> {
    pub output: Tensor<T>,
    pub cols: Vec<T>,
    pub geometry: ConvGeometry,
}

pub fn conv2d_forward<T: Scalar>(
    exec: Execution,
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    stride: usize,
    pad: usize,
) -> Result<ConvForward<T>> {
    let g = ConvGeometry::new(input, weight, stride, pad)?;
    if let Some(b) = bias {
        if b.len() != g.out_channels {
            return Err(Error::shape(format!(
                "conv2d: bias has {} entries for {} output channels",
                b.len(),
                g.out_channels
            )));
        }
    }
    let (ho, wo) = (g.out_height(), g.out_width());
    let ncols = g.columns();
    let k = g.patch_len();
    let cols = im2col(exec, &g, input.data());
    let mut tmp = vec![T::zero(); g.out_channels * ncols];
    T::gemm(
        g.out_channels,
        k,
        ncols,
        weight.data(),
        (k as isize, 1),
        &cols,
        (ncols as isize, 1),
        T::zero(),
        &mut tmp,
    );
    let mut out = vec![T::zero(); g.batch * g.out_channels * ho * wo];
    for co in 0..g.out_channels {
        let bv = bias.map_or(T::zero(), |b| b.data()[co]);
        for b in 0..g.batch {
            let src = &tmp[co * ncols + b * ho * wo..][..ho * wo];
            let dst = &mut out[(b * g.out_channels + co) * ho * wo..][..ho * wo];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = s + bv;
            }
        }
    }
    Ok(ConvForward {
        output: Tensor::new(&[g.batch, g.out_channels, ho, wo], out)?,
        cols,
        geometry: g,
    })
}

/// Gradients of a convolution. Each slot is computed only when requested.
pub struct ConvGrads<T> {
    pub input: Option<Tensor<T>>,
    pub weight: Option<Tensor<T>>,
    pub bias: Option<Tensor<T>>,
}

#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward<T: Scalar>(
    exec: Execution,
    g: &ConvGeometry,
    cols: &[T],
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
    want_input: bool,
    want_weight: bool,
    want_bias: bool,
) -> Result<ConvGrads<T>> {
    let (ho, wo) = (g.out_height(), g.out_width());
    let ncols = g.columns();
    let k = g.patch_len();
    let gout = grad_out.data();
    // [Cout, B*Ho*Wo]
    let mut gtmp = vec![T::zero(); g.out_channels * ncols];
    for co in 0..g.out_channels {
        for b in 0..g.batch {
            gtmp[co * ncols + b * ho * wo..][..ho * wo]
                .copy_from_slice(&gout[(b * g.out_channels + co) * ho * wo..][..ho * wo]);
        }
    }
    let bias = want_bias.then(|| {
        let data = (0..g.out_channels)
            .map(|co| {
                gtmp[co * ncols..][..ncols]
                    .iter()
                    .fold(T::zero(), |a, &v| a + v)
            })
            .collect();
        Tensor::new(&[g.out_channels], data)
    });
    let weight_grad = want_weight.then(|| {
        let mut dw = vec![T::zero(); g.out_channels * k];
        T::gemm(
            g.out_channels,
            ncols,
            k,
            &gtmp,
            (ncols as isize, 1),
            cols,
            (1, ncols as isize),
            T::zero(),
            &mut dw,
        );
        Tensor::new(weight.shape(), dw)
    });
    let input = want_input.then(|| {
        let mut dcols = vec![T::zero(); k * ncols];
        T::gemm(
            k,
            g.out_channels,
            ncols,
            weight.data(),
            (1, k as isize),
            &gtmp,
            (ncols as isize, 1),
            T::zero(),
            &mut dcols,
        );
        Tensor::new(
            &[g.batch, g.in_channels, g.height, g.width],
            col2im(exec, g, &dcols),
        )
    });
    Ok(ConvGrads {
        input: input.transpose()?,
        weight: weight_grad.transpose()?,
        bias: bias.transpose()?,
    })
}

/// `y = x W^T + b` for `x: [B, Din]`, `W: [Dout, Din]`.
pub fn linear_forward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
) -> Result<Tensor<T>> {
    let (b, din) = input.dims2()?;
    let (dout, wdin) = weight.dims2()?;
    if din != wdin {
        return Err(Error::shape(format!(
            "fully_connected: input width {din} but weight expects {wdin}"
        )));
    }
    let mut out = vec![T::zero(); b * dout];
    if let Some(bias) = bias {
        if bias.len() != dout {
            return Err(Error::shape(format!(
                "fully_connected: bias has {} entries for {dout} outputs",
                bias.len()
            )));
        }
        for row in out.chunks_mut(dout) {
            row.copy_from_slice(bias.data());
        }
    }
    let beta = if bias.is_some() { T::one() } else { T::zero() };
    T::gemm(
        b,
        din,
        dout,
        input.data(),
        (din as isize, 1),
        weight.data(),
        (1, din as isize),
        beta,
        &mut out,
    );
    Tensor::new(&[b, dout], out)
}

/// Returns `(d_input, d_weight, d_bias)`.
pub fn linear_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (b, din) = input.dims2()?;
    let (dout, _) = weight.dims2()?;
    let g = grad_out.data();
    let mut dx = vec![T::zero(); b * din];
    T::gemm(
        b,
        dout,
        din,
        g,
        (dout as isize, 1),
        weight.data(),
        (din as isize, 1),
        T::zero(),
        &mut dx,
    );
    let mut dw = vec![T::zero(); dout * din];
    T::gemm(
        dout,
        b,
        din,
        g,
        (1, dout as isize),
        input.data(),
        (din as isize, 1),
        T::zero(),
        &mut dw,
    );
    let mut db = vec![T::zero(); dout];
    for row in g.chunks(dout) {
        for (a, &v) in db.iter_mut().zip(row) {
            *a = *a + v;
        }
    }
    Ok((
        Tensor::new(&[b, din], dx)?,
        Tensor::new(&[dout, din], dw)?,
        Tensor::new(&[dout], db)?,
    ))
}

pub const BATCHNORM_MOMENTUM: f64 = 0.1;
pub const BATCHNORM_EPS: f64 = 1e-5;

/// Saved state of a batch-norm forward.
pub struct BatchNormForward<T> {
    pub output: Tensor<T>,
    /// Standardized input.
    pub normalized: Vec<T>,
    /// Per-channel `1 / sqrt(var + eps)`.
    pub inv_std: Vec<T>,
    pub training: bool,
}

/// Per-channel batch normalization over `(B, H, W)`.
///
/// In training mode the batch statistics are used and the running statistics
/// are moved toward them with momentum [`BATCHNORM_MOMENTUM`]; in eval mode the
/// running statistics are used as-is.
pub fn batchnorm_forward<T: Scalar>(
    input: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running_mean: &mut [T],
    running_var: &mut [T],
    training: bool,
) -> Result<BatchNormForward<T>> {
    let (b, c, h, w) = input.dims4()?;
    if gamma.len() != c || beta.len() != c || running_mean.len() != c || running_var.len() != c {
        return Err(Error::shape(format!(
            "batchnorm: parameters do not match {c} channels"
        )));
    }
    let hw = h * w;
    let n = b * hw;
    let x = input.data();
    let eps = T::from_f64_lossy(BATCHNORM_EPS);
    let momentum = T::from_f64_lossy(BATCHNORM_MOMENTUM);
    let mut inv_std = vec![T::zero(); c];
    let mut normalized = vec![T::zero(); x.len()];
    let mut out = vec![T::zero(); x.len()];
    let nf = T::from_usize(n).unwrap();
    for ch in 0..c {
        let (mean, var) = if training {
            let mut sum = T::zero();
            for bi in 0..b {
                for &v in &x[(bi * c + ch) * hw..][..hw] {
                    sum = sum + v;
                }
            }
            let mean = sum / nf;
            let mut sq = T::zero();
            for bi in 0..b {
                for &v in &x[(bi * c + ch) * hw..][..hw] {
                    sq = sq + (v - mean) * (v - mean);
                }
            }
            let var = sq / nf;
            let unbiased = if n > 1 {
                sq / T::from_usize(n - 1).unwrap()
            } else {
                var
            };
            running_mean[ch] = (T::one() - momentum) * running_mean[ch] + momentum * mean;
            running_var[ch] = (T::one() - momentum) * running_var[ch] + momentum * unbiased;
            (mean, var)
        } else {
            (running_mean[ch], running_var[ch])
        };
        let is = T::one() / (var + eps).sqrt();
        inv_std[ch] = is;
        let (gm, bt) = (gamma.data()[ch], beta.data()[ch]);
        for bi in 0..b {
            let off = (bi * c + ch) * hw;
            for i in off..off + hw {
                let xh = (x[i] - mean) * is;
                normalized[i] = xh;
                out[i] = gm * xh + bt;
            }
        }
    }
    Ok(BatchNormForward {
        output: Tensor::new(input.shape(), out)?,
        normalized,
        inv_std,
        training,
    })
}

/// Returns `(d_input, d_gamma, d_beta)`.
pub fn batchnorm_backward<T: Scalar>(
    saved: &BatchNormForward<T>,
    gamma: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (b, c, h, w) = grad_out.dims4()?;
    let hw = h * w;
    let nf = T::from_usize(b * hw).unwrap();
    let g = grad_out.data();
    let xh = &saved.normalized;
    let mut dx = vec![T::zero(); g.len()];
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for ch in 0..c {
        let mut sg = T::zero();
        let mut sgx = T::zero();
        for bi in 0..b {
            let off = (bi * c + ch) * hw;
            for i in off..off + hw {
                sg = sg + g[i];
                sgx = sgx + g[i] * xh[i];
            }
        }
        dgamma[ch] = sgx;
        dbeta[ch] = sg;
        let scale = gamma.data()[ch] * saved.inv_std[ch];
        for bi in 0..b {
            let off = (bi * c + ch) * hw;
            for i in off..off + hw {
                dx[i] = if saved.training {
                    scale * (g[i] - sg / nf - xh[i] * sgx / nf)
                } else {
                    scale * g[i]
                };
            }
        }
    }
    Ok((
        Tensor::new(grad_out.shape(), dx)?,
        Tensor::new(&[c], dgamma)?,
        Tensor::new(&[c], dbeta)?,
    ))
}

fn require_even<T: Scalar>(op: &str, input: &Tensor<T>) -> Result<(usize, usize, usize, usize)> {
    let (b, c, h, w) = input.dims4()?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::shape(format!(
            "{op}: spatial size {h}x{w} must be even"
        )));
    }
    Ok((b, c, h, w))
}

/// Non-overlapping 2x2 mean.
pub fn avgpool2_forward<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, c, h, w) = require_even("avgpool2", input)?;
    let (ho, wo) = (h / 2, w / 2);
    let x = input.data();
    let quarter = T::from_f64_lossy(0.25);
    let mut out = vec![T::zero(); b * c * ho * wo];
    for p in 0..b * c {
        let src = &x[p * h * w..][..h * w];
        let dst = &mut out[p * ho * wo..][..ho * wo];
        for oy in 0..ho {
            for ox in 0..wo {
                let i = 2 * oy * w + 2 * ox;
                dst[oy * wo + ox] = (src[i] + src[i + 1] + src[i + w] + src[i + w + 1]) * quarter;
            }
        }
    }
    Tensor::new(&[b, c, ho, wo], out)
}

pub fn avgpool2_backward<T: Scalar>(
    input_shape: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (b, c, ho, wo) = grad_out.dims4()?;
    let (h, w) = (2 * ho, 2 * wo);
    let quarter = T::from_f64_lossy(0.25);
    let g = grad_out.data();
    let mut dx = vec![T::zero(); b * c * h * w];
    for p in 0..b * c {
        let src = &g[p * ho * wo..][..ho * wo];
        let dst = &mut dx[p * h * w..][..h * w];
        for oy in 0..ho {
            for ox in 0..wo {
                let v = src[oy * wo + ox] * quarter;
                let i = 2 * oy * w + 2 * ox;
                dst[i] = v;
                dst[i + 1] = v;
                dst[i + w] = v;
                dst[i + w + 1] = v;
            }
        }
    }
    Tensor::new(input_shape, dx)
}

/// Interpolation taps `(i0, i1, w0, w1)` for 2x upsampling with half-pixel
/// centers (align-corners off), clamped at the borders.
fn upsample_taps<T: Scalar>(n: usize) -> Vec<(usize, usize, T, T)> {
    (0..2 * n)
        .map(|o| {
            let s = ((o as f64 + 0.5) / 2.0 - 0.5).max(0.0);
            let i0 = (s.floor() as usize).min(n - 1);
            let i1 = (i0 + 1).min(n - 1);
            let frac = s - i0 as f64;
            (
                i0,
                i1,
                T::from_f64_lossy(1.0 - frac),
                T::from_f64_lossy(frac),
            )
        })
        .collect()
}

/// 2x bilinear upsampling.
pub fn upsample2_forward<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, c, h, w) = input.dims4()?;
    let ty = upsample_taps::<T>(h);
    let tx = upsample_taps::<T>(w);
    let (ho, wo) = (2 * h, 2 * w);
    let x = input.data();
    let mut out = vec![T::zero(); b * c * ho * wo];
    for p in 0..b * c {
        let src = &x[p * h * w..][..h * w];
        let dst = &mut out[p * ho * wo..][..ho * wo];
        for (oy, &(y0, y1, wy0, wy1)) in ty.iter().enumerate() {
            for (ox, &(x0, x1, wx0, wx1)) in tx.iter().enumerate() {
                let top = wx0 * src[y0 * w + x0] + wx1 * src[y0 * w + x1];
                let bottom = wx0 * src[y1 * w + x0] + wx1 * src[y1 * w + x1];
                dst[oy * wo + ox] = wy0 * top + wy1 * bottom;
            }
        }
    }
    Tensor::new(&[b, c, ho, wo], out)
}

pub fn upsample2_backward<T: Scalar>(
    input_shape: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (b, c, ho, wo) = grad_out.dims4()?;
    let (h, w) = (ho / 2, wo / 2);
    let ty = upsample_taps::<T>(h);
    let tx = upsample_taps::<T>(w);
    let g = grad_out.data();
    let mut dx = vec![T::zero(); b * c * h * w];
    for p in 0..b * c {
        let src = &g[p * ho * wo..][..ho * wo];
        let dst = &mut dx[p * h * w..][..h * w];
        for (oy, &(y0, y1, wy0, wy1)) in ty.iter().enumerate() {
            for (ox, &(x0, x1, wx0, wx1)) in tx.iter().enumerate() {
                let v = src[oy * wo + ox];
                dst[y0 * w + x0] = dst[y0 * w + x0] + wy0 * wx0 * v;
                dst[y0 * w + x1] = dst[y0 * w + x1] + wy0 * wx1 * v;
                dst[y1 * w + x0] = dst[y1 * w + x0] + wy1 * wx0 * v;
                dst[y1 * w + x1] = dst[y1 * w + x1] + wy1 * wx1 * v;
            }
        }
    }
    Tensor::new(input_shape, dx)
}

/// Orthonormal 2x2 Haar butterfly on `[a, b, c, d]`, giving `[LL, LH, HL, HH]`.
/// The matrix is symmetric and its own inverse.
#[inline]
fn haar4<T: Scalar>(a: T, b: T, c: T, d: T) -> [T; 4] {
    let half = T::from_f64_lossy(0.5);
    [
        (a + b + c + d) * half,
        (a - b + c - d) * half,
        (a + b - c - d) * half,
        (a - b - c + d) * half,
    ]
}

/// Haar wavelet downsampling: `[B, C, H, W] -> [B, 4C, H/2, W/2]`, with the
/// four sub-bands of input channel `c` at output channels `4c..4c+4` in the
/// order LL, LH, HL, HH.
pub fn haar_dwt_forward<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, c, h, w) = require_even("haar_dwt_downsample", input)?;
    let (ho, wo) = (h / 2, w / 2);
    let x = input.data();
    let mut out = vec![T::zero(); b * 4 * c * ho * wo];
    for bi in 0..b {
        for ch in 0..c {
            let src = &x[(bi * c + ch) * h * w..][..h * w];
            let base = (bi * 4 * c + 4 * ch) * ho * wo;
            for oy in 0..ho {
                for ox in 0..wo {
                    let i = 2 * oy * w + 2 * ox;
                    let bands = haar4(src[i], src[i + 1], src[i + w], src[i + w + 1]);
                    for (k, v) in bands.into_iter().enumerate() {
                        out[base + k * ho * wo + oy * wo + ox] = v;
                    }
                }
            }
        }
    }
    Tensor::new(&[b, 4 * c, ho, wo], out)
}

pub fn haar_dwt_backward<T: Scalar>(
    input_shape: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (b, c4, ho, wo) = grad_out.dims4()?;
    let c = c4 / 4;
    let (h, w) = (2 * ho, 2 * wo);
    let g = grad_out.data();
    let mut dx = vec![T::zero(); b * c * h * w];
    for bi in 0..b {
        for ch in 0..c {
            let base = (bi * c4 + 4 * ch) * ho * wo;
            let dst = &mut dx[(bi * c + ch) * h * w..][..h * w];
            for oy in 0..ho {
                for ox in 0..wo {
                    let at = |k: usize| g[base + k * ho * wo + oy * wo + ox];
                    let [a, bb, cc, d] = haar4(at(0), at(1), at(2), at(3));
                    let i = 2 * oy * w + 2 * ox;
                    dst[i] = a;
                    dst[i + 1] = bb;
                    dst[i + w] = cc;
                    dst[i + w + 1] = d;
                }
            }
        }
    }
    Tensor::new(input_shape, dx)
}

pub const SPECTRAL_NORM_EPS: f64 = 1e-12;

fn normalize_in_place<T: Scalar>(v: &mut [T]) -> T {
    let norm = v.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    if norm > T::from_f64_lossy(SPECTRAL_NORM_EPS) {
        for x in v.iter_mut() {
            *x = *x / norm;
        }
    }
    norm
}

/// `W^T u` for a row-major `rows x cols` matrix.
fn mat_t_vec<T: Scalar>(w: &[T], rows: usize, cols: usize, u: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); cols];
    for r in 0..rows {
        let ur = u[r];
        for (o, &x) in out.iter_mut().zip(&w[r * cols..][..cols]) {
            *o = *o + x * ur;
        }
    }
    out
}

fn mat_vec<T: Scalar>(w: &[T], rows: usize, cols: usize, v: &[T]) -> Vec<T> {
    (0..rows)
        .map(|r| {
            w[r * cols..][..cols]
                .iter()
                .zip(v)
                .fold(T::zero(), |a, (&x, &y)| a + x * y)
        })
        .collect()
}

/// Flattened `(rows, cols)` view of a weight: rows are the leading dimension.
pub fn matrix_dims<T: Scalar>(weight: &Tensor<T>) -> (usize, usize) {
    let rows = weight.shape()[0];
    (rows, weight.len() / rows)
}

/// Runs `n_iters` power-iteration steps on the persistent left vector `u` and
/// returns the matching right vector `v = normalize(W^T u)` from the last step.
pub fn power_iteration<T: Scalar>(weight: &Tensor<T>, u: &mut [T], n_iters: usize) -> Vec<T> {
    let (rows, cols) = matrix_dims(weight);
    let w = weight.data();
    let mut v = mat_t_vec(w, rows, cols, u);
    normalize_in_place(&mut v);
    for _ in 0..n_iters {
        v = mat_t_vec(w, rows, cols, u);
        normalize_in_place(&mut v);
        let mut nu = mat_vec(w, rows, cols, &v);
        // keep the previous unit vector when W v vanishes
        if normalize_in_place(&mut nu) > T::from_f64_lossy(SPECTRAL_NORM_EPS) {
            u.copy_from_slice(&nu);
        }
    }
    v
}

/// Singular value estimate `u^T W v`, floored at [`SPECTRAL_NORM_EPS`].
pub fn sigma_estimate<T: Scalar>(weight: &Tensor<T>, u: &[T], v: &[T]) -> T {
    let (rows, cols) = matrix_dims(weight);
    let wv = mat_vec(weight.data(), rows, cols, v);
    let s = wv.iter().zip(u).fold(T::zero(), |a, (&x, &y)| a + x * y);
    s.max(T::from_f64_lossy(SPECTRAL_NORM_EPS))
}

/// `W / sigma` with `sigma = u^T W v` for fixed `u`, `v`.
pub fn spectral_norm_forward<T: Scalar>(weight: &Tensor<T>, u: &[T], v: &[T]) -> (Tensor<T>, T) {
    let sigma = sigma_estimate(weight, u, v);
    (weight.map(|x| x / sigma), sigma)
}

/// Gradient of `W / (u^T W v)` with `u`, `v` held constant:
/// `(G - <G, W/sigma> u v^T) / sigma`.
pub fn spectral_norm_backward<T: Scalar>(
    normalized: &Tensor<T>,
    sigma: T,
    u: &[T],
    v: &[T],
    grad_out: &Tensor<T>,
) -> Tensor<T> {
    let (rows, cols) = matrix_dims(normalized);
    let floored = sigma <= T::from_f64_lossy(SPECTRAL_NORM_EPS);
    let g = grad_out.data();
    let inner = if floored {
        T::zero()
    } else {
        g.iter()
            .zip(normalized.data())
            .fold(T::zero(), |a, (&x, &y)| a + x * y)
    };
    let mut out = vec![T::zero(); g.len()];
    for ((o_row, g_row), &ur) in out.chunks_mut(cols).zip(g.chunks(cols)).zip(u).take(rows) {
        for ((o, &gi), &vc) in o_row.iter_mut().zip(g_row).zip(v) {
            *o = (gi - inner * ur * vc) / sigma;
        }
    }
    Tensor::new(normalized.shape(), out).expect("shape preserved")
}

/// Standalone spectral normalization: runs `n_iters` power-iteration steps on
/// `u` (updated in place) and returns `W / sigma`.
pub fn spectral_normalize<T: Scalar>(
    weight: &Tensor<T>,
    u: &mut [T],
    n_iters: usize,
) -> Result<Tensor<T>> {
    let (rows, _) = matrix_dims(weight);
    if u.len() != rows {
        return Err(Error::shape(format!(
            "spectral_normalize: u has {} entries for {rows} rows",
            u.len()
        )));
    }
    let v = power_iteration(weight, u, n_iters.max(1));
    Ok(spectral_norm_forward(weight, u, &v).0)
}
