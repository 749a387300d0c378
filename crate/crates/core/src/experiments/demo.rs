use crate::error::{Error, Result};
use crate::image::Image;

use super::filters::{
    add_noise, avgpool2, gaussian_blur, high_band_energy, make_checkerboard, make_ramp, sharpen,
};
use super::report::ExperimentReport;

/// Image sizes in the standard corpus.
pub const CORPUS_SIZES: [usize; 3] = [16, 32, 64];

/// Standard deviation of the noise in the noisy checkerboards.
pub const CORPUS_NOISE: f64 = 0.1;

/// Named synthetic images: a checkerboard, a noisy checkerboard and a ramp
/// at each of [`CORPUS_SIZES`].
pub fn standard_corpus() -> Vec<(String, Image)> {
    let mut out = Vec::new();
    for (i, &n) in CORPUS_SIZES.iter().enumerate() {
        let board = make_checkerboard(n).expect("even size");
        out.push((format!("checkerboard_{n}"), board.clone()));
        out.push((
            format!("checkerboard_noise_{n}"),
            add_noise(&board, CORPUS_NOISE, i as u64),
        ));
        out.push((format!("ramp_{n}"), make_ramp(n, n)));
    }
    out
}

/// High-band gaps between a sharpened image and the original, before
/// downsampling, after plain pooling and after blur-then-pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoGaps {
    pub full: f64,
    pub aliased: f64,
    pub anti_aliased: f64,
}

impl DemoGaps {
    /// The blurred path's gap is below both other gaps.
    pub fn anti_aliasing_wins(&self) -> bool {
        self.anti_aliased < self.full && self.anti_aliased < self.aliased
    }
}

fn gap(a: &Image, b: &Image) -> Result<f64> {
    Ok((high_band_energy(a)? - high_band_energy(b)?).abs())
}

pub fn demo_gaps(image: &Image) -> Result<DemoGaps> {
    let sharp = sharpen(image);
    let blurred = (gaussian_blur(image), gaussian_blur(&sharp));
    Ok(DemoGaps {
        full: gap(&sharp, image)?,
        aliased: gap(&avgpool2(&sharp)?, &avgpool2(image)?)?,
        anti_aliased: gap(&avgpool2(&blurred.1)?, &avgpool2(&blurred.0)?)?,
    })
}

/// Sharpened-versus-raw high-band gaps for each image; rows are
/// `image,size,gap_full,gap_aliased,gap_anti_aliased,anti_aliasing_wins`.
pub fn downsample_demo(corpus: &[(String, Image)]) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        "downsample_demo",
        &[
            "image",
            "size",
            "gap_full",
            "gap_aliased",
            "gap_anti_aliased",
            "anti_aliasing_wins",
        ],
    );
    report
        .config
        .push(("images".into(), corpus.len().to_string()));
    report
        .config
        .push(("high_band".into(), "r > min(H,W)/4".into()));
    for (name, image) in corpus {
        if image.height() % 2 != 0 || image.width() % 2 != 0 {
            return Err(Error::shape(format!("corpus image '{name}' has odd size")));
        }
        let g = demo_gaps(image)?;
        report.push_row(vec![
            name.as_str().into(),
            format!("{}x{}", image.height(), image.width()).into(),
            g.full.into(),
            g.aliased.into(),
            g.anti_aliased.into(),
            g.anti_aliasing_wins().to_string().into(),
        ])?;
    }
    Ok(report)
}
