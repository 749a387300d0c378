use crate::error::{Error, Result};
use crate::gan::Discriminator;
use crate::image::Image;
use crate::spectral::band_modulate;
use crate::tensor_nn::layers::Mode;

use super::report::ExperimentReport;

/// A band of radius bins as fractions `[lo, hi]` of the largest bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const FULL: Band = Band { lo: 0.0, hi: 1.0 };
    /// Top quarter of the radii.
    pub const HIGH: Band = Band { lo: 0.75, hi: 1.0 };
}

fn mean_probability(d: &mut Discriminator<f32>, images: &[Image]) -> Result<f64> {
    let batch = Image::batch_tensor::<f32>(images)?;
    let p = d.probabilities(&batch, Mode::Eval)?;
    Ok(p.iter().sum::<f64>() / p.len() as f64)
}

/// Mean `sigmoid(D)` over `images` after scaling each band's spectral
/// magnitudes by each alpha. Rows are `band_lo,band_hi,alpha,mean_d` in
/// band-major order; the unmodulated mean is recorded in the config as
/// `baseline_mean_d`.
pub fn probe_discriminator(
    d: &mut Discriminator<f32>,
    images: &[Image],
    bands: &[Band],
    alphas: &[f64],
) -> Result<ExperimentReport> {
    if images.is_empty() {
        return Err(Error::invalid("probe needs at least one image"));
    }
    let mut report = ExperimentReport::new(
        "probe_discriminator",
        &["band_lo", "band_hi", "alpha", "mean_d"],
    );
    let baseline = mean_probability(d, images)?;
    report
        .config
        .push(("images".into(), images.len().to_string()));
    report
        .config
        .push(("baseline_mean_d".into(), format!("{baseline:?}")));
    for band in bands {
        for &alpha in alphas {
            let modulated = images
                .iter()
                .map(|img| band_modulate(img, band.lo, band.hi, alpha))
                .collect::<Result<Vec<_>>>()?;
            let mean = mean_probability(d, &modulated)?;
            report.push_row(vec![
                band.lo.into(),
                band.hi.into(),
                alpha.into(),
                mean.into(),
            ])?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::make_checkerboard;
    use crate::gan::{Architecture, NetWidths};
    use crate::rng::{SeededRng, Stream};

    #[test]
    fn identity_rows_and_row_count() {
        let widths = NetWidths {
            generator: 4,
            discriminator: 4,
        };
        let mut d = Discriminator::new(
            Architecture::Compact,
            widths,
            &mut SeededRng::new(1, Stream::DiscriminatorInit),
        );
        let images = vec![
            make_checkerboard(16).unwrap(),
            Image::constant(16, 16, 1, 0.2),
        ];
        let bands = [Band::FULL, Band::HIGH];
        let alphas = [0.0, 0.5, 1.0];
        let r = probe_discriminator(&mut d, &images, &bands, &alphas).unwrap();
        assert_eq!(r.rows.len(), 6);
        let base: f64 = r
            .config
            .iter()
            .find(|(k, _)| k == "baseline_mean_d")
            .unwrap()
            .1
            .parse()
            .unwrap();
        for i in [2, 5] {
            assert_eq!(r.float(i, "mean_d").unwrap().to_bits(), base.to_bits());
        }
        assert!(probe_discriminator(&mut d, &[], &bands, &alphas).is_err());
    }
}
