//! Binary PGM (P5) and PPM (P6) with 8-bit samples.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

use super::files::write_atomic;

fn malformed(detail: impl Into<String>) -> Error {
    Error::Format {
        format: "PNM",
        detail: detail.into(),
    }
}

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some(m) => {
            return Err(malformed(format!(
                "unsupported magic {:?} (expected P5 or P6)",
                String::from_utf8_lossy(m)
            )))
        }
        None => return Err(malformed("file too short for a header")),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (i, name) in ["width", "height", "maximum value"].iter().enumerate() {
        // whitespace and comments before each field
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(malformed(format!("header ends before the {name}"))),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(malformed(format!("expected a number for the {name}")));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        fields[i] = text
            .parse()
            .map_err(|_| malformed(format!("{name} {text} is out of range")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(malformed("missing whitespace after the maximum value")),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(malformed(format!("image size {width}x{height} is empty")));
    }
    if maxval != 255 {
        return Err(malformed(format!(
            "unsupported maximum value {maxval} (only 8-bit 255 is supported)"
        )));
    }
    Ok(Header {
        channels,
        width,
        height,
        data_start: pos,
    })
}

/// Decodes P5/P6 bytes; sample `p` maps to `p / 255 * 2 - 1`.
pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let h = parse_header(bytes)?;
    let need = h
        .width
        .checked_mul(h.height)
        .and_then(|n| n.checked_mul(h.channels))
        .ok_or_else(|| malformed("image dimensions overflow"))?;
    let payload = &bytes[h.data_start..];
    if payload.len() < need {
        return Err(malformed(format!(
            "truncated payload: {} of {need} sample bytes present",
            payload.len()
        )));
    }
    let data = payload[..need]
        .iter()
        .map(|&p| p as f32 / 255.0 * 2.0 - 1.0)
        .collect();
    Image::new(h.height, h.width, h.channels, data)
}

/// One- or three-channel image to P5/P6 bytes; values are clamped to
/// `[-1, 1]` and quantized with `round((v + 1) / 2 * 255)`.
pub fn encode_pnm(image: &Image) -> Result<Vec<u8>> {
    let magic = match image.channels() {
        1 => "P5",
        3 => "P6",
        c => {
            return Err(Error::invalid(format!(
                "cannot store a {c}-channel image as PGM/PPM"
            )))
        }
    };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(
        image
            .data()
            .iter()
            .map(|&v| ((v.clamp(-1.0, 1.0) + 1.0) / 2.0 * 255.0).round() as u8),
    );
    Ok(out)
}

pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes).map_err(|e| match e {
        Error::Format { format, detail } => Error::Format {
            format,
            detail: format!("{}: {detail}", path.display()),
        },
        other => other,
    })
}

pub fn write_image(path: &Path, image: &Image) -> Result<()> {
    write_atomic(path, &encode_pnm(image)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_mapping() {
        let img = decode_pnm(b"P5\n3 1\n255\n\x00\x80\xff").unwrap();
        assert_eq!(img.data()[0], -1.0);
        assert!((img.data()[1] - (128.0 / 255.0 * 2.0 - 1.0)).abs() < 1e-7);
        assert!((img.data()[1] - 0.00392).abs() < 1e-5);
        assert_eq!(img.data()[2], 1.0);
    }

    #[test]
    fn round_trip_is_exact_after_quantization() {
        let bytes: Vec<u8> = (0..=255u8).collect();
        let mut file = b"P5\n16 16\n255\n".to_vec();
        file.extend(&bytes);
        let img = decode_pnm(&file).unwrap();
        assert_eq!(encode_pnm(&img).unwrap(), file);
        let rgb = Image::gray_from_fn(2, 2, |r, c| (r + c) as f32 * 0.3 - 0.5);
        let rgb = Image::from_planes(2, 2, &[rgb.plane(0), rgb.plane(0), rgb.plane(0)]).unwrap();
        let enc = encode_pnm(&rgb).unwrap();
        assert!(enc.starts_with(b"P6\n2 2\n255\n"));
        let back = decode_pnm(&enc).unwrap();
        assert_eq!(encode_pnm(&back).unwrap(), enc);
    }

    #[test]
    fn comments_are_skipped() {
        let img = decode_pnm(b"P5 # c1\n# c2\n2 1 255\n\x00\xff").unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
    }

    #[test]
    fn descriptive_errors() {
        let cases: [(&[u8], &str); 5] = [
            (b"P2\n1 1\n255\n0", "magic"),
            (b"P5\n2 2\n255\n\x00", "truncated"),
            (b"P5\n2 2\n65535\n", "maximum value"),
            (b"P5\n2", "header ends"),
            (b"P5\nx 2 255\n", "width"),
        ];
        for (bytes, needle) in cases {
            let msg = decode_pnm(bytes).unwrap_err().to_string();
            assert!(msg.contains(needle), "{msg}");
        }
    }
}
