//! Binary Netpbm graymaps (P5) and pixmaps (P6), 8-bit only.

use std::path::Path;

use thiserror::Error;

use crate::error::Result;
use crate::vision::RasterImage;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PnmError {
    #[error("byte {offset}: not a binary PGM/PPM file (expected P5 or P6)")]
    BadMagic { offset: usize },
    #[error("byte {offset}: malformed header: {reason}")]
    MalformedHeader { offset: usize, reason: String },
    #[error("byte {offset}: invalid dimensions {width}x{height}")]
    BadDimensions {
        offset: usize,
        width: u64,
        height: u64,
    },
    #[error("byte {offset}: unsupported maxval {maxval} (only 255)")]
    UnsupportedMaxval { offset: usize, maxval: u64 },
    #[error("byte {offset}: truncated payload, expected {expected} bytes, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> std::result::Result<u64, PnmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PnmError::MalformedHeader {
                offset: start,
                reason: format!("expected {what}"),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PnmError::MalformedHeader {
                offset: start,
                reason: format!("{what} does not fit"),
            })
    }
}

pub fn decode_pnm(bytes: &[u8]) -> std::result::Result<RasterImage, PnmError> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1u8,
        Some(b"P6") => 3u8,
        _ => return Err(PnmError::BadMagic { offset: 0 }),
    };
    let mut h = Header { bytes, pos: 2 };
    if !h
        .bytes
        .get(2)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(PnmError::MalformedHeader {
            offset: 2,
            reason: "expected whitespace after magic".into(),
        });
    }
    let dims_at = h.pos;
    let width = h.number("width")?;
    let height = h.number("height")?;
    if width == 0 || height == 0 || width > u32::MAX as u64 || height > u32::MAX as u64 {
        return Err(PnmError::BadDimensions {
            offset: dims_at,
            width,
            height,
        });
    }
    h.skip_space_and_comments();
    let maxval_at = h.pos;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval {
            offset: maxval_at,
            maxval,
        });
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => {
            return Err(PnmError::MalformedHeader {
                offset: h.pos,
                reason: "expected a single whitespace byte before the raster".into(),
            })
        }
    }

    let expected = (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(channels as usize))
        .ok_or(PnmError::BadDimensions {
            offset: dims_at,
            width,
            height,
        })?;
    let payload = &bytes[h.pos..];
    if payload.len() < expected {
        return Err(PnmError::Truncated {
            offset: h.pos,
            expected,
            found: payload.len(),
        });
    }
    Ok(RasterImage::new(
        width as u32,
        height as u32,
        channels,
        payload[..expected].to_vec(),
    )
    .expect("sample count checked above"))
}

pub fn encode_pnm(img: &RasterImage) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.samples());
    out
}

pub fn load_pnm(path: impl AsRef<Path>) -> Result<RasterImage> {
    Ok(decode_pnm(&std::fs::read(path)?)?)
}

pub fn save_pnm(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_pnm(img))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pixel_ppm_round_trips() {
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 0, 255]);
        let img = decode_pnm(&bytes).unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (2, 1, 3));
        assert_eq!(img.pixel(1, 0), &[0, 0, 255]);
        assert_eq!(encode_pnm(&img), bytes);
    }

    #[test]
    fn graymap_with_comments() {
        let mut bytes = b"P5 # gray\n# another\n3\t2 255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = decode_pnm(&bytes).unwrap();
        assert_eq!(img.channels(), 1);
        assert_eq!(img.pixel(2, 1), &[6]);
    }

    #[test]
    fn zero_dimensions() {
        assert!(matches!(
            decode_pnm(b"P6 0 0 255\n"),
            Err(PnmError::BadDimensions {
                offset: 2,
                width: 0,
                height: 0
            })
        ));
    }

    #[test]
    fn header_errors_report_offsets() {
        assert_eq!(
            decode_pnm(b"P3 1 1 255\n"),
            Err(PnmError::BadMagic { offset: 0 })
        );
        assert_eq!(
            decode_pnm(b"P6 2 2 65535\n"),
            Err(PnmError::UnsupportedMaxval {
                offset: 7,
                maxval: 65535
            })
        );
        assert!(matches!(
            decode_pnm(b"P6 2 x 255\n"),
            Err(PnmError::MalformedHeader { offset: 5, .. })
        ));
        assert_eq!(
            decode_pnm(b"P5 2 2 255\n\x01\x02"),
            Err(PnmError::Truncated {
                offset: 11,
                expected: 4,
                found: 2
            })
        );
    }
}
