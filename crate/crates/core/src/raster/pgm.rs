//! Binary PGM (P5) codec.
//!
//! The writer always emits `P5\n<w> <h>\n255\n` followed by the raw bytes. The
//! reader accepts any whitespace layout and `#` comments in the header, and 8-bit
//! maxvals below 255 (rescaled to the full range).

use super::GrayImage;
use crate::error::{Error, Result};

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.data().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.data());
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Decode {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Decode {
                offset: start,
                reason: format!("{what} out of range"),
            })
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    match bytes {
        [b'P', b'5', ..] => cur.pos = 2,
        [b'P', b'1'..=b'6', ..] => {
            return Err(Error::UnsupportedFormat(format!(
                "netpbm variant P{} (only binary P5 is supported)",
                bytes[1] as char
            )))
        }
        _ => return Err(cur.err("missing P5 magic")),
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(cur.err(format!("zero-sized image {width}x{height}")));
    }
    if maxval == 0 {
        return Err(cur.err("maxval must be positive"));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "16-bit PGM (maxval {maxval})"
        )));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(cur.err("expected single whitespace after maxval")),
    }
    let start = cur.pos;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| cur.err("image dimensions overflow"))?;
    let available = bytes.len() - start;
    if available < n {
        return Err(Error::Decode {
            offset: bytes.len(),
            reason: format!("truncated raster: expected {n} bytes, found {available}"),
        });
    }
    let raw = &bytes[start..start + n];
    let data = if maxval == 255 {
        raw.to_vec()
    } else {
        let mut scaled = Vec::with_capacity(n);
        for (i, &v) in raw.iter().enumerate() {
            if v as usize > maxval {
                return Err(Error::Decode {
                    offset: start + i,
                    reason: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
            scaled.push(((v as usize * 255 * 2 + maxval) / (2 * maxval)) as u8);
        }
        scaled
    };
    GrayImage::new(width, height, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_two_by_two() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 64]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.data(), &[0, 255, 128, 64]);
    }

    #[test]
    fn writer_is_bit_exact() {
        let img = GrayImage::new(3, 1, vec![1, 2, 3]).unwrap();
        assert_eq!(encode_pgm(&img), b"P5\n3 1\n255\n\x01\x02\x03".to_vec());
    }

    #[test]
    fn header_comments_and_odd_whitespace() {
        let mut bytes = b"P5 # made by hand\n 2\t1\n# depth\n255 ".to_vec();
        bytes.extend_from_slice(&[7, 9]);
        assert_eq!(decode_pgm(&bytes).unwrap().data(), &[7, 9]);
    }

    #[test]
    fn low_maxval_is_rescaled() {
        let mut bytes = b"P5\n3 1\n15\n".to_vec();
        bytes.extend_from_slice(&[0, 15, 7]);
        assert_eq!(decode_pgm(&bytes).unwrap().data(), &[0, 255, 119]);
        let mut bad = b"P5\n1 1\n15\n".to_vec();
        bad.push(16);
        assert!(matches!(
            decode_pgm(&bad),
            Err(Error::Decode { offset: 10, .. })
        ));
    }

    #[test]
    fn truncated_raster_names_offset() {
        let mut bytes = b"P5\n4 4\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        match decode_pgm(&bytes) {
            Err(Error::Decode { offset, reason }) => {
                assert_eq!(offset, bytes.len());
                assert!(reason.contains("truncated"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_headers() {
        assert!(matches!(
            decode_pgm(b"XX"),
            Err(Error::Decode { offset: 0, .. })
        ));
        assert!(matches!(
            decode_pgm(b"P5\nab"),
            Err(Error::Decode { offset: 3, .. })
        ));
        assert!(matches!(
            decode_pgm(b"P2\n1 1\n255\n0"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n65535\n\0\0"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(decode_pgm(b"P5\n0 1\n255\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let img = GrayImage::from_fn(w, h, |x, y| {
                (seed.wrapping_mul(31).wrapping_add((x * 7 + y * 13) as u64) % 256) as u8
            }).unwrap();
            prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
        }
    }
}
