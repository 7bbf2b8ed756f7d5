//! Portable graymap (P2/P5) decoding.

use std::fmt;

use thiserror::Error;

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// Returns `None` if either dimension is zero or the pixel count does not
    /// match.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Option<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return None;
        }
        Some(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Encodes as binary P5 with maxval 255.
    pub fn to_pgm_p5(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PgmErrorKind {
    UnsupportedMagic(String),
    BadHeader(&'static str),
    ZeroDimension,
    MaxvalOutOfRange(u32),
    SampleAboveMaxval { value: u32, maxval: u32 },
    Truncated { expected: usize, got: usize },
}

impl fmt::Display for PgmErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PgmErrorKind::UnsupportedMagic(m) => write!(f, "unsupported magic {m:?}"),
            PgmErrorKind::BadHeader(what) => write!(f, "malformed header: {what}"),
            PgmErrorKind::ZeroDimension => f.write_str("zero width or height"),
            PgmErrorKind::MaxvalOutOfRange(v) => write!(f, "maxval {v} outside 1..=255"),
            PgmErrorKind::SampleAboveMaxval { value, maxval } => {
                write!(f, "sample {value} exceeds maxval {maxval}")
            }
            PgmErrorKind::Truncated { expected, got } => {
                write!(f, "truncated payload: expected {expected} samples, got {got}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("PGM parse error at byte {offset}: {kind}")]
pub struct PgmError {
    pub offset: usize,
    pub kind: PgmErrorKind,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, kind: PgmErrorKind) -> PgmError {
        PgmError {
            offset: self.pos,
            kind,
        }
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// Reads an unsigned decimal token; `None` at end of input.
    fn uint(&mut self, what: &'static str) -> Result<Option<u32>, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as u32))
                .ok_or_else(|| self.err(PgmErrorKind::BadHeader(what)))?;
            self.pos += 1;
        }
        if self.pos == start {
            if self.pos >= self.bytes.len() {
                return Ok(None);
            }
            return Err(self.err(PgmErrorKind::BadHeader(what)));
        }
        if let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_whitespace() && b != b'#' {
                return Err(self.err(PgmErrorKind::BadHeader(what)));
            }
        }
        Ok(Some(value))
    }

    fn header_uint(&mut self, what: &'static str) -> Result<u32, PgmError> {
        self.uint(what)?
            .ok_or_else(|| self.err(PgmErrorKind::BadHeader(what)))
    }
}

fn rescale(value: u32, maxval: u32) -> u8 {
    if maxval == 255 {
        value as u8
    } else {
        // round(v * 255 / maxval), halves rounded up
        ((2 * value * 255 + maxval) / (2 * maxval)) as u8
    }
}

/// Decodes a P2 (plain) or P5 (raw) graymap with maxval at most 255.
///
/// Images with a smaller maxval are rescaled to the full `0..=255` range.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage, PgmError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = bytes.get(..2).unwrap_or(bytes);
    let plain = match magic {
        b"P2" => true,
        b"P5" => false,
        other => {
            return Err(cur.err(PgmErrorKind::UnsupportedMagic(
                String::from_utf8_lossy(other).into_owned(),
            )))
        }
    };
    cur.pos = 2;
    match bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        _ => return Err(cur.err(PgmErrorKind::BadHeader("magic must be followed by whitespace"))),
    }
    let width = cur.header_uint("width")? as usize;
    let height = cur.header_uint("height")? as usize;
    if width == 0 || height == 0 {
        return Err(cur.err(PgmErrorKind::ZeroDimension));
    }
    cur.skip_space_and_comments();
    let maxval_at = cur.pos;
    let maxval = cur.header_uint("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(PgmError {
            offset: maxval_at,
            kind: PgmErrorKind::MaxvalOutOfRange(maxval),
        });
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| cur.err(PgmErrorKind::BadHeader("dimensions overflow")))?;

    let mut pixels = Vec::with_capacity(n);
    if plain {
        while pixels.len() < n {
            cur.skip_space_and_comments();
            let at = cur.pos;
            match cur.uint("sample")? {
                Some(v) if v > maxval => {
                    return Err(PgmError {
                        offset: at,
                        kind: PgmErrorKind::SampleAboveMaxval { value: v, maxval },
                    })
                }
                Some(v) => pixels.push(rescale(v, maxval)),
                None => {
                    return Err(cur.err(PgmErrorKind::Truncated {
                        expected: n,
                        got: pixels.len(),
                    }))
                }
            }
        }
    } else {
        // exactly one whitespace byte separates maxval from the raster
        if cur.pos >= bytes.len() {
            return Err(cur.err(PgmErrorKind::Truncated {
                expected: n,
                got: 0,
            }));
        }
        cur.pos += 1;
        let payload = &bytes[cur.pos..];
        if payload.len() < n {
            return Err(PgmError {
                offset: bytes.len(),
                kind: PgmErrorKind::Truncated {
                    expected: n,
                    got: payload.len(),
                },
            });
        }
        for (i, &b) in payload[..n].iter().enumerate() {
            if b as u32 > maxval {
                return Err(PgmError {
                    offset: cur.pos + i,
                    kind: PgmErrorKind::SampleAboveMaxval {
                        value: b as u32,
                        maxval,
                    },
                });
            }
            pixels.push(rescale(b as u32, maxval));
        }
    }
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_one_pixel() {
        let img = load_pgm(b"P2 1 1 255\n7\n").unwrap();
        assert_eq!((img.width(), img.height()), (1, 1));
        assert_eq!(img.pixels(), &[7]);
    }

    #[test]
    fn raw_two_by_two_matches_byte_oracle() {
        // header bytes spelled out by hand, then the four raster bytes
        let mut bytes = vec![b'P', b'5', b'\n', b'2', b' ', b'2', b'\n', b'2', b'5', b'5', b'\n'];
        bytes.extend_from_slice(&[10, 20, 30, 40]);
        let img = load_pgm(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[10, 20, 30, 40]);
    }

    #[test]
    fn raw_payload_may_contain_whitespace_bytes() {
        let mut bytes = b"P5 3 1 255 ".to_vec();
        bytes.extend_from_slice(&[b'\n', b' ', b'#']);
        let img = load_pgm(&bytes).unwrap();
        assert_eq!(img.pixels(), &[b'\n', b' ', b'#']);
    }

    #[test]
    fn color_magic_is_rejected() {
        let err = load_pgm(b"P6 1 1 255\n\x00\x00\x00").unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(matches!(err.kind, PgmErrorKind::UnsupportedMagic(ref m) if m == "P6"));
    }

    #[test]
    fn comments_in_header() {
        let img = load_pgm(b"P2\n# made by hand\n2 # width\n1\n# max\n255\n1 2\n").unwrap();
        assert_eq!(img.pixels(), &[1, 2]);
    }

    #[test]
    fn small_maxval_rescales() {
        let img = load_pgm(b"P2 4 1 3\n0 1 2 3\n").unwrap();
        // 85, 170 exactly; 255 * 1/3 = 85
        assert_eq!(img.pixels(), &[0, 85, 170, 255]);
        let img = load_pgm(b"P2 2 1 2\n1 2\n").unwrap();
        // 127.5 rounds up
        assert_eq!(img.pixels(), &[128, 255]);
    }

    #[test]
    fn maxval_above_255_is_rejected() {
        let err = load_pgm(b"P2 1 1 65535\n7\n").unwrap_err();
        assert_eq!(err.kind, PgmErrorKind::MaxvalOutOfRange(65535));
        assert_eq!(err.offset, 7);
    }

    #[test]
    fn truncated_payloads() {
        let err = load_pgm(b"P5 2 2 255\n\x01\x02").unwrap_err();
        assert!(matches!(
            err.kind,
            PgmErrorKind::Truncated {
                expected: 4,
                got: 2
            }
        ));
        let err = load_pgm(b"P2 2 2 255\n1 2 3").unwrap_err();
        assert!(matches!(
            err.kind,
            PgmErrorKind::Truncated {
                expected: 4,
                got: 3
            }
        ));
    }

    #[test]
    fn malformed_headers() {
        assert!(load_pgm(b"P2 x 1 255\n1").is_err());
        assert!(load_pgm(b"P2 0 1 255\n").is_err());
        assert!(load_pgm(b"P2").is_err());
        assert!(load_pgm(b"").is_err());
        assert!(load_pgm(b"P21 1 255 7").is_err());
        let err = load_pgm(b"P2 1 1 9\n10\n").unwrap_err();
        assert_eq!(err.offset, 9);
    }

    #[test]
    fn p5_round_trip() {
        let img = GrayImage::new(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap();
        assert_eq!(load_pgm(&img.to_pgm_p5()).unwrap(), img);
    }
}
