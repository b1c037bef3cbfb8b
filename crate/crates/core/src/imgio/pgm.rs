use crate::error::{Error, FormatError, Result};
use crate::image::{BinaryMask, GrayImage};

/// Decodes a binary ("P5") PGM. Samples wider than 8 bits (maxval > 255) are
/// two-byte big-endian. Trailing bytes after the payload are ignored.
pub fn load_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, FormatError> {
    let (header, samples) = decode(bytes)?;
    let values = samples.into_iter().map(f64::from).collect();
    Ok(GrayImage::new(header.width, header.height, values)
        .expect("header dimensions validated during decode"))
}

/// Decodes a PGM as a mask: 0 is background, any nonzero sample foreground.
pub fn load_pgm_mask(bytes: &[u8]) -> std::result::Result<BinaryMask, FormatError> {
    let (header, samples) = decode(bytes)?;
    Ok(
        BinaryMask::from_levels(header.width, header.height, &samples)
            .expect("header dimensions validated during decode"),
    )
}

/// Encodes samples as a binary PGM with the given maxval.
pub fn encode_pgm(width: usize, height: usize, maxval: u16, samples: &[u16]) -> Result<Vec<u8>> {
    if width == 0 || height == 0 || width.checked_mul(height) != Some(samples.len()) {
        return Err(Error::InvalidParams(format!(
            "{} samples do not fill a {width}x{height} PGM",
            samples.len()
        )));
    }
    if maxval == 0 {
        return Err(Error::OutOfRange {
            what: "maxval",
            value: 0.0,
        });
    }
    if let Some(&bad) = samples.iter().find(|&&s| s > maxval) {
        return Err(Error::OutOfRange {
            what: "PGM sample",
            value: f64::from(bad),
        });
    }
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    if maxval > 255 {
        out.reserve(samples.len() * 2);
        for s in samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(samples.iter().map(|&s| s as u8));
    }
    Ok(out)
}

/// Encodes a mask as an 8-bit PGM with foreground 255.
pub fn encode_mask_pgm(mask: &BinaryMask) -> Vec<u8> {
    let samples: Vec<u16> = mask
        .values()
        .iter()
        .map(|&v| if v { 255 } else { 0 })
        .collect();
    encode_pgm(mask.width(), mask.height(), 255, &samples).expect("mask dimensions are valid")
}

struct Header {
    width: usize,
    height: usize,
}

fn decode(bytes: &[u8]) -> std::result::Result<(Header, Vec<u16>), FormatError> {
    if bytes.len() < 2 {
        return Err(FormatError::Truncated {
            offset: 0,
            needed: 2,
            available: bytes.len(),
        });
    }
    if &bytes[..2] != b"P5" {
        return Err(FormatError::UnsupportedMagic {
            offset: 0,
            found: String::from_utf8_lossy(&bytes[..2]).into_owned(),
        });
    }
    let mut cursor = Cursor { bytes, pos: 2 };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval_at = cursor.skip_space()?;
    let maxval = cursor.number("maxval")?;
    let maxval = u32::try_from(maxval).unwrap_or(u32::MAX);
    if width == 0 || height == 0 {
        return Err(FormatError::MalformedHeader {
            offset: 2,
            reason: format!("zero dimension {width}x{height}"),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(FormatError::MaxvalOutOfRange {
            offset: maxval_at,
            value: u64::from(maxval),
        });
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        Some(_) => {
            return Err(FormatError::MalformedHeader {
                offset: cursor.pos,
                reason: "expected whitespace after maxval".into(),
            })
        }
        None => {
            return Err(FormatError::Truncated {
                offset: cursor.pos,
                needed: 1,
                available: 0,
            })
        }
    }
    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let count = (width as usize)
        .checked_mul(height as usize)
        .filter(|n| n.checked_mul(bytes_per_sample).is_some())
        .ok_or_else(|| FormatError::MalformedHeader {
            offset: 2,
            reason: "image too large".into(),
        })?;
    let needed = count * bytes_per_sample;
    let payload = &bytes[cursor.pos..];
    if payload.len() < needed {
        return Err(FormatError::Truncated {
            offset: cursor.pos,
            needed,
            available: payload.len(),
        });
    }
    let payload = &payload[..needed];
    let samples: Vec<u16> = if bytes_per_sample == 2 {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        payload.iter().map(|&b| u16::from(b)).collect()
    };
    if let Some(pos) = samples.iter().position(|&s| u32::from(s) > maxval) {
        return Err(FormatError::MalformedHeader {
            offset: cursor.pos + pos * bytes_per_sample,
            reason: format!("sample {} exceeds maxval {maxval}", samples[pos]),
        });
    }
    Ok((
        Header {
            width: width as usize,
            height: height as usize,
        },
        samples,
    ))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    /// Skips whitespace and `#` comments; returns the offset of the next token.
    fn skip_space(&mut self) -> std::result::Result<usize, FormatError> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                Some(_) => return Ok(self.pos),
                None => {
                    return Err(FormatError::Truncated {
                        offset: self.pos,
                        needed: 1,
                        available: 0,
                    })
                }
            }
        }
    }

    fn number(&mut self, field: &str) -> std::result::Result<u64, FormatError> {
        let start = self.skip_space()?;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .filter(|&v| v <= u64::from(u32::MAX))
                .ok_or_else(|| FormatError::MalformedHeader {
                    offset: start,
                    reason: format!("{field} too large"),
                })?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(FormatError::MalformedHeader {
                offset: start,
                reason: format!("expected decimal {field}"),
            });
        }
        Ok(value)
    }
}
