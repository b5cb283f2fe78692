//! Binary PPM (P6) images with 8-bit channels.

use std::path::Path;

use crate::error::{CliError, Result};

/// `[0, 1] → 0..=255`, rounding half up; values outside the range saturate.
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn encode(width: u32, height: u32, pixels: &[[f64; 3]]) -> Vec<u8> {
    assert_eq!(pixels.len(), width as usize * height as usize);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(pixels.len() * 3);
    for p in pixels {
        out.extend(p.iter().map(|&c| quantize(c)));
    }
    out
}

/// Decoded image with channels scaled back to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PpmImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[f32; 3]>,
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

pub fn decode(bytes: &[u8]) -> std::result::Result<PpmImage, String> {
    let mut pos = 0;
    if header_token(bytes, &mut pos) != Some(b"P6") {
        return Err("not a binary PPM (P6) file".into());
    }
    let mut num = |what: &str| -> std::result::Result<u32, String> {
        header_token(bytes, &mut pos)
            .and_then(|t| std::str::from_utf8(t).ok())
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format!("bad PPM {what}"))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maximum value")?;
    if maxval != 255 {
        return Err(format!("unsupported PPM maximum value {maxval}"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let start = pos + 1;
    let n = width as usize * height as usize;
    if bytes.len() != start + 3 * n {
        return Err(format!("expected {} raster bytes, found {}", 3 * n, bytes.len().saturating_sub(start)));
    }
    let pixels = bytes[start..]
        .chunks_exact(3)
        .map(|c| [c[0] as f32 / 255.0, c[1] as f32 / 255.0, c[2] as f32 / 255.0])
        .collect();
    Ok(PpmImage { width, height, pixels })
}

pub fn write(path: &Path, width: u32, height: u32, pixels: &[[f64; 3]]) -> Result<()> {
    std::fs::write(path, encode(width, height, pixels)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<PpmImage> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|m| CliError::format(path, m))
}
