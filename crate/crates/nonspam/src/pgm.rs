//! PGM (portable graymap) reader and writer.
//!
//! Reads 8- and 16-bit grayscale images in both the ASCII (`P2`) and binary
//! (`P5`) encodings; 16-bit binary samples are big-endian per the netpbm
//! convention. Parse failures report the byte offset of the offending input.
//! Output is always binary 8-bit: values are clamped to [0, 255] and rounded
//! half-up at write time only.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::Image;
use crate::spatial::PixelGrid;

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.display().to_string(),
            offset: self.pos,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.data.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    /// Skip whitespace and `#` comments (comments run to end of line).
    fn skip_separators(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.pos += 1;
                }
                Some(b'#') => {
                    while let Some(b) = self.bump() {
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<u32> {
        self.skip_separators();
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(b) = self.peek() {
            if !b.is_ascii_digit() {
                break;
            }
            value = value * 10 + (b - b'0') as u64;
            if value > u32::MAX as u64 {
                return Err(self.fail(format!("{what} overflows")));
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.fail(format!("expected {what}, found {}", describe(self.peek()))));
        }
        Ok(value as u32)
    }
}

fn describe(byte: Option<u8>) -> String {
    match byte {
        None => "end of file".to_string(),
        Some(b) if b.is_ascii_graphic() => format!("'{}'", b as char),
        Some(b) => format!("byte 0x{b:02X}"),
    }
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    let data = fs::read(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut cur = Cursor { data: &data, pos: 0, path };

    let binary = match (cur.bump(), cur.bump()) {
        (Some(b'P'), Some(b'5')) => true,
        (Some(b'P'), Some(b'2')) => false,
        (Some(b'P'), Some(other)) => {
            cur.pos -= 1;
            return Err(cur.fail(format!(
                "unsupported netpbm format P{}; only grayscale P2/P5 are accepted",
                other as char
            )));
        }
        _ => {
            cur.pos = 0;
            return Err(cur.fail("missing PGM magic (expected \"P2\" or \"P5\")"));
        }
    };

    let width = cur.read_uint("width")? as usize;
    let height = cur.read_uint("height")? as usize;
    let maxval = cur.read_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(cur.fail(format!("degenerate dimensions {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(cur.fail(format!("maxval {maxval} outside 1..=65535")));
    }

    let n = width * height;
    let mut pixels = Vec::with_capacity(n);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        match cur.bump() {
            Some(b) if b.is_ascii_whitespace() => {}
            other => return Err(cur.fail(format!(
                "expected single whitespace before raster, found {}",
                describe(other)
            ))),
        }
        let wide = maxval > 255;
        let bytes_needed = n * if wide { 2 } else { 1 };
        let available = cur.data.len() - cur.pos;
        if available < bytes_needed {
            cur.pos = cur.data.len();
            return Err(cur.fail(format!(
                "raster truncated: need {bytes_needed} bytes, have {available}"
            )));
        }
        for _ in 0..n {
            let v = if wide {
                let hi = cur.bump().unwrap() as u32;
                let lo = cur.bump().unwrap() as u32;
                (hi << 8) | lo
            } else {
                cur.bump().unwrap() as u32
            };
            if v > maxval {
                cur.pos -= if wide { 2 } else { 1 };
                return Err(cur.fail(format!("sample {v} exceeds maxval {maxval}")));
            }
            pixels.push(v as f64);
        }
        if cur.pos != data.len() {
            return Err(cur.fail("trailing bytes after raster"));
        }
    } else {
        for _ in 0..n {
            let v = cur.read_uint("pixel value")?;
            if v > maxval {
                return Err(cur.fail(format!("sample {v} exceeds maxval {maxval}")));
            }
            pixels.push(v as f64);
        }
        cur.skip_separators();
        if cur.pos != data.len() {
            return Err(cur.fail("trailing content after raster"));
        }
    }

    let grid = PixelGrid::new(height, width)?;
    Image::new(grid, pixels)
}

/// Write binary 8-bit PGM. Metrics are computed on unclamped values; clamping
/// and half-up rounding happen here only.
pub fn write_pgm(path: &Path, image: &Image) -> Result<()> {
    let wrap = |e| Error::Io { path: path.display().to_string(), source: e };
    let mut out = Vec::with_capacity(15 + image.grid.n());
    out.extend_from_slice(format!("P5\n{} {}\n255\n", image.grid.cols, image.grid.rows).as_bytes());
    for &v in &image.pixels {
        let clamped = v.clamp(0.0, 255.0);
        out.push((clamped + 0.5).floor() as u8);
    }
    fs::write(path, out).map_err(wrap)
}
