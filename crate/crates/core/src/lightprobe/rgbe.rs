//! Radiance RGBE (`.hdr`) reading and writing.
//!
//! Decoding follows `(mantissa + 0.5) / 256 · 2^(exponent − 128)`, with an
//! all-zero exponent meaning black. Scanlines may be flat, old-style RLE or
//! new-style per-channel RLE.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::RadianceMap;
use crate::error::{Error, Result};

pub fn load_hdr(path: impl AsRef<Path>) -> Result<RadianceMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_hdr(&bytes, path)
}

/// Decodes one RGBE pixel.
#[inline]
pub fn rgbe_to_rgb(p: [u8; 4]) -> [f32; 3] {
    if p[3] == 0 {
        return [0.0; 3];
    }
    let scale = (f32::from(p[3]) - 128.0).exp2() / 256.0;
    [
        (f32::from(p[0]) + 0.5) * scale,
        (f32::from(p[1]) + 0.5) * scale,
        (f32::from(p[2]) + 0.5) * scale,
    ]
}

/// Encodes a linear RGB triple; the decoder reconstructs each channel to
/// within half a mantissa step.
pub fn rgb_to_rgbe(c: [f32; 3]) -> [u8; 4] {
    let v = c[0].max(c[1]).max(c[2]);
    if v.is_nan() || v < 1e-32 {
        return [0; 4];
    }
    let mut e = v.log2().floor() as i32 + 1;
    // keep max mantissa in [128, 256)
    if v / (e as f32).exp2() >= 1.0 {
        e += 1;
    }
    if v / (e as f32).exp2() < 0.5 {
        e -= 1;
    }
    let e = e.clamp(-128, 127);
    let scale = 256.0 / (e as f32).exp2();
    let m = |x: f32| (x.max(0.0) * scale).floor().min(255.0) as u8;
    [m(c[0]), m(c[1]), m(c[2]), (e + 128) as u8]
}

fn truncated(path: &Path, what: &str, offset: usize) -> Error {
    Error::io(
        path,
        io::Error::new(
            io::ErrorKind::UnexpectedEof,
            format!("truncated {what} at byte offset {offset}"),
        ),
    )
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn line(&mut self) -> Option<&str> {
        let rest = &self.bytes[self.pos..];
        let end = rest.iter().position(|&b| b == b'\n')?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end]).ok().map(|s| s.trim_end_matches('\r'))
    }
}

pub fn decode_hdr(bytes: &[u8], path: &Path) -> Result<RadianceMap> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.line().unwrap_or_default();
    if !magic.starts_with("#?RADIANCE") {
        return Err(Error::Format(format!(
            "{}: missing #?RADIANCE signature",
            path.display()
        )));
    }
    loop {
        let line = cur
            .line()
            .ok_or_else(|| Error::Format(format!("{}: unterminated header", path.display())))?;
        if line.is_empty() {
            break;
        }
        if let Some(fmt) = line.strip_prefix("FORMAT=") {
            if fmt.trim() != "32-bit_rle_rgbe" {
                return Err(Error::Format(format!("{}: unsupported FORMAT={fmt}", path.display())));
            }
        }
    }
    let res = cur
        .line()
        .ok_or_else(|| Error::Format(format!("{}: missing resolution line", path.display())))?;
    let (height, width) = parse_resolution(res)
        .ok_or_else(|| Error::Format(format!("{}: unsupported resolution line `{res}`", path.display())))?;

    let mut pixels = Vec::with_capacity(width * height);
    let mut scan = vec![[0u8; 4]; width];
    let mut pos = cur.pos;
    for y in 0..height {
        pos = read_scanline(bytes, pos, &mut scan, path).map_err(|e| match e {
            ScanError::Eof(off) => truncated(path, &format!("scanline {y}"), off),
            ScanError::Bad(msg) => Error::Format(format!("{}: scanline {y}: {msg}", path.display())),
        })?;
        pixels.extend(scan.iter().map(|&p| rgbe_to_rgb(p)));
    }
    RadianceMap::new(width, height, pixels)
}

fn parse_resolution(line: &str) -> Option<(usize, usize)> {
    let f: Vec<&str> = line.split_whitespace().collect();
    match f.as_slice() {
        ["-Y", h, "+X", w] => {
            let (h, w) = (h.parse().ok()?, w.parse().ok()?);
            (h > 0 && w > 0).then_some((h, w))
        }
        _ => None,
    }
}

enum ScanError {
    Eof(usize),
    Bad(&'static str),
}

fn byte(bytes: &[u8], pos: usize) -> Result<u8, ScanError> {
    bytes.get(pos).copied().ok_or(ScanError::Eof(pos))
}

fn read_scanline(bytes: &[u8], mut pos: usize, out: &mut [[u8; 4]], _path: &Path) -> Result<usize, ScanError> {
    let width = out.len();
    let head = bytes.get(pos..pos + 4);
    let is_new_rle = matches!(head, Some([2, 2, hi, _]) if hi & 0x80 == 0) && (8..=0x7fff).contains(&width);
    if is_new_rle {
        let head = head.unwrap();
        if (usize::from(head[2]) << 8 | usize::from(head[3])) != width {
            return Err(ScanError::Bad("RLE scanline width mismatch"));
        }
        pos += 4;
        for ch in 0..4 {
            let mut x = 0;
            while x < width {
                let count = byte(bytes, pos)?;
                pos += 1;
                if count > 128 {
                    let run = usize::from(count - 128);
                    if x + run > width {
                        return Err(ScanError::Bad("RLE run overflows scanline"));
                    }
                    let v = byte(bytes, pos)?;
                    pos += 1;
                    for p in &mut out[x..x + run] {
                        p[ch] = v;
                    }
                    x += run;
                } else {
                    let n = usize::from(count);
                    if n == 0 || x + n > width {
                        return Err(ScanError::Bad("bad RLE literal count"));
                    }
                    for p in &mut out[x..x + n] {
                        p[ch] = byte(bytes, pos)?;
                        pos += 1;
                    }
                    x += n;
                }
            }
        }
        return Ok(pos);
    }

    // flat pixels, possibly with old-style (1,1,1,n) repeat markers
    let mut x = 0;
    let mut shift = 0;
    while x < width {
        let p = bytes.get(pos..pos + 4).ok_or(ScanError::Eof(bytes.len().min(pos)))?;
        pos += 4;
        let p = [p[0], p[1], p[2], p[3]];
        if p[0] == 1 && p[1] == 1 && p[2] == 1 {
            if x == 0 {
                return Err(ScanError::Bad("repeat marker at scanline start"));
            }
            let count = usize::from(p[3]) << shift;
            if x + count > width {
                return Err(ScanError::Bad("repeat overflows scanline"));
            }
            let prev = out[x - 1];
            for q in &mut out[x..x + count] {
                *q = prev;
            }
            x += count;
            shift += 8;
        } else {
            out[x] = p;
            x += 1;
            shift = 0;
        }
    }
    Ok(pos)
}

/// Writes a flat (uncompressed) RGBE file.
pub fn write_hdr(path: impl AsRef<Path>, map: &RadianceMap) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(64 + map.pixels.len() * 4);
    encode_header(&mut out, map.width, map.height);
    for p in &map.pixels {
        out.extend_from_slice(&rgb_to_rgbe(*p));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_header(out: &mut Vec<u8>, width: usize, height: usize) {
    let _ = write!(out, "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {height} +X {width}\n");
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(width: usize, height: usize, body: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        encode_header(&mut out, width, height);
        out.extend_from_slice(body);
        out
    }

    /// New-style RLE encoder (runs where possible, literals otherwise).
    fn rle_scanline(px: &[[u8; 4]]) -> Vec<u8> {
        let w = px.len();
        let mut out = vec![2, 2, (w >> 8) as u8, (w & 0xff) as u8];
        for ch in 0..4 {
            let data: Vec<u8> = px.iter().map(|p| p[ch]).collect();
            let mut i = 0;
            while i < w {
                let mut run = 1;
                while i + run < w && run < 127 && data[i + run] == data[i] {
                    run += 1;
                }
                if run >= 3 {
                    out.push(128 + run as u8);
                    out.push(data[i]);
                    i += run;
                } else {
                    let n = (w - i).min(128).min(2);
                    out.push(n as u8);
                    out.extend_from_slice(&data[i..i + n]);
                    i += n;
                }
            }
        }
        out
    }

    #[test]
    fn decode_formula() {
        let m = decode_hdr(
            &file(2, 1, &[128, 128, 128, 129, 128, 128, 128, 129]),
            Path::new("a.hdr"),
        )
        .unwrap();
        assert_eq!((m.width, m.height), (2, 1));
        for p in &m.pixels {
            for c in p {
                assert!((c - (1.0 + 1.0 / 256.0)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn zero_exponent_is_black() {
        assert_eq!(rgbe_to_rgb([0, 0, 0, 0]), [0.0; 3]);
        assert_eq!(rgbe_to_rgb([200, 10, 3, 0]), [0.0; 3]);
    }

    #[test]
    fn missing_signature_is_format_error() {
        let bytes = b"#?NOTRADIANCE\n\n-Y 1 +X 1\n\x80\x80\x80\x81";
        assert!(matches!(decode_hdr(bytes, Path::new("a.hdr")), Err(Error::Format(_))));
    }

    #[test]
    fn unsupported_orientation_and_format() {
        let bytes = b"#?RADIANCE\n\n+Y 1 +X 1\n\x80\x80\x80\x81";
        assert!(matches!(decode_hdr(bytes, Path::new("a.hdr")), Err(Error::Format(_))));
        let bytes = b"#?RADIANCE\nFORMAT=32-bit_rle_xyze\n\n-Y 1 +X 1\n\x80\x80\x80\x81";
        assert!(matches!(decode_hdr(bytes, Path::new("a.hdr")), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_scanline_reports_offset() {
        let bytes = file(2, 2, &[128, 128, 128, 129, 128, 128, 128, 129, 1, 2]);
        match decode_hdr(&bytes, Path::new("t.hdr")) {
            Err(Error::Io { source, .. }) => {
                assert_eq!(source.kind(), io::ErrorKind::UnexpectedEof);
                assert!(source.to_string().contains("scanline 1"));
                assert!(source.to_string().contains("offset"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rle_and_flat_agree() {
        let w = 37;
        let rows: Vec<Vec<[u8; 4]>> = (0..3)
            .map(|y| {
                (0..w)
                    .map(|x| [(x * 7 % 5) as u8 * 40, y as u8 * 50, 100, 128 + (x / 10) as u8])
                    .collect()
            })
            .collect();
        let flat: Vec<u8> = rows.iter().flatten().flatten().copied().collect();
        let rle: Vec<u8> = rows.iter().flat_map(|r| rle_scanline(r)).collect();
        assert!(rle.len() < flat.len());
        let a = decode_hdr(&file(w, 3, &flat), Path::new("f")).unwrap();
        let b = decode_hdr(&file(w, 3, &rle), Path::new("r")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pixels[0], rgbe_to_rgb(rows[0][0]));
    }

    #[test]
    fn old_style_repeat() {
        let body = [128, 0, 0, 129, 1, 1, 1, 3];
        let m = decode_hdr(&file(4, 1, &body), Path::new("o")).unwrap();
        assert!(m.pixels.iter().all(|p| *p == m.pixels[0]));
    }

    #[test]
    fn encode_decode_is_close() {
        for &c in &[
            [1.0f32, 0.5, 0.25],
            [123.0, 0.001, 7.5],
            [0.0, 0.0, 0.0],
            [1e-3, 2e-3, 0.0],
        ] {
            let back = rgbe_to_rgb(rgb_to_rgbe(c));
            let max = c[0].max(c[1]).max(c[2]);
            for (a, b) in c.iter().zip(back) {
                assert!((a - b).abs() <= max / 128.0 + 1e-30, "{c:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.hdr");
        let map = RadianceMap::new(3, 2, vec![[0.25, 1.0, 4.0]; 6]).unwrap();
        write_hdr(&p, &map).unwrap();
        let back = load_hdr(&p).unwrap();
        // shared exponent: every channel is within half a step of the brightest one's scale
        for (a, b) in map.pixels.iter().zip(&back.pixels) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 4.0 / 128.0);
            }
        }
    }
}
