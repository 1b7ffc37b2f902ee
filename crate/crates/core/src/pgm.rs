//! Binary PGM (P5) images, 8- or 16-bit.
//!
//! Intensities are normalized by the header's maximum sample value, so the
//! decoded image always lies in [0, 1]. 16-bit samples are big-endian per
//! the netpbm convention.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{CoreError, Result};
use crate::image::IntensityMap;

/// Read a binary P5 PGM file into an intensity map in [0, 1].
pub fn read_intensity(path: &Path) -> Result<IntensityMap> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 2];
    r.read_exact(&mut magic)?;
    if &magic != b"P5" {
        return Err(CoreError::UnsupportedFormat(format!(
            "not a binary PGM (magic {:?})",
            String::from_utf8_lossy(&magic)
        )));
    }
    let width = read_header_number(&mut r)?;
    let height = read_header_number(&mut r)?;
    let maxval = read_header_number(&mut r)?;
    if maxval == 0 || maxval > 65535 {
        return Err(CoreError::MalformedHeader(format!(
            "PGM maxval {maxval} out of range"
        )));
    }
    // The single whitespace byte after maxval was already consumed by the
    // header scanner.
    let count = width * height;
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    let mut raw = vec![0u8; count * bytes_per];
    r.read_exact(&mut raw).map_err(|_| CoreError::Truncated {
        expected: count * bytes_per,
        got: raw.len(),
    })?;

    let scale = 1.0 / maxval as f32;
    let mut values = Array2::<f32>::zeros((height, width));
    for (idx, v) in values.iter_mut().enumerate() {
        let sample = if bytes_per == 1 {
            raw[idx] as u32
        } else {
            u16::from_be_bytes([raw[2 * idx], raw[2 * idx + 1]]) as u32
        };
        *v = (sample as f32 * scale).min(1.0);
    }
    IntensityMap::new(values)
}

/// Write an intensity map as a 16-bit binary PGM.
pub fn write_intensity(path: &Path, map: &IntensityMap) -> Result<()> {
    let (h, w) = map.dims();
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{w} {h}\n65535\n")?;
    for v in map.values().iter() {
        let s = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.write_all(&s.to_be_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Write values in [0, 1] as an 8-bit binary PGM (linear map to 0..=255).
pub fn write_gray8(path: &Path, values: ndarray::ArrayView2<'_, f32>) -> Result<()> {
    let (h, w) = values.dim();
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{w} {h}\n255\n")?;
    for v in values.iter() {
        out.write_all(&[(v.clamp(0.0, 1.0) * 255.0).round() as u8])?;
    }
    out.flush()?;
    Ok(())
}

/// Parse one whitespace-delimited unsigned number, skipping `#` comments.
fn read_header_number<R: Read>(r: &mut R) -> Result<usize> {
    let mut byte = [0u8; 1];
    let mut in_comment = false;
    // Skip whitespace and comments.
    loop {
        r.read_exact(&mut byte)?;
        match byte[0] {
            b'#' => in_comment = true,
            b'\n' => in_comment = false,
            b' ' | b'\t' | b'\r' => {}
            _ if in_comment => {}
            _ => break,
        }
    }
    let mut value: usize = 0;
    let mut any = false;
    loop {
        let c = byte[0];
        if c.is_ascii_digit() {
            any = true;
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((c - b'0') as usize))
                .ok_or_else(|| CoreError::MalformedHeader("PGM number overflow".into()))?;
        } else if c.is_ascii_whitespace() {
            break;
        } else {
            return Err(CoreError::MalformedHeader(format!(
                "unexpected byte {c:#x} in PGM header"
            )));
        }
        if r.read(&mut byte)? == 0 {
            break;
        }
    }
    if !any {
        return Err(CoreError::MalformedHeader("missing PGM header field".into()));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("pgm-unit");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn eight_bit_full_scale_reads_as_one() {
        let path = tmp("full.pgm");
        std::fs::write(&path, b"P5\n2 1\n255\n\xff\x00").unwrap();
        let img = read_intensity(&path).unwrap();
        assert_eq!(img.get(0, 0), 1.0);
        assert_eq!(img.get(0, 1), 0.0);
    }

    #[test]
    fn header_comments_are_skipped() {
        let path = tmp("comment.pgm");
        std::fs::write(&path, b"P5\n# made by hand\n1 1\n255\n\x80").unwrap();
        let img = read_intensity(&path).unwrap();
        assert!((img.get(0, 0) - 128.0 / 255.0).abs() < 1e-6);
    }

    #[test]
    fn sixteen_bit_roundtrip() {
        let path = tmp("rt16.pgm");
        let map = IntensityMap::new(array![[0.0f32, 0.25, 0.5], [0.75, 1.0, 0.125]]).unwrap();
        write_intensity(&path, &map).unwrap();
        let back = read_intensity(&path).unwrap();
        for (a, b) in map.values().iter().zip(back.values().iter()) {
            assert!((a - b).abs() < 1.0 / 65535.0);
        }
    }

    #[test]
    fn rejects_ascii_pgm() {
        let path = tmp("ascii.pgm");
        std::fs::write(&path, b"P2\n1 1\n255\n128\n").unwrap();
        assert!(matches!(
            read_intensity(&path),
            Err(CoreError::UnsupportedFormat(_))
        ));
    }
}
