//! PFM (portable float map) depth images, single channel.
//!
//! Standard `Pf` layout: a dims line, a scale line whose sign encodes
//! endianness (negative = little-endian), then f32 scanlines stored
//! bottom-to-top.
//!
//! Decoded maps are cleaned for network use: NaN/Inf pixels are replaced by
//! the median of their finite 3x3 neighbours (one pass over the original
//! data); pixels with no finite neighbour stay invalid. Maps whose finite
//! values fall outside [0, 1] are rescaled affinely onto [0, 1].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{CoreError, Result};
use crate::image::DepthMap;

/// Read a single-channel PFM as a depth map.
pub fn read_depth(path: &Path) -> Result<DepthMap> {
    let (raw, _) = read_raw(path)?;
    let (values, valid) = repair_nonfinite(&raw);
    let values = rescale_to_unit(values, &valid);
    DepthMap::new(values, valid)
}

/// Write a depth map as a little-endian single-channel PFM.
pub fn write_depth(path: &Path, map: &DepthMap) -> Result<()> {
    write_raw(path, map.values())
}

/// Write a raw f32 image as a little-endian single-channel PFM.
pub fn write_raw(path: &Path, values: ndarray::ArrayView2<'_, f32>) -> Result<()> {
    let (h, w) = values.dim();
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "Pf\n{w} {h}\n-1.0\n")?;
    // Scanlines run bottom-to-top.
    for i in (0..h).rev() {
        for j in 0..w {
            out.write_all(&values[[i, j]].to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Read a single-channel PFM without any cleaning; returns values (top-down)
/// and the file's scale magnitude.
pub fn read_raw(path: &Path) -> Result<(Array2<f32>, f32)> {
    let mut r = BufReader::new(File::open(path)?);

    let magic = read_line_trimmed(&mut r)?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => {
            return Err(CoreError::UnsupportedFormat(
                "color PFM not supported, expected single-channel Pf".into(),
            ))
        }
        other => {
            return Err(CoreError::UnsupportedFormat(format!(
                "not a PFM (magic {other:?})"
            )))
        }
    }

    let dims_line = read_line_trimmed(&mut r)?;
    let mut parts = dims_line.split_whitespace();
    let w: usize = parse_field(parts.next(), "width")?;
    let h: usize = parse_field(parts.next(), "height")?;

    let scale_line = read_line_trimmed(&mut r)?;
    let scale: f32 = scale_line
        .parse()
        .map_err(|_| CoreError::MalformedHeader(format!("bad PFM scale {scale_line:?}")))?;
    let little_endian = scale < 0.0;

    let count = w * h;
    let mut bytes = vec![0u8; count * 4];
    r.read_exact(&mut bytes).map_err(|_| CoreError::Truncated {
        expected: count * 4,
        got: 0,
    })?;

    let mut values = Array2::<f32>::zeros((h, w));
    for (idx, chunk) in bytes.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        // Undo the bottom-up scanline order.
        let row = h - 1 - idx / w;
        let col = idx % w;
        values[[row, col]] = v;
    }
    Ok((values, scale.abs()))
}

/// Replace NaN/Inf pixels by the median of finite values in their 3x3
/// neighbourhood of the original image. Returns the repaired values and a
/// mask that is false only where no finite neighbour existed.
fn repair_nonfinite(raw: &Array2<f32>) -> (Array2<f32>, Array2<bool>) {
    let (h, w) = raw.dim();
    let mut values = raw.clone();
    let mut valid = Array2::from_elem((h, w), true);
    for i in 0..h {
        for j in 0..w {
            if raw[[i, j]].is_finite() {
                continue;
            }
            let mut neigh: Vec<f32> = Vec::with_capacity(8);
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= h as i64 || nj >= w as i64 {
                        continue;
                    }
                    let v = raw[[ni as usize, nj as usize]];
                    if v.is_finite() {
                        neigh.push(v);
                    }
                }
            }
            if neigh.is_empty() {
                values[[i, j]] = 0.0;
                valid[[i, j]] = false;
            } else {
                neigh.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = neigh.len();
                values[[i, j]] = if n % 2 == 1 {
                    neigh[n / 2]
                } else {
                    0.5 * (neigh[n / 2 - 1] + neigh[n / 2])
                };
            }
        }
    }
    (values, valid)
}

/// Map finite values affinely onto [0, 1] when they fall outside it;
/// in-range data is returned untouched.
fn rescale_to_unit(mut values: Array2<f32>, valid: &Array2<bool>) -> Array2<f32> {
    let mut lo = f32::INFINITY;
    let mut hi = f32::NEG_INFINITY;
    for (v, &ok) in values.iter().zip(valid.iter()) {
        if ok {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !lo.is_finite() || (lo >= 0.0 && hi <= 1.0) {
        return values;
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    for (v, &ok) in values.iter_mut().zip(valid.iter()) {
        if ok {
            *v = ((*v - lo) / span).clamp(0.0, 1.0);
        }
    }
    values
}

fn read_line_trimmed<R: BufRead>(r: &mut R) -> Result<String> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(CoreError::MalformedHeader("unexpected end of PFM header".into()));
    }
    Ok(line.trim().to_string())
}

fn parse_field(field: Option<&str>, name: &str) -> Result<usize> {
    field
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CoreError::MalformedHeader(format!("bad PFM {name}")))
}
