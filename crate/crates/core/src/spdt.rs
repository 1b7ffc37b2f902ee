//! SPDT binary tensor container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SPDT"
//! 4       2     version (u16, = 1)
//! 6       1     dtype   (u8: 0 = f32, 1 = u32)
//! 7       1     ndim    (u8)
//! 8       8     reserved, zero
//! 16      8*n   extents (u64 each), row-major order
//! 16+8n   ...   payload, row-major
//! ```
//!
//! The 16-byte fixed prefix keeps the extents and payload 8-byte aligned.
//! Round-trips are bit-exact for both payload types.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};

pub const MAGIC: [u8; 4] = *b"SPDT";
pub const VERSION: u16 = 1;

const DTYPE_F32: u8 = 0;
const DTYPE_U32: u8 = 1;

/// Tensor payload of one of the two supported element types.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    F32(Vec<f32>),
    U32(Vec<u32>),
}

impl Payload {
    pub fn len(&self) -> usize {
        match self {
            Payload::F32(v) => v.len(),
            Payload::U32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dtype_tag(&self) -> u8 {
        match self {
            Payload::F32(_) => DTYPE_F32,
            Payload::U32(_) => DTYPE_U32,
        }
    }

    fn dtype_name(&self) -> &'static str {
        match self {
            Payload::F32(_) => "f32",
            Payload::U32(_) => "u32",
        }
    }
}

/// Write `payload` with shape `dims` to `path`.
pub fn write(path: &Path, dims: &[usize], payload: &Payload) -> Result<()> {
    let count: usize = dims.iter().product();
    if count != payload.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "dims {:?} imply {} elements, payload has {}",
            dims,
            count,
            payload.len()
        )));
    }
    if dims.len() > u8::MAX as usize {
        return Err(CoreError::InvalidParameter(format!(
            "too many dimensions: {}",
            dims.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[payload.dtype_tag(), dims.len() as u8])?;
    w.write_all(&[0u8; 8])?;
    for &d in dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    match payload {
        Payload::F32(v) => {
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Payload::U32(v) => {
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Read any SPDT file, returning its shape and payload.
pub fn read(path: &Path) -> Result<(Vec<usize>, Payload)> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut magic, 4)?;
    if magic != MAGIC {
        return Err(CoreError::BadMagic { found: magic });
    }

    let mut head = [0u8; 12];
    read_exact_or_truncated(&mut r, &mut head, 16)?;
    let version = u16::from_le_bytes([head[0], head[1]]);
    if version != VERSION {
        return Err(CoreError::BadVersion(version));
    }
    let dtype = head[2];
    let ndim = head[3] as usize;

    let mut dims = Vec::with_capacity(ndim);
    let mut buf8 = [0u8; 8];
    for i in 0..ndim {
        read_exact_or_truncated(&mut r, &mut buf8, 16 + 8 * (i + 1))?;
        dims.push(u64::from_le_bytes(buf8) as usize);
    }

    let count: usize = dims.iter().product();
    let mut bytes = vec![0u8; count * 4];
    let header_len = 16 + 8 * ndim;
    read_exact_or_truncated(&mut r, &mut bytes, header_len + count * 4)?;

    let payload = match dtype {
        DTYPE_F32 => Payload::F32(
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
        DTYPE_U32 => Payload::U32(
            bytes
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
        other => return Err(CoreError::UnknownDtype(other)),
    };
    Ok((dims, payload))
}

/// Read a file that must hold f32 data.
pub fn read_f32(path: &Path) -> Result<(Vec<usize>, Vec<f32>)> {
    match read(path)? {
        (dims, Payload::F32(v)) => Ok((dims, v)),
        (_, other) => Err(CoreError::DtypeMismatch {
            expected: "f32",
            found: other.dtype_name(),
        }),
    }
}

/// Read a file that must hold u32 data.
pub fn read_u32(path: &Path) -> Result<(Vec<usize>, Vec<u32>)> {
    match read(path)? {
        (dims, Payload::U32(v)) => Ok((dims, v)),
        (_, other) => Err(CoreError::DtypeMismatch {
            expected: "u32",
            found: other.dtype_name(),
        }),
    }
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8], expected_total: usize) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            return Err(CoreError::Truncated {
                expected: expected_total,
                got: expected_total - (buf.len() - filled),
            });
        }
        filled += n;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("spdt-unit");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn u32_cube_file_size() {
        let path = tmp("cube.spdt");
        let dims = [64usize, 32, 16];
        let n: usize = dims.iter().product();
        let data: Vec<u32> = (0..n as u32).collect();
        write(&path, &dims, &Payload::U32(data)).unwrap();
        let size = std::fs::metadata(&path).unwrap().len() as usize;
        assert_eq!(size, 16 + 8 * 3 + 4 * 64 * 32 * 16);
    }

    #[test]
    fn bad_magic_is_detected() {
        let path = tmp("bad_magic.spdt");
        std::fs::write(&path, b"XXXX\x01\x00\x00\x01\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        match read(&path) {
            Err(CoreError::BadMagic { found }) => assert_eq!(&found, b"XXXX"),
            other => panic!("expected BadMagic, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_detected() {
        let path = tmp("trunc.spdt");
        write(&path, &[4], &Payload::F32(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(read(&path), Err(CoreError::Truncated { .. })));
    }

    #[test]
    fn dtype_mismatch_is_detected() {
        let path = tmp("dtype.spdt");
        write(&path, &[2], &Payload::U32(vec![1, 2])).unwrap();
        assert!(matches!(
            read_f32(&path),
            Err(CoreError::DtypeMismatch {
                expected: "f32",
                found: "u32"
            })
        ));
    }
}
