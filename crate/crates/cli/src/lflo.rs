//! LFLO dense flow files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! 0   4  magic "LFLO"
//! 4   2  version (u16)
//! 6   4  width (u32)
//! 10  4  height (u32)
//! 14     w*h pairs of f32 (dx, dy), row-major
//!        validity bitmap, row-major, bit i of the field at bit (i % 8) of byte i / 8,
//!        padded with zero bits to a whole byte
//! ```

use std::path::Path;

use lesionforge::{BinaryMask, FlowField};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"LFLO";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 14;

#[derive(Debug, Error, PartialEq)]
pub enum LfloError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    Version(u16),
    #[error("payload is {actual} bytes, expected {expected}")]
    Length { expected: usize, actual: usize },
    #[error("non-finite flow vector at pixel {0}")]
    NonFinite(usize),
    #[error("nonzero padding bits in the validity bitmap")]
    Padding,
}

/// Payload length after the header for a `w x h` field.
pub fn payload_len(width: usize, height: usize) -> usize {
    8 * width * height + (width * height).div_ceil(8)
}

pub fn encode(flow: &FlowField) -> Vec<u8> {
    let (w, h) = flow.dimensions();
    let n = w * h;
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len(w, h));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    for v in flow.vectors() {
        out.extend_from_slice(&(v[0] as f32).to_le_bytes());
        out.extend_from_slice(&(v[1] as f32).to_le_bytes());
    }
    let mut bits = vec![0u8; n.div_ceil(8)];
    for (i, &valid) in flow.valid().data().iter().enumerate() {
        if valid {
            bits[i / 8] |= 1 << (i % 8);
        }
    }
    out.extend_from_slice(&bits);
    out
}

pub fn decode(bytes: &[u8]) -> Result<FlowField, LfloError> {
    if bytes.len() < HEADER_LEN {
        return Err(LfloError::Length { expected: HEADER_LEN, actual: bytes.len() });
    }
    if &bytes[0..4] != MAGIC {
        return Err(LfloError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(LfloError::Version(version));
    }
    let w = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let n = w * h;
    let expected = payload_len(w, h);
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(LfloError::Length { expected, actual: payload.len() });
    }
    let mut vectors = Vec::with_capacity(n);
    for (i, chunk) in payload[..8 * n].chunks_exact(8).enumerate() {
        let dx = f32::from_le_bytes(chunk[0..4].try_into().unwrap());
        let dy = f32::from_le_bytes(chunk[4..8].try_into().unwrap());
        if !dx.is_finite() || !dy.is_finite() {
            return Err(LfloError::NonFinite(i));
        }
        vectors.push([dx as f64, dy as f64]);
    }
    let bits = &payload[8 * n..];
    if n % 8 != 0 && bits[n / 8] >> (n % 8) != 0 {
        return Err(LfloError::Padding);
    }
    let valid: Vec<bool> = (0..n).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect();
    let valid = BinaryMask::from_raw(w, h, valid).expect("length checked above");
    Ok(FlowField::from_parts(w, h, vectors, valid).expect("length checked above"))
}

pub fn read_flow(path: &Path) -> Result<FlowField, crate::CliError> {
    let bytes = std::fs::read(path).map_err(crate::CliError::io(path))?;
    decode(&bytes).map_err(|e| crate::CliError::file(path, e))
}

pub fn write_flow(path: &Path, flow: &FlowField) -> std::io::Result<()> {
    std::fs::write(path, encode(flow))
}
