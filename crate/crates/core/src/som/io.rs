//! SOM1 binary format (little-endian):
//! `b"SOM1"`, u32 version, u32 width, u32 height, u32 channels, f32 cell size,
//! then `channels * height * width` bytes, channel-major then row-major.

use std::path::Path;

use super::SemanticOccupancyMap;
use crate::error::{Error, Result};

pub const SOM_MAGIC: [u8; 4] = *b"SOM1";
pub const SOM_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

pub fn som_to_bytes(som: &SemanticOccupancyMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + som.values().len());
    out.extend_from_slice(&SOM_MAGIC);
    out.extend_from_slice(&SOM_VERSION.to_le_bytes());
    out.extend_from_slice(&(som.width() as u32).to_le_bytes());
    out.extend_from_slice(&(som.height() as u32).to_le_bytes());
    out.extend_from_slice(&(som.channels() as u32).to_le_bytes());
    out.extend_from_slice(&som.cell_size_m().to_le_bytes());
    out.extend_from_slice(som.values());
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

pub fn som_from_bytes(bytes: &[u8]) -> Result<SemanticOccupancyMap> {
    if bytes.len() < 4 || bytes[..4] != SOM_MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let version = u32_at(bytes, 4);
    if version != SOM_VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let width = u32_at(bytes, 8) as usize;
    let height = u32_at(bytes, 12) as usize;
    let channels = u32_at(bytes, 16) as usize;
    let cell = f32::from_le_bytes(bytes[20..24].try_into().unwrap());
    let payload = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::Malformed("payload size overflows".into()))?;
    let expected = HEADER_LEN + payload;
    if bytes.len() < expected {
        return Err(Error::TruncatedFile {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Malformed(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    SemanticOccupancyMap::from_raw(width, height, channels, cell, bytes[HEADER_LEN..].to_vec())
}

pub fn write_som(som: &SemanticOccupancyMap, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, som_to_bytes(som))?;
    Ok(())
}

pub fn read_som(path: impl AsRef<Path>) -> Result<SemanticOccupancyMap> {
    som_from_bytes(&std::fs::read(path)?)
}
