//! Shallow JPEG inspection: marker-segment walking, DQT extraction, frame
//! dimensions, Exif presence, and content digests.
//!
//! Nothing here decodes entropy-coded data. The walker stops at the first SOS
//! (or EOI) and never reads past a segment's declared length.

mod exif;
mod quant;

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use exif::{exif_summary, ExifSummary};
pub use quant::{
    natural_to_zigzag, scale_quant_table, zigzag_to_natural, ANNEX_K_CHROMINANCE,
    ANNEX_K_LUMINANCE, ZIGZAG,
};

pub const SOI: u8 = 0xD8;
pub const EOI: u8 = 0xD9;
pub const SOS: u8 = 0xDA;
pub const DQT: u8 = 0xDB;
pub const APP0: u8 = 0xE0;
pub const APP1: u8 = 0xE1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JpegError {
    #[error("malformed JPEG: {0}")]
    Malformed(String),
    #[error("no quantization tables before scan data")]
    NoTables,
    #[error("no frame header before scan data")]
    NoFrame,
}

fn malformed<T>(msg: impl Into<String>) -> Result<T, JpegError> {
    Err(JpegError::Malformed(msg.into()))
}

/// A marker segment. `payload` excludes the marker and the 2-byte length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment<'a> {
    pub marker: u8,
    pub offset: usize,
    pub payload: &'a [u8],
}

impl Segment<'_> {
    pub fn is_app(&self) -> bool {
        (0xE0..=0xEF).contains(&self.marker)
    }
}

/// Header segments from SOI up to and including the first SOS. A stream that
/// hits EOI first (no scan) is accepted and ends there.
pub fn segments(bytes: &[u8]) -> Result<Vec<Segment<'_>>, JpegError> {
    if bytes.len() < 2 || bytes[0] != 0xFF || bytes[1] != SOI {
        return malformed("missing SOI marker");
    }
    let mut out = Vec::new();
    let mut p = 2;
    loop {
        if p >= bytes.len() {
            return malformed(format!("unexpected end of data at offset {p}"));
        }
        if bytes[p] != 0xFF {
            return malformed(format!("expected marker at offset {p}, found {:#04x}", bytes[p]));
        }
        let start = p;
        while p < bytes.len() && bytes[p] == 0xFF {
            p += 1;
        }
        let Some(&marker) = bytes.get(p) else {
            return malformed("unexpected end of data in marker fill");
        };
        p += 1;
        match marker {
            EOI => return Ok(out),
            0x00 | SOI => return malformed(format!("invalid marker {marker:#04x} at offset {start}")),
            0x01 | 0xD0..=0xD7 => continue,
            _ => {}
        }
        if p + 2 > bytes.len() {
            return malformed(format!("truncated length of segment {marker:#04x}"));
        }
        let len = usize::from(u16::from_be_bytes([bytes[p], bytes[p + 1]]));
        if len < 2 {
            return malformed(format!("segment {marker:#04x} declares length {len}"));
        }
        let end = p + len;
        if end > bytes.len() {
            return malformed(format!(
                "segment {marker:#04x} at offset {start} overruns data ({len} bytes declared)"
            ));
        }
        out.push(Segment {
            marker,
            offset: start,
            payload: &bytes[p + 2..end],
        });
        if marker == SOS {
            return Ok(out);
        }
        p = end;
    }
}

/// One quantization table. `values` are in natural (raster) order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantTable {
    pub table_id: u8,
    pub precision_bits: u8,
    pub values: Vec<u16>,
}

impl QuantTable {
    pub fn values_array(&self) -> [u16; 64] {
        let mut a = [0u16; 64];
        a.copy_from_slice(&self.values);
        a
    }
}

pub fn parse_dqt(payload: &[u8]) -> Result<Vec<QuantTable>, JpegError> {
    let mut tables = Vec::new();
    let mut p = 0;
    while p < payload.len() {
        let pq_tq = payload[p];
        p += 1;
        let (precision_bits, width) = match pq_tq >> 4 {
            0 => (8u8, 1usize),
            1 => (16, 2),
            other => return malformed(format!("DQT precision nibble {other}")),
        };
        let table_id = pq_tq & 0x0F;
        if table_id > 3 {
            return malformed(format!("DQT table id {table_id}"));
        }
        let need = 64 * width;
        if p + need > payload.len() {
            return malformed("DQT segment truncated");
        }
        let mut zz = [0u16; 64];
        for (k, v) in zz.iter_mut().enumerate() {
            *v = if width == 1 {
                u16::from(payload[p + k])
            } else {
                u16::from_be_bytes([payload[p + 2 * k], payload[p + 2 * k + 1]])
            };
            if *v == 0 {
                return malformed("DQT contains a zero quantizer");
            }
        }
        p += need;
        tables.push(QuantTable {
            table_id,
            precision_bits,
            values: zigzag_to_natural(&zz).to_vec(),
        });
    }
    Ok(tables)
}

/// Every DQT table before the first scan, in file order.
pub fn extract_quant_tables(bytes: &[u8]) -> Result<Vec<QuantTable>, JpegError> {
    let mut tables = Vec::new();
    for seg in segments(bytes)? {
        if seg.marker == DQT {
            tables.extend(parse_dqt(seg.payload)?);
        }
    }
    if tables.is_empty() {
        return Err(JpegError::NoTables);
    }
    Ok(tables)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameInfo {
    pub width: u32,
    pub height: u32,
    pub components: u8,
}

fn is_sof(marker: u8) -> bool {
    matches!(marker, 0xC0..=0xC3 | 0xC5..=0xC7 | 0xC9..=0xCB | 0xCD..=0xCF)
}

pub fn frame_info(bytes: &[u8]) -> Result<FrameInfo, JpegError> {
    let seg = segments(bytes)?
        .into_iter()
        .find(|s| is_sof(s.marker))
        .ok_or(JpegError::NoFrame)?;
    let p = seg.payload;
    if p.len() < 6 {
        return malformed("frame header truncated");
    }
    Ok(FrameInfo {
        height: u32::from(u16::from_be_bytes([p[1], p[2]])),
        width: u32::from(u16::from_be_bytes([p[3], p[4]])),
        components: p[5],
    })
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> io::Result<String> {
    Ok(digest_bytes(&fs::read(path)?))
}
