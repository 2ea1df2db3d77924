//! Minimal Exif reader: presence, size, orientation, capture time, make/model.
//!
//! A broken TIFF structure inside an otherwise well-framed APP1 segment never
//! errors; the summary just reports `present` with the unreadable fields empty.

use serde::{Deserialize, Serialize};

use super::{segments, JpegError, APP1};

const EXIF_HEADER: &[u8; 6] = b"Exif\0\0";

const TAG_MAKE: u16 = 0x010F;
const TAG_MODEL: u16 = 0x0110;
const TAG_ORIENTATION: u16 = 0x0112;
const TAG_EXIF_IFD: u16 = 0x8769;
const TAG_DATETIME_ORIGINAL: u16 = 0x9003;

const TYPE_ASCII: u16 = 2;
const TYPE_SHORT: u16 = 3;
const TYPE_LONG: u16 = 4;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExifSummary {
    pub present: bool,
    /// Length of the APP1 payload, including the `Exif\0\0` header.
    pub byte_length: u64,
    pub orientation: Option<u16>,
    pub datetime_original: Option<String>,
    pub make_model: Option<String>,
}

pub fn exif_summary(bytes: &[u8]) -> Result<ExifSummary, JpegError> {
    let Some(seg) = segments(bytes)?
        .into_iter()
        .find(|s| s.marker == APP1 && s.payload.starts_with(EXIF_HEADER))
    else {
        return Ok(ExifSummary::default());
    };
    let mut summary = ExifSummary {
        present: true,
        byte_length: seg.payload.len() as u64,
        ..Default::default()
    };
    if let Some(tiff) = Tiff::new(&seg.payload[EXIF_HEADER.len()..]) {
        tiff.fill(&mut summary);
    }
    Ok(summary)
}

struct Tiff<'a> {
    data: &'a [u8],
    big_endian: bool,
    ifd0: usize,
}

struct Entry {
    tag: u16,
    kind: u16,
    count: u32,
    /// Offset of the 4-byte value/offset field within the TIFF data.
    value_at: usize,
}

impl<'a> Tiff<'a> {
    fn new(data: &'a [u8]) -> Option<Self> {
        let big_endian = match data.get(..2)? {
            b"II" => false,
            b"MM" => true,
            _ => return None,
        };
        let mut t = Tiff {
            data,
            big_endian,
            ifd0: 0,
        };
        if t.u16_at(2)? != 42 {
            return None;
        }
        t.ifd0 = t.u32_at(4)? as usize;
        Some(t)
    }

    fn u16_at(&self, at: usize) -> Option<u16> {
        let b: [u8; 2] = self.data.get(at..at.checked_add(2)?)?.try_into().ok()?;
        Some(if self.big_endian {
            u16::from_be_bytes(b)
        } else {
            u16::from_le_bytes(b)
        })
    }

    fn u32_at(&self, at: usize) -> Option<u32> {
        let b: [u8; 4] = self.data.get(at..at.checked_add(4)?)?.try_into().ok()?;
        Some(if self.big_endian {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        })
    }

    fn entries(&self, ifd: usize) -> Option<Vec<Entry>> {
        let n = usize::from(self.u16_at(ifd)?);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let at = ifd + 2 + 12 * i;
            out.push(Entry {
                tag: self.u16_at(at)?,
                kind: self.u16_at(at + 2)?,
                count: self.u32_at(at + 4)?,
                value_at: at + 8,
            });
        }
        Some(out)
    }

    fn ascii(&self, e: &Entry) -> Option<String> {
        if e.kind != TYPE_ASCII {
            return None;
        }
        let len = e.count as usize;
        let start = if len <= 4 {
            e.value_at
        } else {
            self.u32_at(e.value_at)? as usize
        };
        let raw = self.data.get(start..start.checked_add(len)?)?;
        let s = String::from_utf8_lossy(raw);
        let s = s.trim_end_matches('\0').trim();
        (!s.is_empty()).then(|| s.to_string())
    }

    fn short(&self, e: &Entry) -> Option<u16> {
        (e.kind == TYPE_SHORT && e.count >= 1).then(|| self.u16_at(e.value_at))?
    }

    fn fill(&self, s: &mut ExifSummary) {
        let Some(ifd0) = self.entries(self.ifd0) else {
            return;
        };
        let (mut make, mut model) = (None, None);
        for e in &ifd0 {
            match e.tag {
                TAG_ORIENTATION => {
                    s.orientation = self.short(e).filter(|o| (1..=8).contains(o));
                }
                TAG_MAKE => make = self.ascii(e),
                TAG_MODEL => model = self.ascii(e),
                TAG_EXIF_IFD if e.kind == TYPE_LONG => {
                    let sub = self
                        .u32_at(e.value_at)
                        .and_then(|off| self.entries(off as usize));
                    if let Some(sub) = sub {
                        s.datetime_original = sub
                            .iter()
                            .find(|x| x.tag == TAG_DATETIME_ORIGINAL)
                            .and_then(|x| self.ascii(x));
                    }
                }
                _ => {}
            }
        }
        s.make_model = match (make, model) {
            (Some(a), Some(b)) => Some(format!("{a} {b}")),
            (a, b) => a.or(b),
        };
    }
}
