//! Synthetic JPEG datasets for demos and tests.
//!
//! Images are smooth gradients with seeded block noise, so every seed yields
//! different bytes while staying cheap to encode.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use jpeg_encoder::{ColorType, EncodingError, Encoder, QuantizationTableType};

pub fn synthetic_rgb(seed: u64, width: u32, height: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity((width * height * 3) as usize);
    for y in 0..height {
        for x in 0..width {
            let block = (u64::from(x / 8) * 0x9E37_79B9) ^ (u64::from(y / 8) * 0x85EB_CA6B);
            let h = splitmix(seed ^ block);
            let gx = (x * 255 / width.max(1)) as u8;
            let gy = (y * 255 / height.max(1)) as u8;
            out.push(gx.wrapping_add((h & 0x3F) as u8));
            out.push(gy.wrapping_add(((h >> 8) & 0x3F) as u8));
            out.push((gx / 2 + gy / 2).wrapping_add(((h >> 16) & 0x3F) as u8));
        }
    }
    out
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Baseline JPEG with the given natural-order tables and extra APPn segments.
pub fn encode_with_tables(
    rgb: &[u8],
    width: u16,
    height: u16,
    luma: &[u16; 64],
    chroma: &[u16; 64],
    app_segments: &[(u8, Vec<u8>)],
) -> Result<Vec<u8>, EncodingError> {
    let mut out = Vec::new();
    let mut enc = Encoder::new(&mut out, 100);
    enc.set_quantization_tables(
        QuantizationTableType::Custom(Box::new(*luma)),
        QuantizationTableType::Custom(Box::new(*chroma)),
    );
    for (nr, data) in app_segments {
        enc.add_app_segment(*nr, data.clone())?;
    }
    enc.encode(rgb, width, height, ColorType::Rgb)?;
    Ok(out)
}

/// Camera-like Exif block contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExifFixture {
    pub make: String,
    pub model: String,
    pub orientation: u16,
    pub datetime_original: String,
}

impl Default for ExifFixture {
    fn default() -> Self {
        Self {
            make: "NIKON".into(),
            model: "D7000".into(),
            orientation: 1,
            datetime_original: "2014:05:17 10:21:33".into(),
        }
    }
}

impl ExifFixture {
    /// APP1 payload (`Exif\0\0` + big-endian TIFF) carrying IFD0 make, model,
    /// orientation and an Exif sub-IFD with DateTimeOriginal.
    pub fn app1_payload(&self) -> Vec<u8> {
        let ascii = |s: &str| {
            let mut b = s.as_bytes().to_vec();
            b.push(0);
            b
        };
        let make = ascii(&self.make);
        let model = ascii(&self.model);
        let date = ascii(&self.datetime_original);

        let ifd0_at = 8u32;
        let ifd0_len = 2 + 4 * 12 + 4;
        let make_at = ifd0_at + ifd0_len;
        let model_at = make_at + make.len() as u32;
        let sub_at = model_at + model.len() as u32;
        let sub_len = 2 + 12 + 4;
        let date_at = sub_at + sub_len;

        let mut t = Vec::new();
        t.extend_from_slice(b"MM");
        t.extend_from_slice(&42u16.to_be_bytes());
        t.extend_from_slice(&ifd0_at.to_be_bytes());
        let entry = |t: &mut Vec<u8>, tag: u16, kind: u16, count: u32, value: [u8; 4]| {
            t.extend_from_slice(&tag.to_be_bytes());
            t.extend_from_slice(&kind.to_be_bytes());
            t.extend_from_slice(&count.to_be_bytes());
            t.extend_from_slice(&value);
        };
        let inline_or_offset = |bytes: &[u8], at: u32| {
            if bytes.len() <= 4 {
                let mut v = [0u8; 4];
                v[..bytes.len()].copy_from_slice(bytes);
                v
            } else {
                at.to_be_bytes()
            }
        };
        t.extend_from_slice(&4u16.to_be_bytes());
        entry(&mut t, 0x010F, 2, make.len() as u32, inline_or_offset(&make, make_at));
        entry(&mut t, 0x0110, 2, model.len() as u32, inline_or_offset(&model, model_at));
        let o = self.orientation.to_be_bytes();
        entry(&mut t, 0x0112, 3, 1, [o[0], o[1], 0, 0]);
        entry(&mut t, 0x8769, 4, 1, sub_at.to_be_bytes());
        t.extend_from_slice(&0u32.to_be_bytes());
        t.extend_from_slice(&make);
        t.extend_from_slice(&model);
        t.extend_from_slice(&1u16.to_be_bytes());
        entry(&mut t, 0x9003, 2, date.len() as u32, inline_or_offset(&date, date_at));
        t.extend_from_slice(&0u32.to_be_bytes());
        t.extend_from_slice(&date);

        let mut payload = b"Exif\0\0".to_vec();
        payload.extend_from_slice(&t);
        payload
    }
}

/// Camera-style JPEG using the encoder's standard quality tables.
pub fn synthetic_jpeg(
    seed: u64,
    width: u16,
    height: u16,
    quality: u8,
    exif: Option<&ExifFixture>,
) -> Vec<u8> {
    let rgb = synthetic_rgb(seed, u32::from(width), u32::from(height));
    let mut out = Vec::new();
    let mut enc = Encoder::new(&mut out, quality);
    if let Some(e) = exif {
        enc.add_app_segment(1, e.app1_payload())
            .expect("fixture exif fits one segment");
    }
    enc.encode(&rgb, width, height, ColorType::Rgb)
        .expect("synthetic image encodes");
    out
}

/// Writes `count` JPEGs named `img_0000.jpg`, ... into `dir` (created if
/// missing). Every image carries an Exif block.
pub fn write_dataset(dir: &Path, count: usize, width: u16, height: u16) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    (0..count)
        .map(|i| {
            let exif = ExifFixture {
                orientation: (i % 8) as u16 + 1,
                ..Default::default()
            };
            let bytes = synthetic_jpeg(i as u64 + 1, width, height, 92, Some(&exif));
            let path = dir.join(format!("img_{i:04}.jpg"));
            fs::write(&path, bytes)?;
            Ok(path)
        })
        .collect()
}
