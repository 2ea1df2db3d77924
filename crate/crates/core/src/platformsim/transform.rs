use image::imageops::FilterType;
use thiserror::Error;

use super::TransformProfile;
use crate::fixtures::encode_with_tables;
use crate::jpegtools::{self, scale_quant_table, ANNEX_K_CHROMINANCE, ANNEX_K_LUMINANCE, APP0};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("cannot decode input as JPEG: {0}")]
    Decode(String),
    #[error("cannot encode output: {0}")]
    Encode(String),
}

/// Output size when capping the longer side at `cap`, aspect ratio preserved
/// with rounding to nearest.
pub fn target_dimensions(width: u32, height: u32, cap: Option<u32>) -> (u32, u32) {
    let Some(cap) = cap else {
        return (width, height);
    };
    let long = width.max(height);
    if long <= cap {
        return (width, height);
    }
    let scale = |side: u32| {
        let v = (u64::from(side) * u64::from(cap) * 2 + u64::from(long)) / (2 * u64::from(long));
        (v as u32).max(1)
    };
    if width >= height {
        (cap, scale(height))
    } else {
        (scale(width), cap)
    }
}

/// Re-encodes `input` the way the profile's platform would: optional
/// downscale, quantization tables scaled to `jpeg_quality`, and either all
/// APP1..APP15 segments carried over or (when stripping) none of them.
pub fn apply_transform(profile: &TransformProfile, input: &[u8]) -> Result<Vec<u8>, TransformError> {
    let carried: Vec<(u8, Vec<u8>)> = if profile.strip_metadata {
        Vec::new()
    } else {
        jpegtools::segments(input)
            .map_err(|e| TransformError::Decode(e.to_string()))?
            .into_iter()
            .filter(|s| s.is_app() && s.marker != APP0)
            .map(|s| (s.marker - APP0, s.payload.to_vec()))
            .collect()
    };

    let decoded = image::load_from_memory_with_format(input, image::ImageFormat::Jpeg)
        .map_err(|e| TransformError::Decode(e.to_string()))?;
    let mut rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    let (tw, th) = target_dimensions(w, h, profile.max_dimension_px);
    if (tw, th) != (w, h) {
        rgb = image::imageops::resize(&rgb, tw, th, FilterType::Triangle);
    }
    let (tw16, th16) = match (u16::try_from(tw), u16::try_from(th)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return Err(TransformError::Encode(format!("{tw}x{th} exceeds JPEG limits"))),
    };

    encode_with_tables(
        rgb.as_raw(),
        tw16,
        th16,
        &scale_quant_table(&ANNEX_K_LUMINANCE, profile.jpeg_quality),
        &scale_quant_table(&ANNEX_K_CHROMINANCE, profile.jpeg_quality),
        &carried,
    )
    .map_err(|e| TransformError::Encode(e.to_string()))
}
