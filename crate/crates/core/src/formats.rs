//! Byte formats for frames (binary PPM) and raw textures (`ATX1`).

use crate::raytrace::Texture;
use crate::{Error, Result};

pub const DISPLAY_GAMMA: f64 = 2.2;
const TEX_MAGIC: &[u8; 4] = b"ATX1";

/// Linear radiance to an 8-bit display value.
pub fn to_display_byte(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0).powf(1.0 / DISPLAY_GAMMA)).round() as u8
}

/// Binary PPM (`P6`) of an interleaved RGB image in linear radiance.
pub fn encode_ppm(width: u32, height: u32, data: &[f64]) -> Vec<u8> {
    assert_eq!(data.len(), 3 * (width * height) as usize, "ppm data length");
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend(data.iter().map(|v| to_display_byte(*v)));
    out
}

/// `ATX1`, then width and height as u32 LE, then RGB texels as f32 LE.
pub fn encode_texture_raw(t: &Texture) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * t.data.len());
    out.extend_from_slice(TEX_MAGIC);
    out.extend_from_slice(&t.width.to_le_bytes());
    out.extend_from_slice(&t.height.to_le_bytes());
    for v in &t.data {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_texture_raw(bytes: &[u8]) -> Result<Texture> {
    if bytes.len() < 12 || &bytes[..4] != TEX_MAGIC {
        return Err(Error::Format("not an ATX1 texture".into()));
    }
    let u32_at = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap());
    let (width, height) = (u32_at(4), u32_at(8));
    if width == 0 || height == 0 {
        return Err(Error::Format("texture has a zero dimension".into()));
    }
    let n = 3 * width as usize * height as usize;
    if bytes.len() != 12 + 4 * n {
        return Err(Error::Format(format!(
            "texture {width}x{height} needs {} bytes, got {}",
            12 + 4 * n,
            bytes.len()
        )));
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Texture { width, height, data })
}
