//! Binary PPM (P6) and PGM (P5) rasters with maxval 255.

use crate::error::{Error, Result};
use crate::pipeline::RgbImage;

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.pixels.len() * 3);
    for p in &img.pixels {
        out.extend_from_slice(p);
    }
    out
}

pub fn encode_pgm(width: usize, height: usize, gray: &[u8]) -> Vec<u8> {
    assert_eq!(gray.len(), width * height, "PGM size mismatch");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(gray);
    out
}

fn header(data: &[u8], magic: &str) -> Result<(usize, usize, usize)> {
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < data.len() && data[i].is_ascii_whitespace() {
            i += 1;
        }
        if data.get(i) == Some(&b'#') {
            while i < data.len() && data[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < data.len() && !data[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::Format("truncated image header".into()));
        }
        fields.push(
            std::str::from_utf8(&data[start..i])
                .unwrap_or("")
                .to_string(),
        );
    }
    if fields[0] != magic {
        return Err(Error::Format(format!(
            "expected {magic} image, found `{}`",
            fields[0]
        )));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad header field `{s}`")))
    };
    let (w, h, max) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if max != 255 {
        return Err(Error::Format(format!("unsupported maxval {max}")));
    }
    Ok((w, h, i + 1))
}

pub fn decode_ppm(data: &[u8]) -> Result<RgbImage> {
    let (w, h, start) = header(data, "P6")?;
    let body = data.get(start..).unwrap_or(&[]);
    if body.len() != w * h * 3 {
        return Err(Error::Format(format!(
            "PPM body has {} bytes, expected {}",
            body.len(),
            w * h * 3
        )));
    }
    Ok(RgbImage {
        width: w,
        height: h,
        pixels: body.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
    })
}
