//! `MPV1` multi-parametric volume files.
//!
//! Layout (little-endian): magic `MPV1`, u32 width, u32 height, f64 dx,
//! f64 dy, u32 channel count, then per channel a u16 byte length and UTF-8
//! name, then every channel's `width × height` f64 values in row-major
//! order, one channel after another.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::ParametricVolume;

pub const MPV_MAGIC: &[u8; 4] = b"MPV1";

/// Channels with this suffix may carry NaN (e.g. unfitted raw maps).
pub const RAW_SUFFIX: &str = ".raw";

fn check_nan(v: &ParametricVolume) -> Result<()> {
    if !v.name.ends_with(RAW_SUFFIX) && v.values.iter().any(|x| x.is_nan()) {
        return Err(Error::Format(format!(
            "channel `{}` contains NaN (only `*{RAW_SUFFIX}` channels may)",
            v.name
        )));
    }
    Ok(())
}

pub fn write_mpv<W: Write>(mut w: W, volumes: &[ParametricVolume]) -> Result<()> {
    let first = volumes
        .first()
        .ok_or_else(|| Error::Format("an MPV file needs at least one channel".into()))?;
    let u32_of = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in u32")))
    };
    for v in volumes {
        if !v.same_grid(first) {
            return Err(Error::DimensionMismatch(format!(
                "channel `{}` is not on the grid of `{}`",
                v.name, first.name
            )));
        }
        check_nan(v)?;
    }
    w.write_all(MPV_MAGIC)?;
    w.write_all(&u32_of(first.width, "width")?.to_le_bytes())?;
    w.write_all(&u32_of(first.height, "height")?.to_le_bytes())?;
    w.write_all(&first.spacing.0.to_le_bytes())?;
    w.write_all(&first.spacing.1.to_le_bytes())?;
    w.write_all(&u32_of(volumes.len(), "channel count")?.to_le_bytes())?;
    for v in volumes {
        let len = u16::try_from(v.name.len())
            .map_err(|_| Error::Format(format!("channel name `{}` too long", v.name)))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(v.name.as_bytes())?;
    }
    for v in volumes {
        let mut buf = Vec::with_capacity(v.values.len() * 8);
        for x in &v.values {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R, what: &str) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format(format!("truncated MPV file while reading {what}")))?;
    Ok(b)
}

pub fn read_mpv<R: Read>(mut r: R) -> Result<Vec<ParametricVolume>> {
    let magic: [u8; 4] = read_exact(&mut r, "magic")?;
    if &magic != MPV_MAGIC {
        return Err(Error::Format("not an MPV1 file (bad magic)".into()));
    }
    let width = u32::from_le_bytes(read_exact(&mut r, "width")?) as usize;
    let height = u32::from_le_bytes(read_exact(&mut r, "height")?) as usize;
    let dx = f64::from_le_bytes(read_exact(&mut r, "dx")?);
    let dy = f64::from_le_bytes(read_exact(&mut r, "dy")?);
    let count = u32::from_le_bytes(read_exact(&mut r, "channel count")?) as usize;
    if count == 0 {
        return Err(Error::Format("MPV file declares zero channels".into()));
    }
    let mut names = Vec::with_capacity(count);
    for _ in 0..count {
        let len = u16::from_le_bytes(read_exact(&mut r, "name length")?) as usize;
        let mut b = vec![0u8; len];
        r.read_exact(&mut b)
            .map_err(|_| Error::Format("truncated MPV file while reading a channel name".into()))?;
        names.push(
            String::from_utf8(b).map_err(|_| Error::Format("channel name is not UTF-8".into()))?,
        );
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("MPV grid size overflows".into()))?;
    let mut volumes = Vec::with_capacity(count);
    let mut buf = vec![0u8; n * 8];
    for name in names {
        r.read_exact(&mut buf).map_err(|_| {
            Error::Format(format!(
                "MPV file too short: data of channel `{name}` truncated"
            ))
        })?;
        let values = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let v = ParametricVolume::new(name, width, height, (dx, dy), values)?;
        check_nan(&v)?;
        volumes.push(v);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format(
            "MPV file has trailing bytes after the declared data".into(),
        ));
    }
    Ok(volumes)
}

pub fn read_mpv_file(path: &Path) -> Result<Vec<ParametricVolume>> {
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_mpv(BufReader::new(f)).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_mpv_file(path: &Path, volumes: &[ParametricVolume]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_mpv(BufWriter::new(f), volumes)
}
