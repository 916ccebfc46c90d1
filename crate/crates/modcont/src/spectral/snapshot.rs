//! Flat binary field snapshots.
//!
//! Layout, little-endian: magic `MODCSNAP`, `u32` version, `u32` dim, `u32` N,
//! `u32` components, `f64` L, `f64` t, then per component the coefficients in
//! row-major lattice order as interleaved `f64` re/im pairs.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::Field;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MODCSNAP";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
}

pub fn write_snapshot<W: Write>(w: &mut W, field: &Field, t: f64) -> Result<()> {
    let mut buf = Vec::with_capacity(40 + field.comps() * field.len() * 16);
    buf.extend_from_slice(MAGIC);
    for v in [
        VERSION,
        field.dim() as u32,
        field.n() as u32,
        field.comps() as u32,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&field.period().to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    for c in 0..field.comps() {
        for v in field.coefficients(c) {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const K: usize>(bytes: &[u8], pos: &mut usize) -> Result<[u8; K]> {
    let out = bytes
        .get(*pos..*pos + K)
        .ok_or_else(|| Error::Io("snapshot truncated".into()))?
        .try_into()
        .map_err(|_| Error::Io("snapshot truncated".into()))?;
    *pos += K;
    Ok(out)
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0;
    if &take::<8>(&bytes, &mut pos)? != MAGIC {
        return Err(Error::Io("not a field snapshot".into()));
    }
    let mut header = [0u32; 4];
    for h in &mut header {
        *h = u32::from_le_bytes(take(&bytes, &mut pos)?);
    }
    let [version, dim, n, comps] = header;
    if version != VERSION {
        return Err(Error::Io(format!("unsupported snapshot version {version}")));
    }
    let l = f64::from_le_bytes(take(&bytes, &mut pos)?);
    let t = f64::from_le_bytes(take(&bytes, &mut pos)?);
    let mut field = Field::zeros(dim as usize, n as usize, l, comps as usize)?;
    for c in 0..field.comps() {
        for v in field.coefficients_mut(c) {
            let re = f64::from_le_bytes(take(&bytes, &mut pos)?);
            let im = f64::from_le_bytes(take(&bytes, &mut pos)?);
            *v = Complex64::new(re, im);
        }
    }
    if pos != bytes.len() {
        return Err(Error::Io(format!(
            "{} trailing bytes after snapshot",
            bytes.len() - pos
        )));
    }
    Ok(Snapshot { t, field })
}
