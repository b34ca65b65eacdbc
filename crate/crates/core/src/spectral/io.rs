//! Flat binary field snapshots with a JSON sidecar.
//!
//! Layout (little endian): magic `GLFD`, `u32` version, `u64` nh, `u64` nv,
//! `f64` Lh, `u32` rank, one parity tag byte per component, then
//! `rank * nh * nh * nv` values as `f64` in grid order.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Field, Grid, Parity};

const MAGIC: &[u8; 4] = b"GLFD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub name: String,
    pub time: f64,
    pub nh: usize,
    pub nv: usize,
    pub lh: f64,
    pub rank: usize,
    pub parity: Vec<Parity>,
    pub layout: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn write_field(path: &Path, field: &Field, name: &str, time: f64) -> io::Result<()> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(40 + field.rank() * (1 + 8 * g.len()));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.nh() as u64).to_le_bytes());
    buf.extend_from_slice(&(g.nv() as u64).to_le_bytes());
    buf.extend_from_slice(&g.lh().to_le_bytes());
    buf.extend_from_slice(&(field.rank() as u32).to_le_bytes());
    for p in field.parities() {
        buf.push(p.tag());
    }
    for c in field.comps() {
        for v in c {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::File::create(path)?.write_all(&buf)?;
    let desc = FieldDescriptor {
        name: name.to_string(),
        time,
        nh: g.nh(),
        nv: g.nv(),
        lh: g.lh(),
        rank: field.rank(),
        parity: field.parities().to_vec(),
        layout: "little-endian f64, component-major, [ix][iy][iz] with iz fastest".into(),
    };
    let json = serde_json::to_string_pretty(&desc).map_err(io::Error::other)?;
    fs::write(sidecar_path(path), json)
}

fn bad(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

fn take<const N: usize>(data: &[u8], pos: &mut usize) -> io::Result<[u8; N]> {
    let end = *pos + N;
    let bytes = data.get(*pos..end).ok_or_else(|| bad("truncated field file"))?;
    *pos = end;
    Ok(bytes.try_into().expect("slice of requested length"))
}

/// Reads a snapshot written by [`write_field`].
pub fn read_field(path: &Path) -> io::Result<Field> {
    let mut data = Vec::new();
    fs::File::open(path)?.read_to_end(&mut data)?;
    let mut pos = 0;
    if &take::<4>(&data, &mut pos)? != MAGIC {
        return Err(bad("not a field file"));
    }
    if u32::from_le_bytes(take(&data, &mut pos)?) != VERSION {
        return Err(bad("unsupported field file version"));
    }
    let nh = u64::from_le_bytes(take(&data, &mut pos)?) as usize;
    let nv = u64::from_le_bytes(take(&data, &mut pos)?) as usize;
    let lh = f64::from_le_bytes(take(&data, &mut pos)?);
    let rank = u32::from_le_bytes(take(&data, &mut pos)?) as usize;
    let mut parity = Vec::with_capacity(rank);
    for _ in 0..rank {
        let [t] = take::<1>(&data, &mut pos)?;
        parity.push(Parity::from_tag(t).ok_or_else(|| bad("unknown parity tag"))?);
    }
    let grid = if nv == 1 { Grid::horizontal_only(nh, lh) } else { Grid::new(nh, nv, lh) }
        .map_err(|e| bad(&e.to_string()))?;
    let mut comps = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut c = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            c.push(f64::from_le_bytes(take(&data, &mut pos)?));
        }
        comps.push(c);
    }
    if pos != data.len() {
        return Err(bad("trailing bytes in field file"));
    }
    Ok(Field::new(&grid, comps, parity))
}

pub fn read_descriptor(path: &Path) -> io::Result<FieldDescriptor> {
    let text = fs::read_to_string(sidecar_path(path))?;
    serde_json::from_str(&text).map_err(|e| bad(&e.to_string()))
}
