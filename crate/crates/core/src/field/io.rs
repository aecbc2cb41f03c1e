//! Binary grid files.
//!
//! Little-endian layout: magic `VGD1`, `u32` version, `u8` kind
//! (0 occupancy, 1 distance), `u64` nx/ny/nz, `f64` resolution, `f64`
//! origin x/y/z, `f64` max_distance (0 for occupancy), then the x-fastest
//! payload: one byte per voxel for occupancy, one `f32` per voxel for
//! distances.
//!
//! Distances are stored as `f32` rounded toward zero, so a saved field never
//! reports more clearance than the in-memory one. Values that are already
//! `f32`-representable round-trip bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DistanceGrid, FieldError, GridHeader, OccupancyGrid};
use crate::geometry::Point3;

pub const GRID_MAGIC: [u8; 4] = *b"VGD1";
pub const GRID_VERSION: u32 = 1;

const HEADER_LEN: u64 = 4 + 4 + 1 + 3 * 8 + 8 + 3 * 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Occupancy = 0,
    Distance = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyGrid {
    Occupancy(OccupancyGrid),
    Distance(DistanceGrid),
}

impl AnyGrid {
    pub fn header(&self) -> &GridHeader {
        match self {
            AnyGrid::Occupancy(g) => &g.header,
            AnyGrid::Distance(g) => &g.header,
        }
    }

    pub fn kind(&self) -> GridKind {
        match self {
            AnyGrid::Occupancy(_) => GridKind::Occupancy,
            AnyGrid::Distance(_) => GridKind::Distance,
        }
    }
}

impl From<OccupancyGrid> for AnyGrid {
    fn from(g: OccupancyGrid) -> Self {
        AnyGrid::Occupancy(g)
    }
}

impl From<DistanceGrid> for AnyGrid {
    fn from(g: DistanceGrid) -> Self {
        AnyGrid::Distance(g)
    }
}

/// Largest `f32` not above `v` (for `v >= 0`).
fn f32_toward_zero(v: f64) -> f32 {
    let f = v as f32;
    if f as f64 > v {
        f.next_down()
    } else {
        f
    }
}

pub fn write_grid<W: Write>(out: &mut W, grid: &AnyGrid) -> Result<(), FieldError> {
    let h = grid.header();
    out.write_all(&GRID_MAGIC)?;
    out.write_all(&GRID_VERSION.to_le_bytes())?;
    out.write_all(&[grid.kind() as u8])?;
    for n in h.dims {
        out.write_all(&(n as u64).to_le_bytes())?;
    }
    out.write_all(&h.resolution.to_le_bytes())?;
    for c in h.origin.iter() {
        out.write_all(&c.to_le_bytes())?;
    }
    match grid {
        AnyGrid::Occupancy(g) => {
            out.write_all(&0f64.to_le_bytes())?;
            let bytes: Vec<u8> = g.cells.iter().map(|&c| c as u8).collect();
            out.write_all(&bytes)?;
        }
        AnyGrid::Distance(g) => {
            out.write_all(&g.max_distance.to_le_bytes())?;
            let mut bytes = Vec::with_capacity(g.values.len() * 4);
            for &v in &g.values {
                bytes.extend_from_slice(&f32_toward_zero(v).to_le_bytes());
            }
            out.write_all(&bytes)?;
        }
    }
    Ok(())
}

pub fn save_grid(path: impl AsRef<Path>, grid: &AnyGrid) -> Result<(), FieldError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_grid(&mut out, grid)?;
    out.flush()?;
    Ok(())
}

struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N], FieldError> {
        let mut buf = [0u8; N];
        self.fill(&mut buf, what)?;
        Ok(buf)
    }

    fn fill(&mut self, buf: &mut [u8], what: &str) -> Result<(), FieldError> {
        let mut read = 0;
        while read < buf.len() {
            match self.inner.read(&mut buf[read..]) {
                Ok(0) => {
                    return Err(FieldError::Format {
                        offset: self.offset + read as u64,
                        message: format!("truncated {what}"),
                    })
                }
                Ok(n) => read += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn u64(&mut self, what: &str) -> Result<u64, FieldError> {
        Ok(u64::from_le_bytes(self.take(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64, FieldError> {
        Ok(f64::from_le_bytes(self.take(what)?))
    }

    fn error(&self, at: u64, message: impl Into<String>) -> FieldError {
        FieldError::Format {
            offset: at,
            message: message.into(),
        }
    }
}

pub fn read_grid<R: Read>(input: R) -> Result<AnyGrid, FieldError> {
    let mut cur = Cursor {
        inner: input,
        offset: 0,
    };
    let magic: [u8; 4] = cur.take("magic")?;
    if magic != GRID_MAGIC {
        return Err(cur.error(
            0,
            format!("bad magic {:?}", String::from_utf8_lossy(&magic)),
        ));
    }
    let version = u32::from_le_bytes(cur.take("version")?);
    if version != GRID_VERSION {
        return Err(cur.error(4, format!("unsupported version {version}")));
    }
    let [kind] = cur.take::<1>("kind")?;
    let kind = match kind {
        0 => GridKind::Occupancy,
        1 => GridKind::Distance,
        other => return Err(cur.error(8, format!("unknown grid kind {other}"))),
    };
    let mut dims = [0usize; 3];
    for (a, d) in dims.iter_mut().enumerate() {
        let n = cur.u64("dimensions")?;
        *d = usize::try_from(n)
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| cur.error(9 + 8 * a as u64, format!("bad dimension {n}")))?;
    }
    let resolution = cur.f64("resolution")?;
    let origin = Point3::new(cur.f64("origin")?, cur.f64("origin")?, cur.f64("origin")?);
    let max_distance = cur.f64("max_distance")?;
    let header = GridHeader::new(origin, resolution, dims)
        .map_err(|e| cur.error(9, format!("invalid header: {e}")))?;
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| cur.error(9, "voxel count overflows"))?;

    let grid = match kind {
        GridKind::Occupancy => {
            let mut bytes = vec![0u8; count];
            cur.fill(&mut bytes, "occupancy payload")?;
            if let Some(pos) = bytes.iter().position(|&b| b > 1) {
                return Err(cur.error(
                    HEADER_LEN + pos as u64,
                    format!("occupancy byte {} is not 0 or 1", bytes[pos]),
                ));
            }
            AnyGrid::Occupancy(OccupancyGrid {
                header,
                cells: bytes.into_iter().map(|b| b == 1).collect(),
            })
        }
        GridKind::Distance => {
            if !(max_distance.is_finite() && max_distance > 0.0) {
                return Err(cur.error(HEADER_LEN - 8, format!("bad max_distance {max_distance}")));
            }
            let mut bytes = vec![0u8; count * 4];
            cur.fill(&mut bytes, "distance payload")?;
            let mut values = Vec::with_capacity(count);
            for (i, chunk) in bytes.chunks_exact(4).enumerate() {
                let v = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
                if !(v.is_finite() && v >= 0.0) {
                    return Err(cur.error(HEADER_LEN + 4 * i as u64, format!("bad distance {v}")));
                }
                values.push(v);
            }
            AnyGrid::Distance(
                DistanceGrid::new(header, values, max_distance)
                    .map_err(|e| cur.error(HEADER_LEN, e.to_string()))?,
            )
        }
    };
    let mut probe = [0u8; 1];
    if cur.inner.read(&mut probe)? != 0 {
        return Err(cur.error(cur.offset, "trailing bytes after payload"));
    }
    Ok(grid)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<AnyGrid, FieldError> {
    read_grid(BufReader::new(File::open(path)?))
}

pub fn load_occupancy_grid(path: impl AsRef<Path>) -> Result<OccupancyGrid, FieldError> {
    match load_grid(path)? {
        AnyGrid::Occupancy(g) => Ok(g),
        AnyGrid::Distance(_) => Err(FieldError::Format {
            offset: 8,
            message: "expected an occupancy grid, found a distance grid".into(),
        }),
    }
}

pub fn load_distance_grid(path: impl AsRef<Path>) -> Result<DistanceGrid, FieldError> {
    match load_grid(path)? {
        AnyGrid::Distance(g) => Ok(g),
        AnyGrid::Occupancy(_) => Err(FieldError::Format {
            offset: 8,
            message: "expected a distance grid, found an occupancy grid".into(),
        }),
    }
}
