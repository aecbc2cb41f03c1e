use std::io::BufRead;
use std::path::Path;

use super::{FieldError, GridHeader, OccupancyGrid};
use crate::geometry::{Aabb, Point3};

/// Parse ASCII `x y z` lines. Blank lines and `#` comments are skipped.
pub fn parse_xyz<R: BufRead>(input: R) -> Result<Vec<Point3>, FieldError> {
    let mut points = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| FieldError::Parse {
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(format!(
                "expected 3 values, found {}",
                fields.len()
            )));
        }
        let mut xyz = [0.0; 3];
        for (slot, field) in xyz.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .map_err(|e| parse_err(format!("'{field}': {e}")))?;
            if !slot.is_finite() {
                return Err(parse_err(format!("non-finite value '{field}'")));
            }
        }
        points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
    }
    Ok(points)
}

/// Voxelize a point cloud file: a voxel is occupied iff at least one point
/// falls inside it.
///
/// Without explicit `bounds` the grid is the cloud's bounding box padded by
/// one voxel on every side. With `bounds`, points outside are dropped.
pub fn ingest_xyz(
    path: impl AsRef<Path>,
    resolution: f64,
    bounds: Option<Aabb>,
) -> Result<OccupancyGrid, FieldError> {
    let file = std::fs::File::open(path)?;
    let points = parse_xyz(std::io::BufReader::new(file))?;
    occupancy_from_points(&points, resolution, bounds)
}

pub(crate) fn occupancy_from_points(
    points: &[Point3],
    resolution: f64,
    bounds: Option<Aabb>,
) -> Result<OccupancyGrid, FieldError> {
    if points.is_empty() {
        return Err(FieldError::EmptyInput("point cloud has no points".into()));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(FieldError::InvalidArgument(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let header = match bounds {
        Some(b) => {
            let extent = b.extent();
            let dims = [0, 1, 2].map(|a| (extent[a] / resolution - 1e-9).ceil().max(1.0) as usize);
            GridHeader::new(b.min, resolution, dims)?
        }
        None => {
            let mut lo = points[0];
            let mut hi = points[0];
            for p in points {
                for a in 0..3 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
            let origin = lo.map(|c| c - resolution);
            let dims = [0, 1, 2].map(|a| ((hi[a] - origin[a]) / resolution).floor() as usize + 2);
            GridHeader::new(origin, resolution, dims)?
        }
    };
    let mut grid = OccupancyGrid::empty(header);
    for p in points {
        if let Some([i, j, k]) = header.voxel_of(p) {
            grid.set(i, j, k, true);
        }
    }
    Ok(grid)
}
