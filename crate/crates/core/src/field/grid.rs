use serde::{Deserialize, Serialize};

use super::{DistanceField, FieldError, Scene};
use crate::geometry::Point3;

/// Default cap on the number of voxels [`voxelize`] will allocate.
pub const DEFAULT_VOXEL_BUDGET: u64 = 200_000_000;

/// Placement of a uniform voxel grid. Voxel `(i, j, k)` spans
/// `origin + [i, i+1) * resolution` on each axis; storage is x-fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHeader {
    pub origin: Point3,
    pub resolution: f64,
    pub dims: [usize; 3],
}

impl GridHeader {
    pub fn new(origin: Point3, resolution: f64, dims: [usize; 3]) -> Result<Self, FieldError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(FieldError::InvalidArgument(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if dims.contains(&0) {
            return Err(FieldError::InvalidArgument(format!(
                "zero grid dimension {dims:?}"
            )));
        }
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(FieldError::InvalidArgument("non-finite grid origin".into()));
        }
        Ok(Self {
            origin,
            resolution,
            dims,
        })
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let i = index % self.dims[0];
        let rest = index / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    pub fn center(&self, i: usize, j: usize, k: usize) -> Point3 {
        let h = self.resolution;
        Point3::new(
            self.origin.x + (i as f64 + 0.5) * h,
            self.origin.y + (j as f64 + 0.5) * h,
            self.origin.z + (k as f64 + 0.5) * h,
        )
    }

    /// Voxel containing `p`, or `None` outside the grid.
    #[inline]
    pub fn voxel_of(&self, p: &Point3) -> Option<[usize; 3]> {
        let inv = 1.0 / self.resolution;
        let mut out = [0usize; 3];
        for a in 0..3 {
            let f = ((p[a] - self.origin[a]) * inv).floor();
            if !(f >= 0.0 && f < self.dims[a] as f64) {
                return None;
            }
            out[a] = f as usize;
        }
        Some(out)
    }

    /// Half the voxel's space diagonal: the farthest any point of a voxel is
    /// from its center.
    pub fn half_diagonal(&self) -> f64 {
        0.5 * 3f64.sqrt() * self.resolution
    }
}

/// Boolean voxel map, `true` for occupied.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub header: GridHeader,
    pub cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(header: GridHeader, cells: Vec<bool>) -> Result<Self, FieldError> {
        if cells.len() != header.len() {
            return Err(FieldError::InvalidArgument(format!(
                "{} cells for a grid of {}",
                cells.len(),
                header.len()
            )));
        }
        Ok(Self { header, cells })
    }

    pub fn empty(header: GridHeader) -> Self {
        let cells = vec![false; header.len()];
        Self { header, cells }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.cells[self.header.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, occupied: bool) {
        let idx = self.header.index(i, j, k);
        self.cells[idx] = occupied;
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// How a point inside a voxel is mapped to a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LookupMode {
    /// The containing voxel's stored value.
    Raw,
    /// Stored value minus the half diagonal, floored at zero. A lower bound
    /// of the distance from any point of the voxel to the nearest occupied
    /// voxel center.
    #[default]
    Conservative,
}

impl std::fmt::Display for LookupMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LookupMode::Raw => "raw",
            LookupMode::Conservative => "conservative",
        })
    }
}

impl std::str::FromStr for LookupMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(LookupMode::Raw),
            "conservative" => Ok(LookupMode::Conservative),
            other => Err(format!("unknown lookup mode '{other}' (raw|conservative)")),
        }
    }
}

/// Answer for queries outside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutOfBounds {
    /// Report `max_distance`.
    #[default]
    TreatFree,
    /// Report zero.
    TreatOccupied,
}

/// Per-voxel distance to the nearest occupied voxel center, truncated at
/// `max_distance`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGrid {
    pub header: GridHeader,
    pub values: Vec<f64>,
    pub max_distance: f64,
    pub out_of_bounds: OutOfBounds,
}

impl DistanceGrid {
    pub fn new(
        header: GridHeader,
        values: Vec<f64>,
        max_distance: f64,
    ) -> Result<Self, FieldError> {
        if values.len() != header.len() {
            return Err(FieldError::InvalidArgument(format!(
                "{} values for a grid of {}",
                values.len(),
                header.len()
            )));
        }
        if !(max_distance.is_finite() && max_distance > 0.0) {
            return Err(FieldError::InvalidArgument(format!(
                "max_distance must be positive, got {max_distance}"
            )));
        }
        Ok(Self {
            header,
            values,
            max_distance,
            out_of_bounds: OutOfBounds::default(),
        })
    }

    pub fn with_out_of_bounds(mut self, policy: OutOfBounds) -> Self {
        self.out_of_bounds = policy;
        self
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.header.index(i, j, k)]
    }

    #[inline]
    pub fn lookup(&self, p: &Point3, mode: LookupMode) -> f64 {
        match self.header.voxel_of(p) {
            Some([i, j, k]) => {
                let stored = self.values[self.header.index(i, j, k)];
                match mode {
                    LookupMode::Raw => stored,
                    LookupMode::Conservative => (stored - self.header.half_diagonal()).max(0.0),
                }
            }
            None => match self.out_of_bounds {
                OutOfBounds::TreatFree => self.max_distance,
                OutOfBounds::TreatOccupied => 0.0,
            },
        }
    }
}

impl DistanceField for DistanceGrid {
    #[inline]
    fn distance(&self, p: &Point3, mode: LookupMode) -> f64 {
        self.lookup(p, mode)
    }
}

/// Rasterize a scene: a voxel is occupied iff its center is inside or on
/// some primitive. The grid starts at the scene's lower corner and covers
/// its bounds.
pub fn voxelize(scene: &Scene, resolution: f64) -> Result<OccupancyGrid, FieldError> {
    voxelize_with_budget(scene, resolution, DEFAULT_VOXEL_BUDGET)
}

pub fn voxelize_with_budget(
    scene: &Scene,
    resolution: f64,
    budget: u64,
) -> Result<OccupancyGrid, FieldError> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(FieldError::InvalidArgument(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let extent = scene.bounds.extent();
    let mut dims = [0usize; 3];
    let mut total: u128 = 1;
    for a in 0..3 {
        // tolerate extents that are an integer multiple of the resolution up
        // to rounding
        let n = (extent[a] / resolution - 1e-9).ceil().max(1.0);
        if n > u64::MAX as f64 {
            return Err(FieldError::Resource {
                voxels: u128::MAX,
                budget,
            });
        }
        dims[a] = n as usize;
        total *= dims[a] as u128;
    }
    if total > budget as u128 {
        return Err(FieldError::Resource {
            voxels: total,
            budget,
        });
    }
    let header = GridHeader::new(scene.bounds.min, resolution, dims)?;
    let mut grid = OccupancyGrid::empty(header);

    for prim in &scene.primitives {
        let bb = prim.bounding_box();
        // Candidate voxels have centers inside the primitive's bounding box;
        // widen by one voxel so rounding never drops a boundary center.
        let range = |a: usize| -> Option<(usize, usize)> {
            let first = ((bb.min[a] - header.origin[a]) / resolution - 0.5).ceil() - 1.0;
            let last = ((bb.max[a] - header.origin[a]) / resolution - 0.5).floor() + 1.0;
            let first = first.max(0.0);
            let last = last.min(dims[a] as f64 - 1.0);
            (first <= last).then_some((first as usize, last as usize))
        };
        let (Some(rx), Some(ry), Some(rz)) = (range(0), range(1), range(2)) else {
            continue;
        };
        for k in rz.0..=rz.1 {
            for j in ry.0..=ry.1 {
                for i in rx.0..=rx.1 {
                    let idx = header.index(i, j, k);
                    if !grid.cells[idx] && prim.distance(&header.center(i, j, k)) == 0.0 {
                        grid.cells[idx] = true;
                    }
                }
            }
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, ScenePrimitive};

    fn unit_cube() -> Aabb {
        Aabb::new(Point3::origin(), Point3::new(1.0, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn single_voxel_sphere() {
        let scene = Scene::new(
            unit_cube(),
            vec![ScenePrimitive::sphere(Point3::new(0.5, 0.5, 0.5), 0.1).unwrap()],
        )
        .unwrap();
        let occ = voxelize(&scene, 1.0).unwrap();
        assert_eq!(occ.header.dims, [1, 1, 1]);
        assert_eq!(occ.cells, vec![true]);
    }

    #[test]
    fn empty_scene_is_all_free() {
        let occ = voxelize(&Scene::empty(unit_cube()), 0.5).unwrap();
        assert_eq!(occ.header.dims, [2, 2, 2]);
        assert_eq!(occ.occupied_count(), 0);
    }

    #[test]
    fn box_occupies_left_voxel_only() {
        let bounds = Aabb::new(Point3::origin(), Point3::new(2.0, 1.0, 1.0)).unwrap();
        let scene = Scene::new(
            bounds,
            vec![ScenePrimitive::cuboid(Point3::origin(), Point3::new(1.0, 1.0, 1.0)).unwrap()],
        )
        .unwrap();
        let occ = voxelize(&scene, 1.0).unwrap();
        assert_eq!(occ.header.dims, [2, 1, 1]);
        assert_eq!(occ.cells, vec![true, false]);
    }

    #[test]
    fn voxelize_matches_center_test_everywhere() {
        let bounds = Aabb::new(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.3, 1.1, 0.9)).unwrap();
        let scene = Scene::new(
            bounds,
            vec![
                ScenePrimitive::sphere(Point3::new(0.2, -0.1, 0.0), 0.45).unwrap(),
                ScenePrimitive::cuboid(Point3::new(-2.0, 0.5, -0.3), Point3::new(-0.4, 0.7, 0.2))
                    .unwrap(),
                ScenePrimitive::sphere(Point3::new(1.3, 1.1, 0.9), 0.3).unwrap(),
            ],
        )
        .unwrap();
        let occ = voxelize(&scene, 0.1).unwrap();
        let h = occ.header;
        assert_eq!(h.dims, [23, 21, 19]);
        for k in 0..h.dims[2] {
            for j in 0..h.dims[1] {
                for i in 0..h.dims[0] {
                    let c = h.center(i, j, k);
                    let expect = scene.primitives.iter().any(|p| p.distance(&c) == 0.0);
                    assert_eq!(occ.get(i, j, k), expect, "voxel {i} {j} {k}");
                }
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let scene = Scene::empty(unit_cube());
        let err = voxelize_with_budget(&scene, 0.01, 999_999).unwrap_err();
        assert!(matches!(
            err,
            FieldError::Resource {
                voxels: 1_000_000,
                ..
            }
        ));
        assert!(voxelize(&scene, 0.0).is_err());
    }

    #[test]
    fn lookup_modes_and_policy() {
        let header = GridHeader::new(Point3::origin(), 1.0, [3, 1, 1]).unwrap();
        let grid = DistanceGrid::new(header, vec![1.0, 0.0, 1.0], 100.0).unwrap();
        let mid = Point3::new(1.5, 0.5, 0.5);
        let left = Point3::new(0.2, 0.9, 0.1);
        assert_eq!(grid.lookup(&mid, LookupMode::Raw), 0.0);
        assert_eq!(grid.lookup(&mid, LookupMode::Conservative), 0.0);
        assert_eq!(grid.lookup(&left, LookupMode::Raw), 1.0);
        let c = grid.lookup(&left, LookupMode::Conservative);
        assert!((c - (1.0 - 3f64.sqrt() / 2.0)).abs() < 1e-15);
        assert!((c - 0.1340).abs() < 1e-4);
        let outside = Point3::new(-0.1, 0.5, 0.5);
        assert_eq!(grid.lookup(&outside, LookupMode::Raw), 100.0);
        let grid = grid.with_out_of_bounds(OutOfBounds::TreatOccupied);
        assert_eq!(grid.lookup(&outside, LookupMode::Raw), 0.0);
        assert_eq!(
            grid.lookup(&Point3::new(3.0, 0.5, 0.5), LookupMode::Raw),
            0.0
        );
    }

    #[test]
    fn header_index_round_trip() {
        let h = GridHeader::new(Point3::origin(), 0.5, [4, 3, 2]).unwrap();
        for idx in 0..h.len() {
            let [i, j, k] = h.coords(idx);
            assert_eq!(h.index(i, j, k), idx);
        }
        assert!(GridHeader::new(Point3::origin(), -1.0, [1, 1, 1]).is_err());
        assert!(GridHeader::new(Point3::origin(), 1.0, [1, 0, 1]).is_err());
    }
}
