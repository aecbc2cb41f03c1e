//! Distance fields: the exact analytic field over a [`Scene`] and voxel
//! grids built from an occupancy map by exact Euclidean distance transform.

mod cloud;
mod edt;
mod grid;
mod io;
mod scene;

use thiserror::Error;

use crate::geometry::{GeometryError, Point3};

pub use cloud::{ingest_xyz, parse_xyz};
pub use edt::{edt, DEFAULT_MAX_DISTANCE};
pub use grid::{
    voxelize, voxelize_with_budget, DistanceGrid, GridHeader, LookupMode, OccupancyGrid,
    OutOfBounds, DEFAULT_VOXEL_BUDGET,
};
pub use io::{
    load_distance_grid, load_grid, load_occupancy_grid, read_grid, save_grid, write_grid, AnyGrid,
    GridKind, GRID_MAGIC, GRID_VERSION,
};
pub use scene::{AnalyticField, Scene, DEFAULT_EMPTY_DISTANCE};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("grid format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("grid of {voxels} voxels exceeds the budget of {budget}")]
    Resource { voxels: u128, budget: u64 },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("scene json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A queryable distance `d(p)` from a point to the nearest obstacle.
///
/// Voxel grids interpret `mode`; exact fields ignore it.
pub trait DistanceField {
    fn distance(&self, p: &Point3, mode: LookupMode) -> f64;
}

impl<F: DistanceField + ?Sized> DistanceField for &F {
    #[inline]
    fn distance(&self, p: &Point3, mode: LookupMode) -> f64 {
        (**self).distance(p, mode)
    }
}
