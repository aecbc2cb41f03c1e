//! Exact Euclidean distance transform between voxel centers.
//!
//! Separable lower-envelope method (Felzenszwalb & Huttenlocher): three 1-D
//! passes over squared distances in voxel units. All intermediate values are
//! small integers held in `f64`, so every pass is exact and the result equals
//! the brute-force nearest-center distance.

use super::{DistanceGrid, OccupancyGrid};

/// Default truncation distance in meters.
pub const DEFAULT_MAX_DISTANCE: f64 = 100.0;

/// Distance from each voxel center to the nearest occupied voxel center,
/// capped at `max_distance`. Occupied voxels get exactly zero; a grid with no
/// occupied voxel is `max_distance` everywhere.
pub fn edt(occ: &OccupancyGrid, max_distance: f64) -> DistanceGrid {
    let header = occ.header;
    let h = header.resolution;
    let values = squared_edt(occ)
        .into_iter()
        .map(|sq| {
            if sq.is_finite() {
                (sq.sqrt() * h).min(max_distance)
            } else {
                max_distance
            }
        })
        .collect();
    DistanceGrid::new(header, values, max_distance).expect("edt preserves grid shape")
}

/// Squared distances in voxel units; `INFINITY` where nothing is occupied.
fn squared_edt(occ: &OccupancyGrid) -> Vec<f64> {
    let [nx, ny, nz] = occ.header.dims;
    let mut sq: Vec<f64> = occ
        .cells
        .iter()
        .map(|&c| if c { 0.0 } else { f64::INFINITY })
        .collect();

    let longest = nx.max(ny).max(nz);
    let mut env = Envelope::with_capacity(longest);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];

    let mut pass =
        |sq: &mut Vec<f64>, n: usize, stride: usize, starts: &mut dyn Iterator<Item = usize>| {
            for base in starts {
                for t in 0..n {
                    line[t] = sq[base + t * stride];
                }
                env.transform(&line[..n], &mut out[..n]);
                for t in 0..n {
                    sq[base + t * stride] = out[t];
                }
            }
        };

    pass(&mut sq, nx, 1, &mut (0..ny * nz).map(|r| r * nx));
    pass(
        &mut sq,
        ny,
        nx,
        &mut (0..nz).flat_map(|k| (0..nx).map(move |i| i + k * nx * ny)),
    );
    pass(&mut sq, nz, nx * ny, &mut (0..nx * ny));
    sq
}

/// Scratch for the 1-D lower envelope of parabolas `f[v] + (x - v)^2`.
struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n),
        }
    }

    /// `out[x] = min_v f[v] + (x - v)^2` over sites with finite `f[v]`.
    fn transform(&mut self, f: &[f64], out: &mut [f64]) {
        self.sites.clear();
        self.bounds.clear();
        for q in 0..f.len() {
            if !f[q].is_finite() {
                continue;
            }
            let fq = f[q] + (q * q) as f64;
            // Pop parabolas hidden behind the new one. `bounds[k]` is where
            // parabola k starts to be the minimum.
            while let Some(&p) = self.sites.last() {
                let s = (fq - (f[p] + (p * p) as f64)) / (2 * (q - p)) as f64;
                if s <= *self.bounds.last().unwrap() {
                    self.sites.pop();
                    self.bounds.pop();
                } else {
                    self.sites.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
            if self.sites.is_empty() {
                self.sites.push(q);
                self.bounds.push(f64::NEG_INFINITY);
            }
        }
        if self.sites.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (x, o) in out.iter_mut().enumerate() {
            while k + 1 < self.sites.len() && self.bounds[k + 1] < x as f64 {
                k += 1;
            }
            let v = self.sites[k];
            let dx = x.abs_diff(v) as f64;
            *o = f[v] + dx * dx;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridHeader;
    use crate::geometry::Point3;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// All-pairs nearest occupied center, independent of the envelope code.
    fn brute_force(occ: &OccupancyGrid, max_distance: f64) -> Vec<f64> {
        let h = occ.header;
        let centers: Vec<Point3> = (0..h.len())
            .filter(|&i| occ.cells[i])
            .map(|i| {
                let [a, b, c] = h.coords(i);
                h.center(a, b, c)
            })
            .collect();
        (0..h.len())
            .map(|i| {
                let [a, b, c] = h.coords(i);
                let p = h.center(a, b, c);
                centers
                    .iter()
                    .map(|q| (p - q).norm())
                    .fold(max_distance, f64::min)
            })
            .collect()
    }

    fn random_grid(rng: &mut ChaCha8Rng, dims: [usize; 3], fill: f64, res: f64) -> OccupancyGrid {
        let header = GridHeader::new(Point3::new(-1.0, 0.5, 2.0), res, dims).unwrap();
        let cells = (0..header.len()).map(|_| rng.random_bool(fill)).collect();
        OccupancyGrid::new(header, cells).unwrap()
    }

    #[test]
    fn line_with_middle_obstacle() {
        let header = GridHeader::new(Point3::origin(), 1.0, [3, 1, 1]).unwrap();
        let occ = OccupancyGrid::new(header, vec![false, true, false]).unwrap();
        assert_eq!(edt(&occ, 100.0).values, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn diagonal_neighbor() {
        let header = GridHeader::new(Point3::origin(), 1.0, [3, 3, 1]).unwrap();
        let mut occ = OccupancyGrid::empty(header);
        occ.set(0, 0, 0, true);
        let d = edt(&occ, 100.0);
        assert_eq!(d.get(1, 1, 0), 2f64.sqrt());
        assert_eq!(d.get(2, 2, 0), 8f64.sqrt());
    }

    #[test]
    fn empty_grid_is_max_distance() {
        let header = GridHeader::new(Point3::origin(), 0.5, [4, 2, 3]).unwrap();
        let d = edt(&OccupancyGrid::empty(header), 7.5);
        assert!(d.values.iter().all(|&v| v == 7.5));
    }

    #[test]
    fn truncation_caps_values() {
        let header = GridHeader::new(Point3::origin(), 1.0, [10, 1, 1]).unwrap();
        let mut occ = OccupancyGrid::empty(header);
        occ.set(0, 0, 0, true);
        let d = edt(&occ, 3.5);
        assert_eq!(&d.values[..6], &[0.0, 1.0, 2.0, 3.0, 3.5, 3.5]);
    }

    #[test]
    fn random_32_cubed_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let occ = random_grid(&mut rng, [32, 32, 32], 0.05, 0.1);
        let fast = edt(&occ, 100.0);
        let slow = brute_force(&occ, 100.0);
        for (a, b) in fast.values.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn sparse_grids_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for fill in [0.0005, 0.002, 0.3, 0.9] {
            let occ = random_grid(&mut rng, [17, 9, 23], fill, 0.25);
            let fast = edt(&occ, 3.0);
            let slow = brute_force(&occ, 3.0);
            for (a, b) in fast.values.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-9, "fill {fill}: {a} vs {b}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn matches_brute_force_and_is_lipschitz(
            seed in any::<u64>(),
            nx in 1usize..14, ny in 1usize..14, nz in 1usize..14,
            fill in 0.0..0.4f64,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let occ = random_grid(&mut rng, [nx, ny, nz], fill, 0.2);
            let fast = edt(&occ, 100.0);
            let slow = brute_force(&occ, 100.0);
            for (i, (a, b)) in fast.values.iter().zip(&slow).enumerate() {
                prop_assert!((a - b).abs() <= 1e-9);
                if occ.cells[i] {
                    prop_assert_eq!(*a, 0.0);
                }
            }
            let h = fast.header;
            for idx in 0..h.len() {
                let [i, j, k] = h.coords(idx);
                let v = fast.values[idx];
                for (di, dj, dk) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
                    if i + di < nx && j + dj < ny && k + dk < nz {
                        let w = fast.get(i + di, j + dj, k + dk);
                        prop_assert!((v - w).abs() <= h.resolution + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn adding_obstacles_never_increases_distance(seed in any::<u64>(), extra in 0usize..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut occ = random_grid(&mut rng, [10, 8, 6], 0.02, 0.3);
            let before = edt(&occ, 50.0);
            let idx = extra % occ.cells.len();
            occ.cells[idx] = true;
            let after = edt(&occ, 50.0);
            for (a, b) in after.values.iter().zip(&before.values) {
                prop_assert!(a <= b);
            }
        }
    }
}
