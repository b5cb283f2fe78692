//! Symmetric Chamfer-L1 distance with exact uniform-grid nearest neighbours.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use num_traits::float::FloatCore;

use crate::real::Real;
use crate::error::{Error, Result};
use crate::math::{self, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChamferReport {
    /// `0.5 · (acc + comp)`.
    pub chamfer: f64,
    /// Mean distance from the first cloud (reconstruction) to the second.
    pub acc: f64,
    /// Mean distance from the second cloud (ground truth) to the first.
    pub comp: f64,
}

/// Points bucketed into a uniform grid over their bounding box.
pub struct PointGrid<'a> {
    points: &'a [Vec3],
    lo: Vec3,
    cell: f64,
    dims: [usize; 3],
    starts: Vec<usize>,
    order: Vec<u32>,
}

impl<'a> PointGrid<'a> {
    pub fn new(points: &'a [Vec3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("empty point cloud".into()));
        }
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let ext = math::sub(hi, lo);
        let longest = ext[0].max(ext[1]).max(ext[2]);
        // about two points per cell for a surface-like cloud
        let per_axis = Real::cbrt(points.len() as f64 / 2.0).clamp(1.0, 256.0);
        let cell = if longest > 0.0 { longest / per_axis } else { 1.0 };
        let dims = [
            ((ext[0] / cell) as usize + 1).max(1),
            ((ext[1] / cell) as usize + 1).max(1),
            ((ext[2] / cell) as usize + 1).max(1),
        ];
        let mut grid = Self {
            points,
            lo,
            cell,
            dims,
            starts: Vec::new(),
            order: Vec::new(),
        };
        let ncell = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0usize; ncell + 1];
        let ids: Vec<usize> = points.iter().map(|p| grid.flat(grid.cell_of(*p))).collect();
        for &c in &ids {
            counts[c + 1] += 1;
        }
        for i in 0..ncell {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut order = vec![0u32; points.len()];
        for (i, &c) in ids.iter().enumerate() {
            order[fill[c]] = i as u32;
            fill[c] += 1;
        }
        grid.starts = counts;
        grid.order = order;
        Ok(grid)
    }

    fn cell_of(&self, p: Vec3) -> [usize; 3] {
        let mut c = [0usize; 3];
        for k in 0..3 {
            let f = FloatCore::floor((p[k] - self.lo[k]) / self.cell);
            c[k] = if f <= 0.0 { 0 } else { (f as usize).min(self.dims[k] - 1) };
        }
        c
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    /// Exact distance from `q` to the nearest stored point.
    pub fn nearest_distance(&self, q: Vec3) -> f64 {
        let c = self.cell_of(q);
        let mut best2 = f64::INFINITY;
        let max_ring = self.dims[0].max(self.dims[1]).max(self.dims[2]);
        for ring in 0..=max_ring {
            let r = ring as isize;
            for dz in -r..=r {
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                            continue;
                        }
                        let (x, y, z) = (c[0] as isize + dx, c[1] as isize + dy, c[2] as isize + dz);
                        if x < 0 || y < 0 || z < 0 {
                            continue;
                        }
                        let (x, y, z) = (x as usize, y as usize, z as usize);
                        if x >= self.dims[0] || y >= self.dims[1] || z >= self.dims[2] {
                            continue;
                        }
                        let f = self.flat([x, y, z]);
                        for &i in &self.order[self.starts[f]..self.starts[f + 1]] {
                            let d = math::sub(self.points[i as usize], q);
                            best2 = best2.min(math::dot(d, d));
                        }
                    }
                }
            }
            // every unvisited cell is at least `ring` cells away
            let reach = ring as f64 * self.cell;
            if best2.is_finite() && best2 <= reach * reach {
                break;
            }
        }
        Real::sqrt(best2)
    }
}

fn mean_nearest(from: &[Vec3], to: &PointGrid) -> f64 {
    from.iter().map(|p| to.nearest_distance(*p)).sum::<f64>() / from.len() as f64
}

pub fn chamfer_l1(a: &[Vec3], b: &[Vec3]) -> Result<ChamferReport> {
    let ga = PointGrid::new(a)?;
    let gb = PointGrid::new(b)?;
    let acc = mean_nearest(a, &gb);
    let comp = mean_nearest(b, &ga);
    Ok(ChamferReport {
        chamfer: 0.5 * (acc + comp),
        acc,
        comp,
    })
}

/// Quadratic-time reference implementation.
pub fn chamfer_l1_brute_force(a: &[Vec3], b: &[Vec3]) -> Result<ChamferReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Invalid("empty point cloud".into()));
    }
    let one_sided = |from: &[Vec3], to: &[Vec3]| {
        from.iter()
            .map(|p| {
                let best2 = to
                    .iter()
                    .map(|q| {
                        let d = math::sub(*q, *p);
                        math::dot(d, d)
                    })
                    .fold(f64::INFINITY, f64::min);
                Real::sqrt(best2)
            })
            .sum::<f64>()
            / from.len() as f64
    };
    let acc = one_sided(a, b);
    let comp = one_sided(b, a);
    Ok(ChamferReport {
        chamfer: 0.5 * (acc + comp),
        acc,
        comp,
    })
}
