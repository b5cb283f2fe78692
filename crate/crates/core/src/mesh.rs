//! Marching-cubes extraction of the zero level set and surface sampling.
//!
//! The 256-case table is derived at run time from the cube's faces: on every
//! face, each run of negative corners is cut off by its own segment, so
//! ambiguous faces are split the same way from both adjacent cubes and the
//! output is watertight.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::real::Real;
use crate::error::{Error, Result};
use crate::exec::{chunk_ranges, Executor};
use crate::math::{self, Vec3};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len() as u32;
        if self.triangles.iter().flatten().any(|&i| i >= n) {
            return Err(Error::Invalid("triangle index out of range".into()));
        }
        if self.vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite mesh vertex".into()));
        }
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        let mut edges = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)), ());
            }
        }
        edges.len()
    }

    /// `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * math::norm(math::cross(math::sub(b, a), math::sub(c, a)))
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }
}

/// Scalar samples on the vertices of a regular grid over `[lo, hi]³`,
/// x varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    pub cells: usize,
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn vertex(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = (self.hi - self.lo) / self.cells as f64;
        [self.lo + h * i as f64, self.lo + h * j as f64, self.lo + h * k as f64]
    }

    pub fn cell_size(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.cells + 1;
        self.values[i + n * (j + n * k)]
    }
}

/// Evaluates a field on the grid, one z-slab range per task. `init` builds
/// per-task scratch state.
pub fn sample_grid<E, T, I, G>(cells: usize, lo: f64, hi: f64, exec: &E, init: I, eval: G) -> Result<ScalarGrid>
where
    E: Executor,
    I: Fn() -> T + Sync,
    G: Fn(&mut T, Vec3) -> Result<f64> + Sync,
{
    if cells < 2 {
        return Err(Error::Invalid("marching cubes needs at least 2 cells per axis".into()));
    }
    let n = cells + 1;
    let h = (hi - lo) / cells as f64;
    let ranges = chunk_ranges(n, exec.workers() * 4);
    let parts = exec.map(ranges.len(), |p| -> Result<Vec<f64>> {
        let mut scratch = init();
        let mut out = Vec::with_capacity(ranges[p].len() * n * n);
        for k in ranges[p].clone() {
            for j in 0..n {
                for i in 0..n {
                    let x = [lo + h * i as f64, lo + h * j as f64, lo + h * k as f64];
                    out.push(eval(&mut scratch, x)?);
                }
            }
        }
        Ok(out)
    });
    let mut values = Vec::with_capacity(n * n * n);
    for p in parts {
        values.extend(p?);
    }
    Ok(ScalarGrid { cells, lo, hi, values })
}

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// Cube edges as corner pairs; the first corner has the smaller coordinate.
fn cube_edges() -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(12);
    for a in 0..8 {
        for bit in [1, 2, 4] {
            if a & bit == 0 {
                edges.push((a, a | bit));
            }
        }
    }
    edges
}

/// The six faces as corner cycles, counter-clockwise seen from outside.
fn cube_faces() -> [[usize; 4]; 6] {
    let mut faces = [[0usize; 4]; 6];
    let mut f = 0;
    for axis in 0..3 {
        for side in 0..2 {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let corner = |a: usize, b: usize| {
                let mut c = [0usize; 3];
                c[axis] = side;
                c[u] = a;
                c[v] = b;
                c[0] | c[1] << 1 | c[2] << 2
            };
            // (u, v, axis) is right-handed, so this cycle is counter-clockwise
            // around +axis; reverse it on the low side.
            let mut cyc = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
            if side == 0 {
                cyc.reverse();
            }
            faces[f] = cyc;
            f += 1;
        }
    }
    faces
}

/// Triangles (as cube-edge indices) for each of the 256 sign cases; bit `c`
/// of the case is set when corner `c` is negative.
pub fn case_table() -> Vec<Vec<[u8; 3]>> {
    let edges = cube_edges();
    let edge_of = |a: usize, b: usize| {
        edges
            .iter()
            .position(|&(p, q)| (p, q) == (a.min(b), a.max(b)))
            .expect("corners share an edge")
    };
    let faces = cube_faces();
    let mut table = Vec::with_capacity(256);
    for case in 0..256usize {
        let neg = |c: usize| case >> c & 1 == 1;
        // next[e] = edge reached from crossing e along the surface
        let mut next = [usize::MAX; 12];
        for face in &faces {
            // crossings in cycle order: (edge, entering-negative?)
            let mut cross = Vec::new();
            for i in 0..4 {
                let (a, b) = (face[i], face[(i + 1) % 4]);
                if neg(a) != neg(b) {
                    cross.push((edge_of(a, b), neg(b)));
                }
            }
            for (i, &(e, entering)) in cross.iter().enumerate() {
                if entering {
                    let exit = cross[(i + 1) % cross.len()];
                    debug_assert!(!exit.1);
                    next[e] = exit.0;
                }
            }
        }
        let mut seen = [false; 12];
        let mut tris = Vec::new();
        for start in 0..12 {
            if next[start] == usize::MAX || seen[start] {
                continue;
            }
            let mut lp = Vec::new();
            let mut e = start;
            while !seen[e] {
                seen[e] = true;
                lp.push(e as u8);
                e = next[e];
            }
            for i in 1..lp.len() - 1 {
                tris.push([lp[0], lp[i], lp[i + 1]]);
            }
        }
        table.push(tris);
    }
    table
}

/// Marching cubes on sampled values. Vertices are shared between
/// neighbouring cells and triangles face towards positive values.
pub fn marching_cubes_grid(grid: &ScalarGrid) -> TriangleMesh {
    let table = case_table();
    let edges = cube_edges();
    let n = grid.cells;
    let mut mesh = TriangleMesh::default();
    let mut index: BTreeMap<(usize, u8), u32> = BTreeMap::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let mut vals = [0.0; 8];
                let mut case = 0usize;
                for (c, off) in CORNERS.iter().enumerate() {
                    vals[c] = grid.at(i + off[0], j + off[1], k + off[2]);
                    if vals[c] < 0.0 {
                        case |= 1 << c;
                    }
                }
                let tris = &table[case];
                if tris.is_empty() {
                    continue;
                }
                let mut vid = [u32::MAX; 12];
                for t in tris {
                    for &e in t {
                        let e = e as usize;
                        if vid[e] != u32::MAX {
                            continue;
                        }
                        let (a, b) = edges[e];
                        let (oa, ob) = (CORNERS[a], CORNERS[b]);
                        let ga = [i + oa[0], j + oa[1], k + oa[2]];
                        let axis = (a ^ b).trailing_zeros() as u8;
                        let key = (ga[0] + (n + 1) * (ga[1] + (n + 1) * ga[2]), axis);
                        vid[e] = *index.entry(key).or_insert_with(|| {
                            let pa = grid.vertex(ga[0], ga[1], ga[2]);
                            let pb = grid.vertex(i + ob[0], j + ob[1], k + ob[2]);
                            let t = vals[a] / (vals[a] - vals[b]);
                            mesh.vertices.push(math::lerp(pa, pb, t));
                            (mesh.vertices.len() - 1) as u32
                        });
                    }
                    mesh.triangles.push([vid[t[0] as usize], vid[t[1] as usize], vid[t[2] as usize]]);
                }
            }
        }
    }
    mesh
}

/// Samples `f` on a `resolution³`-cell grid over `[lo, hi]³` and extracts its
/// zero level set.
pub fn marching_cubes(f: impl Fn(Vec3) -> f64 + Sync, resolution: usize, lo: f64, hi: f64) -> Result<TriangleMesh> {
    let grid = sample_grid(resolution, lo, hi, &crate::exec::Sequential, || (), |_, x| Ok(f(x)))?;
    Ok(marching_cubes_grid(&grid))
}

/// Area-weighted uniform samples on the mesh surface.
pub fn mesh_to_points(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    let mut cum = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        total += mesh.triangle_area(t);
        cum.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::Invalid("cannot sample an empty mesh".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.random::<f64>() * total;
        let t = cum.partition_point(|&c| c <= r).min(cum.len() - 1);
        let [a, b, c] = mesh.corners(t);
        let s = Real::sqrt(rng.random::<f64>());
        let u: f64 = rng.random();
        let (wa, wb, wc) = (1.0 - s, s * (1.0 - u), s * u);
        out.push([
            wa * a[0] + wb * b[0] + wc * c[0],
            wa * a[1] + wb * b[1] + wc * c[1],
            wa * a[2] + wb * b[2] + wc * c[2],
        ]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Primitive;

    fn sphere(x: Vec3) -> f64 {
        math::norm(x) - 0.5
    }

    #[test]
    fn table_is_complementary_in_size() {
        let t = case_table();
        assert!(t[0].is_empty() && t[255].is_empty());
        assert_eq!(t[1].len(), 1);
        assert_eq!(t[3].len(), 2);
        for c in 0..256 {
            for tri in &t[c] {
                assert!(tri.iter().all(|&e| e < 12));
            }
        }
    }

    #[test]
    fn positive_field_is_empty() {
        let m = marching_cubes(|_| 1.0, 8, -1.0, 1.0).unwrap();
        assert!(m.is_empty() && m.vertices.is_empty());
    }

    #[test]
    fn sphere_vertices_and_orientation() {
        let m = marching_cubes(sphere, 64, -1.0, 1.0).unwrap();
        m.validate().unwrap();
        let h = 2.0 / 64.0;
        assert!(m.vertices.iter().all(|v| (math::norm(*v) - 0.5).abs() < h));
        for t in 0..m.triangles.len() {
            let [a, b, c] = m.corners(t);
            let nrm = math::cross(math::sub(b, a), math::sub(c, a));
            let centroid = math::scale(math::add(math::add(a, b), c), 1.0 / 3.0);
            assert!(math::dot(nrm, centroid) >= 0.0, "triangle {t} faces inwards");
        }
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn torus_has_genus_one() {
        let t = Primitive::Torus { center: [0.0; 3], major: 0.45, minor: 0.18 };
        let m = marching_cubes(|x| t.sdf(x), 48, -1.0, 1.0).unwrap();
        assert!(!m.is_empty());
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn every_edge_is_shared_by_two_triangles() {
        let b = Primitive::Box { center: [0.1, 0.0, -0.05], half: [0.3, 0.2, 0.4] };
        let s = Primitive::Sphere { center: [-0.3, 0.1, 0.0], radius: 0.33 };
        let m = marching_cubes(|x| b.sdf(x).min(s.sdf(x)), 37, -1.0, 1.0).unwrap();
        let mut count = BTreeMap::new();
        for t in &m.triangles {
            for k in 0..3 {
                let (a, c) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(c), a.max(c))).or_insert(0) += 1;
            }
        }
        assert!(count.values().all(|&c| c == 2));
    }

    #[test]
    fn ambiguous_checkerboard_is_watertight() {
        let f = |x: Vec3| Real::sin(9.0 * x[0]) * Real::sin(9.0 * x[1]) * Real::sin(9.0 * x[2]) + 0.05;
        let m = marching_cubes(f, 20, -1.0, 1.0).unwrap();
        let mut count = BTreeMap::new();
        for t in &m.triangles {
            for k in 0..3 {
                let (a, c) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(c), a.max(c))).or_insert(0) += 1;
            }
        }
        // open only at the domain boundary
        let h = 2.0 / 20.0;
        for (&(a, c), &n) in &count {
            if n != 2 {
                let on_border = |v: Vec3| v.iter().any(|&x| (x.abs() - 1.0).abs() < 1e-9);
                let (va, vc) = (m.vertices[a as usize], m.vertices[c as usize]);
                assert!(on_border(va) && on_border(vc), "open edge inside the domain ({h})");
            }
        }
    }

    #[test]
    fn point_sampling() {
        let single = TriangleMesh {
            vertices: alloc::vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            triangles: alloc::vec![[0, 1, 2]],
        };
        for p in mesh_to_points(&single, 1000, 1).unwrap() {
            assert!(p[0] >= 0.0 && p[1] >= 0.0 && p[0] + p[1] <= 1.0 + 1e-12 && p[2] == 0.0);
        }
        assert_eq!(mesh_to_points(&single, 10, 4).unwrap(), mesh_to_points(&single, 10, 4).unwrap());
        assert!(mesh_to_points(&TriangleMesh::default(), 10, 1).is_err());

        let two = TriangleMesh {
            vertices: alloc::vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 2.0, 0.0],
                [5.0, 0.0, 0.0],
                [8.0, 0.0, 0.0],
                [5.0, 2.0, 0.0],
            ],
            triangles: alloc::vec![[0, 1, 2], [3, 4, 5]],
        };
        let n = 40_000;
        let big = mesh_to_points(&two, n, 2).unwrap().iter().filter(|p| p[0] >= 5.0).count() as f64;
        let sigma = (n as f64 * 0.75 * 0.25).sqrt();
        assert!((big - 0.75 * n as f64).abs() < 3.0 * sigma);

        let m = marching_cubes(sphere, 48, -1.0, 1.0).unwrap();
        for p in mesh_to_points(&m, 2000, 3).unwrap() {
            assert!((math::norm(p) - 0.5).abs() < 2.0 / 48.0);
        }
    }
}
