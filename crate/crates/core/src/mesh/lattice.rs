//! Equilateral triangular lattices restricted to lattice-aligned polygons.
//!
//! Node `(i, j)` sits at `origin + ((i + j/2)·h, j·(√3/2)·h)`. Its six
//! neighbours are `(i±1, j)`, `(i, j+1)`, `(i-1, j+1)`, `(i, j-1)` and
//! `(i+1, j-1)`. Nodes are numbered row by row (increasing `j`, then `i`).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BoundaryMarker, ElementKind, Mesh, MeshError, Point};

pub const NEIGHBOR_OFFSETS: [[i64; 2]; 6] = [[1, 0], [0, 1], [-1, 1], [-1, 0], [0, -1], [1, -1]];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LatticeShape {
    /// Equilateral triangle with `n` edges per side.
    Triangle { n: usize },
    /// 60° parallelogram with `nx` edges along x and `ny` rows.
    Parallelogram { nx: usize, ny: usize },
    /// Regular hexagon of lattice radius `radius`, centred on the origin.
    Hexagon { radius: usize },
}

impl LatticeShape {
    pub fn contains(&self, i: i64, j: i64) -> bool {
        match *self {
            LatticeShape::Triangle { n } => i >= 0 && j >= 0 && i + j <= n as i64,
            LatticeShape::Parallelogram { nx, ny } => {
                (0..=nx as i64).contains(&i) && (0..=ny as i64).contains(&j)
            }
            LatticeShape::Hexagon { radius } => {
                let r = radius as i64;
                i.abs() <= r && j.abs() <= r && (i + j).abs() <= r
            }
        }
    }

    fn index_bounds(&self) -> ([i64; 2], [i64; 2]) {
        match *self {
            LatticeShape::Triangle { n } => ([0, n as i64], [0, n as i64]),
            LatticeShape::Parallelogram { nx, ny } => ([0, nx as i64], [0, ny as i64]),
            LatticeShape::Hexagon { radius } => {
                let r = radius as i64;
                ([-r, r], [-r, r])
            }
        }
    }

    fn min_extent(&self) -> usize {
        match *self {
            LatticeShape::Triangle { n } => n,
            LatticeShape::Parallelogram { nx, ny } => nx.min(ny),
            LatticeShape::Hexagon { radius } => radius,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Lattice {
    pub h: f64,
    pub origin: Point,
    pub shape: LatticeShape,
    coords: Vec<[i64; 2]>,
    index: HashMap<[i64; 2], usize>,
}

impl Lattice {
    pub fn new(shape: LatticeShape, h: f64, origin: Point) -> Result<Self, MeshError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(MeshError::InvalidParameter(format!("lattice spacing {h}")));
        }
        if shape.min_extent() < 1 {
            return Err(MeshError::TooFewSubdivisions { subdivisions: 0 });
        }
        let ([i0, i1], [j0, j1]) = shape.index_bounds();
        let mut coords = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                if shape.contains(i, j) {
                    coords.push([i, j]);
                }
            }
        }
        let index = coords.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        Ok(Lattice {
            h,
            origin,
            shape,
            coords,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self, k: usize) -> [i64; 2] {
        self.coords[k]
    }

    pub fn node_at(&self, i: i64, j: i64) -> Option<usize> {
        self.index.get(&[i, j]).copied()
    }

    pub fn position(&self, k: usize) -> Point {
        let [i, j] = self.coords[k];
        let (i, j) = (i as f64, j as f64);
        [
            self.origin[0] + (i + 0.5 * j) * self.h,
            self.origin[1] + j * 0.5 * 3f64.sqrt() * self.h,
        ]
    }

    pub fn positions(&self) -> Vec<Point> {
        (0..self.len()).map(|k| self.position(k)).collect()
    }

    /// Neighbours in [`NEIGHBOR_OFFSETS`] order.
    pub fn neighbors(&self, k: usize) -> [Option<usize>; 6] {
        let [i, j] = self.coords[k];
        NEIGHBOR_OFFSETS.map(|[di, dj]| self.node_at(i + di, j + dj))
    }

    /// A node is interior when all six neighbours are present.
    pub fn is_interior(&self, k: usize) -> bool {
        self.neighbors(k).iter().all(Option::is_some)
    }

    /// Triangulates the lattice with counter-clockwise triangles. Node
    /// numbering matches the lattice.
    pub fn to_mesh(
        &self,
        marker: impl FnMut(Point, Point) -> BoundaryMarker,
    ) -> Result<Mesh, MeshError> {
        let mut conn = Vec::new();
        for &[i, j] in &self.coords {
            let up = [[i, j], [i + 1, j], [i, j + 1]];
            let down = [[i, j], [i, j + 1], [i - 1, j + 1]];
            for tri in [up, down] {
                let ids: Option<Vec<usize>> =
                    tri.iter().map(|&[a, b]| self.node_at(a, b)).collect();
                if let Some(ids) = ids {
                    conn.extend(ids);
                }
            }
        }
        Mesh::with_derived_boundary(self.positions(), ElementKind::Triangle, conn, marker)
    }
}
