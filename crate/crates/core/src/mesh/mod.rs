//! 2D meshes of triangles or quadrilaterals with boundary-edge markers.
//!
//! A [`Mesh`] is immutable once built and is validated on construction:
//! indices in range, counter-clockwise non-degenerate elements, boundary
//! edges that really lie on the boundary and no coincident nodes.

mod generate;
pub mod io;
pub mod lattice;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{
    annulus, equilateral_triangle_domain, equilateral_triangle_subdivisions, lattice_mesh,
    split_quads, structured_quad_mesh, QuadRegion, SideMarkers,
};

pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no {0}")]
    Empty(&'static str),
    #[error("element {element}: dangling index {index} (mesh has {n_nodes} nodes)")]
    DanglingIndex {
        element: usize,
        index: usize,
        n_nodes: usize,
    },
    #[error("element {element}: zero-area element (signed area {area:e})")]
    DegenerateElement { element: usize, area: f64 },
    #[error("element {element}: clockwise or non-convex vertex ordering")]
    InvertedElement { element: usize },
    #[error("boundary entry {entry}: edge ({a}, {b}) is not a boundary edge of the mesh")]
    NotABoundaryEdge { entry: usize, a: usize, b: usize },
    #[error("boundary entry {entry}: edge ({a}, {b}) listed more than once")]
    DuplicateBoundaryEdge { entry: usize, a: usize, b: usize },
    #[error("nodes {a} and {b} coincide")]
    DuplicateNodes { a: usize, b: usize },
    #[error("degenerate mesh: {subdivisions} subdivision(s) per side, at least 2 required")]
    TooFewSubdivisions { subdivisions: usize },
    #[error("{what} = {value} is not an integer multiple of h = {h}")]
    NonIntegralSubdivision { what: &'static str, value: f64, h: f64 },
    #[error("invalid mesh parameter: {0}")]
    InvalidParameter(String),
    #[error("element index {index} out of range ({n_elements} elements)")]
    ElementOutOfRange { index: usize, n_elements: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<MeshError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Triangle,
    Quad,
}

impl ElementKind {
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementKind::Triangle => 3,
            ElementKind::Quad => 4,
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementKind::Triangle => "tri",
            ElementKind::Quad => "quad",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMarker {
    Dirichlet,
    Neumann,
    Robin,
}

impl BoundaryMarker {
    fn precedence(self) -> u8 {
        match self {
            BoundaryMarker::Dirichlet => 2,
            BoundaryMarker::Robin => 1,
            BoundaryMarker::Neumann => 0,
        }
    }
}

impl fmt::Display for BoundaryMarker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryMarker::Dirichlet => "dirichlet",
            BoundaryMarker::Neumann => "neumann",
            BoundaryMarker::Robin => "robin",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub marker: BoundaryMarker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    kind: ElementKind,
    connectivity: Vec<usize>,
    boundary: Vec<BoundaryEdge>,
}

/// Geometry of a single element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub kind: ElementKind,
    pub vertices: Vec<Point>,
    /// Edge `k` runs from vertex `k` to vertex `k + 1`.
    pub edge_lengths: Vec<f64>,
    /// Triangles only: `medians[i]` is the distance from vertex `i` to the
    /// midpoint of the opposite edge.
    pub medians: Option<[f64; 3]>,
    /// Mean edge length. For an equilateral triangle this is the side, for a
    /// quad `(h1 + h2 + h3 + h4) / 4`.
    pub h_char: f64,
    pub area: f64,
}

impl ElementGeometry {
    pub fn from_vertices(kind: ElementKind, vertices: Vec<Point>) -> Self {
        assert_eq!(vertices.len(), kind.nodes_per_element());
        let n = vertices.len();
        let edge_lengths: Vec<f64> = (0..n)
            .map(|k| distance(vertices[k], vertices[(k + 1) % n]))
            .collect();
        let medians = match kind {
            ElementKind::Triangle => Some(std::array::from_fn(|i| {
                let p = vertices[(i + 1) % 3];
                let q = vertices[(i + 2) % 3];
                distance(vertices[i], [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])])
            })),
            ElementKind::Quad => None,
        };
        let h_char = edge_lengths.iter().sum::<f64>() / n as f64;
        let area = polygon_area(&vertices);
        ElementGeometry {
            kind,
            vertices,
            edge_lengths,
            medians,
            h_char,
            area,
        }
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        [sx / n, sy / n]
    }

    /// The same element with its vertex labels rotated by `shift` positions.
    pub fn rotated(&self, shift: usize) -> Self {
        let n = self.vertices.len();
        let vertices = (0..n).map(|k| self.vertices[(k + shift) % n]).collect();
        Self::from_vertices(self.kind, vertices)
    }
}

pub(crate) fn distance(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Signed shoelace area; positive for counter-clockwise ordering.
pub(crate) fn polygon_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|k| {
            let p = v[k];
            let q = v[(k + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds and validates a mesh from flat connectivity
    /// (`kind.nodes_per_element()` indices per element).
    pub fn new(
        nodes: Vec<Point>,
        kind: ElementKind,
        connectivity: Vec<usize>,
        boundary: Vec<BoundaryEdge>,
    ) -> Result<Self, MeshError> {
        let mesh = Mesh {
            nodes,
            kind,
            connectivity,
            boundary,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Builds a mesh whose boundary edges are derived from the topology. Each
    /// edge is oriented as in its element (so the outward normal is
    /// `(dy, -dx)`) and marked by `marker(a, b)`.
    pub fn with_derived_boundary(
        nodes: Vec<Point>,
        kind: ElementKind,
        connectivity: Vec<usize>,
        mut marker: impl FnMut(Point, Point) -> BoundaryMarker,
    ) -> Result<Self, MeshError> {
        let npe = kind.nodes_per_element();
        let mut count: HashMap<(usize, usize), (usize, usize, usize)> = HashMap::new();
        for el in connectivity.chunks_exact(npe) {
            for k in 0..npe {
                let (a, b) = (el[k], el[(k + 1) % npe]);
                count.entry(edge_key(a, b)).or_insert((a, b, 0)).2 += 1;
            }
        }
        let mut edges: Vec<(usize, usize)> = count
            .into_values()
            .filter(|&(_, _, n)| n == 1)
            .map(|(a, b, _)| (a, b))
            .collect();
        edges.sort_unstable();
        let boundary = edges
            .into_iter()
            .map(|(a, b)| {
                let marker = marker(
                    *nodes.get(a).unwrap_or(&[f64::NAN; 2]),
                    *nodes.get(b).unwrap_or(&[f64::NAN; 2]),
                );
                BoundaryEdge { a, b, marker }
            })
            .collect();
        Mesh::new(nodes, kind, connectivity, boundary)
    }

    fn validate(&self) -> Result<(), MeshError> {
        let npe = self.kind.nodes_per_element();
        if self.nodes.is_empty() {
            return Err(MeshError::Empty("nodes"));
        }
        if self.connectivity.is_empty() {
            return Err(MeshError::Empty("elements"));
        }
        if self.connectivity.len() % npe != 0 {
            return Err(MeshError::InvalidParameter(format!(
                "connectivity length {} is not a multiple of {npe}",
                self.connectivity.len()
            )));
        }
        let n_nodes = self.nodes.len();
        let span = self.coordinate_span();
        for (e, el) in self.connectivity.chunks_exact(npe).enumerate() {
            if let Some(&index) = el.iter().find(|&&i| i >= n_nodes) {
                return Err(MeshError::DanglingIndex {
                    element: e,
                    index,
                    n_nodes,
                });
            }
            let v: Vec<Point> = el.iter().map(|&i| self.nodes[i]).collect();
            let area = polygon_area(&v);
            if area.abs() <= 1e-14 * span * span {
                return Err(MeshError::DegenerateElement { element: e, area });
            }
            // every corner must turn left
            let convex_ccw = (0..npe).all(|k| {
                let p = v[k];
                let q = v[(k + 1) % npe];
                let r = v[(k + 2) % npe];
                (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0]) > 0.0
            });
            if !convex_ccw {
                return Err(MeshError::InvertedElement { element: e });
            }
        }

        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for el in self.connectivity.chunks_exact(npe) {
            for k in 0..npe {
                *edge_count
                    .entry(edge_key(el[k], el[(k + 1) % npe]))
                    .or_default() += 1;
            }
        }
        let mut seen = HashMap::new();
        for (entry, be) in self.boundary.iter().enumerate() {
            let key = edge_key(be.a, be.b);
            if edge_count.get(&key) != Some(&1) {
                return Err(MeshError::NotABoundaryEdge {
                    entry,
                    a: be.a,
                    b: be.b,
                });
            }
            if seen.insert(key, entry).is_some() {
                return Err(MeshError::DuplicateBoundaryEdge {
                    entry,
                    a: be.a,
                    b: be.b,
                });
            }
        }

        self.check_duplicate_nodes(1e-12 * span)
    }

    fn check_duplicate_nodes(&self, tol: f64) -> Result<(), MeshError> {
        let cell = if tol > 0.0 { tol } else { f64::MIN_POSITIVE };
        let key = |p: Point| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::with_capacity(self.nodes.len());
        for (i, &p) in self.nodes.iter().enumerate() {
            let (kx, ky) = key(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = grid.get(&(kx + dx, ky + dy)) {
                        if let Some(&j) = list.iter().find(|&&j| distance(self.nodes[j], p) <= tol)
                        {
                            return Err(MeshError::DuplicateNodes { a: j, b: i });
                        }
                    }
                }
            }
            grid.entry((kx, ky)).or_default().push(i);
        }
        Ok(())
    }

    fn coordinate_span(&self) -> f64 {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (hi[0] - lo[0]).max(hi[1] - lo[1])
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn n_elements(&self) -> usize {
        self.connectivity.len() / self.kind.nodes_per_element()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let npe = self.kind.nodes_per_element();
        &self.connectivity[e * npe..(e + 1) * npe]
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.connectivity
            .chunks_exact(self.kind.nodes_per_element())
    }

    pub fn connectivity(&self) -> &[usize] {
        &self.connectivity
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn element_geometry(&self, e: usize) -> Result<ElementGeometry, MeshError> {
        if e >= self.n_elements() {
            return Err(MeshError::ElementOutOfRange {
                index: e,
                n_elements: self.n_elements(),
            });
        }
        let vertices = self.element(e).iter().map(|&i| self.nodes[i]).collect();
        Ok(ElementGeometry::from_vertices(self.kind, vertices))
    }

    pub fn element_centroid(&self, e: usize) -> Point {
        let el = self.element(e);
        let n = el.len() as f64;
        let (sx, sy) = el.iter().fold((0.0, 0.0), |(sx, sy), &i| {
            (sx + self.nodes[i][0], sy + self.nodes[i][1])
        });
        [sx / n, sy / n]
    }

    pub fn total_area(&self) -> f64 {
        self.elements()
            .map(|el| {
                let v: Vec<Point> = el.iter().map(|&i| self.nodes[i]).collect();
                polygon_area(&v)
            })
            .sum()
    }

    /// Per-node boundary marker. A node touching edges with different markers
    /// takes the strongest one (Dirichlet over Robin over Neumann).
    pub fn node_markers(&self) -> Vec<Option<BoundaryMarker>> {
        let mut out: Vec<Option<BoundaryMarker>> = vec![None; self.nodes.len()];
        for be in &self.boundary {
            for i in [be.a, be.b] {
                out[i] = match out[i] {
                    Some(m) if m.precedence() >= be.marker.precedence() => Some(m),
                    _ => Some(be.marker),
                };
            }
        }
        out
    }

    /// A copy with every boundary marker replaced by `marker(a, b)`.
    pub fn remarked(&self, mut marker: impl FnMut(Point, Point) -> BoundaryMarker) -> Self {
        let boundary = self
            .boundary
            .iter()
            .map(|be| BoundaryEdge {
                marker: marker(self.nodes[be.a], self.nodes[be.b]),
                ..*be
            })
            .collect();
        Mesh {
            boundary,
            ..self.clone()
        }
    }

    /// Renumbers nodes: old node `i` becomes node `perm[i]`.
    pub fn renumbered(&self, perm: &[usize]) -> Result<Self, MeshError> {
        let n = self.nodes.len();
        if perm.len() != n {
            return Err(MeshError::InvalidParameter(
                "permutation length differs from node count".into(),
            ));
        }
        let mut nodes = vec![[0.0; 2]; n];
        let mut hit = vec![false; n];
        for (old, &new) in perm.iter().enumerate() {
            if new >= n || hit[new] {
                return Err(MeshError::InvalidParameter("not a permutation".into()));
            }
            hit[new] = true;
            nodes[new] = self.nodes[old];
        }
        let connectivity = self.connectivity.iter().map(|&i| perm[i]).collect();
        let boundary = self
            .boundary
            .iter()
            .map(|be| BoundaryEdge {
                a: perm[be.a],
                b: perm[be.b],
                marker: be.marker,
            })
            .collect();
        Mesh::new(nodes, self.kind, connectivity, boundary)
    }
}
