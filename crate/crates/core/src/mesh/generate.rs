use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::lattice::{Lattice, LatticeShape};
use super::{BoundaryMarker, ElementKind, Mesh, MeshError, Point};

/// Markers chosen by the outward normal of a boundary edge: whichever axis
/// direction the normal is closest to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideMarkers {
    pub bottom: BoundaryMarker,
    pub right: BoundaryMarker,
    pub top: BoundaryMarker,
    pub left: BoundaryMarker,
}

impl SideMarkers {
    pub fn all(marker: BoundaryMarker) -> Self {
        SideMarkers {
            bottom: marker,
            right: marker,
            top: marker,
            left: marker,
        }
    }

    /// Edge `a -> b` oriented counter-clockwise around the domain.
    pub fn classify(&self, a: Point, b: Point) -> BoundaryMarker {
        let n = [b[1] - a[1], a[0] - b[0]];
        if n[0].abs() > n[1].abs() {
            if n[0] > 0.0 {
                self.right
            } else {
                self.left
            }
        } else if n[1] > 0.0 {
            self.top
        } else {
            self.bottom
        }
    }
}

/// Number of subdivisions per side for the equilateral domain:
/// `round(side · c / ch_target)`.
pub fn equilateral_triangle_subdivisions(
    side: f64,
    ch_target: f64,
    c: f64,
) -> Result<usize, MeshError> {
    if !(side > 0.0 && ch_target > 0.0 && c > 0.0) {
        return Err(MeshError::InvalidParameter(format!(
            "side={side}, ch={ch_target}, c={c} must all be positive"
        )));
    }
    let n = (side * c / ch_target).round();
    if n < 2.0 {
        return Err(MeshError::TooFewSubdivisions {
            subdivisions: n as usize,
        });
    }
    Ok(n as usize)
}

/// Uniform equilateral triangulation of the triangle with vertices `(0,0)`,
/// `(side,0)`, `(side/2, side·√3/2)`. Element side is `side/n` with `n` from
/// [`equilateral_triangle_subdivisions`]; every boundary edge is Dirichlet.
pub fn equilateral_triangle_domain(side: f64, ch_target: f64, c: f64) -> Result<Mesh, MeshError> {
    let n = equilateral_triangle_subdivisions(side, ch_target, c)?;
    lattice_mesh(LatticeShape::Triangle { n }, side / n as f64, [0.0, 0.0], |_, _| {
        BoundaryMarker::Dirichlet
    })
}

pub fn lattice_mesh(
    shape: LatticeShape,
    h: f64,
    origin: Point,
    marker: impl FnMut(Point, Point) -> BoundaryMarker,
) -> Result<Mesh, MeshError> {
    Lattice::new(shape, h, origin)?.to_mesh(marker)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QuadRegion {
    Rectangle {
        origin: Point,
        width: f64,
        height: f64,
    },
    /// The square `[x0, x0+side] × [y0, y0+side]` with its lower-right
    /// quadrant removed.
    LShape { origin: Point, side: f64 },
}

fn integral_count(what: &'static str, value: f64, h: f64) -> Result<usize, MeshError> {
    let ratio = value / h;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 || n < 1.0 {
        return Err(MeshError::NonIntegralSubdivision { what, value, h });
    }
    Ok(n as usize)
}

/// Axis-aligned uniform squares of side `h` covering `region`.
pub fn structured_quad_mesh(
    region: &QuadRegion,
    h: f64,
    markers: SideMarkers,
) -> Result<Mesh, MeshError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(MeshError::InvalidParameter(format!("h = {h}")));
    }
    let (origin, nx, ny, notch) = match *region {
        QuadRegion::Rectangle {
            origin,
            width,
            height,
        } => (
            origin,
            integral_count("width", width, h)?,
            integral_count("height", height, h)?,
            None,
        ),
        QuadRegion::LShape { origin, side } => {
            let n = integral_count("side", side, h)?;
            if n % 2 != 0 {
                return Err(MeshError::NonIntegralSubdivision {
                    what: "side/2",
                    value: side / 2.0,
                    h,
                });
            }
            (origin, n, n, Some(n / 2))
        }
    };
    let keep = |i: usize, j: usize| match notch {
        Some(half) => !(i >= half && j < half),
        None => true,
    };

    let mut id = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    for j in 0..ny {
        for i in 0..nx {
            if keep(i, j) {
                for (a, b) in [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)] {
                    id[grid(a, b)] = 0;
                }
            }
        }
    }
    let mut nodes = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let g = grid(i, j);
            if id[g] == 0 {
                id[g] = nodes.len();
                nodes.push([origin[0] + i as f64 * h, origin[1] + j as f64 * h]);
            }
        }
    }
    let mut conn = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if keep(i, j) {
                conn.extend([
                    id[grid(i, j)],
                    id[grid(i + 1, j)],
                    id[grid(i + 1, j + 1)],
                    id[grid(i, j + 1)],
                ]);
            }
        }
    }
    Mesh::with_derived_boundary(nodes, ElementKind::Quad, conn, |a, b| {
        markers.classify(a, b)
    })
}

/// Splits every quad `(a, b, c, d)` into triangles `(a, b, c)` and
/// `(a, c, d)`, keeping nodes and boundary markers.
pub fn split_quads(mesh: &Mesh) -> Result<Mesh, MeshError> {
    if mesh.kind() != ElementKind::Quad {
        return Err(MeshError::InvalidParameter(
            "split_quads expects a quad mesh".into(),
        ));
    }
    let conn = mesh
        .elements()
        .flat_map(|q| [q[0], q[1], q[2], q[0], q[2], q[3]])
        .collect();
    Mesh::new(
        mesh.nodes().to_vec(),
        ElementKind::Triangle,
        conn,
        mesh.boundary_edges().to_vec(),
    )
}

/// Triangulated annulus `r_inner <= r <= r_outer` centred on the origin,
/// with a constant number of sectors per ring.
pub fn annulus(
    r_inner: f64,
    r_outer: f64,
    h: f64,
    inner: BoundaryMarker,
    outer: BoundaryMarker,
) -> Result<Mesh, MeshError> {
    if !(0.0 < r_inner && r_inner < r_outer && h > 0.0) {
        return Err(MeshError::InvalidParameter(format!(
            "annulus r_inner={r_inner}, r_outer={r_outer}, h={h}"
        )));
    }
    let n_r = ((r_outer - r_inner) / h).round().max(2.0) as usize;
    let r_mid = 0.5 * (r_inner + r_outer);
    let n_t = (2.0 * PI * r_mid / h).round().max(8.0) as usize;
    let dr = (r_outer - r_inner) / n_r as f64;
    let mut nodes = Vec::with_capacity((n_r + 1) * n_t);
    for k in 0..=n_r {
        let r = r_inner + k as f64 * dr;
        for s in 0..n_t {
            let t = 2.0 * PI * s as f64 / n_t as f64;
            nodes.push([r * t.cos(), r * t.sin()]);
        }
    }
    let id = |k: usize, s: usize| k * n_t + (s % n_t);
    let mut conn = Vec::with_capacity(6 * n_r * n_t);
    for k in 0..n_r {
        for s in 0..n_t {
            let (a, b, c, d) = (id(k, s), id(k + 1, s), id(k + 1, s + 1), id(k, s + 1));
            if (k + s) % 2 == 0 {
                conn.extend([a, b, c, a, c, d]);
            } else {
                conn.extend([a, b, d, b, c, d]);
            }
        }
    }
    Mesh::with_derived_boundary(nodes, ElementKind::Triangle, conn, |a, b| {
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        if mid[0].hypot(mid[1]) < r_mid {
            inner
        } else {
            outer
        }
    })
}
