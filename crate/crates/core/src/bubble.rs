//! Element-level bubble sub-problems and static condensation.
//!
//! For each element `K` with linear (or bilinear) basis `ψ_i` the bubbles
//! solve, with homogeneous Dirichlet data on `∂K`,
//!
//! ```text
//! -Δφ_i - c²φ_i = μ_i c² ψ_i      (one per basis function)
//! -Δφ_f - c²φ_f = f
//! ```
//!
//! by standard Galerkin on a uniform sub-mesh: P1 on the barycentric
//! subdivision of a triangle, Q1 on the tensor grid of a quad. The global
//! system only needs the integrals `(φ_i, ψ_j)_K` and `(φ_f, ψ_j)_K`.

use thiserror::Error;

use crate::assembly::Source;
use crate::fe::{p1_matrices, q1_map, q1_matrices, q1_shape};
use crate::linalg::{DenseLu, DenseMatrix, LinalgError, C64};
use crate::mesh::{ElementGeometry, ElementKind, Point};
use crate::mu_table::MuTableError;

/// Sub-mesh resolution `c·h_sub` above which a warning is logged.
pub const SUB_RESOLUTION_WARN: f64 = 0.65;

#[derive(Debug, Error)]
pub enum BubbleError {
    #[error(
        "bubble sub-problem is singular on element at ({:.6}, {:.6}) with c·h = {c_h:.6} (sub-problem resonance): {source}",
        centroid[0], centroid[1]
    )]
    Resonance {
        centroid: Point,
        c_h: f64,
        #[source]
        source: LinalgError,
    },
    #[error("element {element}: {source}")]
    AtElement {
        element: usize,
        #[source]
        source: Box<BubbleError>,
    },
    #[error("expected {expected} mu values, got {got}")]
    MuCount { expected: usize, got: usize },
    #[error("N_s must be at least 3, got {0}")]
    TooCoarse(usize),
    #[error("basis index {index} out of range for {n_en} element nodes")]
    BasisIndex { index: usize, n_en: usize },
    #[error(transparent)]
    MuTable(#[from] MuTableError),
}

/// Which bubble a field belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BubbleKind {
    /// Bubble driven by basis function `ψ_i` (0-based).
    Basis(usize),
    /// Bubble driven by the source `f`.
    Source,
}

/// Structured sub-mesh of one parent element.
#[derive(Debug, Clone)]
pub struct SubMesh {
    pub parent: ElementGeometry,
    pub n_s: usize,
    pub nodes: Vec<Point>,
    /// `nodes_per_sub * n_sub` indices (3 for triangles, 4 for quads).
    pub elements: Vec<usize>,
    /// Interior unknown index of each sub-node, `None` on `∂K`.
    pub interior_index: Vec<Option<usize>>,
    pub n_interior: usize,
    /// `psi[i][k]`: parent basis function `i` at sub-node `k`.
    pub psi: Vec<Vec<f64>>,
    stiffness: Vec<f64>,
    mass: Vec<f64>,
}

/// Closed-form count of interior sub-nodes.
pub fn interior_count(kind: ElementKind, n_s: usize) -> usize {
    match kind {
        ElementKind::Triangle => n_s * (n_s + 1) / 2 - 3 * (n_s - 1),
        ElementKind::Quad => (n_s - 2) * (n_s - 2),
    }
}

pub fn build_submesh(geom: &ElementGeometry, n_s: usize) -> Result<SubMesh, BubbleError> {
    if n_s < 3 {
        return Err(BubbleError::TooCoarse(n_s));
    }
    let n = n_s - 1;
    let v = &geom.vertices;
    let mut nodes = Vec::new();
    let mut psi: Vec<Vec<f64>> = vec![Vec::new(); geom.kind.nodes_per_element()];
    let mut interior_index = Vec::new();
    let mut n_interior = 0;
    let mut elements = Vec::new();
    let mut push_interior = |inside: bool| {
        interior_index.push(inside.then(|| {
            n_interior += 1;
            n_interior - 1
        }))
    };

    match geom.kind {
        ElementKind::Triangle => {
            // node (i, j), i + j <= n, numbered row by row
            let mut id = vec![vec![usize::MAX; n + 1]; n + 1];
            for j in 0..=n {
                for i in 0..=n - j {
                    let l1 = i as f64 / n as f64;
                    let l2 = j as f64 / n as f64;
                    let l0 = 1.0 - l1 - l2;
                    id[i][j] = nodes.len();
                    nodes.push([
                        l0 * v[0][0] + l1 * v[1][0] + l2 * v[2][0],
                        l0 * v[0][1] + l1 * v[1][1] + l2 * v[2][1],
                    ]);
                    psi[0].push(l0);
                    psi[1].push(l1);
                    psi[2].push(l2);
                    push_interior(i >= 1 && j >= 1 && i + j < n);
                }
            }
            for j in 0..n {
                for i in 0..n - j {
                    elements.extend([id[i][j], id[i + 1][j], id[i][j + 1]]);
                    if i + j + 2 <= n {
                        elements.extend([id[i + 1][j], id[i + 1][j + 1], id[i][j + 1]]);
                    }
                }
            }
        }
        ElementKind::Quad => {
            for b in 0..=n {
                for a in 0..=n {
                    let (xi, eta) = (a as f64 / n as f64, b as f64 / n as f64);
                    nodes.push(q1_map(v, xi, eta));
                    for (k, s) in q1_shape(xi, eta).into_iter().enumerate() {
                        psi[k].push(s);
                    }
                    push_interior(a >= 1 && b >= 1 && a < n && b < n);
                }
            }
            let id = |a: usize, b: usize| b * (n + 1) + a;
            for b in 0..n {
                for a in 0..n {
                    elements.extend([id(a, b), id(a + 1, b), id(a + 1, b + 1), id(a, b + 1)]);
                }
            }
        }
    }

    let nn = nodes.len();
    let mut stiffness = vec![0.0; nn * nn];
    let mut mass = vec![0.0; nn * nn];
    let npe = geom.kind.nodes_per_element();
    for el in elements.chunks_exact(npe) {
        let pts: Vec<Point> = el.iter().map(|&k| nodes[k]).collect();
        let mut add = |a: usize, b: usize, kv: f64, mv: f64| {
            stiffness[el[a] * nn + el[b]] += kv;
            mass[el[a] * nn + el[b]] += mv;
        };
        match geom.kind {
            ElementKind::Triangle => {
                let (k, m) = p1_matrices(&pts);
                for a in 0..3 {
                    for b in 0..3 {
                        add(a, b, k[a][b], m[a][b]);
                    }
                }
            }
            ElementKind::Quad => {
                let (k, m) = q1_matrices(&pts);
                for a in 0..4 {
                    for b in 0..4 {
                        add(a, b, k[a][b], m[a][b]);
                    }
                }
            }
        }
    }

    Ok(SubMesh {
        parent: geom.clone(),
        n_s,
        nodes,
        elements,
        interior_index,
        n_interior,
        psi,
        stiffness,
        mass,
    })
}

impl SubMesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_sub_elements(&self) -> usize {
        self.elements.len() / self.parent.kind.nodes_per_element()
    }

    pub fn n_en(&self) -> usize {
        self.psi.len()
    }

    /// Size of one sub-element edge along the parent's characteristic length.
    pub fn sub_h(&self) -> f64 {
        self.parent.h_char / (self.n_s - 1) as f64
    }

    /// `(M v)_k` over all sub-nodes.
    fn mass_times(&self, v: &[f64]) -> Vec<f64> {
        let nn = self.n_nodes();
        (0..nn)
            .map(|k| {
                self.mass[k * nn..(k + 1) * nn]
                    .iter()
                    .zip(v)
                    .map(|(m, x)| m * x)
                    .sum()
            })
            .collect()
    }

    fn mass_times_complex(&self, v: &[C64]) -> Vec<C64> {
        let nn = self.n_nodes();
        (0..nn)
            .map(|k| {
                self.mass[k * nn..(k + 1) * nn]
                    .iter()
                    .zip(v)
                    .map(|(m, x)| x * *m)
                    .sum()
            })
            .collect()
    }

    fn interior_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes())
            .filter(|&k| self.interior_index[k].is_some())
            .collect()
    }

    /// Factorizes `K_II - c² M_II`.
    fn factor(&self, c: f64) -> Result<DenseLu, BubbleError> {
        let nn = self.n_nodes();
        let inner = self.interior_nodes();
        let c2 = c * c;
        let a = DenseMatrix::from_fn(self.n_interior, |p, q| {
            let (r, s) = (inner[p], inner[q]);
            C64::new(self.stiffness[r * nn + s] - c2 * self.mass[r * nn + s], 0.0)
        });
        if c * self.sub_h() > SUB_RESOLUTION_WARN {
            log::warn!(
                "bubble sub-mesh under-resolved: c·h_sub = {:.3} > {SUB_RESOLUTION_WARN}",
                c * self.sub_h()
            );
        }
        DenseLu::factor(&a).map_err(|source| BubbleError::Resonance {
            centroid: self.parent.centroid(),
            c_h: c * self.parent.h_char,
            source,
        })
    }

    /// Scatters an interior solution back onto all sub-nodes.
    fn expand(&self, interior: &[C64]) -> Vec<C64> {
        self.interior_index
            .iter()
            .map(|ix| ix.map_or(C64::new(0.0, 0.0), |p| interior[p]))
            .collect()
    }

    fn restrict<T: Copy>(&self, full: &[T]) -> Vec<T> {
        self.interior_nodes().iter().map(|&k| full[k]).collect()
    }
}

/// Bubble values on the sub-mesh (zero on `∂K`).
#[derive(Debug, Clone)]
pub struct BubbleField {
    pub values: Vec<C64>,
    pub which: BubbleKind,
    pub mu: f64,
}

/// Solves one bubble sub-problem. `mu` scales the right-hand side of basis
/// bubbles and is ignored for the source bubble.
pub fn solve_bubble(
    sub: &SubMesh,
    c: f64,
    mu: f64,
    which: BubbleKind,
    f: &Source,
) -> Result<BubbleField, BubbleError> {
    let rhs: Vec<C64> = match which {
        BubbleKind::Basis(i) => {
            let psi = sub.psi.get(i).ok_or(BubbleError::BasisIndex {
                index: i,
                n_en: sub.n_en(),
            })?;
            let scale = mu * c * c;
            sub.restrict(&sub.mass_times(psi))
                .into_iter()
                .map(|v| C64::new(scale * v, 0.0))
                .collect()
        }
        BubbleKind::Source => {
            let fv: Vec<C64> = sub.nodes.iter().map(|&p| f.eval(p)).collect();
            sub.restrict(&sub.mass_times_complex(&fv))
        }
    };
    let lu = sub.factor(c)?;
    let mu = match which {
        BubbleKind::Basis(_) => mu,
        BubbleKind::Source => 1.0,
    };
    Ok(BubbleField {
        values: sub.expand(&lu.solve(&rhs)),
        which,
        mu,
    })
}

/// Per-element blocks entering the global system.
#[derive(Debug, Clone)]
pub struct ElementCondensation {
    /// `(φ_i, ψ_j)_K` at `(i, j)`.
    pub bubble_mass: DenseMatrix,
    /// `(φ_f, ψ_j)_K`.
    pub source_terms: Vec<C64>,
    /// `(∇ψ_i, ∇ψ_j)_K`.
    pub linear_stiffness: DenseMatrix,
    /// `(ψ_i, ψ_j)_K`.
    pub linear_mass: DenseMatrix,
}

impl ElementCondensation {
    pub fn n_en(&self) -> usize {
        self.linear_mass.n()
    }

    /// Local matrix with row `j` (test function) and column `i` (unknown):
    /// `(∇ψ_i,∇ψ_j) - c²(ψ_i,ψ_j) - c²(φ_i,ψ_j)`.
    pub fn local_matrix(&self, c: f64) -> DenseMatrix {
        let c2 = c * c;
        DenseMatrix::from_fn(self.n_en(), |j, i| {
            self.linear_stiffness[(i, j)] - (self.linear_mass[(i, j)] + self.bubble_mass[(i, j)]) * c2
        })
    }
}

/// Linear-element stiffness and mass on the parent, no bubbles.
pub fn linear_matrices(geom: &ElementGeometry) -> (DenseMatrix, DenseMatrix) {
    let n = geom.kind.nodes_per_element();
    match geom.kind {
        ElementKind::Triangle => {
            let (k, m) = p1_matrices(&geom.vertices);
            (
                DenseMatrix::from_fn(n, |i, j| C64::new(k[i][j], 0.0)),
                DenseMatrix::from_fn(n, |i, j| C64::new(m[i][j], 0.0)),
            )
        }
        ElementKind::Quad => {
            let (k, m) = q1_matrices(&geom.vertices);
            (
                DenseMatrix::from_fn(n, |i, j| C64::new(k[i][j], 0.0)),
                DenseMatrix::from_fn(n, |i, j| C64::new(m[i][j], 0.0)),
            )
        }
    }
}

/// Condensation blocks of one element. `mus` holds one scaling per basis
/// bubble.
pub fn condense_element(
    geom: &ElementGeometry,
    c: f64,
    mus: &[f64],
    n_s: usize,
    f: &Source,
) -> Result<ElementCondensation, BubbleError> {
    let sub = build_submesh(geom, n_s)?;
    condense_on(&sub, c, mus, f)
}

pub fn condense_on(
    sub: &SubMesh,
    c: f64,
    mus: &[f64],
    f: &Source,
) -> Result<ElementCondensation, BubbleError> {
    let n_en = sub.n_en();
    if mus.len() != n_en {
        return Err(BubbleError::MuCount {
            expected: n_en,
            got: mus.len(),
        });
    }
    let (linear_stiffness, linear_mass) = linear_matrices(&sub.parent);
    let lu = sub.factor(c)?;
    let inner = sub.interior_nodes();
    let mpsi: Vec<Vec<f64>> = sub.psi.iter().map(|p| sub.mass_times(p)).collect();
    // (φ, ψ_j) = φᵀ M ψ_j with φ = 0 off the interior
    let project = |phi: &[C64], j: usize| -> C64 {
        phi.iter()
            .zip(&inner)
            .map(|(v, &k)| v * mpsi[j][k])
            .sum()
    };

    let c2 = c * c;
    let mut bubble_mass = DenseMatrix::zeros(n_en);
    for i in 0..n_en {
        let rhs: Vec<C64> = inner
            .iter()
            .map(|&k| C64::new(mus[i] * c2 * mpsi[i][k], 0.0))
            .collect();
        let phi = lu.solve(&rhs);
        for j in 0..n_en {
            bubble_mass[(i, j)] = project(&phi, j);
        }
    }

    let source_terms = if f.is_zero() {
        vec![C64::new(0.0, 0.0); n_en]
    } else {
        let fv: Vec<C64> = sub.nodes.iter().map(|&p| f.eval(p)).collect();
        let rhs = sub.restrict(&sub.mass_times_complex(&fv));
        let phi = lu.solve(&rhs);
        (0..n_en).map(|j| project(&phi, j)).collect()
    };

    Ok(ElementCondensation {
        bubble_mass,
        source_terms,
        linear_stiffness,
        linear_mass,
    })
}
