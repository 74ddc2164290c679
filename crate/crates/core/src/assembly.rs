//! Global Galerkin / RFB / AB systems with Dirichlet, Neumann and Robin
//! boundary conditions.
//!
//! Every element contributes, in row `j` (test function `ψ_j`) and column
//! `i`,
//!
//! ```text
//! (∇ψ_i, ∇ψ_j) − c²(ψ_i, ψ_j) − c²(φ_i, ψ_j)        matrix
//! (f, ψ_j) + c²(φ_f, ψ_j)                            right-hand side
//! ```
//!
//! with `φ ≡ 0` for Galerkin, `μ = 1` bubbles for RFB and table-μ bubbles for
//! AB. Dirichlet nodes are eliminated and their data lifted into the
//! right-hand side.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubble::{condense_element, linear_matrices, BubbleError, ElementCondensation};
use crate::fe::{q1_map, q1_shape, GAUSS2, TRI3};
use crate::linalg::{sparse_solve, CsrMatrix, DenseMatrix, SparseSystem, C64};
use crate::mesh::{distance, BoundaryMarker, ElementGeometry, ElementKind, Mesh, Point};
use crate::mu_table::{MuTable, MuTableError};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Galerkin,
    Rfb,
    Ab,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Galerkin => "galerkin",
            Method::Rfb => "rfb",
            Method::Ab => "ab",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "galerkin" => Ok(Method::Galerkin),
            "rfb" => Ok(Method::Rfb),
            "ab" => Ok(Method::Ab),
            other => Err(format!("unknown method `{other}` (galerkin|rfb|ab)")),
        }
    }
}

/// Right-hand side `f` of `-Δu - c²u = f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Zero,
    Constant(C64),
    /// `f(x, y) = sin(x)`.
    SinX,
}

impl Source {
    pub fn eval(&self, p: Point) -> C64 {
        match *self {
            Source::Zero => C64::new(0.0, 0.0),
            Source::Constant(v) => v,
            Source::SinX => C64::new(p[0].sin(), 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Source::Zero => true,
            Source::Constant(v) => v == C64::new(0.0, 0.0),
            Source::SinX => false,
        }
    }

    fn is_translation_invariant(&self) -> bool {
        !matches!(self, Source::SinX)
    }
}

/// Argument ordering of the plane wave `sin(c(x·a + y·b))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaneWaveConvention {
    /// `sin(c x sinθ + c y cosθ)`.
    #[default]
    SinCos,
    /// `sin(c x cosθ + c y sinθ)`.
    CosSin,
}

impl PlaneWaveConvention {
    /// Unit direction `(a, b)` of the wave vector.
    pub fn direction(self, theta: f64) -> [f64; 2] {
        match self {
            PlaneWaveConvention::SinCos => [theta.sin(), theta.cos()],
            PlaneWaveConvention::CosSin => [theta.cos(), theta.sin()],
        }
    }
}

impl fmt::Display for PlaneWaveConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SinCos => "sin-cos",
            Self::CosSin => "cos-sin",
        })
    }
}

impl FromStr for PlaneWaveConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sin-cos" => Ok(Self::SinCos),
            "cos-sin" => Ok(Self::CosSin),
            other => Err(format!("unknown plane-wave convention `{other}` (sin-cos|cos-sin)")),
        }
    }
}

/// Boundary data on Dirichlet edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirichletData {
    Zero,
    Constant(C64),
    PlaneWave {
        theta: f64,
        convention: PlaneWaveConvention,
    },
    /// `sin(c x)`.
    AxisWave,
}

impl DirichletData {
    pub fn eval(&self, p: Point, c: f64) -> C64 {
        match *self {
            DirichletData::Zero => C64::new(0.0, 0.0),
            DirichletData::Constant(v) => v,
            DirichletData::PlaneWave { theta, convention } => {
                let [a, b] = convention.direction(theta);
                C64::new((c * (a * p[0] + b * p[1])).sin(), 0.0)
            }
            DirichletData::AxisWave => C64::new((c * p[0]).sin(), 0.0),
        }
    }
}

/// Everything that defines a boundary value problem on a given mesh.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub c: f64,
    pub source: Source,
    pub dirichlet: DirichletData,
    pub robin_coefficient: C64,
    pub method: Method,
    /// Overrides the table's sub-mesh resolution for RFB/AB.
    pub n_s_override: Option<usize>,
    /// Clamp μ above the calibrated range instead of failing.
    pub clamp_mu: bool,
    pub tri_table: Option<Arc<MuTable>>,
    pub quad_table: Option<Arc<MuTable>>,
}

impl ProblemSpec {
    pub fn new(c: f64, method: Method) -> Self {
        ProblemSpec {
            c,
            source: Source::Zero,
            dirichlet: DirichletData::Zero,
            robin_coefficient: C64::new(0.0, 1.0),
            method,
            n_s_override: None,
            clamp_mu: false,
            tri_table: None,
            quad_table: None,
        }
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    pub fn with_dirichlet(mut self, dirichlet: DirichletData) -> Self {
        self.dirichlet = dirichlet;
        self
    }

    pub fn with_robin(mut self, beta: C64) -> Self {
        self.robin_coefficient = beta;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_n_s(mut self, n_s: Option<usize>) -> Self {
        self.n_s_override = n_s;
        self
    }

    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp_mu = clamp;
        self
    }

    pub fn table(&self, kind: ElementKind) -> &MuTable {
        let custom = match kind {
            ElementKind::Triangle => &self.tri_table,
            ElementKind::Quad => &self.quad_table,
        };
        custom.as_deref().unwrap_or_else(|| MuTable::builtin(kind))
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "wave number c must be positive and finite, got {}",
                self.c
            )));
        }
        if let Some(n_s) = self.n_s_override {
            if n_s < 3 {
                return Err(BubbleError::TooCoarse(n_s).into());
            }
        }
        for kind in [ElementKind::Triangle, ElementKind::Quad] {
            if self.table(kind).kind() != kind {
                return Err(Error::InvalidProblem(format!(
                    "mu table for {kind} elements has kind {}",
                    self.table(kind).kind()
                )));
            }
        }
        Ok(())
    }

    /// Per-basis μ and the sub-mesh resolution used on one element.
    /// Triangles key each basis bubble on `c·m_i` (its median) and take the
    /// largest `N_s` among the three lookups; quads key one shared μ on
    /// `c·h_char`.
    pub fn element_bubble_params(
        &self,
        geom: &ElementGeometry,
    ) -> std::result::Result<(Vec<f64>, usize), MuTableError> {
        let table = self.table(geom.kind);
        let keys: Vec<f64> = match geom.kind {
            ElementKind::Triangle => geom
                .medians
                .expect("triangle geometry has medians")
                .iter()
                .map(|m| self.c * m)
                .collect(),
            ElementKind::Quad => vec![self.c * geom.h_char],
        };
        let mut mus = Vec::with_capacity(keys.len());
        let mut n_s = 0;
        for key in keys {
            let (mu, ns) = match self.method {
                Method::Ab => {
                    let l = table.lookup_with(key, self.clamp_mu)?;
                    (l.mu, l.n_s)
                }
                // plain RFB: μ = 1, resolution policy still from the table
                _ => match table.lookup(key) {
                    Ok(l) => (1.0, l.n_s),
                    Err(MuTableError::OutOfCalibration { n_s, .. }) => (1.0, n_s),
                    Err(e) => return Err(e),
                },
            };
            mus.push(mu);
            n_s = n_s.max(ns);
        }
        if geom.kind == ElementKind::Quad {
            mus = vec![mus[0]; 4];
        }
        Ok((mus, self.n_s_override.unwrap_or(n_s)))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub assembly_ms: f64,
    pub solve_ms: f64,
    pub n_unknowns: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub nodal_values: Vec<C64>,
    pub spec: ProblemSpec,
    pub stats: SolveStats,
}

impl Solution {
    pub fn max_re(&self) -> f64 {
        self.nodal_values.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_re(&self) -> f64 {
        self.nodal_values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min)
    }
}

/// Reduced system over the non-Dirichlet nodes.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub system: SparseSystem,
    /// Unknown index of each mesh node, `None` for Dirichlet nodes.
    pub free_index: Vec<Option<usize>>,
    /// Prescribed value of each Dirichlet node.
    pub dirichlet_values: Vec<Option<C64>>,
}

impl AssembledSystem {
    /// Expands a reduced solution to all mesh nodes.
    pub fn expand(&self, x: &[C64]) -> Vec<C64> {
        self.free_index
            .iter()
            .zip(&self.dirichlet_values)
            .map(|(free, g)| match (free, g) {
                (Some(k), _) => x[*k],
                (None, Some(g)) => *g,
                (None, None) => unreachable!("node is neither free nor Dirichlet"),
            })
            .collect()
    }
}

struct ElementBlock {
    matrix: DenseMatrix,
    rhs: Vec<C64>,
}

/// Load vector `(f, ψ_j)_K` by a degree-2 rule (three-point on triangles,
/// 2×2 Gauss on quads).
fn source_load(geom: &ElementGeometry, f: &Source) -> Vec<C64> {
    let n = geom.vertices.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    if f.is_zero() {
        return out;
    }
    let v = &geom.vertices;
    match geom.kind {
        ElementKind::Triangle => {
            for (l, w) in TRI3 {
                let p = [
                    l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                    l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
                ];
                let fv = f.eval(p) * (w * geom.area);
                for j in 0..3 {
                    out[j] += fv * l[j];
                }
            }
        }
        ElementKind::Quad => {
            for &xi in &GAUSS2 {
                for &eta in &GAUSS2 {
                    let fv = f.eval(q1_map(v, xi, eta)) * (0.25 * jacobian_det(v, xi, eta));
                    for (j, s) in q1_shape(xi, eta).into_iter().enumerate() {
                        out[j] += fv * s;
                    }
                }
            }
        }
    }
    out
}

fn jacobian_det(v: &[Point], xi: f64, eta: f64) -> f64 {
    let dxi = [
        (1.0 - eta) * (v[1][0] - v[0][0]) + eta * (v[2][0] - v[3][0]),
        (1.0 - eta) * (v[1][1] - v[0][1]) + eta * (v[2][1] - v[3][1]),
    ];
    let deta = [
        (1.0 - xi) * (v[3][0] - v[0][0]) + xi * (v[2][0] - v[1][0]),
        (1.0 - xi) * (v[3][1] - v[0][1]) + xi * (v[2][1] - v[1][1]),
    ];
    dxi[0] * deta[1] - dxi[1] * deta[0]
}

fn galerkin_condensation(geom: &ElementGeometry) -> ElementCondensation {
    let n = geom.vertices.len();
    let (linear_stiffness, linear_mass) = linear_matrices(geom);
    ElementCondensation {
        bubble_mass: DenseMatrix::zeros(n),
        source_terms: vec![C64::new(0.0, 0.0); n],
        linear_stiffness,
        linear_mass,
    }
}

fn element_block(
    geom: &ElementGeometry,
    spec: &ProblemSpec,
) -> std::result::Result<ElementBlock, BubbleError> {
    let cond = match spec.method {
        Method::Galerkin => galerkin_condensation(geom),
        Method::Rfb | Method::Ab => {
            let (mus, n_s) = spec.element_bubble_params(geom)?;
            condense_element(geom, spec.c, &mus, n_s, &spec.source)?
        }
    };
    let c2 = spec.c * spec.c;
    let load = source_load(geom, &spec.source);
    let rhs = load
        .iter()
        .zip(&cond.source_terms)
        .map(|(l, s)| l + s * c2)
        .collect();
    Ok(ElementBlock {
        matrix: cond.local_matrix(spec.c),
        rhs,
    })
}

/// Shape key for elements that are translates of each other: vertex
/// offsets from the first vertex, quantized to 1e-13.
fn shape_key(geom: &ElementGeometry) -> Vec<i64> {
    let v0 = geom.vertices[0];
    geom.vertices[1..]
        .iter()
        .flat_map(|v| [v[0] - v0[0], v[1] - v0[1]])
        .map(|d| (d * 1e13).round() as i64)
        .collect()
}

/// Element blocks in element order. Condensation runs in parallel; when the
/// source is translation invariant, congruent translated elements share one
/// condensation, chosen by first occurrence in element order.
fn element_blocks(mesh: &Mesh, spec: &ProblemSpec) -> Result<Vec<Arc<ElementBlock>>> {
    let n_el = mesh.n_elements();
    let geoms: Vec<ElementGeometry> = (0..n_el)
        .map(|e| mesh.element_geometry(e))
        .collect::<std::result::Result<_, _>>()?;

    let (representatives, slot): (Vec<usize>, Vec<usize>) =
        if spec.source.is_translation_invariant() {
            let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
            let mut reps = Vec::new();
            let slot = geoms
                .iter()
                .enumerate()
                .map(|(e, g)| {
                    *seen.entry(shape_key(g)).or_insert_with(|| {
                        reps.push(e);
                        reps.len() - 1
                    })
                })
                .collect();
            (reps, slot)
        } else {
            ((0..n_el).collect(), (0..n_el).collect())
        };

    let blocks: Vec<Arc<ElementBlock>> = representatives
        .par_iter()
        .map(|&e| {
            element_block(&geoms[e], spec)
                .map(Arc::new)
                .map_err(|source| BubbleError::AtElement {
                    element: e,
                    source: Box::new(source),
                })
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| match e {
            // keep calibration errors recognisable at the top level
            BubbleError::AtElement { source, .. }
                if matches!(*source, BubbleError::MuTable(_)) =>
            {
                match *source {
                    BubbleError::MuTable(m) => Error::MuTable(m),
                    _ => unreachable!(),
                }
            }
            other => Error::Bubble(other),
        })?;
    Ok(slot.into_iter().map(|k| Arc::clone(&blocks[k])).collect())
}

/// Robin boundary edges as `(a, b, length)`.
fn robin_edges(mesh: &Mesh) -> Vec<(usize, usize, f64)> {
    mesh.boundary_edges()
        .iter()
        .filter(|be| be.marker == BoundaryMarker::Robin)
        .map(|be| (be.a, be.b, distance(mesh.nodes()[be.a], mesh.nodes()[be.b])))
        .collect()
}

/// Global matrix and load over all nodes, before any Dirichlet treatment.
pub fn assemble_full(mesh: &Mesh, spec: &ProblemSpec) -> Result<SparseSystem> {
    spec.validate()?;
    let blocks = element_blocks(mesh, spec)?;
    let n = mesh.n_nodes();
    let npe = mesh.kind().nodes_per_element();
    let mut triplets = Vec::with_capacity(blocks.len() * npe * npe);
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    for (el, block) in mesh.elements().zip(&blocks) {
        for (j, &gj) in el.iter().enumerate() {
            rhs[gj] += block.rhs[j];
            for (i, &gi) in el.iter().enumerate() {
                triplets.push((gj, gi, block.matrix[(j, i)]));
            }
        }
    }
    let beta = spec.robin_coefficient;
    for (a, b, len) in robin_edges(mesh) {
        let diag = -beta * (len / 3.0);
        let off = -beta * (len / 6.0);
        triplets.extend([(a, a, diag), (b, b, diag), (a, b, off), (b, a, off)]);
    }
    Ok(SparseSystem {
        matrix: CsrMatrix::from_triplets(n, triplets),
        rhs,
    })
}

/// Global system reduced to the non-Dirichlet nodes.
pub fn assemble(mesh: &Mesh, spec: &ProblemSpec) -> Result<AssembledSystem> {
    let full = assemble_full(mesh, spec)?;
    let markers = mesh.node_markers();
    let mut free_index = vec![None; mesh.n_nodes()];
    let mut dirichlet_values = vec![None; mesh.n_nodes()];
    let mut n_free = 0;
    for (k, m) in markers.iter().enumerate() {
        if *m == Some(BoundaryMarker::Dirichlet) {
            dirichlet_values[k] = Some(spec.dirichlet.eval(mesh.nodes()[k], spec.c));
        } else {
            free_index[k] = Some(n_free);
            n_free += 1;
        }
    }
    if n_free == 0 {
        return Err(Error::InvalidProblem(
            "every node is a Dirichlet node; nothing to solve".into(),
        ));
    }
    let mut triplets = Vec::with_capacity(full.matrix.nnz());
    let mut rhs = vec![C64::new(0.0, 0.0); n_free];
    for row in 0..mesh.n_nodes() {
        let Some(r) = free_index[row] else { continue };
        rhs[r] += full.rhs[row];
        let (cols, vals) = full.matrix.row(row);
        for (&col, &v) in cols.iter().zip(vals) {
            match (free_index[col], dirichlet_values[col]) {
                (Some(cix), _) => triplets.push((r, cix, v)),
                (None, Some(g)) => rhs[r] -= v * g,
                (None, None) => unreachable!(),
            }
        }
    }
    Ok(AssembledSystem {
        system: SparseSystem {
            matrix: CsrMatrix::from_triplets(n_free, triplets),
            rhs,
        },
        free_index,
        dirichlet_values,
    })
}

/// Assembles and solves; Dirichlet nodes carry their data exactly.
pub fn solve_problem(mesh: &Mesh, spec: &ProblemSpec) -> Result<Solution> {
    let t0 = Instant::now();
    let assembled = assemble(mesh, spec)?;
    let assembly_ms = t0.elapsed().as_secs_f64() * 1e3;
    let t1 = Instant::now();
    let x = sparse_solve(&assembled.system)?;
    let solve_ms = t1.elapsed().as_secs_f64() * 1e3;
    Ok(Solution {
        nodal_values: assembled.expand(&x),
        spec: spec.clone(),
        stats: SolveStats {
            assembly_ms,
            solve_ms,
            n_unknowns: assembled.system.n(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{equilateral_triangle_domain, lattice::LatticeShape, lattice_mesh};
    use crate::mesh::{structured_quad_mesh, QuadRegion, SideMarkers};

    fn plane_wave(theta: f64) -> DirichletData {
        DirichletData::PlaneWave {
            theta,
            convention: PlaneWaveConvention::SinCos,
        }
    }

    #[test]
    fn laplace_with_constant_data_is_constant() {
        let mesh = equilateral_triangle_domain(1.0, 0.5, 8.0).unwrap();
        for method in [Method::Galerkin, Method::Rfb, Method::Ab] {
            let spec = ProblemSpec::new(1e-6, method)
                .with_dirichlet(DirichletData::Constant(C64::new(1.0, 0.0)));
            let sol = solve_problem(&mesh, &spec).unwrap();
            for v in &sol.nodal_values {
                assert!((v - C64::new(1.0, 0.0)).norm() < 1e-9, "{method}: {v}");
            }
        }
    }

    #[test]
    fn dirichlet_nodes_exact_and_tiny_domain_solves() {
        let mesh = lattice_mesh(
            LatticeShape::Parallelogram { nx: 1, ny: 1 },
            0.1,
            [0.0, 0.0],
            |_, _| BoundaryMarker::Dirichlet,
        )
        .unwrap();
        assert_eq!(mesh.n_elements(), 2);
        let spec = ProblemSpec::new(5.0, Method::Galerkin).with_dirichlet(plane_wave(0.3));
        // no interior node: nothing to solve
        assert!(matches!(
            solve_problem(&mesh, &spec),
            Err(Error::InvalidProblem(_))
        ));

        let mesh = equilateral_triangle_domain(1.0, 0.7, 20.0).unwrap();
        let sol = solve_problem(&mesh, &spec.clone().with_method(Method::Ab)).unwrap();
        for (k, m) in mesh.node_markers().iter().enumerate() {
            if m.is_some() {
                assert_eq!(sol.nodal_values[k], spec.dirichlet.eval(mesh.nodes()[k], spec.c));
            }
            assert!(sol.nodal_values[k].re.is_finite());
        }
    }

    #[test]
    fn ab_and_rfb_differ_only_in_bubble_blocks() {
        let mesh = equilateral_triangle_domain(1.0, 0.625, 30.0).unwrap();
        let rfb = ProblemSpec::new(30.0, Method::Rfb);
        let ab = ProblemSpec::new(30.0, Method::Ab);
        let a = assemble_full(&mesh, &rfb).unwrap();
        let b = assemble_full(&mesh, &ab).unwrap();
        let g = assemble_full(&mesh, &ProblemSpec::new(30.0, Method::Galerkin)).unwrap();
        assert_eq!(a.matrix.col_indices(), b.matrix.col_indices());
        // (A_rfb - G) scaled by μ equals (A_ab - G): bubbles are linear in μ
        let mu = ab
            .element_bubble_params(&mesh.element_geometry(0).unwrap())
            .unwrap()
            .0[0];
        assert_eq!(mu, 5.4);
        for ((va, vb), vg) in a.matrix.values().iter().zip(b.matrix.values()).zip(g.matrix.values()) {
            let da = (va - vg) * mu;
            let db = vb - vg;
            assert!((da - db).norm() <= 1e-10 * vg.norm().max(1.0));
        }
    }

    #[test]
    fn real_problem_has_real_solution() {
        let mesh = equilateral_triangle_domain(1.0, 0.625, 40.0).unwrap();
        let spec = ProblemSpec::new(40.0, Method::Ab).with_dirichlet(plane_wave(0.4));
        let sol = solve_problem(&mesh, &spec).unwrap();
        let re = sol.nodal_values.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
        let im = sol.nodal_values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(im <= 1e-10 * re);
    }

    #[test]
    fn conjugate_robin_coefficient_conjugates_solution() {
        let c = 20.0;
        let mesh = equilateral_triangle_domain(1.0, 0.5, c)
            .unwrap()
            .remarked(|a, b| {
                if a[1].abs() < 1e-12 && b[1].abs() < 1e-12 {
                    BoundaryMarker::Dirichlet
                } else {
                    BoundaryMarker::Robin
                }
            });
        let spec = ProblemSpec::new(c, Method::Ab)
            .with_source(Source::SinX)
            .with_dirichlet(DirichletData::Constant(C64::new(0.1, 0.0)));
        let s1 = solve_problem(&mesh, &spec).unwrap();
        let s2 = solve_problem(&mesh, &spec.clone().with_robin(C64::new(0.0, -1.0))).unwrap();
        let scale = s1.nodal_values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(s1.nodal_values.iter().any(|v| v.im.abs() > 1e-6 * scale));
        for (a, b) in s1.nodal_values.iter().zip(&s2.nodal_values) {
            assert!((a.conj() - b).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn renumbering_permutes_solution() {
        let mesh = equilateral_triangle_domain(1.0, 0.8, 15.0).unwrap();
        let n = mesh.n_nodes();
        let perm: Vec<usize> = (0..n).map(|i| (2 * n - 1 - i + 5) % n).collect();
        let renum = mesh.renumbered(&perm).unwrap();
        let spec = ProblemSpec::new(15.0, Method::Ab).with_dirichlet(plane_wave(1.0));
        let a = solve_problem(&mesh, &spec).unwrap();
        let b = solve_problem(&renum, &spec).unwrap();
        for i in 0..n {
            assert!((a.nodal_values[i] - b.nodal_values[perm[i]]).norm() < 1e-11);
        }
    }

    #[test]
    fn quad_galerkin_reproduces_bilinear_solution_of_laplace() {
        // u = x·y is harmonic and bilinear: Q1 Galerkin with c → 0 is exact
        let mesh = structured_quad_mesh(
            &QuadRegion::Rectangle {
                origin: [0.0, 0.0],
                width: 1.0,
                height: 0.5,
            },
            0.125,
            SideMarkers::all(BoundaryMarker::Dirichlet),
        )
        .unwrap();
        let spec = ProblemSpec::new(1e-8, Method::Galerkin);
        let full = assemble_full(&mesh, &spec).unwrap();
        let u: Vec<C64> = mesh.nodes().iter().map(|p| C64::new(p[0] * p[1], 0.0)).collect();
        let r = full.matrix.matvec(&u);
        for (k, m) in mesh.node_markers().iter().enumerate() {
            if m.is_none() {
                assert!(r[k].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn source_load_integrates_constants_exactly() {
        for geom in [
            ElementGeometry::from_vertices(
                ElementKind::Triangle,
                vec![[0.0, 0.0], [0.3, 0.1], [0.1, 0.4]],
            ),
            ElementGeometry::from_vertices(
                ElementKind::Quad,
                vec![[0.0, 0.0], [0.3, 0.0], [0.4, 0.2], [0.1, 0.2]],
            ),
        ] {
            let load = source_load(&geom, &Source::Constant(C64::new(2.0, 0.0)));
            let total: C64 = load.iter().sum();
            assert!((total.re - 2.0 * geom.area).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_calibration_is_reported() {
        let mesh = equilateral_triangle_domain(1.0, 3.8, 20.0).unwrap();
        let spec = ProblemSpec::new(20.0, Method::Ab);
        let err = solve_problem(&mesh, &spec).unwrap_err();
        assert!(err.is_out_of_calibration(), "{err}");
        assert!(solve_problem(&mesh, &spec.clone().with_clamp(true)).is_ok());
        assert!(solve_problem(&mesh, &spec.with_method(Method::Rfb)).is_ok());
    }

    #[test]
    fn cached_condensation_matches_direct() {
        let mesh = equilateral_triangle_domain(1.0, 0.625, 25.0).unwrap();
        let spec = ProblemSpec::new(25.0, Method::Ab);
        let blocks = element_blocks(&mesh, &spec).unwrap();
        for e in [0, 5, mesh.n_elements() - 1] {
            let direct = element_block(&mesh.element_geometry(e).unwrap(), &spec).unwrap();
            for j in 0..3 {
                for i in 0..3 {
                    let d = direct.matrix[(j, i)] - blocks[e].matrix[(j, i)];
                    assert!(d.norm() <= 1e-12 * direct.matrix[(j, j)].norm());
                }
            }
        }
    }
}
