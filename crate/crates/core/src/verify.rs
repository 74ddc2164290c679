//! Exact solutions, error norms, reference solves and the pollution sweep.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{
    solve_problem, DirichletData, Method, PlaneWaveConvention, ProblemSpec, Solution, Source,
};
use crate::fdstencil::{fd2d_sevenpoint, LatticeDomain, StencilScheme};
use crate::fe::q1_shape;
use crate::linalg::{sparse_solve, C64};
use crate::mu_table::MuTable;
use crate::mesh::lattice::{Lattice, LatticeShape};
use crate::mesh::{
    annulus, equilateral_triangle_subdivisions, split_quads, structured_quad_mesh,
    BoundaryMarker, ElementKind, Mesh, MeshError, Point, QuadRegion, SideMarkers,
};
use crate::{Error, Result};

/// Largest reference problem accepted by [`reference_solve`].
pub const REFERENCE_NODE_LIMIT: usize = 300_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExactSolution {
    PlaneWave {
        c: f64,
        theta: f64,
        convention: PlaneWaveConvention,
    },
    /// `sin(c x)`.
    AxisWave { c: f64 },
    None,
}

impl ExactSolution {
    pub fn eval(&self, p: Point) -> Option<f64> {
        match *self {
            ExactSolution::PlaneWave {
                c,
                theta,
                convention,
            } => {
                let [a, b] = convention.direction(theta);
                Some((c * (a * p[0] + b * p[1])).sin())
            }
            ExactSolution::AxisWave { c } => Some((c * p[0]).sin()),
            ExactSolution::None => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSet {
    Nodes,
    NodesAndCentroids,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    pub inf_norm: f64,
    pub rel_inf: f64,
    pub sample_set: SampleSet,
    pub n_samples: usize,
}

/// Value of the discrete solution at the centroid (vertex mean) of element
/// `e`: the mean of its nodal values for P1 and for Q1.
fn centroid_value(mesh: &Mesh, values: &[C64], e: usize) -> C64 {
    let el = mesh.element(e);
    el.iter().map(|&k| values[k]).sum::<C64>() / el.len() as f64
}

fn sample_points(mesh: &Mesh, values: &[C64], samples: SampleSet) -> Vec<(Point, C64)> {
    let mut out: Vec<(Point, C64)> = mesh.nodes().iter().copied().zip(values.iter().copied()).collect();
    if samples == SampleSet::NodesAndCentroids {
        out.extend(
            (0..mesh.n_elements()).map(|e| (mesh.element_centroid(e), centroid_value(mesh, values, e))),
        );
    }
    out
}

fn report(pairs: impl Iterator<Item = (C64, C64)>, sample_set: SampleSet) -> ErrorReport {
    let (mut err, mut scale, mut n) = (0.0f64, 0.0f64, 0usize);
    for (uh, u) in pairs {
        err = err.max((uh - u).norm());
        scale = scale.max(u.norm());
        n += 1;
    }
    ErrorReport {
        inf_norm: err,
        rel_inf: if scale > 0.0 { err / scale } else { f64::NAN },
        sample_set,
        n_samples: n,
    }
}

/// Max-norm error of nodal values against an exact solution.
pub fn error_inf(
    mesh: &Mesh,
    values: &[C64],
    exact: &ExactSolution,
    samples: SampleSet,
) -> Result<ErrorReport> {
    if *exact == ExactSolution::None {
        return Err(Error::InvalidProblem(
            "no exact solution for this problem; compare against a reference solve".into(),
        ));
    }
    if values.len() != mesh.n_nodes() {
        return Err(Error::InvalidProblem(format!(
            "{} values for {} nodes",
            values.len(),
            mesh.n_nodes()
        )));
    }
    let pts = sample_points(mesh, values, samples);
    Ok(report(
        pts.into_iter()
            .map(|(p, uh)| (uh, C64::new(exact.eval(p).expect("exact"), 0.0))),
        samples,
    ))
}

/// Bucket grid for locating the element that contains a point.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: Point,
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.nodes() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let area = mesh.total_area().max(f64::MIN_POSITIVE);
        let cell = (2.0 * area / mesh.n_elements() as f64).sqrt().max(1e-300);
        let dims = [
            (((hi[0] - lo[0]) / cell) as usize + 1).min(1 << 12),
            (((hi[1] - lo[1]) / cell) as usize + 1).min(1 << 12),
        ];
        let cell = ((hi[0] - lo[0]) / dims[0] as f64).max((hi[1] - lo[1]) / dims[1] as f64) * (1.0 + 1e-12);
        let cell = if cell > 0.0 { cell } else { 1.0 };
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        let mut locator = PointLocator {
            mesh,
            origin: lo,
            cell,
            dims,
            buckets: Vec::new(),
        };
        for (e, el) in mesh.elements().enumerate() {
            let (mut a, mut b) = ([usize::MAX; 2], [0usize; 2]);
            for &k in el {
                let c = locator.cell_of(mesh.nodes()[k]);
                for d in 0..2 {
                    a[d] = a[d].min(c[d]);
                    b[d] = b[d].max(c[d]);
                }
            }
            for j in a[1]..=b[1] {
                for i in a[0]..=b[0] {
                    buckets[j * dims[0] + i].push(e);
                }
            }
        }
        locator.buckets = buckets;
        locator
    }

    fn cell_of(&self, p: Point) -> [usize; 2] {
        std::array::from_fn(|d| {
            let x = ((p[d] - self.origin[d]) / self.cell).floor();
            (x.max(0.0) as usize).min(self.dims[d] - 1)
        })
    }

    /// Element containing `p` and the weights of its nodes.
    pub fn locate(&self, p: Point) -> Option<(usize, Vec<f64>)> {
        let [i, j] = self.cell_of(p);
        let nodes = self.mesh.nodes();
        let tol = 1e-9;
        for &e in &self.buckets[j * self.dims[0] + i] {
            let v: Vec<Point> = self.mesh.element(e).iter().map(|&k| nodes[k]).collect();
            let w = match self.mesh.kind() {
                ElementKind::Triangle => barycentric(&v, p),
                ElementKind::Quad => inverse_bilinear(&v, p).map(|(xi, eta)| q1_shape(xi, eta).to_vec()),
            };
            if let Some(w) = w {
                if w.iter().all(|&x| x >= -tol) {
                    return Some((e, w));
                }
            }
        }
        None
    }

    pub fn interpolate(&self, values: &[C64], p: Point) -> Option<C64> {
        let (e, w) = self.locate(p)?;
        Some(
            self.mesh
                .element(e)
                .iter()
                .zip(&w)
                .map(|(&k, &wk)| values[k] * wk)
                .sum(),
        )
    }
}

fn barycentric(v: &[Point], p: Point) -> Option<Vec<f64>> {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    if det == 0.0 {
        return None;
    }
    let l1 = ((p[0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (p[1] - v[0][1])) / det;
    let l2 = ((v[1][0] - v[0][0]) * (p[1] - v[0][1]) - (p[0] - v[0][0]) * (v[1][1] - v[0][1])) / det;
    Some(vec![1.0 - l1 - l2, l1, l2])
}

/// Reference coordinates of `p` in a convex quad by Newton iteration.
fn inverse_bilinear(v: &[Point], p: Point) -> Option<(f64, f64)> {
    let (mut xi, mut eta) = (0.5, 0.5);
    for _ in 0..20 {
        let n = q1_shape(xi, eta);
        let mut f = [-p[0], -p[1]];
        for k in 0..4 {
            f[0] += n[k] * v[k][0];
            f[1] += n[k] * v[k][1];
        }
        let dxi = [
            (1.0 - eta) * (v[1][0] - v[0][0]) + eta * (v[2][0] - v[3][0]),
            (1.0 - eta) * (v[1][1] - v[0][1]) + eta * (v[2][1] - v[3][1]),
        ];
        let deta = [
            (1.0 - xi) * (v[3][0] - v[0][0]) + xi * (v[2][0] - v[1][0]),
            (1.0 - xi) * (v[3][1] - v[0][1]) + xi * (v[2][1] - v[1][1]),
        ];
        let det = dxi[0] * deta[1] - dxi[1] * deta[0];
        if det == 0.0 {
            return None;
        }
        let dx = (f[0] * deta[1] - f[1] * deta[0]) / det;
        let de = (dxi[0] * f[1] - dxi[1] * f[0]) / det;
        xi -= dx;
        eta -= de;
        if dx.abs() + de.abs() < 1e-14 {
            break;
        }
    }
    Some((xi, eta))
}

/// Max-norm distance between a coarse solution and a reference solution
/// interpolated at the coarse sample points.
pub fn compare_to_reference(
    mesh: &Mesh,
    values: &[C64],
    reference_mesh: &Mesh,
    reference_values: &[C64],
    samples: SampleSet,
) -> Result<ErrorReport> {
    let locator = PointLocator::new(reference_mesh);
    let pts = sample_points(mesh, values, samples);
    let mut pairs = Vec::with_capacity(pts.len());
    for (p, uh) in pts {
        let u = locator.interpolate(reference_values, p).ok_or_else(|| {
            Error::InvalidProblem(format!(
                "sample point ({}, {}) lies outside the reference mesh",
                p[0], p[1]
            ))
        })?;
        pairs.push((uh, u));
    }
    Ok(report(pairs.into_iter(), samples))
}

/// Benchmark problems: domain, boundary markers, data and exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Equilateral triangle, plane-wave Dirichlet data on all edges.
    DirichletPlanewave,
    /// Lattice-aligned strip, Neumann on horizontal edges, `sin(cx)` on the
    /// slanted ones.
    NeumannStrip,
    /// Equilateral triangle, `f = sin x`, `u = 0.1` on the bottom edge and
    /// `∂u/∂n = βu` on the others.
    RobinSource,
    /// L-shape of split squares, plane-wave Dirichlet data.
    Lshape,
    /// L-shape of squares, Neumann on horizontal edges, `sin(cx)` on the
    /// vertical ones.
    LshapeQuad,
    /// Annulus, `u = 0.1` on the inner circle, Neumann on the outer.
    Scatterer,
}

pub const PRESETS: [Preset; 6] = [
    Preset::DirichletPlanewave,
    Preset::NeumannStrip,
    Preset::RobinSource,
    Preset::Lshape,
    Preset::LshapeQuad,
    Preset::Scatterer,
];

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::DirichletPlanewave => "dirichlet-planewave",
            Preset::NeumannStrip => "neumann-strip",
            Preset::RobinSource => "robin-source",
            Preset::Lshape => "lshape",
            Preset::LshapeQuad => "lshape-quad",
            Preset::Scatterer => "scatterer",
        })
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        PRESETS
            .iter()
            .copied()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| {
                let names: Vec<String> = PRESETS.iter().map(|p| p.to_string()).collect();
                format!("unknown preset `{s}` ({})", names.join("|"))
            })
    }
}

/// Inner and outer radii of the scatterer annulus.
pub const SCATTERER_RADII: (f64, f64) = (0.25, 1.0);

fn is_horizontal(a: Point, b: Point) -> bool {
    (a[1] - b[1]).abs() <= 1e-9 * (a[0] - b[0]).abs().max(1e-300)
}

/// Element count along a unit length for a target `ch`.
fn subdivisions(length: f64, c: f64, ch: f64) -> std::result::Result<usize, MeshError> {
    equilateral_triangle_subdivisions(length, ch, c)
}

impl Preset {
    /// The lattice behind lattice-based presets, for the finite-difference
    /// path. Node numbering matches [`Preset::mesh`].
    pub fn lattice(&self, c: f64, ch: f64) -> Result<Option<Lattice>> {
        Ok(match self {
            Preset::DirichletPlanewave | Preset::RobinSource => {
                let n = subdivisions(1.0, c, ch)?;
                Some(Lattice::new(LatticeShape::Triangle { n }, 1.0 / n as f64, [0.0, 0.0])?)
            }
            Preset::NeumannStrip => {
                let nx = subdivisions(1.0, c, ch)?;
                Some(Lattice::new(
                    LatticeShape::Parallelogram { nx, ny: (nx / 2).max(1) },
                    1.0 / nx as f64,
                    [0.0, 0.0],
                )?)
            }
            _ => None,
        })
    }

    pub fn mesh(&self, c: f64, ch: f64) -> Result<Mesh> {
        let mesh = match self {
            Preset::DirichletPlanewave => self
                .lattice(c, ch)?
                .expect("lattice preset")
                .to_mesh(|_, _| BoundaryMarker::Dirichlet)?,
            Preset::RobinSource => self.lattice(c, ch)?.expect("lattice preset").to_mesh(|a, b| {
                if is_horizontal(a, b) {
                    BoundaryMarker::Dirichlet
                } else {
                    BoundaryMarker::Robin
                }
            })?,
            Preset::NeumannStrip => self.lattice(c, ch)?.expect("lattice preset").to_mesh(|a, b| {
                if is_horizontal(a, b) {
                    BoundaryMarker::Neumann
                } else {
                    BoundaryMarker::Dirichlet
                }
            })?,
            Preset::Lshape => {
                let n = subdivisions(1.0, c, ch)?;
                split_quads(&structured_quad_mesh(
                    &QuadRegion::LShape {
                        origin: [-1.0, -1.0],
                        side: 2.0,
                    },
                    1.0 / n as f64,
                    SideMarkers::all(BoundaryMarker::Dirichlet),
                )?)?
            }
            Preset::LshapeQuad => {
                let n = subdivisions(1.0, c, ch)?;
                structured_quad_mesh(
                    &QuadRegion::LShape {
                        origin: [-1.0, -1.0],
                        side: 2.0,
                    },
                    1.0 / n as f64,
                    SideMarkers {
                        bottom: BoundaryMarker::Neumann,
                        right: BoundaryMarker::Dirichlet,
                        top: BoundaryMarker::Neumann,
                        left: BoundaryMarker::Dirichlet,
                    },
                )?
            }
            Preset::Scatterer => {
                let (r_in, r_out) = SCATTERER_RADII;
                annulus(
                    r_in,
                    r_out,
                    ch / c,
                    BoundaryMarker::Dirichlet,
                    BoundaryMarker::Neumann,
                )?
            }
        };
        Ok(mesh)
    }

    pub fn spec(
        &self,
        c: f64,
        method: Method,
        theta: f64,
        convention: PlaneWaveConvention,
    ) -> ProblemSpec {
        let spec = ProblemSpec::new(c, method);
        match self {
            Preset::DirichletPlanewave | Preset::Lshape => {
                spec.with_dirichlet(DirichletData::PlaneWave { theta, convention })
            }
            Preset::NeumannStrip | Preset::LshapeQuad => spec.with_dirichlet(DirichletData::AxisWave),
            Preset::RobinSource => spec
                .with_source(Source::SinX)
                .with_dirichlet(DirichletData::Constant(C64::new(0.1, 0.0))),
            Preset::Scatterer => spec.with_dirichlet(DirichletData::Constant(C64::new(0.1, 0.0))),
        }
    }

    pub fn exact(&self, c: f64, theta: f64, convention: PlaneWaveConvention) -> ExactSolution {
        match self {
            Preset::DirichletPlanewave | Preset::Lshape => ExactSolution::PlaneWave {
                c,
                theta,
                convention,
            },
            Preset::NeumannStrip | Preset::LshapeQuad => ExactSolution::AxisWave { c },
            Preset::RobinSource | Preset::Scatterer => ExactSolution::None,
        }
    }

    /// Default wave number and `ch` of the preset's benchmark.
    pub fn defaults(&self) -> (f64, f64) {
        match self {
            Preset::DirichletPlanewave => (50.0, 0.625),
            Preset::NeumannStrip => (20.0, 1.0),
            Preset::RobinSource => (20.0, 0.5),
            Preset::Lshape | Preset::Scatterer => (3.5 * std::f64::consts::PI, 0.625),
            Preset::LshapeQuad => (7.0, 1.0),
        }
    }
}

/// Plain Galerkin solve of `spec` on the preset's mesh at `ch_ref`.
pub fn reference_solve(preset: Preset, spec: &ProblemSpec, ch_ref: f64) -> Result<(Mesh, Solution)> {
    let mesh = preset.mesh(spec.c, ch_ref)?;
    if mesh.n_nodes() > REFERENCE_NODE_LIMIT {
        return Err(Error::TooLarge {
            unknowns: mesh.n_nodes(),
            limit: REFERENCE_NODE_LIMIT,
        });
    }
    let sol = solve_problem(&mesh, &spec.clone().with_method(Method::Galerkin))?;
    Ok((mesh, sol))
}

/// A method column of the pollution sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepMethod {
    Fem(Method),
    Fd(StencilScheme),
}

impl fmt::Display for SweepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepMethod::Fem(m) => write!(f, "{m}"),
            SweepMethod::Fd(s) => write!(f, "fd-{s}"),
        }
    }
}

impl FromStr for SweepMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.strip_prefix("fd-") {
            Some(rest) => rest.parse().map(SweepMethod::Fd),
            None => s.parse().map(SweepMethod::Fem),
        }
    }
}

/// Default method list: the three FEM methods plus the pseudo-AB (μ = 6.8)
/// and fourth-order seven-point schemes.
pub fn default_sweep_methods() -> Vec<SweepMethod> {
    vec![
        SweepMethod::Fem(Method::Galerkin),
        SweepMethod::Fem(Method::Rfb),
        SweepMethod::Fem(Method::Ab),
        SweepMethod::Fd(StencilScheme::PseudoAb { mu: 6.8 }),
        SweepMethod::Fd(StencilScheme::FourthOrder),
    ]
}

/// `n` equally spaced angles in `[0, π]`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|k| std::f64::consts::PI * k as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub preset: Preset,
    pub methods: Vec<SweepMethod>,
    pub ch: f64,
    pub thetas: Vec<f64>,
    pub c_list: Vec<f64>,
    pub convention: PlaneWaveConvention,
    pub n_s_override: Option<usize>,
    pub clamp_mu: bool,
    pub tri_table: Option<Arc<MuTable>>,
    pub quad_table: Option<Arc<MuTable>>,
    /// Fill the timing columns. Off by default so that identical
    /// configurations give identical CSV bytes.
    pub timings: bool,
}

impl SweepConfig {
    pub fn new(ch: f64, c_list: Vec<f64>) -> Self {
        SweepConfig {
            preset: Preset::DirichletPlanewave,
            methods: default_sweep_methods(),
            ch,
            thetas: vec![0.0],
            c_list,
            convention: PlaneWaveConvention::default(),
            n_s_override: None,
            clamp_mu: false,
            tri_table: None,
            quad_table: None,
            timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub c: f64,
    /// Realized `c·h` of the mesh (element side for triangles).
    pub ch: f64,
    pub theta: f64,
    pub n_unknowns: usize,
    pub inf_error: f64,
    pub rel_error: f64,
    pub assembly_ms: Option<f64>,
    pub solve_ms: Option<f64>,
}

/// One solve and error evaluation. The error covers nodes and centroids.
pub fn sweep_cell(
    config: &SweepConfig,
    method: SweepMethod,
    c: f64,
    theta: f64,
) -> Result<SweepRow> {
    let preset = config.preset;
    let mesh = preset.mesh(c, config.ch)?;
    let exact = preset.exact(c, theta, config.convention);
    let h = mesh.element_geometry(0)?.h_char;
    let (values, n_unknowns, assembly_ms, solve_ms) = match method {
        SweepMethod::Fem(m) => {
            let mut spec = preset
                .spec(c, m, theta, config.convention)
                .with_n_s(config.n_s_override)
                .with_clamp(config.clamp_mu);
            spec.tri_table = config.tri_table.clone();
            spec.quad_table = config.quad_table.clone();
            let sol = solve_problem(&mesh, &spec)?;
            (
                sol.nodal_values,
                sol.stats.n_unknowns,
                sol.stats.assembly_ms,
                sol.stats.solve_ms,
            )
        }
        SweepMethod::Fd(scheme) => {
            if preset != Preset::DirichletPlanewave {
                return Err(Error::InvalidProblem(format!(
                    "finite-difference schemes need an all-Dirichlet lattice preset, got {preset}"
                )));
            }
            let lattice = preset.lattice(c, config.ch)?.expect("lattice preset");
            let t0 = Instant::now();
            let spec = preset.spec(c, Method::Galerkin, theta, config.convention);
            let domain = LatticeDomain::new(lattice, |p| spec.dirichlet.eval(p, c));
            let sys = fd2d_sevenpoint(&domain, scheme, c)?;
            let t1 = Instant::now();
            let x = sparse_solve(&sys.system)?;
            let solve_ms = t1.elapsed().as_secs_f64() * 1e3;
            (
                sys.expand(&x),
                sys.system.n(),
                (t1 - t0).as_secs_f64() * 1e3,
                solve_ms,
            )
        }
    };
    let report = error_inf(&mesh, &values, &exact, SampleSet::NodesAndCentroids)?;
    Ok(SweepRow {
        method: method.to_string(),
        c,
        ch: c * h,
        theta,
        n_unknowns,
        inf_error: report.inf_norm,
        rel_error: report.rel_inf,
        assembly_ms: config.timings.then_some(assembly_ms),
        solve_ms: config.timings.then_some(solve_ms),
    })
}

/// Runs every `(theta, c, method)` cell in that nesting order. A failing
/// cell is logged and recorded with NaN errors; the sweep continues.
pub fn pollution_sweep(config: &SweepConfig) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &theta in &config.thetas {
        for &c in &config.c_list {
            for &method in &config.methods {
                let row = sweep_cell(config, method, c, theta).unwrap_or_else(|e| {
                    log::error!("sweep cell {method} c={c} theta={theta}: {e}");
                    SweepRow {
                        method: method.to_string(),
                        c,
                        ch: config.ch,
                        theta,
                        n_unknowns: 0,
                        inf_error: f64::NAN,
                        rel_error: f64::NAN,
                        assembly_ms: None,
                        solve_ms: None,
                    }
                });
                rows.push(row);
            }
        }
    }
    rows
}

pub const SWEEP_CSV_HEADER: &str =
    "method,c,ch,theta,n_unknowns,inf_error,rel_error,assembly_ms,solve_ms";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:e},{:e},{},{}",
            r.method,
            r.c,
            r.ch,
            r.theta,
            r.n_unknowns,
            r.inf_error,
            r.rel_error,
            opt(r.assembly_ms),
            opt(r.solve_ms)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_nodal_samples_have_zero_error() {
        let mesh = Preset::DirichletPlanewave.mesh(20.0, 0.7).unwrap();
        let exact = Preset::DirichletPlanewave.exact(20.0, 0.4, PlaneWaveConvention::SinCos);
        let values: Vec<C64> = mesh
            .nodes()
            .iter()
            .map(|&p| C64::new(exact.eval(p).unwrap(), 0.0))
            .collect();
        let r = error_inf(&mesh, &values, &exact, SampleSet::Nodes).unwrap();
        assert_eq!(r.inf_norm, 0.0);
        let r = error_inf(&mesh, &values, &exact, SampleSet::NodesAndCentroids).unwrap();
        assert!(r.inf_norm > 0.0 && r.n_samples == mesh.n_nodes() + mesh.n_elements());
        let conj: Vec<C64> = values.iter().map(|v| v.conj()).collect();
        assert_eq!(
            error_inf(&mesh, &conj, &exact, SampleSet::NodesAndCentroids).unwrap(),
            r
        );
        assert!(error_inf(&mesh, &values, &ExactSolution::None, SampleSet::Nodes).is_err());
    }

    #[test]
    fn conventions_swap_axes() {
        let a = ExactSolution::PlaneWave {
            c: 3.0,
            theta: 0.0,
            convention: PlaneWaveConvention::SinCos,
        };
        let b = ExactSolution::PlaneWave {
            c: 3.0,
            theta: 0.0,
            convention: PlaneWaveConvention::CosSin,
        };
        assert!((a.eval([0.2, 0.5]).unwrap() - 1.5f64.sin()).abs() < 1e-15);
        assert!((b.eval([0.2, 0.5]).unwrap() - 0.6f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn preset_meshes_have_expected_sizes() {
        assert_eq!(Preset::NeumannStrip.mesh(20.0, 1.0).unwrap().n_elements(), 400);
        assert_eq!(Preset::NeumannStrip.mesh(70.0, 3.5).unwrap().n_elements(), 400);
        assert_eq!(Preset::RobinSource.mesh(20.0, 0.1).unwrap().n_elements(), 40000);
        assert_eq!(Preset::LshapeQuad.mesh(7.0, 1.0).unwrap().n_elements(), 147);
        let l = Preset::Lshape.mesh(10.0, 1.0).unwrap();
        assert!((l.total_area() - 3.0).abs() < 1e-12);
        let s = Preset::Scatterer.mesh(10.0, 0.625).unwrap();
        let (a, b) = SCATTERER_RADII;
        let ring = std::f64::consts::PI * (b * b - a * a);
        assert!((s.total_area() - ring).abs() < 0.01 * ring);
        for p in PRESETS {
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
    }

    #[test]
    fn fd_and_fem_share_node_numbering() {
        let lat = Preset::DirichletPlanewave.lattice(30.0, 0.75).unwrap().unwrap();
        let mesh = Preset::DirichletPlanewave.mesh(30.0, 0.75).unwrap();
        assert_eq!(lat.positions(), mesh.nodes());
    }

    #[test]
    fn single_cell_sweep_matches_direct_solve() {
        let mut cfg = SweepConfig::new(0.625, vec![20.0]);
        cfg.methods = vec![SweepMethod::Fem(Method::Ab)];
        let rows = pollution_sweep(&cfg);
        let mesh = Preset::DirichletPlanewave.mesh(20.0, 0.625).unwrap();
        let spec = Preset::DirichletPlanewave.spec(20.0, Method::Ab, 0.0, cfg.convention);
        let sol = solve_problem(&mesh, &spec).unwrap();
        let exact = Preset::DirichletPlanewave.exact(20.0, 0.0, cfg.convention);
        let r = error_inf(&mesh, &sol.nodal_values, &exact, SampleSet::NodesAndCentroids).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].inf_error, r.inf_norm);
        assert_eq!(rows[0].n_unknowns, sol.stats.n_unknowns);
        assert!(rows[0].assembly_ms.is_none());
    }

    #[test]
    fn failing_cells_are_recorded() {
        let mut cfg = SweepConfig::new(0.625, vec![20.0]);
        cfg.preset = Preset::NeumannStrip;
        cfg.methods = vec![
            SweepMethod::Fd(StencilScheme::FourthOrder),
            SweepMethod::Fem(Method::Galerkin),
        ];
        let rows = pollution_sweep(&cfg);
        assert!(rows[0].inf_error.is_nan());
        assert!(rows[1].inf_error.is_finite());
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with(SWEEP_CSV_HEADER));
        assert!(csv.lines().nth(1).unwrap().contains("NaN"));
    }

    #[test]
    fn sweep_method_names_round_trip() {
        for m in default_sweep_methods() {
            assert_eq!(m.to_string().parse::<SweepMethod>().unwrap(), m);
        }
        assert_eq!(theta_grid(13).len(), 13);
        assert_eq!(theta_grid(13)[12], std::f64::consts::PI);
    }

    #[test]
    fn locator_interpolates_linear_data_exactly() {
        for mesh in [
            Preset::Lshape.mesh(10.0, 1.0).unwrap(),
            Preset::LshapeQuad.mesh(7.0, 1.0).unwrap(),
            Preset::Scatterer.mesh(10.0, 1.0).unwrap(),
        ] {
            let values: Vec<C64> = mesh
                .nodes()
                .iter()
                .map(|p| C64::new(2.0 * p[0] - p[1] + 0.5, 0.0))
                .collect();
            let loc = PointLocator::new(&mesh);
            for e in (0..mesh.n_elements()).step_by(7) {
                let p = mesh.element_centroid(e);
                let v = loc.interpolate(&values, p).unwrap();
                assert!((v.re - (2.0 * p[0] - p[1] + 0.5)).abs() < 1e-12);
            }
            assert!(loc.locate([5.0, 5.0]).is_none());
        }
    }

    #[test]
    fn reference_on_same_mesh_gives_zero_error() {
        let spec = Preset::RobinSource.spec(20.0, Method::Galerkin, 0.0, PlaneWaveConvention::SinCos);
        let (mesh, sol) = reference_solve(Preset::RobinSource, &spec, 0.5).unwrap();
        let r = compare_to_reference(&mesh, &sol.nodal_values, &mesh, &sol.nodal_values, SampleSet::NodesAndCentroids)
            .unwrap();
        assert!(r.inf_norm < 1e-14);
    }
}
