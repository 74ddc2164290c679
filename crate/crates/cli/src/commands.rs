use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use helmab_core::analysis::{coefficient_sweep, trunc_coeffs_printed, TruncationCoeffs};
use helmab_core::assembly::{solve_problem, PlaneWaveConvention};
use helmab_core::mesh::io::{load_mesh, save_mesh, write_vtk};
use helmab_core::verify::{
    compare_to_reference, error_inf, pollution_sweep, reference_solve, sweep_csv, theta_grid,
    ExactSolution, Preset, SampleSet, SweepConfig,
};
use helmab_core::{ElementKind, Mesh, Method, MuTable, ProblemSpec};
use serde::Serialize;

use crate::config::{pick, pick_parsed, pick_parsed_list, require_positive, ConfigError, FileConfig};
use crate::{CoeffsArgs, MeshArgs, ProblemArgs, SolveArgs, SweepArgs, TableArgs};

/// Problem options after merging flags, file and preset defaults.
struct Problem {
    preset: Preset,
    c: f64,
    ch: f64,
    theta: f64,
    convention: PlaneWaveConvention,
    n_s: Option<usize>,
    clamp_mu: bool,
    tri_table: Option<Arc<MuTable>>,
    quad_table: Option<Arc<MuTable>>,
}

impl Problem {
    fn resolve(a: ProblemArgs, file: &FileConfig) -> anyhow::Result<Self> {
        let preset = pick_parsed(a.preset, &file.preset, "preset")?.unwrap_or(Preset::DirichletPlanewave);
        let (c0, ch0) = preset.defaults();
        let c = require_positive(pick(a.c, &file.c).unwrap_or(c0), "c")?;
        let ch = require_positive(pick(a.ch, &file.ch).unwrap_or(ch0), "ch")?;
        let n_s = pick(a.n_s, &file.n_s);
        if let Some(n) = n_s {
            if n < 3 {
                return Err(ConfigError(format!("`n_s` must be at least 3, got {n}")).into());
            }
        }
        Ok(Problem {
            preset,
            c,
            ch,
            theta: pick(a.theta, &file.theta).unwrap_or(0.0),
            convention: pick_parsed(a.convention, &file.convention, "convention")?.unwrap_or_default(),
            n_s,
            clamp_mu: a.clamp_mu || file.clamp_mu.unwrap_or(false),
            tri_table: load_table(pick(a.mu_table_tri, &file.mu_table_tri), ElementKind::Triangle)?,
            quad_table: load_table(pick(a.mu_table_quad, &file.mu_table_quad), ElementKind::Quad)?,
        })
    }

    fn spec(&self, method: Method) -> ProblemSpec {
        let mut spec = self
            .preset
            .spec(self.c, method, self.theta, self.convention)
            .with_n_s(self.n_s)
            .with_clamp(self.clamp_mu);
        spec.tri_table = self.tri_table.clone();
        spec.quad_table = self.quad_table.clone();
        spec
    }
}

fn load_table(path: Option<PathBuf>, kind: ElementKind) -> anyhow::Result<Option<Arc<MuTable>>> {
    let Some(path) = path else { return Ok(None) };
    let table = MuTable::load(&path).with_context(|| format!("mu table {}", path.display()))?;
    if table.kind() != kind {
        return Err(ConfigError(format!(
            "{} holds a {} table, expected {kind}",
            path.display(),
            table.kind()
        ))
        .into());
    }
    Ok(Some(Arc::new(table)))
}

fn create_file(path: &Path) -> anyhow::Result<BufWriter<fs::File>> {
    let f = fs::File::create(path)
        .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn emit(text: &str, out: Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let mut w = create_file(&path)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                // reader went away, e.g. `| head`
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ErrorSummary {
    against: &'static str,
    inf_error: f64,
    rel_error: f64,
    sample_set: SampleSet,
    n_samples: usize,
}

#[derive(Serialize)]
struct SolveSummary {
    preset: String,
    method: String,
    c: f64,
    ch_target: f64,
    ch: f64,
    theta: f64,
    convention: String,
    n_nodes: usize,
    n_elements: usize,
    n_unknowns: usize,
    max: f64,
    min: f64,
    exact_max: Option<f64>,
    exact_min: Option<f64>,
    inf_error: Option<f64>,
    rel_error: Option<f64>,
    error: Option<ErrorSummary>,
    assembly_ms: f64,
    solve_ms: f64,
}

pub fn solve(a: SolveArgs, file: &FileConfig) -> anyhow::Result<()> {
    let method = pick_parsed(a.method, &file.method, "method")?.unwrap_or(Method::Ab);
    let samples = match a.samples {
        Some(s) => s,
        None => match file.samples.as_deref() {
            None => SampleSet::NodesAndCentroids,
            Some(s) => crate::parse_samples(s).map_err(|e| ConfigError(format!("config field `samples`: {e}")))?,
        },
    };
    let ch_ref = pick(a.ch_ref, &file.ch_ref).map(|v| require_positive(v, "ch_ref")).transpose()?;
    let out_dir = pick(a.out_dir, &file.out_dir).unwrap_or_else(|| PathBuf::from("."));
    let mesh_path = pick(a.mesh, &file.mesh);
    let problem = Problem::resolve(a.problem, file)?;

    fs::create_dir_all(&out_dir)
        .map_err(|e| ConfigError(format!("cannot create output directory {}: {e}", out_dir.display())))?;
    let mesh = match &mesh_path {
        Some(p) => load_mesh(p).with_context(|| format!("mesh {}", p.display()))?,
        None => problem.preset.mesh(problem.c, problem.ch)?,
    };
    let spec = problem.spec(method);
    log::info!(
        "{} {method}: c = {}, {} nodes, {} elements",
        problem.preset,
        problem.c,
        mesh.n_nodes(),
        mesh.n_elements()
    );
    let sol = solve_problem(&mesh, &spec)?;

    let exact = problem.preset.exact(problem.c, problem.theta, problem.convention);
    let exact_values: Option<Vec<f64>> = match exact {
        ExactSolution::None => None,
        _ => Some(mesh.nodes().iter().map(|&p| exact.eval(p).expect("exact")).collect()),
    };
    let error = if exact_values.is_some() {
        let r = error_inf(&mesh, &sol.nodal_values, &exact, samples)?;
        Some(ErrorSummary {
            against: "exact",
            inf_error: r.inf_norm,
            rel_error: r.rel_inf,
            sample_set: r.sample_set,
            n_samples: r.n_samples,
        })
    } else if let Some(ch_ref) = ch_ref {
        if mesh_path.is_some() {
            log::warn!("reference mesh is the preset's; the supplied mesh must cover the same domain");
        }
        let (ref_mesh, ref_sol) = reference_solve(problem.preset, &spec, ch_ref)?;
        let r = compare_to_reference(&mesh, &sol.nodal_values, &ref_mesh, &ref_sol.nodal_values, samples)?;
        Some(ErrorSummary {
            against: "reference",
            inf_error: r.inf_norm,
            rel_error: r.rel_inf,
            sample_set: r.sample_set,
            n_samples: r.n_samples,
        })
    } else {
        None
    };

    let re: Vec<f64> = sol.nodal_values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = sol.nodal_values.iter().map(|v| v.im).collect();
    let mut fields: Vec<(&str, &[f64])> = vec![("u_re", &re), ("u_im", &im)];
    let abs_err: Vec<f64>;
    if let Some(ex) = &exact_values {
        abs_err = ex.iter().zip(&sol.nodal_values).map(|(&u, v)| (v - u).norm()).collect();
        fields.push(("u_exact", ex));
        fields.push(("abs_error", &abs_err));
    }
    let vtk_path = out_dir.join("solution.vtk");
    let mut w = create_file(&vtk_path)?;
    write_vtk(
        &mesh,
        &format!("helmab {} {method} c={}", problem.preset, problem.c),
        &fields,
        &mut w,
    )?;
    w.flush()?;

    let fold = |f: fn(f64, f64) -> f64, init: f64| exact_values.as_ref().map(|v| v.iter().copied().fold(init, f));
    let summary = SolveSummary {
        preset: problem.preset.to_string(),
        method: method.to_string(),
        c: problem.c,
        ch_target: problem.ch,
        ch: problem.c * mesh.element_geometry(0)?.h_char,
        theta: problem.theta,
        convention: problem.convention.to_string(),
        n_nodes: mesh.n_nodes(),
        n_elements: mesh.n_elements(),
        n_unknowns: sol.stats.n_unknowns,
        max: sol.max_re(),
        min: sol.min_re(),
        exact_max: fold(f64::max, f64::NEG_INFINITY),
        exact_min: fold(f64::min, f64::INFINITY),
        inf_error: error.as_ref().map(|e| e.inf_error),
        rel_error: error.as_ref().map(|e| e.rel_error),
        error,
        assembly_ms: sol.stats.assembly_ms,
        solve_ms: sol.stats.solve_ms,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    let json = json + "\n";
    emit(&json, Some(out_dir.join("summary.json")))?;
    emit(&json, None)
}

pub fn sweep(a: SweepArgs, file: &FileConfig) -> anyhow::Result<()> {
    let methods = pick_parsed_list(a.methods, &file.methods, "methods")?;
    let c_list = pick(a.c_list, &file.c_list).unwrap_or_else(|| vec![25.0, 50.0, 100.0, 200.0]);
    for c in &c_list {
        require_positive(*c, "c_list")?;
    }
    let thetas = match pick(a.thetas, &file.thetas) {
        Some(t) => t,
        None => match pick(a.n_theta, &file.n_theta) {
            Some(n) => theta_grid(n),
            None => vec![pick(a.problem.theta, &file.theta).unwrap_or(0.0)],
        },
    };
    let timings = a.timings || file.timings.unwrap_or(false);
    let out = pick(a.out, &file.out);
    let problem = Problem::resolve(a.problem, file)?;

    let mut config = SweepConfig::new(problem.ch, c_list);
    config.preset = problem.preset;
    if let Some(m) = methods {
        config.methods = m;
    }
    config.thetas = thetas;
    config.convention = problem.convention;
    config.n_s_override = problem.n_s;
    config.clamp_mu = problem.clamp_mu;
    config.tri_table = problem.tri_table;
    config.quad_table = problem.quad_table;
    config.timings = timings;
    let rows = pollution_sweep(&config);
    let failed = rows.iter().filter(|r| r.inf_error.is_nan()).count();
    if failed > 0 {
        log::warn!("{failed} of {} sweep cells failed", rows.len());
    }
    emit(&sweep_csv(&rows), out)
}

pub fn coeffs(a: CoeffsArgs, file: &FileConfig) -> anyhow::Result<()> {
    let scheme = pick_parsed(a.scheme, &file.scheme, "scheme")?
        .ok_or_else(|| ConfigError("`scheme` is required".into()))?;
    let theta = pick(a.theta, &file.theta).unwrap_or(0.0);
    let ch_min = require_positive(pick(a.ch_min, &file.ch_min).unwrap_or(0.05), "ch_min")?;
    let ch_max = require_positive(pick(a.ch_max, &file.ch_max).unwrap_or(4.0), "ch_max")?;
    let n = pick(a.n_ch, &file.n_ch).unwrap_or(80);
    if ch_max < ch_min || n == 0 {
        return Err(ConfigError(format!("empty ch grid: [{ch_min}, {ch_max}] with {n} points")).into());
    }
    let form = pick(a.form, &file.form).unwrap_or_else(|| "normalized".into());
    let grid: Vec<f64> = (0..n)
        .map(|k| if n == 1 { ch_min } else { ch_min + (ch_max - ch_min) * k as f64 / (n - 1) as f64 })
        .collect();
    let rows: Vec<(f64, Option<TruncationCoeffs>)> = match form.as_str() {
        "normalized" => coefficient_sweep(scheme, theta, &grid)
            .into_iter()
            .map(|r| (r.ch, r.coeffs))
            .collect(),
        "printed" => {
            let c = pick(a.c, &file.c)
                .ok_or_else(|| ConfigError("`c` is required with form = printed".into()))?;
            let c = require_positive(c, "c")?;
            grid.iter()
                .map(|&ch| {
                    let h = ch / c;
                    (ch, scheme.alpha2(c, h).ok().map(|a2| trunc_coeffs_printed(a2, c, h, theta)))
                })
                .collect()
        }
        other => {
            return Err(ConfigError(format!("config field `form`: unknown form `{other}` (normalized|printed)")).into())
        }
    };
    let mut s = String::from("ch,c1,c2\n");
    for (ch, k) in rows {
        match k {
            Some(k) => writeln!(s, "{ch},{:e},{:e}", k.c1, k.c2)?,
            // pole of the scheme
            None => writeln!(s, "{ch},,")?,
        }
    }
    emit(&s, a.out)
}

pub fn table(a: TableArgs, file: &FileConfig) -> anyhow::Result<()> {
    let kind = match pick(a.kind, &file.kind).as_deref() {
        None | Some("tri") => ElementKind::Triangle,
        Some("quad") => ElementKind::Quad,
        Some(other) => return Err(ConfigError(format!("config field `kind`: unknown kind `{other}` (tri|quad)")).into()),
    };
    let file_table = match kind {
        ElementKind::Triangle => &file.mu_table_tri,
        ElementKind::Quad => &file.mu_table_quad,
    };
    let custom = load_table(pick(a.mu_table, file_table), kind)?;
    let table = custom.as_deref().unwrap_or_else(|| MuTable::builtin(kind));
    let clamp = a.clamp_mu || file.clamp_mu.unwrap_or(false);
    match pick(a.key, &file.key) {
        Some(key) => {
            let hit = table.lookup_with(key, clamp)?;
            emit(&format!("kind={kind} key={key} mu={} n_s={}\n", hit.mu, hit.n_s), None)
        }
        None => emit(&table.to_text(), None),
    }
}

#[derive(Serialize)]
struct MeshSummary {
    kind: String,
    n_nodes: usize,
    n_elements: usize,
    area: f64,
    h_min: f64,
    h_max: f64,
    dirichlet_edges: usize,
    neumann_edges: usize,
    robin_edges: usize,
}

fn summarize(mesh: &Mesh) -> anyhow::Result<MeshSummary> {
    let (mut h_min, mut h_max) = (f64::INFINITY, 0.0f64);
    for e in 0..mesh.n_elements() {
        let h = mesh.element_geometry(e)?.h_char;
        h_min = h_min.min(h);
        h_max = h_max.max(h);
    }
    let count = |m: helmab_core::BoundaryMarker| mesh.boundary_edges().iter().filter(|b| b.marker == m).count();
    Ok(MeshSummary {
        kind: mesh.kind().to_string(),
        n_nodes: mesh.n_nodes(),
        n_elements: mesh.n_elements(),
        area: mesh.total_area(),
        h_min,
        h_max,
        dirichlet_edges: count(helmab_core::BoundaryMarker::Dirichlet),
        neumann_edges: count(helmab_core::BoundaryMarker::Neumann),
        robin_edges: count(helmab_core::BoundaryMarker::Robin),
    })
}

pub fn mesh(a: MeshArgs, file: &FileConfig) -> anyhow::Result<()> {
    let input = pick(a.input, &file.mesh);
    let mesh = match &input {
        // loading validates
        Some(p) => load_mesh(p).with_context(|| format!("mesh {}", p.display()))?,
        None => {
            let preset = pick_parsed(a.preset, &file.preset, "preset")?.unwrap_or(Preset::DirichletPlanewave);
            let (c0, ch0) = preset.defaults();
            let c = require_positive(pick(a.c, &file.c).unwrap_or(c0), "c")?;
            let ch = require_positive(pick(a.ch, &file.ch).unwrap_or(ch0), "ch")?;
            preset.mesh(c, ch)?
        }
    };
    if let Some(p) = pick(a.out, &file.out) {
        save_mesh(&mesh, &p).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = pick(a.vtk, &file.vtk) {
        let mut w = create_file(&p)?;
        write_vtk(&mesh, "helmab mesh", &[], &mut w)?;
        w.flush()?;
    }
    emit(&(serde_json::to_string_pretty(&summarize(&mesh)?)? + "\n"), None)
}
