//! Mesh text format and VTK legacy export.
//!
//! ```text
//! # comment
//! nodes N
//! x y            (N lines)
//! elements M tri|quad
//! v0 v1 v2 [v3]  (M lines, 0-based)
//! boundary B
//! a b dirichlet|neumann|robin   (B lines)
//! ```

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{BoundaryEdge, BoundaryMarker, ElementKind, Mesh, MeshError};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let file = std::fs::File::open(path)?;
    read_mesh(file)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_mesh(mesh, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn write_mesh(mesh: &Mesh, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "nodes {}", mesh.n_nodes())?;
    for p in mesh.nodes() {
        // `{:?}` prints the shortest representation that round-trips
        writeln!(w, "{:?} {:?}", p[0], p[1])?;
    }
    writeln!(w, "elements {} {}", mesh.n_elements(), mesh.kind())?;
    let mut line = String::new();
    for el in mesh.elements() {
        line.clear();
        for (k, v) in el.iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{v}");
        }
        writeln!(w, "{line}")?;
    }
    writeln!(w, "boundary {}", mesh.boundary_edges().len())?;
    for be in mesh.boundary_edges() {
        writeln!(w, "{} {} {}", be.a, be.b, be.marker)?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    line_no: usize,
}

impl<R: Read> Lines<R> {
    /// Next non-blank line with comments stripped, with its 1-based number.
    fn next_content(&mut self) -> Result<Option<(usize, String)>, MeshError> {
        for line in self.inner.by_ref() {
            self.line_no += 1;
            let line = line?;
            let content = line.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                return Ok(Some((self.line_no, content.to_string())));
            }
        }
        Ok(None)
    }

    fn expect(&mut self, what: &str) -> Result<(usize, String), MeshError> {
        self.next_content()?.ok_or_else(|| MeshError::Parse {
            line: self.line_no + 1,
            message: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn header(line: usize, text: &str, keyword: &str) -> Result<Vec<String>, MeshError> {
    let mut parts = text.split_whitespace();
    if parts.next() != Some(keyword) {
        return Err(parse_err(line, format!("expected `{keyword} <count>`")));
    }
    Ok(parts.map(str::to_string).collect())
}

fn parse_count(line: usize, s: Option<&String>) -> Result<usize, MeshError> {
    s.ok_or_else(|| parse_err(line, "missing count"))?
        .parse()
        .map_err(|_| parse_err(line, "malformed count"))
}

pub fn read_mesh(reader: impl Read) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        inner: BufReader::new(reader).lines(),
        line_no: 0,
    };

    let (ln, text) = lines.expect("`nodes N`")?;
    let args = header(ln, &text, "nodes")?;
    let n_nodes = parse_count(ln, args.first())?;
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut node_lines = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (ln, text) = lines.expect("node coordinates")?;
        let xy: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(ln, "malformed coordinate"))?;
        match xy.as_slice() {
            [x, y] if x.is_finite() && y.is_finite() => {
                nodes.push([*x, *y]);
                node_lines.push(ln);
            }
            _ => return Err(parse_err(ln, "expected two finite coordinates `x y`")),
        }
    }

    let (ln, text) = lines.expect("`elements M kind`")?;
    let args = header(ln, &text, "elements")?;
    let n_elements = parse_count(ln, args.first())?;
    let kind = match args.get(1).map(String::as_str) {
        Some("tri") => ElementKind::Triangle,
        Some("quad") => ElementKind::Quad,
        _ => return Err(parse_err(ln, "element kind must be `tri` or `quad`")),
    };
    let npe = kind.nodes_per_element();
    let mut conn = Vec::with_capacity(n_elements * npe);
    let mut element_lines = Vec::with_capacity(n_elements);
    for _ in 0..n_elements {
        let (ln, text) = lines.expect("element connectivity")?;
        let ids: Vec<usize> = text
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(ln, "malformed vertex index"))?;
        if ids.len() != npe {
            return Err(parse_err(
                ln,
                format!("expected {npe} vertex indices, found {}", ids.len()),
            ));
        }
        conn.extend(ids);
        element_lines.push(ln);
    }

    let mut boundary = Vec::new();
    let mut boundary_lines = Vec::new();
    if let Some((ln, text)) = lines.next_content()? {
        let args = header(ln, &text, "boundary")?;
        let n_boundary = parse_count(ln, args.first())?;
        for _ in 0..n_boundary {
            let (ln, text) = lines.expect("boundary edge")?;
            let parts: Vec<&str> = text.split_whitespace().collect();
            let [a, b, m] = parts.as_slice() else {
                return Err(parse_err(ln, "expected `a b marker`"));
            };
            let a = a.parse().map_err(|_| parse_err(ln, "malformed node index"))?;
            let b = b.parse().map_err(|_| parse_err(ln, "malformed node index"))?;
            let marker = match *m {
                "dirichlet" => BoundaryMarker::Dirichlet,
                "neumann" => BoundaryMarker::Neumann,
                "robin" => BoundaryMarker::Robin,
                other => return Err(parse_err(ln, format!("unknown marker `{other}`"))),
            };
            if a >= n_nodes || b >= n_nodes {
                return Err(parse_err(
                    ln,
                    format!("dangling index in boundary edge ({a}, {b})"),
                ));
            }
            boundary.push(BoundaryEdge { a, b, marker });
            boundary_lines.push(ln);
        }
        if let Some((ln, _)) = lines.next_content()? {
            return Err(parse_err(ln, "trailing content after boundary section"));
        }
    }

    Mesh::new(nodes, kind, conn, boundary).map_err(|err| {
        let line = match &err {
            MeshError::DanglingIndex { element, .. }
            | MeshError::DegenerateElement { element, .. }
            | MeshError::InvertedElement { element } => element_lines.get(*element).copied(),
            MeshError::NotABoundaryEdge { entry, .. }
            | MeshError::DuplicateBoundaryEdge { entry, .. } => boundary_lines.get(*entry).copied(),
            MeshError::DuplicateNodes { b, .. } => node_lines.get(*b).copied(),
            _ => None,
        };
        match line {
            Some(line) => MeshError::AtLine {
                line,
                source: Box::new(err),
            },
            None => err,
        }
    })
}

/// Writes an unstructured-grid VTK legacy ASCII file with point data.
pub fn write_vtk(
    mesh: &Mesh,
    title: &str,
    point_fields: &[(&str, &[f64])],
    w: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or("mesh"))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_nodes())?;
    for p in mesh.nodes() {
        writeln!(w, "{:?} {:?} 0", p[0], p[1])?;
    }
    let npe = mesh.kind().nodes_per_element();
    writeln!(
        w,
        "CELLS {} {}",
        mesh.n_elements(),
        mesh.n_elements() * (npe + 1)
    )?;
    for el in mesh.elements() {
        write!(w, "{npe}")?;
        for v in el {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    let cell_type = match mesh.kind() {
        ElementKind::Triangle => 5,
        ElementKind::Quad => 9,
    };
    writeln!(w, "CELL_TYPES {}", mesh.n_elements())?;
    for _ in 0..mesh.n_elements() {
        writeln!(w, "{cell_type}")?;
    }
    if !point_fields.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.n_nodes())?;
        for (name, values) in point_fields {
            assert_eq!(values.len(), mesh.n_nodes(), "field `{name}` length");
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in *values {
                writeln!(w, "{v:?}")?;
            }
        }
    }
    Ok(())
}
