//! Closed-form finite-difference companions of the bubble methods.
//!
//! 1D: the linear Galerkin three-point scheme, its pseudo-bubble correction
//! and the nodally exact RFB scheme built from analytic bubbles. 2D: the
//! seven-point family on equilateral lattices,
//!
//! ```text
//! center:   6/(√3h²) − 6c²/(8√3) − 3α₂c²/(6√3)
//! neighbor: −1/(√3h²) − c²/(8√3) − α₂c²/(6√3)
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::assembly::AssembledSystem;
use crate::linalg::{CsrMatrix, SparseSystem, C64};
use crate::mesh::lattice::Lattice;
use crate::mesh::Point;

/// Relative distance to a pole below which a closed-form coefficient is
/// rejected.
const POLE_GUARD: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StencilError {
    #[error("{what} has a pole at c²h² = {pole} (c = {c}, h = {h})")]
    Pole {
        what: &'static str,
        pole: f64,
        c: f64,
        h: f64,
    },
    #[error("analytic 1D bubble is resonant: sin(ch) = 0 at ch = {ch}")]
    Resonance { ch: f64 },
    #[error("1D grid needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("lattice domain has no interior node")]
    NoInterior,
    #[error("invalid stencil parameter: {0}")]
    InvalidParameter(String),
}

fn check_pole(what: &'static str, pole: f64, c: f64, h: f64) -> Result<(), StencilError> {
    let x = c * c * h * h;
    if !(x.is_finite() && c >= 0.0 && h > 0.0) {
        return Err(StencilError::InvalidParameter(format!("c = {c}, h = {h}")));
    }
    if ((x - pole) / pole).abs() < POLE_GUARD {
        return Err(StencilError::Pole { what, pole, c, h });
    }
    Ok(())
}

/// Pseudo-bubble coefficient of the 1D scheme, `3c²h² / (4(12 − c²h²))`.
pub fn alpha1(c: f64, h: f64) -> Result<f64, StencilError> {
    check_pole("alpha1", 12.0, c, h)?;
    let x = c * c * h * h;
    Ok(3.0 * x / (4.0 * (12.0 - x)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StencilScheme {
    Galerkin,
    PseudoRfb,
    PseudoAb { mu: f64 },
    FourthOrder,
}

impl StencilScheme {
    /// Bubble amplitude `α₂` of the seven-point scheme.
    pub fn alpha2(&self, c: f64, h: f64) -> Result<f64, StencilError> {
        let x = c * c * h * h;
        match *self {
            StencilScheme::Galerkin => Ok(0.0),
            StencilScheme::PseudoRfb => Self::PseudoAb { mu: 1.0 }.alpha2(c, h),
            StencilScheme::PseudoAb { mu } => {
                check_pole("alpha2", 72.0, c, h)?;
                Ok(2.0 * mu * x / (3.0 * (72.0 - x)))
            }
            StencilScheme::FourthOrder => Ok(0.0625 * x),
        }
    }

    /// `α₂ / (c²h²)` as a function of `ch` alone.
    pub fn beta(&self, ch: f64) -> Result<f64, StencilError> {
        match *self {
            StencilScheme::Galerkin => Ok(0.0),
            StencilScheme::FourthOrder => Ok(0.0625),
            StencilScheme::PseudoRfb | StencilScheme::PseudoAb { .. } => {
                let a = self.alpha2(ch, 1.0)?;
                Ok(a / (ch * ch))
            }
        }
    }

    /// `(center, neighbor)` weights of the seven-point row.
    pub fn weights(&self, c: f64, h: f64) -> Result<(f64, f64), StencilError> {
        let a2 = self.alpha2(c, h)?;
        let s3 = 3f64.sqrt();
        let c2 = c * c;
        let center = 6.0 / (s3 * h * h) - 6.0 * c2 / (8.0 * s3) - 3.0 * a2 * c2 / (6.0 * s3);
        let neighbor = -1.0 / (s3 * h * h) - c2 / (8.0 * s3) - a2 * c2 / (6.0 * s3);
        Ok((center, neighbor))
    }
}

impl fmt::Display for StencilScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StencilScheme::Galerkin => f.write_str("galerkin"),
            StencilScheme::PseudoRfb => f.write_str("pseudo-rfb"),
            StencilScheme::PseudoAb { mu } => write!(f, "pseudo-ab({mu})"),
            StencilScheme::FourthOrder => f.write_str("fourth-order"),
        }
    }
}

impl FromStr for StencilScheme {
    type Err = String;

    /// Accepts `galerkin`, `pseudo-rfb`, `pseudo-ab(6.8)`, `pseudo-ab:6.8`
    /// and `fourth-order`.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "galerkin" => return Ok(Self::Galerkin),
            "pseudo-rfb" => return Ok(Self::PseudoRfb),
            "fourth-order" => return Ok(Self::FourthOrder),
            _ => {}
        }
        let mu = s
            .strip_prefix("pseudo-ab")
            .map(|r| r.trim_start_matches([':', '(']).trim_end_matches(')'))
            .ok_or_else(|| {
                format!("unknown scheme `{s}` (galerkin|pseudo-rfb|pseudo-ab(MU)|fourth-order)")
            })?;
        mu.parse::<f64>()
            .ok()
            .filter(|m| m.is_finite())
            .map(|mu| Self::PseudoAb { mu })
            .ok_or_else(|| format!("scheme `{s}`: malformed mu"))
    }
}

/// Analytic 1D bubble on `[0, h]`: `A cos(cx) + B sin(cx) − ψ(x)`, solving
/// `−φ″ − c²φ = c²ψ` with `φ(0) = φ(h) = 0`. `which = 1` pairs with
/// `ψ₁ = 1 − x/h`, `which = 2` with `ψ₂ = x/h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactBubble1d {
    pub c: f64,
    pub h: f64,
    pub which: u8,
    pub a: f64,
    pub b: f64,
}

fn psi_1d(which: u8, h: f64, x: f64) -> f64 {
    if which == 1 {
        1.0 - x / h
    } else {
        x / h
    }
}

pub fn exact_bubble_1d(c: f64, h: f64, which: u8) -> Result<ExactBubble1d, StencilError> {
    if !(which == 1 || which == 2) {
        return Err(StencilError::InvalidParameter(format!(
            "bubble index {which} (1 or 2)"
        )));
    }
    if !(c > 0.0 && h > 0.0) {
        return Err(StencilError::InvalidParameter(format!("c = {c}, h = {h}")));
    }
    let ch = c * h;
    let s = ch.sin();
    if s.abs() < POLE_GUARD {
        return Err(StencilError::Resonance { ch });
    }
    let (a, b) = if which == 1 {
        (1.0, -ch.cos() / s)
    } else {
        (0.0, 1.0 / s)
    };
    Ok(ExactBubble1d { c, h, which, a, b })
}

impl ExactBubble1d {
    pub fn eval(&self, x: f64) -> f64 {
        self.a * (self.c * x).cos() + self.b * (self.c * x).sin() - psi_1d(self.which, self.h, x)
    }

    /// `∫₀ʰ φ ψ_j dx` in closed form.
    pub fn integral_against(&self, j: u8) -> f64 {
        let (c, h) = (self.c, self.h);
        let ch = c * h;
        let int_cos = ch.sin() / c;
        let int_sin = (1.0 - ch.cos()) / c;
        let int_xcos = h * ch.sin() / c + (ch.cos() - 1.0) / (c * c);
        let int_xsin = -h * ch.cos() / c + ch.sin() / (c * c);
        // ∫ψ_j cos, ∫ψ_j sin with ψ₁ = 1 − x/h, ψ₂ = x/h
        let (pc, ps) = if j == 1 {
            (int_cos - int_xcos / h, int_sin - int_xsin / h)
        } else {
            (int_xcos / h, int_xsin / h)
        };
        let psi_psi = if j == self.which { h / 3.0 } else { h / 6.0 };
        self.a * pc + self.b * ps - psi_psi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme1d {
    Galerkin,
    PseudoBubble,
    /// Linear elements condensed with the analytic bubbles.
    Rfb,
}

/// Coefficients `(left, center, right)` of one interior row (scaled by
/// `1/h` relative to the element matrices).
pub fn row_1d(scheme: Scheme1d, c: f64, h: f64) -> Result<[f64; 3], StencilError> {
    let c2 = c * c;
    let lap = [-1.0 / (h * h), 2.0 / (h * h), -1.0 / (h * h)];
    let mass = [-c2 / 6.0, -4.0 * c2 / 6.0, -c2 / 6.0];
    let mut row = [lap[0] + mass[0], lap[1] + mass[1], lap[2] + mass[2]];
    match scheme {
        Scheme1d::Galerkin => {}
        Scheme1d::PseudoBubble => {
            let a1 = alpha1(c, h)?;
            row[0] -= a1 * c2 / 4.0;
            row[1] -= 2.0 * a1 * c2 / 4.0;
            row[2] -= a1 * c2 / 4.0;
        }
        Scheme1d::Rfb => {
            let b1 = exact_bubble_1d(c, h, 1)?;
            let b2 = exact_bubble_1d(c, h, 2)?;
            // (φ_i, ψ_j) on one element; node j sees its left element as
            // local node 2 and its right element as local node 1
            let g = |i: u8, j: u8| {
                if i == 1 {
                    b1.integral_against(j)
                } else {
                    b2.integral_against(j)
                }
            };
            row[0] -= c2 * g(1, 2) / h;
            row[1] -= c2 * (g(2, 2) + g(1, 1)) / h;
            row[2] -= c2 * g(2, 1) / h;
        }
    }
    Ok(row)
}

/// Tridiagonal system for `−u″ − c²u = 0` on `[0, 1]` with `n` nodes and
/// Dirichlet values `bc = (u(0), u(1))`. Boundary rows are identity rows
/// and their columns are eliminated from the interior rows.
pub fn fd1d_system(
    scheme: Scheme1d,
    c: f64,
    n: usize,
    bc: (f64, f64),
) -> Result<SparseSystem, StencilError> {
    if n < 3 {
        return Err(StencilError::TooFewNodes(n));
    }
    let h = 1.0 / (n - 1) as f64;
    let row = if c == 0.0 {
        [-1.0 / (h * h), 2.0 / (h * h), -1.0 / (h * h)]
    } else {
        row_1d(scheme, c, h)?
    };
    let one = C64::new(1.0, 0.0);
    let mut triplets = vec![(0, 0, one), (n - 1, n - 1, one)];
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    rhs[0] = C64::new(bc.0, 0.0);
    rhs[n - 1] = C64::new(bc.1, 0.0);
    for j in 1..n - 1 {
        for (k, col) in [j - 1, j, j + 1].into_iter().enumerate() {
            let v = C64::new(row[k], 0.0);
            if col == 0 || col == n - 1 {
                let g = rhs[col];
                rhs[j] -= v * g;
            } else {
                triplets.push((j, col, v));
            }
        }
    }
    Ok(SparseSystem {
        matrix: CsrMatrix::from_triplets(n, triplets),
        rhs,
    })
}

/// Lattice nodes with Dirichlet data on every node that lacks one of its six
/// neighbours.
#[derive(Debug, Clone)]
pub struct LatticeDomain {
    pub lattice: Lattice,
    pub boundary_values: Vec<Option<C64>>,
}

impl LatticeDomain {
    pub fn new(lattice: Lattice, g: impl Fn(Point) -> C64) -> Self {
        let boundary_values = (0..lattice.len())
            .map(|k| (!lattice.is_interior(k)).then(|| g(lattice.position(k))))
            .collect();
        LatticeDomain {
            lattice,
            boundary_values,
        }
    }
}

/// Seven-point system over the interior nodes, boundary data lifted into
/// the right-hand side.
pub fn fd2d_sevenpoint(
    domain: &LatticeDomain,
    scheme: StencilScheme,
    c: f64,
) -> Result<AssembledSystem, StencilError> {
    let lat = &domain.lattice;
    let (center, neighbor) = scheme.weights(c, lat.h)?;
    let mut free_index = vec![None; lat.len()];
    let mut n_free = 0;
    for (k, bv) in domain.boundary_values.iter().enumerate() {
        if bv.is_none() {
            free_index[k] = Some(n_free);
            n_free += 1;
        }
    }
    if n_free == 0 {
        return Err(StencilError::NoInterior);
    }
    let mut triplets = Vec::with_capacity(7 * n_free);
    let mut rhs = vec![C64::new(0.0, 0.0); n_free];
    for k in 0..lat.len() {
        let Some(r) = free_index[k] else { continue };
        triplets.push((r, r, C64::new(center, 0.0)));
        for nb in lat.neighbors(k) {
            let nb = nb.expect("interior node has six neighbours");
            match (free_index[nb], domain.boundary_values[nb]) {
                (Some(col), _) => triplets.push((r, col, C64::new(neighbor, 0.0))),
                (None, Some(g)) => rhs[r] -= g * neighbor,
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
        dirichlet_values: domain.boundary_values.clone(),
    })
}
