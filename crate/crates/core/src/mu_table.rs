//! Calibration tables for the bubble scaling constant μ and the sub-mesh
//! resolution `N_s`.
//!
//! A table is a list of `(key, mu, n_s)` rows grouped into contiguous
//! regimes of equal `n_s`. Regimes may share a boundary key (listed twice);
//! a key equal to the shared boundary belongs to the lower regime. Lookups
//! interpolate linearly inside a regime and return the first row's μ below
//! the table.

use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;

use crate::mesh::ElementKind;

const BUILTIN_TRI: &str = include_str!("../data/mu_tri.txt");
const BUILTIN_QUAD: &str = include_str!("../data/mu_quad.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MuTableError {
    #[error("mu table line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mu table lookup key must be positive, got {0}")]
    NonPositiveKey(f64),
    #[error(
        "key {key} is above the calibrated range (max {max_key}); clamping would use mu = {clamped_mu}, N_s = {n_s}"
    )]
    OutOfCalibration {
        key: f64,
        max_key: f64,
        clamped_mu: f64,
        n_s: usize,
    },
    #[error("cannot read mu table: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuRow {
    pub key: f64,
    pub mu: f64,
    pub n_s: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuLookup {
    pub mu: f64,
    pub n_s: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuTable {
    kind: ElementKind,
    rows: Vec<MuRow>,
    regimes: Vec<Range<usize>>,
}

impl MuTable {
    pub fn parse(text: &str) -> Result<Self, MuTableError> {
        let err = |line: usize, message: String| MuTableError::Parse { line, message };
        let mut kind = None;
        let mut rows = Vec::new();
        let mut lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parts: Vec<&str> = content.split_whitespace().collect();
            if kind.is_none() {
                kind = match parts.as_slice() {
                    ["kind", "tri"] => Some(ElementKind::Triangle),
                    ["kind", "quad"] => Some(ElementKind::Quad),
                    _ => return Err(err(line, "expected header `kind tri|quad`".into())),
                };
                continue;
            }
            let [key, mu, ns] = parts.as_slice() else {
                return Err(err(line, "expected `key mu ns`".into()));
            };
            let key: f64 = key.parse().map_err(|_| err(line, "malformed key".into()))?;
            let mu: f64 = mu.parse().map_err(|_| err(line, "malformed mu".into()))?;
            let n_s: usize = ns.parse().map_err(|_| err(line, "malformed ns".into()))?;
            if !(key > 0.0 && key.is_finite() && mu.is_finite()) || n_s < 3 {
                return Err(err(line, "key must be positive, mu finite, ns >= 3".into()));
            }
            rows.push(MuRow { key, mu, n_s });
            lines.push(line);
        }
        let kind = kind.ok_or_else(|| err(0, "missing `kind` header".into()))?;
        if rows.is_empty() {
            return Err(err(0, "table has no rows".into()));
        }

        let mut regimes: Vec<Range<usize>> = Vec::new();
        let mut start = 0;
        for i in 1..=rows.len() {
            if i == rows.len() || rows[i].n_s != rows[start].n_s {
                regimes.push(start..i);
                start = i;
            }
        }
        for i in 1..rows.len() {
            let same_regime = rows[i].n_s == rows[i - 1].n_s;
            let ok = if same_regime {
                rows[i].key > rows[i - 1].key
            } else {
                rows[i].key >= rows[i - 1].key
            };
            if !ok {
                return Err(err(
                    lines[i],
                    "keys must increase (strictly within one N_s regime)".into(),
                ));
            }
        }
        Ok(MuTable {
            kind,
            rows,
            regimes,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MuTableError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| MuTableError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// The tables shipped with the crate.
    pub fn builtin(kind: ElementKind) -> &'static MuTable {
        static TRI: OnceLock<MuTable> = OnceLock::new();
        static QUAD: OnceLock<MuTable> = OnceLock::new();
        match kind {
            ElementKind::Triangle => {
                TRI.get_or_init(|| MuTable::parse(BUILTIN_TRI).expect("builtin triangle table"))
            }
            ElementKind::Quad => {
                QUAD.get_or_init(|| MuTable::parse(BUILTIN_QUAD).expect("builtin quad table"))
            }
        }
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn rows(&self) -> &[MuRow] {
        &self.rows
    }

    pub fn max_key(&self) -> f64 {
        self.rows.last().map(|r| r.key).unwrap_or(0.0)
    }

    pub fn lookup(&self, key: f64) -> Result<MuLookup, MuTableError> {
        if !(key > 0.0) {
            return Err(MuTableError::NonPositiveKey(key));
        }
        let Some(regime) = self
            .regimes
            .iter()
            .find(|r| key <= self.rows[r.end - 1].key)
        else {
            let last = self.rows[self.rows.len() - 1];
            return Err(MuTableError::OutOfCalibration {
                key,
                max_key: last.key,
                clamped_mu: last.mu,
                n_s: last.n_s,
            });
        };
        let rows = &self.rows[regime.clone()];
        let n_s = rows[0].n_s;
        if key <= rows[0].key {
            return Ok(MuLookup {
                mu: rows[0].mu,
                n_s,
            });
        }
        // rows[i].key < key <= rows[i + 1].key
        let i = rows.partition_point(|r| r.key < key) - 1;
        let (lo, hi) = (rows[i], rows[i + 1]);
        let mu = if key == hi.key {
            hi.mu
        } else {
            lo.mu + (hi.mu - lo.mu) * (key - lo.key) / (hi.key - lo.key)
        };
        Ok(MuLookup { mu, n_s })
    }

    /// Like [`lookup`](Self::lookup), but keys above the table are clamped to
    /// the last row with a logged warning.
    pub fn lookup_clamped(&self, key: f64) -> Result<MuLookup, MuTableError> {
        match self.lookup(key) {
            Err(MuTableError::OutOfCalibration {
                key,
                max_key,
                clamped_mu,
                n_s,
            }) => {
                log::warn!(
                    "{} table: key {key:.4} above calibrated range {max_key}; clamping mu to {clamped_mu}",
                    self.kind
                );
                Ok(MuLookup {
                    mu: clamped_mu,
                    n_s,
                })
            }
            other => other,
        }
    }

    pub fn lookup_with(&self, key: f64, clamp: bool) -> Result<MuLookup, MuTableError> {
        if clamp {
            self.lookup_clamped(key)
        } else {
            self.lookup(key)
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("kind {}\n# key mu ns\n", self.kind);
        for r in &self.rows {
            let _ = writeln!(s, "{} {} {}", r.key, r.mu, r.n_s);
        }
        s
    }
}
