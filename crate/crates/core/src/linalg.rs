//! Complex linear algebra: a partial-pivoting dense LU for element-level
//! systems and a CSR matrix with a direct sparse solver for global systems.

use faer::sparse::{SparseColMat, Triplet};
use faer::prelude::Solve;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Largest system accepted by [`dense_solve`].
pub const DENSE_SOLVE_LIMIT: usize = 200;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("numerically singular matrix: pivot {pivot:e} at step {step} (row scale {scale:e})")]
    Singular { step: usize, pivot: f64, scale: f64 },
    #[error(
        "sparse factorization failed ({detail}); if c² is close to a discrete eigenvalue, perturb c slightly"
    )]
    SingularSystem { detail: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("dense solve limited to {DENSE_SOLVE_LIMIT} unknowns, got {0}")]
    TooLarge(usize),
}

/// Square row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// LU factors with row pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
}

impl DenseLu {
    /// Fails when a pivot falls below `1e-14` times the largest magnitude in
    /// the original row it came from.
    pub fn factor(a: &DenseMatrix) -> Result<Self, LinalgError> {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut scale: Vec<f64> = (0..n)
            .map(|i| a.row(i).iter().map(|v| v.norm()).fold(0.0, f64::max))
            .collect();
        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmag >= 1e-14 * scale[p]) || pmag == 0.0 {
                return Err(LinalgError::Singular {
                    step: k,
                    pivot: pmag,
                    scale: scale[p],
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                scale.swap(k, p);
            }
            let inv = lu[k * n + k].inv();
            for i in k + 1..n {
                let factor = lu[i * n + k] * inv;
                lu[i * n + k] = factor;
                if factor != C64::new(0.0, 0.0) {
                    for j in k + 1..n {
                        let u = lu[k * n + j];
                        lu[i * n + j] -= factor * u;
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: C64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: C64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}

/// Solves an element-level system (at most [`DENSE_SOLVE_LIMIT`] unknowns).
pub fn dense_solve(a: &DenseMatrix, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
    if a.n > DENSE_SOLVE_LIMIT {
        return Err(LinalgError::TooLarge(a.n));
    }
    if b.len() != a.n {
        return Err(LinalgError::Dimension(format!(
            "matrix is {}x{}, rhs has {}",
            a.n,
            a.n,
            b.len()
        )));
    }
    Ok(DenseLu::factor(a)?.solve(b))
}

/// Compressed sparse row matrix with sorted, unique column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed in input order.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        CsrMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> Option<C64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn conj(&self) -> Self {
        CsrMatrix {
            values: self.values.iter().map(|v| v.conj()).collect(),
            ..self.clone()
        }
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).0.iter().all(|&j| self.get(j, i).is_some()))
    }

    /// True when `A[i][j] == A[j][i]` within `tol` relative to the largest entry.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        (0..self.n).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &v)| {
                self.get(j, i)
                    .is_some_and(|w| (v - w).norm() <= tol * scale)
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<C64>,
}

impl SparseSystem {
    pub fn n(&self) -> usize {
        self.matrix.n
    }

    /// `‖A·x − b‖∞ / ‖b‖∞` (absolute when `b = 0`).
    pub fn relative_residual(&self, x: &[C64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let r = ax
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let b = self.rhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if b > 0.0 {
            r / b
        } else {
            r
        }
    }
}

/// Residual threshold above which a sparse solve is reported as failed.
const SPARSE_RESIDUAL_TOL: f64 = 1e-8;

/// Direct sparse LU (fill-reducing ordering, partial pivoting) followed by
/// one step of iterative refinement.
pub fn sparse_solve(sys: &SparseSystem) -> Result<Vec<C64>, LinalgError> {
    let n = sys.n();
    if n == 0 {
        return Err(LinalgError::Dimension("empty system".into()));
    }
    if sys.rhs.len() != n {
        return Err(LinalgError::Dimension(format!(
            "matrix is {n}x{n}, rhs has {}",
            sys.rhs.len()
        )));
    }
    let a = &sys.matrix;
    let mut triplets = Vec::with_capacity(a.nnz());
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            triplets.push(Triplet::new(i, j, v));
        }
    }
    let mat = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| LinalgError::SingularSystem {
            detail: format!("{e:?}"),
        })?;
    let lu = mat.sp_lu().map_err(|e| LinalgError::SingularSystem {
        detail: format!("{e:?}"),
    })?;
    let solve = |rhs: &[C64]| -> Vec<C64> {
        let b = faer::Mat::<C64>::from_fn(n, 1, |i, _| rhs[i]);
        let x = lu.solve(&b);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve(&sys.rhs);
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(LinalgError::SingularSystem {
            detail: "non-finite solution".into(),
        });
    }
    let ax = a.matvec(&x);
    let r: Vec<C64> = sys.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let dx = solve(&r);
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi += di;
    }
    let res = sys.relative_residual(&x);
    if !(res <= SPARSE_RESIDUAL_TOL) {
        return Err(LinalgError::SingularSystem {
            detail: format!("relative residual {res:e}"),
        });
    }
    Ok(x)
}
