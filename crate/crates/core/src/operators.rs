//! Dense complex linear algebra over tensor-product Hilbert spaces.
//!
//! Factor ordering is global: qubit 1, qubit 2, then the pseudo-modes in
//! declared order. A single qubit is stored in the basis `(|1>, |0>)`, i.e.
//! the excited state comes first, so that the two-qubit product basis reads
//! `(|11>, |10>, |01>, |00>)`.
//!
//! Operators are built and exchanged as dense [`ComplexMatrix`] values. Time
//! integration applies them many thousands of times, so [`SparseOp`] offers a
//! compressed-row copy that only touches structural nonzeros.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Shape of a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    factor_dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() || factor_dims.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "factor dimensions must be positive, got {factor_dims:?}"
            )));
        }
        Ok(Self { factor_dims })
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn n_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    /// Flattened index of a product basis state, most significant factor first.
    pub fn index_of(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.factor_dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.factor_dims.len(),
                found: digits.len(),
            });
        }
        let mut idx = 0;
        for (&d, &n) in digits.iter().zip(&self.factor_dims) {
            if d >= n {
                return Err(Error::InvalidIndex(format!("digit {d} out of range for factor of dim {n}")));
            }
            idx = idx * n + d;
        }
        Ok(idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (p, q) = b.shape();
    DMatrix::from_fn(a.nrows() * p, a.ncols() * q, |r, c| {
        a[(r / p, c / q)] * b[(r % p, c % q)]
    })
}

pub fn identity(n: usize) -> ComplexMatrix {
    DMatrix::identity(n, n)
}

/// Pauli matrix in the `(|1>, |0>)` basis, so `σz |1> = +|1>`.
pub fn pauli(axis: Axis) -> ComplexMatrix {
    let m = match axis {
        Axis::X => [ZERO, ONE, ONE, ZERO],
        Axis::Y => [ZERO, -I, I, ZERO],
        Axis::Z => [ONE, ZERO, ZERO, -ONE],
    };
    DMatrix::from_row_slice(2, 2, &m)
}

/// Raising operator `σ+ = (σx + iσy)/2`, mapping `|0>` to `|1>`.
pub fn sigma_plus() -> ComplexMatrix {
    DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

pub fn sigma_minus() -> ComplexMatrix {
    sigma_plus().adjoint()
}

/// Truncated bosonic annihilation operator on Fock states `0..=n_max`.
pub fn annihilation(n_max: usize) -> ComplexMatrix {
    let n = n_max + 1;
    DMatrix::from_fn(n, n, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

pub fn number(n_max: usize) -> ComplexMatrix {
    DMatrix::from_fn(n_max + 1, n_max + 1, |r, c| {
        if r == c {
            C64::new(r as f64, 0.0)
        } else {
            ZERO
        }
    })
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` acting on `factor`.
pub fn embed(op: &ComplexMatrix, factor: usize, space: &HilbertSpace) -> Result<ComplexMatrix> {
    embed_product(&[(factor, op)], space)
}

/// Tensor product with the given operators on their factors and identities
/// elsewhere. Factors must be distinct.
pub fn embed_product(ops: &[(usize, &ComplexMatrix)], space: &HilbertSpace) -> Result<ComplexMatrix> {
    let dims = space.factor_dims();
    for (i, &(f, op)) in ops.iter().enumerate() {
        if f >= dims.len() {
            return Err(Error::InvalidIndex(format!(
                "factor {f} out of range for {} factors",
                dims.len()
            )));
        }
        if op.nrows() != dims[f] || op.ncols() != dims[f] {
            return Err(Error::DimensionMismatch {
                expected: dims[f],
                found: op.nrows(),
            });
        }
        if ops[..i].iter().any(|&(g, _)| g == f) {
            return Err(Error::InvalidIndex(format!("factor {f} given twice")));
        }
    }
    let mut out = DMatrix::from_element(1, 1, ONE);
    for (f, &d) in dims.iter().enumerate() {
        out = match ops.iter().find(|&&(g, _)| g == f) {
            Some(&(_, op)) => kron(&out, op),
            None => kron(&out, &identity(d)),
        };
    }
    Ok(out)
}

/// Reduced operator on the factors listed in `keep` (kept in ascending order).
pub fn partial_trace(rho: &ComplexMatrix, keep: &[usize], space: &HilbertSpace) -> Result<ComplexMatrix> {
    let dims = space.factor_dims();
    let n = space.dim();
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho.nrows(),
        });
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidIndex(format!(
            "factor {bad} out of range for {} factors",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !keep.contains(f)).collect();
    let kept_dim: usize = keep.iter().map(|&f| dims[f]).product();
    let traced_dim: usize = traced.iter().map(|&f| dims[f]).product();

    // Global index assembled from (kept multi-index, traced multi-index).
    let global = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut digits = vec![0; dims.len()];
        let mut r = kept_idx;
        for &f in keep.iter().rev() {
            digits[f] = r % dims[f];
            r /= dims[f];
        }
        let mut r = traced_idx;
        for &f in traced.iter().rev() {
            digits[f] = r % dims[f];
            r /= dims[f];
        }
        digits.iter().zip(dims).fold(0, |acc, (&d, &m)| acc * m + d)
    };
    let map: Vec<Vec<usize>> = (0..kept_dim)
        .map(|k| (0..traced_dim).map(|t| global(k, t)).collect())
        .collect();

    Ok(DMatrix::from_fn(kept_dim, kept_dim, |r, c| {
        map[r].iter().zip(&map[c]).map(|(&i, &j)| rho[(i, j)]).sum()
    }))
}

/// Matrix exponential (scaling and squaring with a Padé approximant).
pub fn expm(m: &ComplexMatrix) -> ComplexMatrix {
    m.clone().exp()
}

/// `max |M - M†|` over all entries.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for c in 0..m.ncols() {
        for r in 0..n {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn eigvalsh(m: &ComplexMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut vals: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

pub fn outer(a: &StateVector, b: &StateVector) -> ComplexMatrix {
    a * b.adjoint()
}

/// Compressed-row operator for repeated application to dense matrices and
/// vectors. Dense operands are column-major slices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOp {
    /// Keeps every entry that is not exactly zero.
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let all_rows: Vec<usize> = (0..m.nrows()).collect();
        let all_cols: Vec<usize> = (0..m.ncols()).collect();
        Self::from_dense_block(m, &all_rows, &all_cols)
    }

    /// Restriction of `m` to the listed rows and columns, in the given order.
    pub fn from_dense_block(m: &ComplexMatrix, rows: &[usize], cols: &[usize]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut out_cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for &r in rows {
            for (k, &c) in cols.iter().enumerate() {
                let v = m[(r, c)];
                if v != ZERO {
                    out_cols.push(k);
                    vals.push(v);
                }
            }
            row_ptr.push(out_cols.len());
        }
        Self {
            nrows: rows.len(),
            ncols: cols.len(),
            row_ptr,
            cols: out_cols,
            vals,
        }
    }

    /// Assembles a square operator from `(row, col, value)` triplets;
    /// duplicates are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows: dim,
            ncols: dim,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Row count of a square operator.
    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.nrows, self.ncols);
        self.nrows
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn matvec(&self, x: &StateVector) -> StateVector {
        let mut y = DVector::zeros(self.nrows);
        self.matvec_into(x.as_slice(), y.as_mut_slice());
        y
    }

    /// `out += coeff · A · m` for `m` with `ncols` rows.
    pub fn left_mul_acc(&self, coeff: C64, m: &[C64], out: &mut [C64]) {
        for (col_in, col_out) in m.chunks_exact(self.ncols).zip(out.chunks_exact_mut(self.nrows)) {
            for (r, o) in col_out.iter_mut().enumerate() {
                let s: C64 = self.row(r).map(|(c, v)| v * col_in[c]).sum();
                *o += coeff * s;
            }
        }
    }

    /// `out += coeff · m · A†` for `m` with `ncols` columns.
    pub fn right_mul_adjoint_acc(&self, coeff: C64, m: &[C64], out: &mut [C64]) {
        let k = m.len() / self.ncols;
        for (j, col_out) in out.chunks_exact_mut(k).enumerate() {
            for (c, v) in self.row(j) {
                let w = coeff * v.conj();
                let col_in = &m[c * k..(c + 1) * k];
                for (o, &x) in col_out.iter_mut().zip(col_in) {
                    *o += w * x;
                }
            }
        }
    }

    /// `out += coeff · A m A†` for square `m` of size `ncols`, using
    /// `scratch` (at least `nrows · ncols` long) for the intermediate `A m`.
    pub fn sandwich_acc(&self, coeff: C64, m: &[C64], scratch: &mut [C64], out: &mut [C64]) {
        let scratch = &mut scratch[..self.nrows * self.ncols];
        scratch.fill(ZERO);
        self.left_mul_acc(ONE, m, scratch);
        // `scratch` is nrows × ncols; `scratch · A†` is nrows × nrows.
        for (j, col_out) in out.chunks_exact_mut(self.nrows).enumerate() {
            for (c, v) in self.row(j) {
                let w = coeff * v.conj();
                let col_in = &scratch[c * self.nrows..(c + 1) * self.nrows];
                for (o, &x) in col_out.iter_mut().zip(col_in) {
                    *o += w * x;
                }
            }
        }
    }
}
