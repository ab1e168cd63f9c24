//! Dense complex matrices, matrices over the base algebra `A = M_k(C)`, and
//! eigenvalue-based positivity certificates.
//!
//! An [`AMatrix`] is a `rows x cols` grid of `k x k` blocks. Flattening places
//! entry `(i, j)` in block `(i, j)` of a `(rows*k) x (cols*k)` complex matrix,
//! so row index `i*k + p` addresses row `p` of the entries in row `i`. Under
//! this layout an entry acts on right-module coordinates by left
//! multiplication, and flattening is a *-homomorphism on square grids.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Tolerance used wherever a caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Matrix unit `e_{pq}` in `M_k`.
pub fn matrix_unit(k: usize, p: usize, q: usize) -> CMat {
    let mut m = CMat::zeros(k, k);
    m[(p, q)] = ONE;
    m
}

/// Largest entrywise modulus of `a - b`; `inf` when shapes differ.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Kronecker product `a ⊗ b` with `a`'s index as the outer one.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// An element of the base algebra `A = M_k(C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgElem(CMat);

impl AlgElem {
    pub fn new(m: CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input(
                "algebra element has non-finite entries".into(),
            ));
        }
        Ok(AlgElem(m))
    }

    /// Wraps a matrix the caller knows to be square and finite.
    pub(crate) fn from_mat(m: CMat) -> Self {
        debug_assert!(m.is_square());
        AlgElem(m)
    }

    pub fn zero(k: usize) -> Self {
        AlgElem(CMat::zeros(k, k))
    }

    pub fn identity(k: usize) -> Self {
        AlgElem(CMat::identity(k, k))
    }

    pub fn scalar(k: usize, c: C64) -> Self {
        AlgElem(CMat::identity(k, k) * c)
    }

    pub fn unit(k: usize, p: usize, q: usize) -> Self {
        AlgElem(matrix_unit(k, p, q))
    }

    /// The `index`-th matrix unit in the order `e_00, e_01, …, e_{k-1,k-1}`.
    pub fn basis(k: usize, index: usize) -> Self {
        Self::unit(k, index / k, index % k)
    }

    pub fn k(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        AlgElem(self.0.adjoint())
    }

    pub fn scale(&self, c: C64) -> Self {
        AlgElem(&self.0 * c)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        max_abs_diff(&self.0, &self.0.adjoint()) <= tol
    }

    pub fn max_abs_diff(&self, other: &AlgElem) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }

    pub fn norm_max(&self) -> f64 {
        max_abs(&self.0)
    }

    /// Nonzero coordinates in the matrix-unit basis.
    pub(crate) fn coords(&self) -> Vec<(usize, C64)> {
        let k = self.k();
        let mut out = Vec::new();
        for p in 0..k {
            for q in 0..k {
                let z = self.0[(p, q)];
                if z != ZERO {
                    out.push((p * k + q, z));
                }
            }
        }
        out
    }
}

impl Add for &AlgElem {
    type Output = AlgElem;
    fn add(self, rhs: &AlgElem) -> AlgElem {
        AlgElem(&self.0 + &rhs.0)
    }
}

impl Sub for &AlgElem {
    type Output = AlgElem;
    fn sub(self, rhs: &AlgElem) -> AlgElem {
        AlgElem(&self.0 - &rhs.0)
    }
}

impl Mul for &AlgElem {
    type Output = AlgElem;
    fn mul(self, rhs: &AlgElem) -> AlgElem {
        AlgElem(&self.0 * &rhs.0)
    }
}

impl Neg for &AlgElem {
    type Output = AlgElem;
    fn neg(self) -> AlgElem {
        AlgElem(-&self.0)
    }
}

impl AddAssign<&AlgElem> for AlgElem {
    fn add_assign(&mut self, rhs: &AlgElem) {
        self.0 += &rhs.0;
    }
}

/// A `rows x cols` matrix whose entries are elements of `M_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AMatrix {
    rows: usize,
    cols: usize,
    k: usize,
    entries: Vec<AlgElem>,
}

impl AMatrix {
    pub fn zeros(rows: usize, cols: usize, k: usize) -> Self {
        AMatrix {
            rows,
            cols,
            k,
            entries: vec![AlgElem::zero(k); rows * cols],
        }
    }

    pub fn identity(n: usize, k: usize) -> Self {
        Self::from_fn(n, n, k, |i, j| {
            if i == j {
                AlgElem::identity(k)
            } else {
                AlgElem::zero(k)
            }
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        k: usize,
        mut f: impl FnMut(usize, usize) -> AlgElem,
    ) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                assert_eq!(e.k(), k, "AMatrix entry has wrong base dimension");
                entries.push(e);
            }
        }
        AMatrix {
            rows,
            cols,
            k,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> &AlgElem {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, a: AlgElem) {
        assert_eq!(a.k(), self.k);
        self.entries[i * self.cols + j] = a;
    }

    /// `(m*)_{ij} = (m_{ji})*`.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.k, |i, j| {
            self.get(j, i).adjoint()
        })
    }

    pub fn mul(&self, rhs: &AMatrix) -> Result<AMatrix> {
        if self.cols != rhs.rows || self.k != rhs.k {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{} (k = {} vs {})",
                self.rows, self.cols, rhs.rows, rhs.cols, self.k, rhs.k
            )));
        }
        Ok(Self::from_fn(self.rows, rhs.cols, self.k, |i, j| {
            let mut acc = AlgElem::zero(self.k);
            for l in 0..self.cols {
                acc += &(self.get(i, l) * rhs.get(l, j));
            }
            acc
        }))
    }

    /// Block layout as a `(rows*k) x (cols*k)` complex matrix. Only square
    /// grids are accepted, since that is where the *-homomorphism property is
    /// meaningful.
    pub fn flatten(&self) -> Result<CMat> {
        if self.rows != self.cols {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let k = self.k;
        let mut out = CMat::zeros(self.rows * k, self.cols * k);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.view_mut((i * k, j * k), (k, k))
                    .copy_from(self.get(i, j).matrix());
            }
        }
        Ok(out)
    }

    /// Inverse of [`AMatrix::flatten`].
    pub fn unflatten(m: &CMat, k: usize) -> Result<AMatrix> {
        if k == 0 || !m.nrows().is_multiple_of(k) || !m.ncols().is_multiple_of(k) {
            return Err(Error::Dimension(format!(
                "{}x{} matrix is not a grid of {k}x{k} blocks",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::from_fn(m.nrows() / k, m.ncols() / k, k, |i, j| {
            AlgElem::from_mat(m.view((i * k, j * k), (k, k)).into_owned())
        }))
    }

    pub fn max_abs_diff(&self, other: &AMatrix) -> f64 {
        if (self.rows, self.cols, self.k) != (other.rows, other.cols, other.k) {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Result of an eigenvalue positivity test.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    /// Unit eigenvector for `min_eigenvalue`, present iff it is below `-tol`.
    pub witness: Option<CVec>,
    pub tol: f64,
}

impl PsdReport {
    pub fn is_psd(&self) -> bool {
        self.witness.is_none()
    }
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending
/// order. Each eigenvector is normalized so that its first entry of largest
/// modulus is real and positive, which makes the output reproducible.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut col = eig.eigenvectors.column(src).into_owned();
        normalize_phase(&mut col);
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Rotates `v` so that its first entry of (near-)largest modulus is real
/// positive.
pub fn normalize_phase(v: &mut CVec) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap_or(ONE);
    let phase = pivot.conj() / pivot.norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
}

/// Largest entry of `|m - m*|`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Smallest eigenvalue of a Hermitian matrix, with a witness vector when it
/// falls below `-tol`.
///
/// The input is symmetrized first; an asymmetry above `10 * tol` is rejected.
pub fn psd_check(m: &CMat, tol: f64) -> Result<PsdReport> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let asym = hermitian_defect(m);
    let limit = 10.0 * tol;
    if asym > limit {
        return Err(Error::NotHermitian {
            asymmetry: asym,
            limit,
        });
    }
    if m.nrows() == 0 {
        return Ok(PsdReport {
            min_eigenvalue: f64::INFINITY,
            witness: None,
            tol,
        });
    }
    let sym = (m + m.adjoint()) * real(0.5);
    let (values, vectors) = hermitian_eigen(&sym);
    let min_eigenvalue = values[0];
    let witness = (min_eigenvalue < -tol).then(|| vectors.column(0).into_owned());
    Ok(PsdReport {
        min_eigenvalue,
        witness,
        tol,
    })
}

/// `<x, m x>` for a complex vector.
pub fn quadratic_form(m: &CMat, x: &CVec) -> C64 {
    x.dotc(&(m * x))
}
