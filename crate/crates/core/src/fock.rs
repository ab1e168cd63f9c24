//! Truncated full Fock module over `K = H ⊕ A`, where `H = A^r` carries the
//! diagonal left action and `ξ = (K_1, …, K_r)` comes from a Kraus
//! decomposition of `ψ`, so `⟨ξ, a ξ⟩ = Σ K_i* a K_i = ψ(a)`.
//!
//! Degree `j` is the free right module on basis words `e_I`,
//! `I ∈ {0, …, r}^j`, where `0..r` index `H` and `r` is the unit direction
//! `0 ⊕ 1`. A word is stored at `offset[j] + Σ_t I_t (r+1)^{j-1-t}` (first
//! letter most significant). Because the left action is diagonal,
//! `(e_i c) ⊗ (e_J d) = e_{iJ} (c d)`, so every operator here is a matrix
//! over `A` acting by left multiplication on coordinates.
//!
//! Operators are stored sparsely by columns: dense `D x D` storage is out of
//! reach for `D = Σ_j (r+1)^j` beyond a few thousand.

use std::collections::BTreeMap;

use crate::algebra::{AMatrix, AlgElem, CMat};
use crate::cpmaps::CpMap;
use crate::error::{Error, Result};

/// Largest total rank `D` a Fock space may have.
pub const MAX_FOCK_RANK: usize = 1 << 21;

#[derive(Clone, Debug)]
pub struct FockSpace {
    k: usize,
    depth: usize,
    kraus: Vec<CMat>,
    /// `offsets[j]` is the first index of degree `j`; `offsets[depth + 1] = D`.
    offsets: Vec<usize>,
}

/// Builds the Fock space of `ψ` truncated at `depth`. Needs `ψ` completely
/// positive: otherwise no `ξ` with `⟨ξ, aξ⟩ = ψ(a)` exists.
pub fn build_fock(psi: &CpMap, depth: usize, tol: f64) -> Result<FockSpace> {
    if depth < 2 {
        return Err(Error::OutOfRange {
            what: "Fock depth",
            value: depth,
            bound: "depth >= 2".into(),
        });
    }
    let kraus = psi.kraus_of(tol)?;
    let base = kraus.len() + 1;
    let mut offsets = vec![0usize];
    let mut width = 1usize;
    for _ in 0..=depth {
        let next = offsets
            .last()
            .and_then(|&o| o.checked_add(width))
            .filter(|&n| n <= MAX_FOCK_RANK)
            .ok_or_else(|| Error::OutOfRange {
                what: "Fock depth",
                value: depth,
                bound: format!("total rank <= {MAX_FOCK_RANK} with Kraus rank {}", base - 1),
            })?;
        offsets.push(next);
        width = width.saturating_mul(base);
    }
    Ok(FockSpace {
        k: psi.k(),
        depth,
        kraus,
        offsets,
    })
}

impl FockSpace {
    /// Fock space of `ψ = η - id`.
    pub fn for_eta(eta: &CpMap, depth: usize, tol: f64) -> Result<FockSpace> {
        build_fock(&eta.minus_identity(), depth, tol)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Kraus rank of `ψ`.
    pub fn r(&self) -> usize {
        self.kraus.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Total rank `Σ_{j<=depth} (r+1)^j`.
    pub fn dim(&self) -> usize {
        self.offsets[self.depth + 1]
    }

    /// Rank of the degree `j` component, `(r+1)^j`.
    pub fn rank(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    pub fn offset(&self, j: usize) -> usize {
        self.offsets[j]
    }

    pub fn xi_coords(&self) -> &[CMat] {
        &self.kraus
    }

    /// Index of `0 ⊕ 1` in degree 1.
    pub fn unit_coord(&self) -> usize {
        self.offsets[1] + self.r()
    }

    /// Degree of a coordinate index.
    pub fn degree_of(&self, index: usize) -> usize {
        self.offsets.partition_point(|&o| o <= index) - 1
    }

    /// `⟨ξ, a ξ⟩ = Σ_i K_i* a K_i`.
    pub fn xi_inner(&self, a: &AlgElem) -> AlgElem {
        let mut acc = AlgElem::zero(self.k);
        for op in &self.kraus {
            acc += &AlgElem::from_mat(op.adjoint() * a.matrix() * op);
        }
        acc
    }

    /// `η(a) = ψ(a) + a`, computed from the Kraus coordinates.
    pub fn eta(&self, a: &AlgElem) -> AlgElem {
        &self.xi_inner(a) + a
    }

    fn multiplier(&self, i: usize) -> Option<&CMat> {
        self.kraus.get(i)
    }

    /// `(ξ ⊕ 1) ⊗ e_I c = Σ_i e_{iI} (K_i c) + e_{rI} c`, dropping the top
    /// degree.
    fn v_column(&self, index: usize, c: &AlgElem, out: &mut Vec<(usize, AlgElem)>) {
        let j = self.degree_of(index);
        if j == self.depth {
            return;
        }
        let local = index - self.offsets[j];
        let stride = self.rank(j);
        for i in 0..=self.r() {
            let target = self.offsets[j + 1] + i * stride + local;
            let value = match self.multiplier(i) {
                Some(op) => AlgElem::from_mat(op * c.matrix()),
                None => c.clone(),
            };
            out.push((target, value));
        }
    }

    /// `v* (e_{iI} c) = e_I (K_i* c)`, with `K_r = 1`; zero on degree 0.
    fn v_star_column(&self, index: usize, c: &AlgElem, out: &mut Vec<(usize, AlgElem)>) {
        let j = self.degree_of(index);
        if j == 0 {
            return;
        }
        let local = index - self.offsets[j];
        let stride = self.rank(j - 1);
        let (i, rest) = (local / stride, local % stride);
        let value = match self.multiplier(i) {
            Some(op) => AlgElem::from_mat(op.adjoint() * c.matrix()),
            None => c.clone(),
        };
        out.push((self.offsets[j - 1] + rest, value));
    }
}

/// How an operator moves the grading.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeShift {
    By(i64),
    Mixed,
}

impl DegreeShift {
    fn then(self, other: DegreeShift) -> DegreeShift {
        match (self, other) {
            (DegreeShift::By(a), DegreeShift::By(b)) => DegreeShift::By(a + b),
            _ => DegreeShift::Mixed,
        }
    }

    fn join(self, other: DegreeShift) -> DegreeShift {
        if self == other {
            self
        } else {
            DegreeShift::Mixed
        }
    }
}

/// A vector of `F` as sparse right-module coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    k: usize,
    coords: BTreeMap<usize, AlgElem>,
}

impl FockVector {
    pub fn zero(k: usize) -> Self {
        FockVector {
            k,
            coords: BTreeMap::new(),
        }
    }

    /// `e_index · c`.
    pub fn basis(index: usize, c: AlgElem) -> Self {
        let mut v = FockVector::zero(c.k());
        v.coords.insert(index, c);
        v
    }

    /// The state vector `0 ⊕ 1` in degree 1.
    pub fn unit(f: &FockSpace) -> Self {
        FockVector::basis(f.unit_coord(), AlgElem::identity(f.k))
    }

    pub fn get(&self, index: usize) -> AlgElem {
        self.coords
            .get(&index)
            .cloned()
            .unwrap_or_else(|| AlgElem::zero(self.k))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &AlgElem)> {
        self.coords.iter().map(|(&i, c)| (i, c))
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn add_at(&mut self, index: usize, c: AlgElem) {
        match self.coords.get_mut(&index) {
            Some(slot) => *slot += &c,
            None => {
                self.coords.insert(index, c);
            }
        }
    }

    /// `⟨self, other⟩ = Σ_I self_I* other_I`.
    pub fn inner(&self, other: &FockVector) -> AlgElem {
        let mut acc = AlgElem::zero(self.k);
        for (i, c) in &self.coords {
            if let Some(d) = other.coords.get(i) {
                acc += &(&c.adjoint() * d);
            }
        }
        acc
    }

    /// Left action of `a` on every coordinate.
    pub fn left_mul(&self, a: &AlgElem) -> FockVector {
        FockVector {
            k: self.k,
            coords: self.coords.iter().map(|(&i, c)| (i, a * c)).collect(),
        }
    }

    /// Right module action.
    pub fn right_mul(&self, a: &AlgElem) -> FockVector {
        FockVector {
            k: self.k,
            coords: self.coords.iter().map(|(&i, c)| (i, c * a)).collect(),
        }
    }

    pub fn add(&self, other: &FockVector) -> FockVector {
        let mut out = self.clone();
        for (&i, c) in &other.coords {
            out.add_at(i, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &FockVector) -> FockVector {
        let mut out = self.clone();
        for (&i, c) in &other.coords {
            out.add_at(i, -c);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &FockVector) -> f64 {
        self.sub(other)
            .coords
            .values()
            .map(AlgElem::norm_max)
            .fold(0.0, f64::max)
    }
}

/// A right-A-linear operator on the truncated Fock space, stored by columns:
/// `cols[j]` lists `(i, T_ij)` with `(T x)_i = Σ_j T_ij x_j`.
#[derive(Clone, Debug)]
pub struct FockOp {
    k: usize,
    dim: usize,
    cols: Vec<Vec<(usize, AlgElem)>>,
    shift: DegreeShift,
}

impl FockOp {
    pub fn identity(f: &FockSpace) -> FockOp {
        lambda_rep(f, &AlgElem::identity(f.k))
    }

    pub fn zero(f: &FockSpace) -> FockOp {
        FockOp {
            k: f.k,
            dim: f.dim(),
            cols: vec![Vec::new(); f.dim()],
            shift: DegreeShift::By(0),
        }
    }

    /// Dense operator from a `D x D` matrix over `A`.
    pub fn from_amatrix(f: &FockSpace, m: &AMatrix) -> Result<FockOp> {
        let d = f.dim();
        if m.rows() != d || m.cols() != d || m.k() != f.k {
            return Err(Error::Dimension(format!(
                "operator must be {d}x{d} over M_{}, got {}x{} over M_{}",
                f.k,
                m.rows(),
                m.cols(),
                m.k()
            )));
        }
        let cols = (0..d)
            .map(|j| {
                (0..d)
                    .filter(|&i| m.get(i, j).norm_max() > 0.0)
                    .map(|i| (i, m.get(i, j).clone()))
                    .collect()
            })
            .collect();
        Ok(FockOp {
            k: f.k,
            dim: d,
            cols,
            shift: DegreeShift::Mixed,
        })
    }

    pub fn to_amatrix(&self) -> AMatrix {
        let mut m = AMatrix::zeros(self.dim, self.dim, self.k);
        for (j, col) in self.cols.iter().enumerate() {
            for (i, e) in col {
                let sum = m.get(*i, j) + e;
                m.set(*i, j, sum);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree_shift(&self) -> DegreeShift {
        self.shift
    }

    /// Entry `T_ij`.
    pub fn entry(&self, i: usize, j: usize) -> AlgElem {
        let mut acc = AlgElem::zero(self.k);
        for (row, e) in &self.cols[j] {
            if *row == i {
                acc += e;
            }
        }
        acc
    }

    pub fn apply(&self, x: &FockVector) -> FockVector {
        let mut out = FockVector::zero(self.k);
        for (j, c) in x.iter() {
            for (i, e) in &self.cols[j] {
                out.add_at(*i, e * c);
            }
        }
        out
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> FockVector {
        let mut out = FockVector::zero(self.k);
        for (i, e) in &self.cols[j] {
            out.add_at(*i, e.clone());
        }
        out
    }

    /// `self ∘ rhs`.
    pub fn mul(&self, rhs: &FockOp) -> FockOp {
        assert_eq!(self.dim, rhs.dim, "operators on different Fock spaces");
        let cols = (0..self.dim)
            .map(|j| {
                let mut acc: BTreeMap<usize, AlgElem> = BTreeMap::new();
                for (m, b) in &rhs.cols[j] {
                    for (i, a) in &self.cols[*m] {
                        let term = a * b;
                        match acc.get_mut(i) {
                            Some(slot) => *slot += &term,
                            None => {
                                acc.insert(*i, term);
                            }
                        }
                    }
                }
                acc.into_iter().collect()
            })
            .collect();
        FockOp {
            k: self.k,
            dim: self.dim,
            cols,
            shift: rhs.shift.then(self.shift),
        }
    }

    /// `(T*)_ij = (T_ji)*`.
    pub fn adjoint(&self) -> FockOp {
        let mut cols: Vec<Vec<(usize, AlgElem)>> = vec![Vec::new(); self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            for (i, e) in col {
                cols[*i].push((j, e.adjoint()));
            }
        }
        let shift = match self.shift {
            DegreeShift::By(s) => DegreeShift::By(-s),
            DegreeShift::Mixed => DegreeShift::Mixed,
        };
        FockOp {
            k: self.k,
            dim: self.dim,
            cols,
            shift,
        }
    }

    pub fn add(&self, other: &FockOp) -> FockOp {
        assert_eq!(self.dim, other.dim, "operators on different Fock spaces");
        let cols = self
            .cols
            .iter()
            .zip(&other.cols)
            .map(|(a, b)| a.iter().chain(b).cloned().collect())
            .collect();
        FockOp {
            k: self.k,
            dim: self.dim,
            cols,
            shift: self.shift.join(other.shift),
        }
    }

    pub fn sub(&self, other: &FockOp) -> FockOp {
        self.add(&other.left_mul_scalar(-1.0))
    }

    fn left_mul_scalar(&self, t: f64) -> FockOp {
        let c = crate::algebra::real(t);
        FockOp {
            k: self.k,
            dim: self.dim,
            cols: self
                .cols
                .iter()
                .map(|col| col.iter().map(|(i, e)| (*i, e.scale(c))).collect())
                .collect(),
            shift: self.shift,
        }
    }

    /// Largest entry of `self - other` over the columns in `columns`.
    pub fn max_abs_diff_on(&self, other: &FockOp, columns: std::ops::Range<usize>) -> f64 {
        columns
            .map(|j| self.column(j).max_abs_diff(&other.column(j)))
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &FockOp) -> f64 {
        self.max_abs_diff_on(other, 0..self.dim)
    }
}

/// The creation-type operator `v: ζ ↦ (ξ ⊕ 1) ⊗ ζ`, zero on the top degree.
pub fn build_v(f: &FockSpace) -> FockOp {
    let one = AlgElem::identity(f.k);
    let cols = (0..f.dim())
        .map(|j| {
            let mut col = Vec::with_capacity(f.r() + 1);
            f.v_column(j, &one, &mut col);
            col
        })
        .collect();
    FockOp {
        k: f.k,
        dim: f.dim(),
        cols,
        shift: DegreeShift::By(1),
    }
}

/// Left action `λ(a)`: every coordinate multiplied on the left by `a`.
pub fn lambda_rep(f: &FockSpace, a: &AlgElem) -> FockOp {
    FockOp {
        k: f.k,
        dim: f.dim(),
        cols: (0..f.dim()).map(|j| vec![(j, a.clone())]).collect(),
        shift: DegreeShift::By(0),
    }
}

/// `E(T) = ⟨0 ⊕ 1, T (0 ⊕ 1)⟩`.
pub fn cond_exp(f: &FockSpace, t: &FockOp) -> AlgElem {
    let u = f.unit_coord();
    t.entry(u, u)
}

#[derive(Clone, Debug, PartialEq)]
pub enum FockLetter {
    V,
    VStar,
    Lambda(AlgElem),
}

/// Depth at which the expectation of `word` is exact. From degree 1, the
/// components that return to degree 1 never rise more than `⌊V/2⌋` degrees,
/// where `V` counts the letters `v` and `v*`.
pub fn required_depth(word: &[FockLetter]) -> usize {
    let shifts = word
        .iter()
        .filter(|l| !matches!(l, FockLetter::Lambda(_)))
        .count();
    (1 + shifts / 2).max(2)
}

/// Applies the letters of `word` to `x`, rightmost first.
pub fn apply_word(f: &FockSpace, word: &[FockLetter], x: &FockVector) -> FockVector {
    let mut cur = x.clone();
    let mut buf = Vec::new();
    for letter in word.iter().rev() {
        let mut next = FockVector::zero(f.k);
        for (j, c) in cur.iter() {
            match letter {
                FockLetter::Lambda(a) => next.add_at(j, a * c),
                FockLetter::V => {
                    buf.clear();
                    f.v_column(j, c, &mut buf);
                    for (i, e) in buf.drain(..) {
                        next.add_at(i, e);
                    }
                }
                FockLetter::VStar => {
                    buf.clear();
                    f.v_star_column(j, c, &mut buf);
                    for (i, e) in buf.drain(..) {
                        next.add_at(i, e);
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

/// Product of the letters' operators.
pub fn word_operator(f: &FockSpace, word: &[FockLetter]) -> FockOp {
    let v = build_v(f);
    let mut acc = FockOp::identity(f);
    for letter in word {
        let op = match letter {
            FockLetter::V => v.clone(),
            FockLetter::VStar => v.adjoint(),
            FockLetter::Lambda(a) => lambda_rep(f, a),
        };
        acc = acc.mul(&op);
    }
    acc
}

/// `E(word)`, exact when `depth >= required_depth(word)`.
pub fn word_expectation(f: &FockSpace, word: &[FockLetter]) -> Result<AlgElem> {
    let required = required_depth(word);
    if f.depth < required {
        return Err(Error::DepthTooSmall {
            depth: f.depth,
            required,
        });
    }
    if let Some(FockLetter::Lambda(a)) = word.iter().find(|l| match l {
        FockLetter::Lambda(a) => a.k() != f.k,
        _ => false,
    }) {
        return Err(Error::Dimension(format!(
            "letter is in M_{}, Fock space is over M_{}",
            a.k(),
            f.k
        )));
    }
    let u = FockVector::unit(f);
    Ok(u.inner(&apply_word(f, word, &u)))
}
