use crate::algebra::{AlgElem, C64};
use crate::error::{Error, Result};

/// Largest number of basis inputs `(k^2)^arity` a [`MultiMap`] may hold.
pub const MAX_BASIS_INPUTS: usize = 1 << 20;

/// A C-multilinear map `A^arity -> A`, stored densely by its values on tuples
/// of matrix units.
///
/// Matrix unit `e_pq` has basis index `p*k + q`; a tuple of basis indices
/// `(i_0, …, i_{n-1})` is stored at `Σ_j i_j (k^2)^{n-1-j}`, first argument
/// most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiMap {
    k: usize,
    arity: usize,
    values: Vec<AlgElem>,
}

pub(crate) fn basis_count(k: usize, arity: usize) -> Result<usize> {
    let mut total: usize = 1;
    for _ in 0..arity {
        total = total
            .checked_mul(k * k)
            .filter(|&t| t <= MAX_BASIS_INPUTS)
            .ok_or_else(|| Error::OutOfRange {
                what: "multilinear map arity",
                value: arity,
                bound: format!("(k^2)^arity <= {MAX_BASIS_INPUTS} with k = {k}"),
            })?;
    }
    Ok(total)
}

impl MultiMap {
    pub fn zero(k: usize, arity: usize) -> Result<Self> {
        let len = basis_count(k, arity)?;
        Ok(MultiMap {
            k,
            arity,
            values: vec![AlgElem::zero(k); len],
        })
    }

    /// A 0-ary map holding a single element.
    pub fn constant(a: AlgElem) -> Self {
        MultiMap {
            k: a.k(),
            arity: 0,
            values: vec![a],
        }
    }

    /// Fills the table by calling `f` with each tuple of basis indices.
    pub fn from_fn(k: usize, arity: usize, mut f: impl FnMut(&[usize]) -> AlgElem) -> Result<Self> {
        let len = basis_count(k, arity)?;
        let mut values = Vec::with_capacity(len);
        let mut tuple = vec![0; arity];
        for index in 0..len {
            decode_into(index, k * k, &mut tuple);
            let v = f(&tuple);
            if v.k() != k {
                return Err(Error::Dimension(format!(
                    "value has base dimension {}, expected {k}",
                    v.k()
                )));
            }
            values.push(v);
        }
        Ok(MultiMap { k, arity, values })
    }

    pub fn from_values(k: usize, arity: usize, values: Vec<AlgElem>) -> Result<Self> {
        let len = basis_count(k, arity)?;
        if values.len() != len {
            return Err(Error::Dimension(format!(
                "arity {arity} map over M_{k} needs {len} values, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| v.k() != k) {
            return Err(Error::Dimension(format!(
                "value has base dimension {}, expected {k}",
                bad.k()
            )));
        }
        Ok(MultiMap { k, arity, values })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn values(&self) -> &[AlgElem] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at_index(&self, index: usize) -> &AlgElem {
        &self.values[index]
    }

    /// Value on a tuple of basis indices.
    pub fn at(&self, tuple: &[usize]) -> &AlgElem {
        debug_assert_eq!(tuple.len(), self.arity);
        &self.values[encode(tuple, self.k * self.k)]
    }

    /// Value on arbitrary arguments, by multilinear expansion over the nonzero
    /// coordinates of each argument.
    pub fn eval(&self, args: &[AlgElem]) -> AlgElem {
        assert_eq!(args.len(), self.arity, "wrong number of arguments");
        let coords: Vec<Vec<(usize, C64)>> = args.iter().map(AlgElem::coords).collect();
        let mut acc = AlgElem::zero(self.k);
        self.accumulate(&coords, 0, 0, C64::new(1.0, 0.0), &mut acc);
        acc
    }

    fn accumulate(
        &self,
        coords: &[Vec<(usize, C64)>],
        depth: usize,
        index: usize,
        weight: C64,
        acc: &mut AlgElem,
    ) {
        if depth == coords.len() {
            *acc += &self.values[index].scale(weight);
            return;
        }
        let stride = self.k * self.k;
        for &(i, c) in &coords[depth] {
            self.accumulate(coords, depth + 1, index * stride + i, weight * c, acc);
        }
    }

    /// Applies `f` to every stored value.
    pub fn map_values(&self, mut f: impl FnMut(&AlgElem) -> AlgElem) -> MultiMap {
        MultiMap {
            k: self.k,
            arity: self.arity,
            values: self.values.iter().map(&mut f).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &MultiMap) -> f64 {
        if (self.k, self.arity) != (other.k, other.arity) {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn norm_max(&self) -> f64 {
        self.values
            .iter()
            .map(AlgElem::norm_max)
            .fold(0.0, f64::max)
    }

    /// Index of the tuple that the Hermitian symmetry pairs with `tuple`:
    /// `(e_{p_0 q_0}, …, e_{p_{n-1} q_{n-1}})` maps to
    /// `(e_{q_{n-1} p_{n-1}}, …, e_{q_0 p_0})`.
    fn mirror(&self, tuple: &[usize]) -> usize {
        let k = self.k;
        let mirrored: Vec<usize> = tuple.iter().rev().map(|&i| (i % k) * k + i / k).collect();
        encode(&mirrored, k * k)
    }

    /// Largest violation of `m(a_1, …, a_n)* = m(a_n*, …, a_1*)` over basis
    /// tuples.
    pub fn hermitian_defect(&self) -> f64 {
        let mut tuple = vec![0; self.arity];
        let mut worst: f64 = 0.0;
        for index in 0..self.values.len() {
            decode_into(index, self.k * self.k, &mut tuple);
            let partner = &self.values[self.mirror(&tuple)];
            worst = worst.max(self.values[index].adjoint().max_abs_diff(partner));
        }
        worst
    }

    /// The Hermitian-symmetric part `(m + m^†)/2`, where
    /// `m^†(a_1, …, a_n) = m(a_n*, …, a_1*)*`.
    pub fn hermitian_part(&self) -> MultiMap {
        let mut tuple = vec![0; self.arity];
        let mut values = Vec::with_capacity(self.values.len());
        for index in 0..self.values.len() {
            decode_into(index, self.k * self.k, &mut tuple);
            let partner = self.values[self.mirror(&tuple)].adjoint();
            values.push((&self.values[index] + &partner).scale(C64::new(0.5, 0.0)));
        }
        MultiMap {
            k: self.k,
            arity: self.arity,
            values,
        }
    }
}

pub(crate) fn encode(tuple: &[usize], base: usize) -> usize {
    tuple.iter().fold(0, |acc, &i| acc * base + i)
}

pub(crate) fn decode_into(mut index: usize, base: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
}
