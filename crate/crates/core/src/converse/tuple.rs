//! Joint distributions of `s = m^2` variables `X_{αβ}` and the equivalent
//! `M_m(A)`-valued distribution of the matrix `X = (X_{αβ})`.
//!
//! Block `(α, β)` of `M_n(E_{γ_1 δ_1} ⊗ a_1, …, E_{γ_{n-1} δ_{n-1}} ⊗ a_{n-1})`
//! is the joint moment of the colour sequence
//! `(α, γ_1), (δ_1, γ_2), …, (δ_{n-1}, β)`.

use crate::algebra::{AlgElem, CMat};
use crate::cpmaps::CpMap;
use crate::error::{Error, Result};
use crate::ovdist::{eval_forest, forests, MultiMap, OvDistribution, Realization};

/// A-valued joint moments `E(X_{c_1} a_1 X_{c_2} … a_{n-1} X_{c_n})` of `s`
/// variables, for `n <= order`.
#[derive(Clone, Debug)]
pub struct JointDistribution {
    k: usize,
    s: usize,
    /// `maps[n-1][colour index]`, colours encoded first-most-significant in
    /// base `s`.
    maps: Vec<Vec<MultiMap>>,
}

fn colour_index(colours: &[usize], s: usize) -> usize {
    colours.iter().fold(0, |acc, &c| acc * s + c)
}

fn decode_colours(mut index: usize, s: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = index % s;
        index /= s;
    }
    out
}

fn perfect_root(s: usize) -> Result<usize> {
    let m = (s as f64).sqrt().round() as usize;
    if m * m != s || m == 0 {
        return Err(Error::Input(format!(
            "tuple size {s} is not a positive perfect square"
        )));
    }
    Ok(m)
}

impl JointDistribution {
    pub fn new(k: usize, s: usize, maps: Vec<Vec<MultiMap>>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::Input("joint distribution needs order >= 1".into()));
        }
        for (i, level) in maps.iter().enumerate() {
            if level.len() != s.pow(i as u32 + 1) {
                return Err(Error::Dimension(format!(
                    "order {} needs {} colour sequences, got {}",
                    i + 1,
                    s.pow(i as u32 + 1),
                    level.len()
                )));
            }
            if let Some(bad) = level.iter().find(|m| m.k() != k || m.arity() != i) {
                return Err(Error::Dimension(format!(
                    "order {} map has arity {} over M_{}, expected arity {i} over M_{k}",
                    i + 1,
                    bad.arity(),
                    bad.k()
                )));
            }
        }
        Ok(JointDistribution { k, s, maps })
    }

    /// Joint moments of the matrices `xs` in the realization `r`.
    pub fn from_matrices(r: &Realization, xs: &[CMat], order: usize) -> Result<Self> {
        let (k, s) = (r.k(), xs.len());
        if let Some(bad) = xs.iter().find(|x| x.shape() != (r.d(), r.d())) {
            return Err(Error::Dimension(format!(
                "variable is {}x{}, realization has d = {}",
                bad.nrows(),
                bad.ncols(),
                r.d()
            )));
        }
        let units: Vec<CMat> = (0..k * k).map(|i| r.embed(&AlgElem::basis(k, i))).collect();
        let mut maps = Vec::with_capacity(order);
        for n in 1..=order {
            let mut level = Vec::with_capacity(s.pow(n as u32));
            for ci in 0..s.pow(n as u32) {
                let colours = decode_colours(ci, s, n);
                level.push(MultiMap::from_fn(k, n - 1, |tuple| {
                    let mut prod = xs[colours[0]].clone();
                    for (t, &i) in tuple.iter().enumerate() {
                        prod = prod * &units[i] * &xs[colours[t + 1]];
                    }
                    r.condexp(&prod)
                })?);
            }
            maps.push(level);
        }
        Self::new(k, s, maps)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn order(&self) -> usize {
        self.maps.len()
    }

    pub fn moment(&self, colours: &[usize]) -> &MultiMap {
        &self.maps[colours.len() - 1][colour_index(colours, self.s)]
    }

    pub fn max_abs_diff(&self, other: &JointDistribution) -> f64 {
        if (self.k, self.s, self.order()) != (other.k, other.s, other.order()) {
            return f64::INFINITY;
        }
        self.maps
            .iter()
            .flatten()
            .zip(other.maps.iter().flatten())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Packs the joint distribution of `(X_{αβ})`, `s = m^2`, variable
/// `(α, β)` at index `α m + β`, into the distribution of `X` over
/// `M_m(A) = M_{mk}`.
pub fn pack_tuple(j: &JointDistribution) -> Result<OvDistribution> {
    let m = perfect_root(j.s)?;
    let (k, mk) = (j.k, m * j.k);
    let mut moments = Vec::with_capacity(j.order());
    for n in 1..=j.order() {
        moments.push(MultiMap::from_fn(mk, n - 1, |tuple| {
            // Split each big matrix unit into (γ, δ) and a small unit.
            let split: Vec<(usize, usize, usize)> = tuple
                .iter()
                .map(|&i| {
                    let (row, col) = (i / mk, i % mk);
                    (row / k, col / k, (row % k) * k + col % k)
                })
                .collect();
            let small: Vec<usize> = split.iter().map(|t| t.2).collect();
            let mut out = CMat::zeros(mk, mk);
            for alpha in 0..m {
                for beta in 0..m {
                    let mut colours = Vec::with_capacity(n);
                    let mut prev = alpha;
                    for &(gamma, delta, _) in &split {
                        colours.push(prev * m + gamma);
                        prev = delta;
                    }
                    colours.push(prev * m + beta);
                    let v = j.moment(&colours).at(&small);
                    out.view_mut((alpha * k, beta * k), (k, k))
                        .copy_from(v.matrix());
                }
            }
            AlgElem::from_mat(out)
        })?);
    }
    OvDistribution::new(mk, moments, "packed tuple")
}

/// Inverse of [`pack_tuple`] for a distribution over `M_{mk}`.
pub fn unpack_tuple(d: &OvDistribution, m: usize) -> Result<JointDistribution> {
    if m == 0 || !d.k().is_multiple_of(m) {
        return Err(Error::Dimension(format!(
            "M_{} is not M_{m}(M_k) for any k",
            d.k()
        )));
    }
    let (mk, k, s) = (d.k(), d.k() / m, m * m);
    let mut maps = Vec::with_capacity(d.order());
    for n in 1..=d.order() {
        let mut level = Vec::with_capacity(s.pow(n as u32));
        for ci in 0..s.pow(n as u32) {
            let colours = decode_colours(ci, s, n);
            let (alpha, beta) = (colours[0] / m, colours[n - 1] % m);
            level.push(MultiMap::from_fn(k, n - 1, |tuple| {
                let big: Vec<usize> = tuple
                    .iter()
                    .enumerate()
                    .map(|(t, &i)| {
                        let gamma = colours[t] % m;
                        let delta = colours[t + 1] / m;
                        let (p, q) = (i / k, i % k);
                        (gamma * k + p) * mk + delta * k + q
                    })
                    .collect();
                let block = d
                    .moment(n)
                    .at(&big)
                    .matrix()
                    .view((alpha * k, beta * k), (k, k))
                    .into_owned();
                AlgElem::from_mat(block)
            })?);
        }
        maps.push(level);
    }
    JointDistribution::new(k, s, maps)
}

/// Joint cumulants: the one-variable recursion with each block's cumulant
/// chosen by the colours at its positions.
pub fn joint_cumulants(j: &JointDistribution) -> Result<JointDistribution> {
    let (k, s) = (j.k, j.s);
    let mut cums: Vec<Vec<MultiMap>> = Vec::with_capacity(j.order());
    for n in 1..=j.order() {
        let plans = forests(n)?;
        let mut level = Vec::with_capacity(s.pow(n as u32));
        for ci in 0..s.pow(n as u32) {
            let colours = decode_colours(ci, s, n);
            let lower = &cums;
            let block_value = |positions: &[usize], args: &[AlgElem]| -> AlgElem {
                let cs: Vec<usize> = positions.iter().map(|&p| colours[p]).collect();
                lower[cs.len() - 1][colour_index(&cs, s)].eval(args)
            };
            let moment = j.moment(&colours);
            level.push(MultiMap::from_fn(k, n - 1, |tuple| {
                let args: Vec<AlgElem> = tuple.iter().map(|&i| AlgElem::basis(k, i)).collect();
                let mut acc = moment.at(tuple).clone();
                for (one_block, forest) in &plans {
                    if !one_block {
                        acc = &acc - &eval_forest(forest, &args, k, &block_value);
                    }
                }
                acc
            })?);
        }
        cums.push(level);
    }
    JointDistribution::new(k, s, cums)
}

/// Joint moments from joint cumulants (stored in a [`JointDistribution`]).
pub fn joint_moments(cums: &JointDistribution) -> Result<JointDistribution> {
    let (k, s) = (cums.k, cums.s);
    let mut maps = Vec::with_capacity(cums.order());
    for n in 1..=cums.order() {
        let plans = forests(n)?;
        let mut level = Vec::with_capacity(s.pow(n as u32));
        for ci in 0..s.pow(n as u32) {
            let colours = decode_colours(ci, s, n);
            let block_value = |positions: &[usize], args: &[AlgElem]| -> AlgElem {
                let cs: Vec<usize> = positions.iter().map(|&p| colours[p]).collect();
                cums.moment(&cs).eval(args)
            };
            level.push(MultiMap::from_fn(k, n - 1, |tuple| {
                let args: Vec<AlgElem> = tuple.iter().map(|&i| AlgElem::basis(k, i)).collect();
                let mut acc = AlgElem::zero(k);
                for (_, forest) in &plans {
                    acc += &eval_forest(forest, &args, k, &block_value);
                }
                acc
            })?);
        }
        maps.push(level);
    }
    JointDistribution::new(k, s, maps)
}

/// Joint η-power: every joint cumulant composed with `eta`.
pub fn joint_eta_power(j: &JointDistribution, eta: &CpMap) -> Result<JointDistribution> {
    if eta.k() != j.k {
        return Err(Error::Dimension(format!(
            "distribution is over M_{}, map acts on M_{}",
            j.k,
            eta.k()
        )));
    }
    let cums = joint_cumulants(j)?;
    let powered = cums
        .maps
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|c| c.map_values(|v| eta.apply(v).expect("dimensions checked")))
                .collect()
        })
        .collect();
    joint_moments(&JointDistribution::new(j.k, j.s, powered)?)
}
