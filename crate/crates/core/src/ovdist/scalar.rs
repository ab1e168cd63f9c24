//! Shortcuts for the scalar case `A = C`.

use crate::algebra::{real, AlgElem, CMat};
use crate::error::Result;

use super::{MultiMap, OvDistribution};

fn one_by_one(x: f64) -> AlgElem {
    AlgElem::from_mat(CMat::from_element(1, 1, real(x)))
}

/// Cumulant family from real scalars `ω_1, ω_2, …`.
pub fn cumulants(values: &[f64]) -> Vec<MultiMap> {
    values
        .iter()
        .enumerate()
        .map(|(i, &x)| MultiMap::from_values(1, i, vec![one_by_one(x)]).expect("1x1 table"))
        .collect()
}

/// Distribution from real scalar moments `m_1, m_2, …`.
pub fn from_moments(values: &[f64]) -> Result<OvDistribution> {
    OvDistribution::new(1, cumulants(values), "scalar moments")
}

/// Real parts of a scalar family, `[ω_1, ω_2, …]` or `[m_1, m_2, …]`.
pub fn values(maps: &[MultiMap]) -> Vec<f64> {
    maps.iter()
        .map(|m| m.at_index(0).matrix()[(0, 0)].re)
        .collect()
}

pub fn moment_values(d: &OvDistribution) -> Vec<f64> {
    values(d.moments())
}

/// Symmetric Bernoulli `½(δ_{-1} + δ_1)`: moments `0, 1, 0, 1, …`.
pub fn bernoulli(order: usize) -> OvDistribution {
    let m: Vec<f64> = (1..=order)
        .map(|n| if n % 2 == 0 { 1.0 } else { 0.0 })
        .collect();
    from_moments(&m)
        .expect("scalar moments are Hermitian")
        .with_label("bernoulli")
}

/// Standard semicircle: `m_{2n} = Catalan(n)`, odd moments zero.
pub fn semicircle(order: usize) -> OvDistribution {
    let m: Vec<f64> = (1..=order)
        .map(|n| {
            if n % 2 == 0 {
                crate::ncpart::catalan(n / 2) as f64
            } else {
                0.0
            }
        })
        .collect();
    from_moments(&m)
        .expect("scalar moments are Hermitian")
        .with_label("semicircle")
}
