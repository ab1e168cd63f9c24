//! A-valued distributions of one self-adjoint variable, truncated at a finite
//! order.
//!
//! The `n`-th moment map (for `n` occurrences of `X`) is the multilinear map
//! `M_n(a_1, …, a_{n-1}) = E(X a_1 X … a_{n-1} X)` of arity `n - 1`; the
//! cumulants `ω_n` are stored the same way.

mod multimap;
mod positivity;
mod realization;
pub mod scalar;
mod transform;

pub use multimap::{MultiMap, MAX_BASIS_INPUTS};
pub use positivity::{moment_matrix, positivity_certificate, word_count};
pub use realization::{max_order, moments_from_realization, Realization, MAX_REALIZATION_ORDER};
pub use transform::{cumulants_from_moments, moments_from_cumulants};

pub(crate) use transform::{eval_forest, forests};

use crate::cpmaps::CpMap;
use crate::error::{Error, Result};

/// Absolute tolerance, scaled by the size of the data, for the Hermitian
/// symmetry of moment maps.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct OvDistribution {
    k: usize,
    /// `moments[i]` is `M_{i+1}`, of arity `i`.
    moments: Vec<MultiMap>,
    label: String,
}

impl OvDistribution {
    /// Validates arities and the Hermitian symmetry
    /// `M_n(a_1, …, a_{n-1})* = M_n(a_{n-1}*, …, a_1*)`.
    pub fn new(k: usize, moments: Vec<MultiMap>, label: impl Into<String>) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::Input(
                "distribution needs at least one moment".into(),
            ));
        }
        for (i, m) in moments.iter().enumerate() {
            if m.k() != k || m.arity() != i {
                return Err(Error::Dimension(format!(
                    "moment {} must have arity {i} over M_{k}, got arity {} over M_{}",
                    i + 1,
                    m.arity(),
                    m.k()
                )));
            }
            let defect = m.hermitian_defect();
            let limit = HERMITIAN_TOL * (1.0 + m.norm_max());
            if defect > limit {
                return Err(Error::NotHermitian {
                    asymmetry: defect,
                    limit,
                });
            }
        }
        Ok(OvDistribution {
            k,
            moments,
            label: label.into(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Largest number of `X` occurrences with a known moment.
    pub fn order(&self) -> usize {
        self.moments.len()
    }

    /// `M_n`, for `1 <= n <= order`.
    pub fn moment(&self, n: usize) -> &MultiMap {
        &self.moments[n - 1]
    }

    pub fn moments(&self) -> &[MultiMap] {
        &self.moments
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Keeps the moments up to `order`.
    pub fn truncate(&self, order: usize) -> Result<Self> {
        if order == 0 || order > self.order() {
            return Err(Error::OutOfRange {
                what: "truncation order",
                value: order,
                bound: format!("1..={}", self.order()),
            });
        }
        Ok(OvDistribution {
            k: self.k,
            moments: self.moments[..order].to_vec(),
            label: self.label.clone(),
        })
    }

    /// Largest entrywise deviation between the moment tables of two
    /// distributions of equal order.
    pub fn max_abs_diff(&self, other: &OvDistribution) -> f64 {
        if self.k != other.k || self.order() != other.order() {
            return f64::INFINITY;
        }
        self.moments
            .iter()
            .zip(&other.moments)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.moments
            .iter()
            .map(MultiMap::hermitian_defect)
            .fold(0.0, f64::max)
    }
}

/// Applies `eta` to every value of every cumulant map.
pub fn compose_cumulants(cums: &[MultiMap], eta: &CpMap) -> Result<Vec<MultiMap>> {
    if let Some(c) = cums.first() {
        if c.k() != eta.k() {
            return Err(Error::Dimension(format!(
                "distribution is over M_{}, map acts on M_{}",
                c.k(),
                eta.k()
            )));
        }
    }
    Ok(cums
        .iter()
        .map(|c| c.map_values(|v| eta.apply(v).expect("dimensions checked")))
        .collect())
}

/// The η-convolution power: cumulants `η ∘ ω_n`, moments regenerated from
/// them.
pub fn eta_power(d: &OvDistribution, eta: &CpMap) -> Result<OvDistribution> {
    if d.k() != eta.k() {
        return Err(Error::Dimension(format!(
            "distribution is over M_{}, map acts on M_{}",
            d.k(),
            eta.k()
        )));
    }
    let cums = cumulants_from_moments(d)?;
    let powered = compose_cumulants(&cums, eta)?;
    Ok(moments_from_cumulants(&powered, d.order())?.with_label(format!("{} ⊞η", d.label())))
}
