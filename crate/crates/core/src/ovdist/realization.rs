//! Concrete realizations: `A = M_k` embedded in `M_d = M_k ⊗ M_p` as
//! `a ↦ a ⊗ 1_p`, with conditional expectation `id ⊗ Tr(· ρ)` for a density
//! matrix `ρ` on `C^p`.

use crate::algebra::{hermitian_defect, max_abs, psd_check, real, AlgElem, CMat, ZERO};
use crate::error::{Error, Result};

use super::{MultiMap, OvDistribution};

/// Default bound on the order of realized moments.
pub const MAX_REALIZATION_ORDER: usize = 10;

/// Hard guard on moment orders, overridable through `OVFREE_MAX_ORDER`.
pub fn max_order() -> usize {
    std::env::var("OVFREE_MAX_ORDER")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(MAX_REALIZATION_ORDER)
}

const CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Realization {
    k: usize,
    p: usize,
    x: CMat,
    rho: CMat,
}

impl Realization {
    /// Checks that `x` is Hermitian of size `k p`, that `rho` is a density
    /// matrix, and then the bimodule, unit and positivity identities of the
    /// resulting conditional expectation.
    pub fn new(k: usize, p: usize, x: CMat, rho: CMat) -> Result<Self> {
        if k == 0 || p == 0 {
            return Err(Error::Input("k and p must be positive".into()));
        }
        let d = k * p;
        if x.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "X must be {d}x{d} for k = {k}, p = {p}, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        if rho.shape() != (p, p) {
            return Err(Error::Dimension(format!(
                "state must be {p}x{p}, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let xdef = hermitian_defect(&x);
        if xdef > CHECK_TOL * (1.0 + max_abs(&x)) {
            return Err(Error::Realization {
                identity: "X = X*".into(),
                deviation: xdef,
            });
        }
        let r = Realization { k, p, x, rho };
        r.validate()?;
        Ok(r)
    }

    /// State given by nonnegative weights on the standard basis of `C^p`.
    pub fn with_weights(k: usize, x: CMat, weights: &[f64]) -> Result<Self> {
        let rho = CMat::from_diagonal(&weights.iter().map(|&w| real(w)).collect::<Vec<_>>().into());
        Self::new(k, weights.len(), x, rho)
    }

    /// `E = id ⊗ tr_p` on `M_k ⊗ M_p`.
    pub fn normalized_trace(k: usize, p: usize, x: CMat) -> Result<Self> {
        Self::with_weights(k, x, &vec![1.0 / p as f64; p])
    }

    fn validate(&self) -> Result<()> {
        let tr = self.rho.trace();
        let trace_dev = (tr - real(1.0)).norm();
        if trace_dev > CHECK_TOL {
            return Err(Error::Realization {
                identity: "E(1) = 1 (state trace)".into(),
                deviation: trace_dev,
            });
        }
        let report = psd_check(&self.rho, CHECK_TOL).map_err(|_| Error::Realization {
            identity: "state is Hermitian".into(),
            deviation: hermitian_defect(&self.rho),
        })?;
        if !report.is_psd() {
            return Err(Error::Realization {
                identity: "E positive (state PSD)".into(),
                deviation: -report.min_eigenvalue,
            });
        }
        let k = self.k;
        let one = self.condexp(&CMat::identity(self.d(), self.d()));
        let unit_dev = one.max_abs_diff(&AlgElem::identity(k));
        if unit_dev > CHECK_TOL {
            return Err(Error::Realization {
                identity: "E(1) = 1".into(),
                deviation: unit_dev,
            });
        }
        let mut worst: f64 = 0.0;
        for ia in 0..k * k {
            for ib in 0..k * k {
                let (a, b) = (AlgElem::basis(k, ia), AlgElem::basis(k, ib));
                let lhs = self.condexp(&(self.embed(&a) * &self.x * self.embed(&b)));
                let rhs = &(&a * &self.condexp(&self.x)) * &b;
                worst = worst.max(lhs.max_abs_diff(&rhs));
            }
        }
        if worst > CHECK_TOL * (1.0 + max_abs(&self.x)) {
            return Err(Error::Realization {
                identity: "E(a x b) = a E(x) b".into(),
                deviation: worst,
            });
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.k * self.p
    }

    pub fn x(&self) -> &CMat {
        &self.x
    }

    pub fn state(&self) -> &CMat {
        &self.rho
    }

    /// `a ⊗ 1_p`, with row index `i p + s`.
    pub fn embed(&self, a: &AlgElem) -> CMat {
        let p = self.p;
        CMat::from_fn(self.d(), self.d(), |r, c| {
            if r % p == c % p {
                a.matrix()[(r / p, c / p)]
            } else {
                ZERO
            }
        })
    }

    /// `E(y)[i, j] = Σ_{s,t} y[i p + s, j p + t] ρ[t, s]`.
    pub fn condexp(&self, y: &CMat) -> AlgElem {
        let (k, p) = (self.k, self.p);
        AlgElem::from_mat(CMat::from_fn(k, k, |i, j| {
            let mut acc = ZERO;
            for s in 0..p {
                for t in 0..p {
                    acc += y[(i * p + s, j * p + t)] * self.rho[(t, s)];
                }
            }
            acc
        }))
    }
}

/// Moments `E(X a_1 X … a_{n-1} X)` for `n <= order`, by depth-first
/// extension of prefix products. Right multiplication by `e_pq ⊗ 1` moves
/// column block `p` to block `q`, so each step costs one `d x p` by `p x d`
/// product.
pub fn moments_from_realization(r: &Realization, order: usize) -> Result<OvDistribution> {
    let limit = max_order();
    if order == 0 || order > limit {
        return Err(Error::OutOfRange {
            what: "moment order",
            value: order,
            bound: format!("1..={limit} (OVFREE_MAX_ORDER)"),
        });
    }
    let k = r.k;
    let mut tables: Vec<Vec<AlgElem>> = (0..order)
        .map(|n| Vec::with_capacity((k * k).pow(n as u32)))
        .collect();
    extend(r, &r.x, 0, order, &mut tables);
    let moments = tables
        .into_iter()
        .enumerate()
        .map(|(n, values)| MultiMap::from_values(k, n, values))
        .collect::<Result<Vec<_>>>()?;
    OvDistribution::new(k, moments, "realization")
}

/// Records `E(prefix)` as a moment with `depth` arguments, then recurses in
/// lexicographic order so each table fills in its storage order.
fn extend(r: &Realization, prefix: &CMat, depth: usize, order: usize, tables: &mut [Vec<AlgElem>]) {
    tables[depth].push(r.condexp(prefix));
    if depth + 1 == order {
        return;
    }
    let (k, p) = (r.k, r.p);
    for a in 0..k {
        let cols = prefix.columns(a * p, p);
        for b in 0..k {
            let next = cols * r.x.rows(b * p, p);
            extend(r, &next, depth + 1, order, tables);
        }
    }
}
