//! When `η - id` is not completely positive: a witness `(m, a, φ)`, the GNS
//! space of `φ` with the rank-one projection onto its cyclic vector, the
//! compression scalar `λ < 1`, and a non-positivity certificate for the
//! symmetric Bernoulli distribution raised to the free power `λ`.

mod tuple;

pub use tuple::{
    joint_cumulants, joint_eta_power, joint_moments, pack_tuple, unpack_tuple, JointDistribution,
};

use serde::Serialize;

use crate::algebra::{
    hermitian_eigen, max_abs_diff, psd_check, real, CMat, CVec, PsdReport, C64, ZERO,
};
use crate::cpmaps::{max_entangled, CpMap};
use crate::error::{Error, Result};
use crate::ovdist::{moments_from_cumulants, positivity_certificate, scalar};

/// Levels swept by [`counterexample_report`].
pub const DEFAULT_MAX_LEVEL: usize = 4;

/// A projection `a` and a state `φ` (density matrix) on `M_m(A)` with
/// `φ(a) > 0` and `φ(η_m(a) - a) < -2κ`.
#[derive(Clone, Debug)]
pub struct Witness {
    pub m: usize,
    pub k: usize,
    pub a: CMat,
    pub phi: CMat,
    pub kappa: f64,
    /// `η_m(a) = (id_m ⊗ η)(a)`.
    pub eta_a: CMat,
    /// Mixing weight of the state that is strictly positive on `a`.
    pub mixing_weight: f64,
}

fn state(rho: &CMat, x: &CMat) -> C64 {
    (rho * x).trace()
}

impl Witness {
    pub fn phi_of(&self, x: &CMat) -> f64 {
        state(&self.phi, x).re
    }

    pub fn phi_a(&self) -> f64 {
        self.phi_of(&self.a)
    }

    pub fn phi_eta_a(&self) -> f64 {
        self.phi_of(&self.eta_a)
    }

    /// Largest violation of `a = a* = a²`, `φ ≥ 0`, `φ(1) = 1`, and the two
    /// margin inequalities; zero when all hold.
    pub fn defect(&self) -> f64 {
        let proj = max_abs_diff(&(&self.a * &self.a), &self.a)
            .max(max_abs_diff(&self.a.adjoint(), &self.a));
        let trace = (self.phi.trace() - real(1.0)).norm();
        let positive = psd_check(&self.phi, 1e-12)
            .map(|r| (-r.min_eigenvalue).max(0.0))
            .unwrap_or(f64::INFINITY);
        let phi_a = (-self.phi_a()).max(0.0);
        let margin = (self.phi_eta_a() - self.phi_a() + 2.0 * self.kappa).max(0.0);
        proj.max(trace).max(positive).max(phi_a).max(margin)
    }
}

/// `m = k`, `a` the projection onto the maximally entangled vector (so
/// `η_m(a) - a = Choi(η - id) / k`), and `φ` the vector state of the most
/// negative eigenvector of `Choi(η - id)` mixed with the vector state of
/// `Ω`, using the first weight `2^{-j}` that keeps the margin.
pub fn find_witness(eta: &CpMap, tol: f64) -> Result<Witness> {
    let report = eta.eta_minus_id_cp(tol);
    if report.is_psd() {
        return Err(Error::NoWitness {
            min_eigenvalue: report.min_eigenvalue,
        });
    }
    let k = eta.k();
    let omega = max_entangled(k);
    let a = &omega * omega.adjoint();
    let eta_a = eta.amplify(k)?.apply_mat(&a);
    let (_, vectors) = hermitian_eigen(&eta.minus_identity().choi().clone());
    let w: CVec = vectors.column(0).into_owned();
    let phi0 = &w * w.adjoint();
    let phi1 = a.clone();
    let diff = &eta_a - &a;
    let g0 = -state(&phi0, &diff).re;
    debug_assert!(g0 > 0.0);
    let kappa = g0 / 4.0;
    for j in 1..=60 {
        let t = 0.5f64.powi(j);
        let phi = &phi0 * real(1.0 - t) + &phi1 * real(t);
        let phi_a = state(&phi, &a).re;
        let margin = state(&phi, &diff).re;
        // Strict with a relative slack so exact ties are not accepted.
        if phi_a > 0.0 && margin < -2.0 * kappa - 1e-12 * g0 {
            return Ok(Witness {
                m: k,
                k,
                a,
                phi,
                kappa,
                eta_a,
                mixing_weight: t,
            });
        }
    }
    Err(Error::Degenerate(
        "no mixing weight down to 2^-60 keeps the witness margin".into(),
    ))
}

/// Finite GNS space of `φ` on `M_n`, `n = mk`, with an orthonormal basis
/// `ξ_1 = ξ, ξ_2, …` and the state `ϑ(x) = (1/N) Σ_{j<=N} ⟨x ξ_j, ξ_j⟩`.
#[derive(Clone, Debug)]
pub struct GnsModel {
    n: usize,
    rho: CMat,
    /// `H_l` with `h_l = [H_l]` orthonormal.
    vectors: Vec<CMat>,
    pub xi: CVec,
    pub p: CMat,
    /// Columns `ξ_1 = ξ, ξ_2, …`.
    pub basis: CMat,
    pub n_basis: usize,
}

/// GNS construction of the witness state: quotient by the null space of
/// `⟨x, y⟩ = φ(x* y)` on matrix units, then complete `ξ = [1]` to an
/// orthonormal basis. `n_basis = None` uses the full basis.
pub fn build_gns(w: &Witness, n_basis: Option<usize>, tol: f64) -> Result<GnsModel> {
    let n = w.a.nrows();
    let rho = w.phi.clone();
    // φ(e_{ij}* e_{i'j'}) = δ_{i i'} ρ_{j' j}.
    let dim = n * n;
    let gram = CMat::from_fn(dim, dim, |al, be| {
        let (i, j) = (al / n, al % n);
        let (i2, j2) = (be / n, be % n);
        if i == i2 {
            rho[(j2, j)]
        } else {
            ZERO
        }
    });
    let (values, u) = hermitian_eigen(&gram);
    let max = values.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..dim)
        .filter(|&l| values[l] > tol * max.max(1.0))
        .collect();
    if keep.is_empty() {
        return Err(Error::Degenerate("state has a trivial GNS space".into()));
    }
    let vectors: Vec<CMat> = keep
        .iter()
        .map(|&l| {
            let scale = real(1.0 / values[l].sqrt());
            CMat::from_fn(n, n, |i, j| u[(i * n + j, l)] * scale)
        })
        .collect();
    let h_dim = vectors.len();
    let n_basis = n_basis.unwrap_or(h_dim);
    if n_basis == 0 || n_basis > h_dim {
        return Err(Error::OutOfRange {
            what: "GNS basis size",
            value: n_basis,
            bound: format!("1..={h_dim}"),
        });
    }
    let mut model = GnsModel {
        n,
        rho,
        vectors,
        xi: CVec::zeros(h_dim),
        p: CMat::zeros(h_dim, h_dim),
        basis: CMat::zeros(h_dim, h_dim),
        n_basis,
    };
    let xi = model.vector_of(&CMat::identity(n, n));
    model.p = &xi * xi.adjoint();
    model.basis = complete_basis(&xi);
    model.xi = xi;
    Ok(model)
}

/// Gram-Schmidt on `ξ` followed by the standard basis.
fn complete_basis(xi: &CVec) -> CMat {
    let h = xi.len();
    let mut cols: Vec<CVec> = vec![xi.clone()];
    for e in 0..h {
        if cols.len() == h {
            break;
        }
        let mut v = CVec::from_fn(h, |i, _| if i == e { real(1.0) } else { ZERO });
        for c in &cols {
            let proj = c.dotc(&v);
            v -= c * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / real(norm));
        }
    }
    CMat::from_columns(&cols)
}

impl GnsModel {
    pub fn h_dim(&self) -> usize {
        self.vectors.len()
    }

    /// `⟨h_l, [y]⟩ = φ(H_l* y)` for every `l`.
    fn vector_of(&self, y: &CMat) -> CVec {
        CVec::from_fn(self.h_dim(), |l, _| {
            state(&self.rho, &(self.vectors[l].adjoint() * y))
        })
    }

    /// `π(x)`, the matrix of left multiplication in the orthonormal basis.
    pub fn represent(&self, x: &CMat) -> CMat {
        let h = self.h_dim();
        let mut out = CMat::zeros(h, h);
        for l2 in 0..h {
            let col = self.vector_of(&(x * &self.vectors[l2]));
            out.set_column(l2, &col);
        }
        out
    }

    /// `ϑ(x) = (1/N) Σ_{j<=N} ⟨x ξ_j, ξ_j⟩` for an operator on the GNS space.
    pub fn vartheta(&self, x: &CMat) -> C64 {
        let mut acc = ZERO;
        for j in 0..self.n_basis {
            let v = self.basis.column(j);
            acc += v.dotc(&(x * v));
        }
        acc / real(self.n_basis as f64)
    }

    /// `max |⟨ξ, π(x) ξ⟩ - φ(x)|` over matrix units.
    pub fn state_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let e = crate::algebra::matrix_unit(self.n, i, j);
                let got = self.xi.dotc(&(self.represent(&e) * &self.xi));
                worst = worst.max((got - state(&self.rho, &e)).norm());
            }
        }
        worst
    }
}

/// The compressed cumulants and the scalar `λ`.
#[derive(Clone, Debug, Serialize)]
pub struct Compression {
    pub lambda: f64,
    /// `φ(η_m(a)) / φ(a)`, equal to `lambda` for the full basis.
    pub lambda_exact: f64,
    /// `|ϑ(aPa)/ϑ(P) - φ(a)|`.
    pub delta: f64,
    pub vartheta_p: f64,
    pub vartheta_apa: f64,
    /// `ω̂_n` and `ω̃_n` for `n = 1, …`.
    pub omega_hat: Vec<f64>,
    pub omega_tilde: Vec<f64>,
    /// `ω̃_n / ω_n` where `ω_n ≠ 0`.
    pub ratios: Vec<Option<f64>>,
    /// Largest deviation of `ω̂_n` from `ϑ(P) φ(η_m a) ϑ(aPa)^{n-1} ω_n`.
    pub closed_form_defect: f64,
    /// Largest entry of `P π(η_m a) P - φ(η_m a) P`.
    pub compression_defect: f64,
}

/// Scalar cumulants of the compressed variable, built stage by stage:
///
/// * `ω'_{n+1}(h_1, …, h_n) = ω_{n+1} Π_j ϑ(a h_j a) · a`
/// * `ω''` replaces the trailing `a` by `π(η_m(a))`
/// * `ω'''(h) = P ω''(P h_1 P, …, P h_n P) P`
/// * `ω̂_{n+1} = ϑ(ω'''(1, …, 1))`, `ω̃_{n+1} = ϑ(aPa)^{-(n+1)} ω̂_{n+1}`
///
/// so `ω̃_n = λ ω_n` with `λ = φ(η_m(a)) ϑ(P) / ϑ(aPa)`. Requires
/// `δ = |ϑ(aPa)/ϑ(P) - φ(a)| < κ`, which makes `λ < (φ(a)-κ)/(φ(a)-δ) < 1`.
pub fn compression_cumulants(cumulants: &[f64], w: &Witness, g: &GnsModel) -> Result<Compression> {
    let pa = g.represent(&w.a);
    let peta = g.represent(&w.eta_a);
    let h = g.h_dim();
    let one = CMat::identity(h, h);
    let theta_p = g.vartheta(&g.p).re;
    let apa = &pa * &g.p * &pa;
    let theta_apa = g.vartheta(&apa).re;
    if theta_apa <= 0.0 {
        return Err(Error::Degenerate("ϑ(aPa) vanishes for this basis".into()));
    }
    let phi_a = w.phi_a();
    let phi_eta_a = w.phi_eta_a();
    let delta = (theta_apa / theta_p - phi_a).abs();
    if delta >= w.kappa {
        return Err(Error::Degenerate(format!(
            "basis too small: δ = {delta:.3e} is not below κ = {:.3e}",
            w.kappa
        )));
    }
    let compression_defect = max_abs_diff(&(&g.p * &peta * &g.p), &(&g.p * real(phi_eta_a)));

    let factor = |hj: &CMat| g.vartheta(&(&pa * hj * &pa));
    let omega2 = |omega: f64, hs: &[CMat]| -> CMat {
        let coeff = hs.iter().fold(real(omega), |acc, hj| acc * factor(hj));
        &peta * coeff
    };
    let omega3 = |omega: f64, hs: &[CMat]| -> CMat {
        let compressed: Vec<CMat> = hs.iter().map(|hj| &g.p * hj * &g.p).collect();
        &g.p * omega2(omega, &compressed) * &g.p
    };

    let mut omega_hat = Vec::with_capacity(cumulants.len());
    let mut omega_tilde = Vec::with_capacity(cumulants.len());
    let mut ratios = Vec::with_capacity(cumulants.len());
    let mut closed_form_defect: f64 = 0.0;
    for (i, &omega) in cumulants.iter().enumerate() {
        // ω_{n+1} with n = i arguments.
        let ones = vec![one.clone(); i];
        let hat = g.vartheta(&omega3(omega, &ones)).re;
        let closed = theta_p * phi_eta_a * theta_apa.powi(i as i32) * omega;
        closed_form_defect = closed_form_defect.max((hat - closed).abs());
        let tilde = hat / theta_apa.powi(i as i32 + 1);
        omega_hat.push(hat);
        omega_tilde.push(tilde);
        ratios.push((omega != 0.0).then(|| tilde / omega));
    }
    let lambda = phi_eta_a * theta_p / theta_apa;
    let bound = (phi_a - w.kappa) / (phi_a - delta);
    if !(lambda < bound && bound < 1.0) {
        return Err(Error::Degenerate(format!(
            "λ = {lambda} does not satisfy λ < {bound} < 1"
        )));
    }
    Ok(Compression {
        lambda,
        lambda_exact: phi_eta_a / phi_a,
        delta,
        vartheta_p: theta_p,
        vartheta_apa: theta_apa,
        omega_hat,
        omega_tilde,
        ratios,
        closed_form_defect,
        compression_defect,
    })
}

/// Symmetric Bernoulli cumulants `ω_{2j} = (-1)^{j-1} C_{j-1}`, odd ones
/// zero, up to `order`.
pub fn bernoulli_cumulants(order: usize) -> Vec<f64> {
    (1..=order)
        .map(|n| {
            if n % 2 == 1 {
                0.0
            } else {
                let j = n / 2;
                let c = crate::ncpart::catalan(j - 1) as f64;
                if j % 2 == 1 {
                    c
                } else {
                    -c
                }
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct LevelReport {
    pub level: usize,
    pub report: PsdReport,
}

/// Moment-matrix test of `Bernoulli ⊞ λ`, sweeping levels `1..=max_level`
/// and stopping at the first negative one. For `0 < λ < 1` the level-2
/// Hankel determinant is `λ²(λ - 1) < 0`; for `λ < 0` the second moment is
/// already negative. `λ = 0` gives the point mass at zero, which is positive.
pub fn certify_nonpositive(lambda: f64, max_level: usize, tol: f64) -> Result<LevelReport> {
    if max_level == 0 {
        return Err(Error::OutOfRange {
            what: "certificate level",
            value: 0,
            bound: ">= 1".into(),
        });
    }
    let cums: Vec<f64> = bernoulli_cumulants(2 * max_level)
        .into_iter()
        .map(|c| lambda * c)
        .collect();
    let d = moments_from_cumulants(&scalar::cumulants(&cums), 2 * max_level)?;
    let mut last = None;
    for level in 1..=max_level {
        let report = positivity_certificate(&d, level, tol)?;
        let negative = report.witness.is_some();
        last = Some(LevelReport { level, report });
        if negative {
            break;
        }
    }
    Ok(last.expect("max_level >= 1"))
}

/// Plain-data witness for reports.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessSummary {
    pub m: usize,
    pub a: Vec<Vec<[f64; 2]>>,
    pub phi: Vec<Vec<[f64; 2]>>,
    pub kappa: f64,
    pub mixing_weight: f64,
    pub phi_a: f64,
    pub phi_eta_a: f64,
    pub phi_eta_a_minus_a: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Nonpositivity {
    pub level: usize,
    pub min_eigenvalue: f64,
    pub witness_vector: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub eta_minus_id_cp: bool,
    pub min_choi_eigenvalue: f64,
    pub verdict: String,
    pub witness: Option<WitnessSummary>,
    pub lambda: Option<f64>,
    pub ratios: Option<Vec<Option<f64>>>,
    pub nonpositivity: Option<Nonpositivity>,
}

impl CounterexampleReport {
    /// Whether the non-positivity chain produced a certificate.
    pub fn has_counterexample(&self) -> bool {
        self.nonpositivity.is_some()
    }
}

pub(crate) fn matrix_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// Full pipeline. If `η - id` is completely positive, reports positivity
/// preserved; otherwise runs witness, GNS, compression and the Bernoulli
/// certificate up to `max_level`.
pub fn counterexample_report(
    eta: &CpMap,
    max_level: usize,
    tol: f64,
) -> Result<CounterexampleReport> {
    let cp = eta.eta_minus_id_cp(tol);
    if cp.is_psd() {
        return Ok(CounterexampleReport {
            eta_minus_id_cp: true,
            min_choi_eigenvalue: cp.min_eigenvalue,
            verdict: "positivity preserved".into(),
            witness: None,
            lambda: None,
            ratios: None,
            nonpositivity: None,
        });
    }
    let w = find_witness(eta, tol)?;
    let g = build_gns(&w, None, tol)?;
    let cums = bernoulli_cumulants(2 * max_level);
    let c = compression_cumulants(&cums, &w, &g)?;
    let cert = certify_nonpositive(c.lambda, max_level, tol)?;
    let nonpositivity = cert.report.witness.as_ref().map(|v| Nonpositivity {
        level: cert.level,
        min_eigenvalue: cert.report.min_eigenvalue,
        witness_vector: v.iter().map(|z| [z.re, z.im]).collect(),
    });
    if nonpositivity.is_none() {
        return Err(Error::Degenerate(format!(
            "λ = {} gives no negative moment matrix up to level {max_level}",
            c.lambda
        )));
    }
    Ok(CounterexampleReport {
        eta_minus_id_cp: false,
        min_choi_eigenvalue: cp.min_eigenvalue,
        verdict: "counterexample".into(),
        witness: Some(WitnessSummary {
            m: w.m,
            a: matrix_rows(&w.a),
            phi: matrix_rows(&w.phi),
            kappa: w.kappa,
            mixing_weight: w.mixing_weight,
            phi_a: w.phi_a(),
            phi_eta_a: w.phi_eta_a(),
            phi_eta_a_minus_a: w.phi_eta_a() - w.phi_a(),
        }),
        lambda: Some(c.lambda),
        ratios: Some(c.ratios),
        nonpositivity,
    })
}
