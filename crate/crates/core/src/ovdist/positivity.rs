//! Block moment matrices over words `a_0 X a_1 X … a_{j-1} X` with the
//! letters `a_i` ranging over matrix units.
//!
//! A polynomial `p = Σ_w w b_w` with right coefficients `b_w ∈ A` has
//! `μ(p* p) = Σ b_w* μ(w* w') b_{w'}`, so a negative eigenvalue of the
//! flattened matrix `[μ(w* w')]` is a polynomial with `μ(p*p) ≱ 0`. The
//! converse does not hold at a finite level.

use crate::algebra::{
    hermitian_eigen, max_abs, psd_check, real, AMatrix, AlgElem, CMat, PsdReport,
};
use crate::error::{Error, Result};

use super::OvDistribution;

/// Number of words of `X`-degree at most `level`: `Σ_{j<=level} (k^2)^j`.
pub fn word_count(k: usize, level: usize) -> usize {
    (0..=level).map(|j| (k * k).pow(j as u32)).sum()
}

/// Words as letter lists in a fixed order: by degree, then
/// lexicographically in the matrix-unit indices.
fn words(k: usize, level: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..level {
        let mut next = Vec::with_capacity(frontier.len() * k * k);
        for w in &frontier {
            for i in 0..k * k {
                let mut w2: Vec<usize> = w.clone();
                w2.push(i);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// `μ(w* w')` for words given by their letters' basis indices.
fn entry(d: &OvDistribution, w: &[usize], w2: &[usize]) -> AlgElem {
    let k = d.k();
    let adj = |i: usize| (i % k) * k + i / k;
    match (w.len(), w2.len()) {
        (0, 0) => AlgElem::identity(k),
        (0, j) => &AlgElem::basis(k, w2[0]) * d.moment(j).at(&w2[1..]),
        (j, 0) => {
            let args: Vec<usize> = w[1..].iter().rev().map(|&i| adj(i)).collect();
            d.moment(j).at(&args) * &AlgElem::basis(k, adj(w[0]))
        }
        (j, j2) => {
            // a_0* a_0' = e_{q p} e_{p' q'} = δ_{p p'} e_{q q'}.
            let (p, q) = (w[0] / k, w[0] % k);
            let (p2, q2) = (w2[0] / k, w2[0] % k);
            if p != p2 {
                return AlgElem::zero(k);
            }
            let mut args: Vec<usize> = w[1..].iter().rev().map(|&i| adj(i)).collect();
            args.push(q * k + q2);
            args.extend_from_slice(&w2[1..]);
            d.moment(j + j2).at(&args).clone()
        }
    }
}

/// The block matrix `[μ(w* w')]` over words of degree at most `level`.
pub fn moment_matrix(d: &OvDistribution, level: usize) -> Result<AMatrix> {
    if 2 * level > d.order() {
        return Err(Error::OutOfRange {
            what: "positivity level",
            value: level,
            bound: format!("2 * level <= order = {}", d.order()),
        });
    }
    let ws = words(d.k(), level);
    let n = ws.len();
    Ok(AMatrix::from_fn(n, n, d.k(), |i, j| {
        entry(d, &ws[i], &ws[j])
    }))
}

/// Eigenvalue test of the flattened moment matrix at `level`. A PSD result
/// means positive up to that level only.
pub fn positivity_certificate(d: &OvDistribution, level: usize, tol: f64) -> Result<PsdReport> {
    let m: CMat = moment_matrix(d, level)?.flatten()?;
    // Hermitian by construction up to rounding in the moment tables, which can
    // exceed a tight `tol`; only gross asymmetry is rejected.
    let sym_tol = tol.max(1e-10 * (1.0 + max_abs(&m)));
    let report = psd_check(&m, sym_tol)?;
    if report.witness.is_some() || report.min_eigenvalue >= -tol {
        return Ok(PsdReport { tol, ..report });
    }
    let sym = (&m + m.adjoint()) * real(0.5);
    let (_, vectors) = hermitian_eigen(&sym);
    Ok(PsdReport {
        min_eigenvalue: report.min_eigenvalue,
        witness: Some(vectors.column(0).into_owned()),
        tol,
    })
}
