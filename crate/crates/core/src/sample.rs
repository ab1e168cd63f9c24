//! Random instances for tests and experiments. Entries are uniform in
//! `[-1, 1]` (real and imaginary parts independently).

use rand::Rng;

use crate::algebra::{c64, hermitian_eigen, real, AlgElem, CMat};
use crate::cpmaps::CpMap;
use crate::ovdist::{MultiMap, Realization};

fn entry<R: Rng + ?Sized>(rng: &mut R) -> crate::algebra::C64 {
    c64(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
}

pub fn complex_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| entry(rng))
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = complex_matrix(rng, n, n);
    (&g + g.adjoint()) * real(0.5)
}

/// Unitary from the QR factorization of a random matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    complex_matrix(rng, n, n).qr().q()
}

/// Full-rank density matrix `G G* / Tr(G G*)`.
pub fn density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = complex_matrix(rng, n, n);
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}

/// CP map with `rank` random Kraus operators scaled by `1/sqrt(k rank)`,
/// Kraus form stored.
pub fn cp_map<R: Rng + ?Sized>(rng: &mut R, k: usize, rank: usize) -> CpMap {
    let scale = real(1.0 / ((k * rank) as f64).sqrt());
    let kraus = (0..rank)
        .map(|_| complex_matrix(rng, k, k) * scale)
        .collect();
    CpMap::from_kraus(k, kraus).expect("square Kraus operators")
}

/// `η` with Hermitian Choi matrix `Choi(id) + H + s 1`, where `H` is random
/// Hermitian and `s` puts the smallest eigenvalue of `Choi(η - id)` uniformly
/// in `[-1, 1]`. About half of the samples have `η - id` completely positive.
pub fn hermitian_choi_map<R: Rng + ?Sized>(rng: &mut R, k: usize) -> CpMap {
    let h = hermitian(rng, k * k);
    let (values, _) = hermitian_eigen(&h);
    let target: f64 = rng.gen_range(-1.0..=1.0);
    let shifted = h + CMat::identity(k * k, k * k) * real(target - values[0]);
    let psi = CpMap::from_choi(k, shifted).expect("Hermitian by construction");
    psi.plus_identity()
}

pub fn multimap<R: Rng + ?Sized>(rng: &mut R, k: usize, arity: usize) -> MultiMap {
    MultiMap::from_fn(k, arity, |_| AlgElem::from_mat(complex_matrix(rng, k, k)))
        .expect("arity within the size guard")
}

/// Random Hermitian-symmetric cumulants `ω_1, …, ω_order`.
pub fn cumulant_family<R: Rng + ?Sized>(rng: &mut R, k: usize, order: usize) -> Vec<MultiMap> {
    (0..order)
        .map(|arity| multimap(rng, k, arity).hermitian_part())
        .collect()
}

/// Random Hermitian `X` on `C^k ⊗ C^p` with a random full-rank state on
/// `C^p`.
pub fn realization<R: Rng + ?Sized>(rng: &mut R, k: usize, p: usize) -> Realization {
    let x = hermitian(rng, k * p);
    let rho = density(rng, p);
    Realization::new(k, p, x, rho).expect("valid by construction")
}
