//! Linear maps `M_k -> M_k`: Choi matrices, Kraus decompositions, complete
//! positivity, and amplifications `id_m ⊗ η`.
//!
//! Conventions, fixed crate-wide:
//!
//! * The Choi matrix is the `k x k` grid of blocks whose block `(p, q)` is
//!   `η(e_pq)`, i.e. `C = Σ_pq e_pq ⊗ η(e_pq)`.
//! * Kraus operators act as `η(a) = Σ_i K_i* a K_i`.
//! * Vectorization stacks columns: `vec(B)[col*k + row] = B[row, col]`.
//!
//! With these choices `C = Σ_i vec(K_i*) vec(K_i*)*`.

use crate::algebra::{
    hermitian_defect, hermitian_eigen, kron, matrix_unit, max_abs_diff, psd_check, real, AlgElem,
    CMat, CVec, PsdReport, C64, DEFAULT_TOL,
};
use crate::error::{Error, Result};

/// Column-stacking vectorization.
pub fn vec_columns(b: &CMat) -> CVec {
    let (rows, cols) = b.shape();
    CVec::from_fn(rows * cols, |i, _| b[(i % rows, i / rows)])
}

/// Inverse of [`vec_columns`] for a square `k x k` result.
pub fn unvec_columns(v: &CVec, k: usize) -> CMat {
    CMat::from_fn(k, k, |row, col| v[col * k + row])
}

/// A linear map on `M_k` with Hermitian Choi matrix, optionally carrying a
/// Kraus decomposition.
#[derive(Clone, Debug)]
pub struct CpMap {
    k: usize,
    choi: CMat,
    kraus: Option<Vec<CMat>>,
}

impl CpMap {
    /// Builds the map from its values on the matrix units, listed as
    /// `action[p*k + q] = η(e_pq)`.
    pub fn choi_of(k: usize, action: &[CMat]) -> Result<Self> {
        if action.len() != k * k {
            return Err(Error::Dimension(format!(
                "expected {} images of matrix units, got {}",
                k * k,
                action.len()
            )));
        }
        let mut choi = CMat::zeros(k * k, k * k);
        for p in 0..k {
            for q in 0..k {
                let img = &action[p * k + q];
                if img.shape() != (k, k) {
                    return Err(Error::Dimension(format!(
                        "image of e_{p}{q} is {}x{}, expected {k}x{k}",
                        img.nrows(),
                        img.ncols()
                    )));
                }
                choi.view_mut((p * k, q * k), (k, k)).copy_from(img);
            }
        }
        Self::from_choi(k, choi)
    }

    /// Builds the map by evaluating `f` on every matrix unit.
    pub fn from_fn(k: usize, f: impl Fn(&CMat) -> CMat) -> Result<Self> {
        let action: Vec<CMat> = (0..k * k)
            .map(|i| f(&matrix_unit(k, i / k, i % k)))
            .collect();
        Self::choi_of(k, &action)
    }

    pub fn from_choi(k: usize, choi: CMat) -> Result<Self> {
        if choi.shape() != (k * k, k * k) {
            return Err(Error::Dimension(format!(
                "Choi matrix must be {0}x{0}, got {1}x{2}",
                k * k,
                choi.nrows(),
                choi.ncols()
            )));
        }
        let defect = hermitian_defect(&choi);
        let limit = 10.0 * DEFAULT_TOL * (1.0 + crate::algebra::max_abs(&choi));
        if defect > limit {
            return Err(Error::NotHermitian {
                asymmetry: defect,
                limit,
            });
        }
        let choi = (&choi + choi.adjoint()) * real(0.5);
        Ok(CpMap {
            k,
            choi,
            kraus: None,
        })
    }

    pub fn from_kraus(k: usize, kraus: Vec<CMat>) -> Result<Self> {
        let mut choi = CMat::zeros(k * k, k * k);
        for op in &kraus {
            if op.shape() != (k, k) {
                return Err(Error::Dimension(format!(
                    "Kraus operator is {}x{}, expected {k}x{k}",
                    op.nrows(),
                    op.ncols()
                )));
            }
            let v = vec_columns(&op.adjoint());
            choi += &v * v.adjoint();
        }
        Ok(CpMap {
            k,
            choi,
            kraus: Some(kraus),
        })
    }

    pub fn identity(k: usize) -> Self {
        Self::from_kraus(k, vec![CMat::identity(k, k)]).expect("identity Kraus is well formed")
    }

    /// `a ↦ t a`. Stored through its Choi matrix so that negative `t` works.
    pub fn scaled_identity(k: usize, t: f64) -> Self {
        Self::from_fn(k, |a| a * real(t)).expect("scaled identity is well formed")
    }

    pub fn transpose(k: usize) -> Self {
        Self::from_fn(k, |a| a.transpose()).expect("transpose is well formed")
    }

    pub fn zero(k: usize) -> Self {
        Self::from_kraus(k, Vec::new()).expect("empty Kraus list is well formed")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    pub fn stored_kraus(&self) -> Option<&[CMat]> {
        self.kraus.as_deref()
    }

    /// `η(e_pq)`, read from the Choi matrix.
    pub fn image_of_unit(&self, p: usize, q: usize) -> CMat {
        let k = self.k;
        self.choi.view((p * k, q * k), (k, k)).into_owned()
    }

    pub(crate) fn apply_mat(&self, a: &CMat) -> CMat {
        let k = self.k;
        let mut out = CMat::zeros(k, k);
        for p in 0..k {
            for q in 0..k {
                let c = a[(p, q)];
                if c != C64::new(0.0, 0.0) {
                    out += self.choi.view((p * k, q * k), (k, k)) * c;
                }
            }
        }
        out
    }

    pub fn apply(&self, a: &AlgElem) -> Result<AlgElem> {
        if a.k() != self.k {
            return Err(Error::Dimension(format!(
                "map acts on M_{}, element is in M_{}",
                self.k,
                a.k()
            )));
        }
        Ok(AlgElem::from_mat(self.apply_mat(a.matrix())))
    }

    fn check_same(&self, other: &CpMap) -> Result<()> {
        if self.k != other.k {
            return Err(Error::Dimension(format!(
                "maps act on M_{} and M_{}",
                self.k, other.k
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &CpMap) -> Result<CpMap> {
        self.check_same(other)?;
        let kraus = match (&self.kraus, &other.kraus) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        Ok(CpMap {
            k: self.k,
            choi: &self.choi + &other.choi,
            kraus,
        })
    }

    pub fn sub(&self, other: &CpMap) -> Result<CpMap> {
        self.check_same(other)?;
        Ok(CpMap {
            k: self.k,
            choi: &self.choi - &other.choi,
            kraus: None,
        })
    }

    pub fn scale(&self, t: f64) -> CpMap {
        let kraus = if t >= 0.0 {
            self.kraus
                .as_ref()
                .map(|ks| ks.iter().map(|op| op * real(t.sqrt())).collect())
        } else {
            None
        };
        CpMap {
            k: self.k,
            choi: &self.choi * real(t),
            kraus,
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &CpMap) -> Result<CpMap> {
        self.check_same(inner)?;
        CpMap::from_fn(self.k, |a| self.apply_mat(&inner.apply_mat(a)))
    }

    /// The map `a ↦ η(a) - a`.
    pub fn minus_identity(&self) -> CpMap {
        self.sub(&CpMap::identity(self.k)).expect("same dimension")
    }

    /// The map `a ↦ η(a) + a`.
    pub fn plus_identity(&self) -> CpMap {
        self.add(&CpMap::identity(self.k)).expect("same dimension")
    }

    /// Complete positivity test: PSD status of the Choi matrix.
    pub fn is_cp(&self, tol: f64) -> PsdReport {
        psd_check(&self.choi, tol).expect("Choi matrix is Hermitian by construction")
    }

    /// Whether `η - id` is completely positive.
    pub fn eta_minus_id_cp(&self, tol: f64) -> PsdReport {
        self.minus_identity().is_cp(tol)
    }

    /// Minimal Kraus decomposition from the Choi eigendecomposition,
    /// discarding eigenvalues below `tol * max_eigenvalue`.
    pub fn kraus_of(&self, tol: f64) -> Result<Vec<CMat>> {
        let report = self.is_cp(tol);
        if !report.is_psd() {
            return Err(Error::NotCompletelyPositive(report));
        }
        let (values, vectors) = hermitian_eigen(&self.choi);
        let max = values.last().copied().unwrap_or(0.0);
        if max <= 0.0 {
            return Ok(Vec::new());
        }
        let cutoff = tol * max;
        // Largest eigenvalues first.
        Ok((0..values.len())
            .rev()
            .filter(|&i| values[i] > cutoff)
            .map(|i| {
                let v = vectors.column(i).into_owned() * real(values[i].sqrt());
                unvec_columns(&v, self.k).adjoint()
            })
            .collect())
    }

    /// Same map with its Kraus decomposition attached.
    pub fn with_kraus(&self, tol: f64) -> Result<CpMap> {
        let kraus = self.kraus_of(tol)?;
        Ok(CpMap {
            k: self.k,
            choi: self.choi.clone(),
            kraus: Some(kraus),
        })
    }

    /// `id_m ⊗ η` on `M_{mk} = M_m(M_k)`: applies the map to every `k x k`
    /// block.
    pub fn amplify(&self, m: usize) -> Result<CpMap> {
        if m < 1 {
            return Err(Error::OutOfRange {
                what: "amplification size m",
                value: m,
                bound: "m >= 1".into(),
            });
        }
        let k = self.k;
        if let Some(ks) = &self.kraus {
            let amplified = ks
                .iter()
                .map(|op| kron(&CMat::identity(m, m), op))
                .collect();
            return CpMap::from_kraus(m * k, amplified);
        }
        CpMap::from_fn(m * k, |x| self.apply_blockwise(x, m))
    }

    pub(crate) fn apply_blockwise(&self, x: &CMat, m: usize) -> CMat {
        let k = self.k;
        let mut out = CMat::zeros(m * k, m * k);
        for i in 0..m {
            for j in 0..m {
                let block = x.view((i * k, j * k), (k, k)).into_owned();
                out.view_mut((i * k, j * k), (k, k))
                    .copy_from(&self.apply_mat(&block));
            }
        }
        out
    }

    /// Largest deviation between `Σ K_i* a K_i` and the Choi action over all
    /// matrix units.
    pub fn kraus_reconstruction_error(&self, kraus: &[CMat]) -> f64 {
        let k = self.k;
        let mut worst: f64 = 0.0;
        for p in 0..k {
            for q in 0..k {
                let e = matrix_unit(k, p, q);
                let mut acc = CMat::zeros(k, k);
                for op in kraus {
                    acc += op.adjoint() * &e * op;
                }
                worst = worst.max(max_abs_diff(&acc, &self.image_of_unit(p, q)));
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &CpMap) -> f64 {
        max_abs_diff(&self.choi, &other.choi)
    }
}

/// Normalized maximally entangled vector `k^{-1/2} Σ_i e_i ⊗ e_i` in `C^k ⊗ C^k`
/// (outer index first).
pub fn max_entangled(k: usize) -> CVec {
    let mut v = CVec::zeros(k * k);
    let s = 1.0 / (k as f64).sqrt();
    for i in 0..k {
        v[i * k + i] = real(s);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = DEFAULT_TOL;

    fn sorted_eigs(m: &CMat) -> Vec<f64> {
        hermitian_eigen(m).0
    }

    #[test]
    fn vectorization_stacks_columns() {
        let b = CMat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0].map(real));
        let v = vec_columns(&b);
        assert_eq!(v.as_slice(), &[1.0, 3.0, 2.0, 4.0].map(real));
        assert_eq!(unvec_columns(&v, 2), b);
    }

    #[test]
    fn choi_is_sum_of_vectorized_adjoint_kraus() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ops: Vec<CMat> = (0..2)
            .map(|_| sample::complex_matrix(&mut rng, 3, 3))
            .collect();
        let map = CpMap::from_kraus(3, ops.clone()).unwrap();
        let by_action = CpMap::from_fn(3, |a| {
            ops.iter()
                .fold(CMat::zeros(3, 3), |acc, op| acc + op.adjoint() * a * op)
        })
        .unwrap();
        assert!(map.max_abs_diff(&by_action) < 1e-12);
    }

    #[test]
    fn identity_choi_is_rank_one() {
        let id = CpMap::identity(2);
        let mut expected = CMat::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                expected[(i * 2 + i, j * 2 + j)] = crate::algebra::ONE;
            }
        }
        assert!(max_abs_diff(id.choi(), &expected) < 1e-15);
        let eigs = sorted_eigs(id.choi());
        for (got, want) in eigs.iter().zip([0.0, 0.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_map_choi_is_scaled_identity() {
        let k = 3;
        let map =
            CpMap::from_fn(k, |a| CMat::identity(k, k) * (a.trace() / real(k as f64))).unwrap();
        let expected = CMat::identity(k * k, k * k) * real(1.0 / k as f64);
        assert!(max_abs_diff(map.choi(), &expected) < 1e-15);
    }

    #[test]
    fn transpose_choi_is_swap() {
        let t = CpMap::transpose(2);
        let eigs = sorted_eigs(t.choi());
        for (got, want) in eigs.iter().zip([-1.0, 1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let report = t.is_cp(TOL);
        assert!(!report.is_psd());
        // The witness is the antisymmetric vector (e_0⊗e_1 - e_1⊗e_0)/√2.
        let w = report.witness.unwrap();
        assert!(w[0].norm() < 1e-12 && w[3].norm() < 1e-12);
        assert!((w[1] + w[2]).norm() < 1e-12);
    }

    #[test]
    fn round_trip_choi_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let map = sample::cp_map(&mut rng, 3, 2);
        let again = CpMap::from_fn(3, |a| map.apply_mat(a)).unwrap();
        assert!(map.max_abs_diff(&again) < 1e-12);
        let a = AlgElem::from_mat(sample::complex_matrix(&mut rng, 3, 3));
        let direct = map
            .stored_kraus()
            .unwrap()
            .iter()
            .fold(CMat::zeros(3, 3), |acc, op| {
                acc + op.adjoint() * a.matrix() * op
            });
        assert!(max_abs_diff(map.apply(&a).unwrap().matrix(), &direct) < 1e-12);
    }

    #[test]
    fn is_cp_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(CpMap::identity(3).is_cp(TOL).is_psd());
        let single = CpMap::from_kraus(2, vec![sample::complex_matrix(&mut rng, 2, 2)]).unwrap();
        assert!(single.is_cp(TOL).is_psd());
    }

    #[test]
    fn eta_minus_id_examples() {
        assert!(CpMap::scaled_identity(2, 2.0).eta_minus_id_cp(TOL).is_psd());
        let boundary = CpMap::identity(2).eta_minus_id_cp(TOL);
        assert!(boundary.is_psd());
        assert!(boundary.min_eigenvalue.abs() < 1e-12);
        let half = CpMap::scaled_identity(2, 0.5).eta_minus_id_cp(TOL);
        assert!(!half.is_psd());
        assert!((half.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn kraus_examples() {
        let ks = CpMap::identity(2).kraus_of(TOL).unwrap();
        assert_eq!(ks.len(), 1);
        assert!(max_abs_diff(&ks[0], &CMat::identity(2, 2)) < 1e-12);

        let psi = CpMap::scaled_identity(2, 3.0).minus_identity();
        let ks = psi.kraus_of(TOL).unwrap();
        assert_eq!(ks.len(), 1);
        let expected = CMat::identity(2, 2) * real(2f64.sqrt());
        assert!(max_abs_diff(&ks[0], &expected) < 1e-12);

        assert!(CpMap::zero(2).kraus_of(TOL).unwrap().is_empty());
    }

    #[test]
    fn kraus_round_trip_recovers_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for rank in 1..=3 {
            let map = sample::cp_map(&mut rng, 3, rank);
            let ks = map.kraus_of(TOL).unwrap();
            assert_eq!(ks.len(), rank);
            assert!(map.kraus_reconstruction_error(&ks) < 1e-9);
            let rebuilt = CpMap::from_kraus(3, ks).unwrap();
            assert!(rebuilt.max_abs_diff(&map) < 1e-9);
        }
    }

    #[test]
    fn kraus_of_rejects_non_cp() {
        match CpMap::transpose(2).kraus_of(TOL) {
            Err(Error::NotCompletelyPositive(report)) => assert!(report.witness.is_some()),
            other => panic!("expected NotCompletelyPositive, got {other:?}"),
        }
    }

    #[test]
    fn amplify_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let map = sample::cp_map(&mut rng, 2, 2);
        assert!(map.amplify(1).unwrap().max_abs_diff(&map) < 1e-12);
        assert!(matches!(map.amplify(0), Err(Error::OutOfRange { .. })));

        let id3 = CpMap::identity(2).amplify(3).unwrap();
        let a = sample::complex_matrix(&mut rng, 6, 6);
        assert!(max_abs_diff(&id3.apply_mat(&a), &a) < 1e-12);

        assert!(!CpMap::transpose(2).amplify(2).unwrap().is_cp(TOL).is_psd());
        assert!(map.amplify(2).unwrap().is_cp(TOL).is_psd());

        // Kraus-free path agrees with the Kraus path.
        let via_choi = CpMap::from_choi(2, map.choi().clone())
            .unwrap()
            .amplify(2)
            .unwrap();
        assert!(via_choi.max_abs_diff(&map.amplify(2).unwrap()) < 1e-12);
    }

    #[test]
    fn apply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = AlgElem::from_mat(sample::complex_matrix(&mut rng, 2, 2));
        assert!(CpMap::identity(2).apply(&a).unwrap().max_abs_diff(&a) < 1e-15);

        let ops: Vec<CMat> = (0..2)
            .map(|_| sample::complex_matrix(&mut rng, 2, 2))
            .collect();
        let map = CpMap::from_kraus(2, ops.clone()).unwrap();
        let sum = ops
            .iter()
            .fold(CMat::zeros(2, 2), |acc, op| acc + op.adjoint() * op);
        let got = map.apply(&AlgElem::identity(2)).unwrap();
        assert!(max_abs_diff(got.matrix(), &sum) < 1e-12);

        // η = ψ + id gives η(1) = ψ(1) + 1.
        let eta = map.plus_identity();
        let expected = &sum + CMat::identity(2, 2);
        let got = eta.apply(&AlgElem::identity(2)).unwrap();
        assert!(max_abs_diff(got.matrix(), &expected) < 1e-12);

        assert!(matches!(
            map.apply(&AlgElem::identity(3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn apply_is_star_compatible() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let map = sample::hermitian_choi_map(&mut rng, 3);
        let a = AlgElem::from_mat(sample::complex_matrix(&mut rng, 3, 3));
        let lhs = map.apply(&a.adjoint()).unwrap();
        let rhs = map.apply(&a).unwrap().adjoint();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn eta_minus_id_cp_implies_cp() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..30 {
            let eta = sample::hermitian_choi_map(&mut rng, 2);
            if eta.eta_minus_id_cp(TOL).is_psd() {
                assert!(eta.is_cp(TOL).is_psd());
            }
        }
    }

    #[test]
    fn max_entangled_projection_gives_scaled_choi() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let map = sample::hermitian_choi_map(&mut rng, 2);
        let w = max_entangled(2);
        let a = &w * w.adjoint();
        let amplified = map.apply_blockwise(&a, 2);
        assert!(max_abs_diff(&amplified, &(map.choi() * real(0.5))) < 1e-12);
    }
}
