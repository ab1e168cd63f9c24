//! Mixed moments in the amalgamated free product `(B, E_B) *_A (C, E_C)`,
//! where `B = M_d` comes from a [`Realization`] and `C` is generated by
//! `λ(A)` and `v` on a [`FockSpace`].
//!
//! Only the freeness axiom is used. Letters are split as
//! `x = (x - E(x)) + E(x)` from left to right; each `E(x)` term merges its
//! two neighbours into one letter, and the fully centered alternating word
//! has expectation zero.

use std::rc::Rc;

use crate::algebra::{kron, AlgElem, CMat, DEFAULT_TOL};
use crate::cpmaps::CpMap;
use crate::error::{Error, Result};
use crate::fock::{apply_word, FockLetter, FockSpace, FockVector};
use crate::ovdist::{MultiMap, OvDistribution, Realization};

/// Largest order accepted by [`compressed_distribution`].
pub const MAX_COMPRESSED_ORDER: usize = 6;

/// An element of `C`, kept as an expression and evaluated on Fock vectors.
#[derive(Clone, Debug)]
pub enum CElem {
    Word(Vec<FockLetter>),
    /// Product, leftmost factor applied last.
    Prod(Vec<Rc<CElem>>),
    /// `inner - λ(mean)`.
    Centered {
        inner: Rc<CElem>,
        mean: AlgElem,
    },
}

impl CElem {
    pub fn word(letters: Vec<FockLetter>) -> Rc<CElem> {
        Rc::new(CElem::Word(letters))
    }

    fn lambda(a: AlgElem) -> Rc<CElem> {
        CElem::word(vec![FockLetter::Lambda(a)])
    }

    fn product(factors: &[&Rc<CElem>]) -> Rc<CElem> {
        let mut flat = Vec::new();
        for f in factors {
            match f.as_ref() {
                CElem::Prod(inner) => flat.extend(inner.iter().cloned()),
                _ => flat.push(Rc::clone(f)),
            }
        }
        Rc::new(CElem::Prod(flat))
    }

    /// Number of `v` and `v*` letters.
    fn shift_count(&self) -> usize {
        match self {
            CElem::Word(ls) => ls
                .iter()
                .filter(|l| !matches!(l, FockLetter::Lambda(_)))
                .count(),
            CElem::Prod(fs) => fs.iter().map(|f| f.shift_count()).sum(),
            CElem::Centered { inner, .. } => inner.shift_count(),
        }
    }

    fn apply(&self, f: &FockSpace, x: &FockVector) -> FockVector {
        match self {
            CElem::Word(ls) => apply_word(f, ls, x),
            CElem::Prod(fs) => fs.iter().rev().fold(x.clone(), |acc, g| g.apply(f, &acc)),
            CElem::Centered { inner, mean } => inner.apply(f, x).sub(&x.left_mul(mean)),
        }
    }
}

#[derive(Clone, Debug)]
pub enum MixedLetter {
    /// An element of `B = M_d`.
    B(CMat),
    C(Rc<CElem>),
    Scalar(AlgElem),
}

/// A product of letters in normal form: scalars absorbed, adjacent letters
/// from the same algebra merged, so tags alternate.
#[derive(Clone, Debug)]
pub struct MixedWord {
    letters: Vec<MixedLetter>,
}

impl MixedWord {
    pub fn new(letters: Vec<MixedLetter>) -> MixedWord {
        MixedWord {
            letters: normalize(letters),
        }
    }

    pub fn letters(&self) -> &[MixedLetter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

fn normalize(letters: Vec<MixedLetter>) -> Vec<MixedLetter> {
    let mut out: Vec<MixedLetter> = Vec::new();
    let mut pending: Option<AlgElem> = None;
    for letter in letters {
        let letter = match (pending.take(), letter) {
            (Some(a), MixedLetter::Scalar(b)) => {
                pending = Some(&a * &b);
                continue;
            }
            (None, MixedLetter::Scalar(b)) => {
                match out.pop() {
                    Some(prev) => out.push(times_scalar(prev, &b)),
                    None => pending = Some(b),
                }
                continue;
            }
            (Some(a), l) => scalar_times(&a, l),
            (None, l) => l,
        };
        match (out.pop(), letter) {
            (Some(MixedLetter::B(x)), MixedLetter::B(y)) => out.push(MixedLetter::B(x * y)),
            (Some(MixedLetter::C(x)), MixedLetter::C(y)) => {
                out.push(MixedLetter::C(CElem::product(&[&x, &y])))
            }
            (Some(prev), l) => {
                out.push(prev);
                out.push(l);
            }
            (None, l) => out.push(l),
        }
    }
    if let Some(a) = pending {
        out.push(MixedLetter::Scalar(a));
    }
    out
}

fn scalar_times(a: &AlgElem, l: MixedLetter) -> MixedLetter {
    match l {
        MixedLetter::C(c) => MixedLetter::C(CElem::product(&[&CElem::lambda(a.clone()), &c])),
        MixedLetter::B(x) => MixedLetter::B(embed_like(a, &x) * x),
        MixedLetter::Scalar(b) => MixedLetter::Scalar(a * &b),
    }
}

fn times_scalar(l: MixedLetter, a: &AlgElem) -> MixedLetter {
    match l {
        MixedLetter::C(c) => MixedLetter::C(CElem::product(&[&c, &CElem::lambda(a.clone())])),
        MixedLetter::B(x) => MixedLetter::B(&x * embed_like(a, &x)),
        MixedLetter::Scalar(b) => MixedLetter::Scalar(&b * a),
    }
}

/// `a ⊗ 1_p` sized to act on the B-letter `x`.
fn embed_like(a: &AlgElem, x: &CMat) -> CMat {
    let p = x.nrows() / a.k();
    kron(a.matrix(), &CMat::identity(p, p))
}

/// A letter of a word under evaluation.
#[derive(Clone)]
enum Piece {
    B(CMat),
    C(Rc<CElem>),
}

struct Evaluator<'a> {
    r: &'a Realization,
    f: &'a FockSpace,
    unit: FockVector,
}

impl Evaluator<'_> {
    fn expect(&self, x: &Piece) -> AlgElem {
        match x {
            Piece::B(m) => self.r.condexp(m),
            Piece::C(c) => self.unit.inner(&c.apply(self.f, &self.unit)),
        }
    }

    fn center(&self, x: &Piece, mean: &AlgElem) -> Piece {
        match x {
            Piece::B(m) => Piece::B(m - self.r.embed(mean)),
            Piece::C(c) => Piece::C(Rc::new(CElem::Centered {
                inner: Rc::clone(c),
                mean: mean.clone(),
            })),
        }
    }

    /// `left · e · right` for neighbours from the same algebra; either side
    /// may be absent.
    fn merge(&self, left: Option<&Piece>, e: &AlgElem, right: Option<&Piece>) -> Piece {
        match (left, right) {
            (Some(Piece::B(x)), Some(Piece::B(y))) => Piece::B(x * self.r.embed(e) * y),
            (Some(Piece::B(x)), None) => Piece::B(x * self.r.embed(e)),
            (None, Some(Piece::B(y))) => Piece::B(self.r.embed(e) * y),
            (Some(Piece::C(x)), Some(Piece::C(y))) => {
                Piece::C(CElem::product(&[x, &CElem::lambda(e.clone()), y]))
            }
            (Some(Piece::C(x)), None) => Piece::C(CElem::product(&[x, &CElem::lambda(e.clone())])),
            (None, Some(Piece::C(y))) => Piece::C(CElem::product(&[&CElem::lambda(e.clone()), y])),
            _ => unreachable!("merging needs neighbours from one algebra"),
        }
    }

    /// `E(w)` for an alternating word whose first `centered` letters already
    /// have expectation zero.
    fn eval(&self, w: &[Piece], centered: usize) -> AlgElem {
        let k = self.f.k();
        match w.len() {
            0 => return AlgElem::identity(k),
            1 => {
                return if centered == 0 {
                    self.expect(&w[0])
                } else {
                    AlgElem::zero(k)
                }
            }
            _ => {}
        }
        let m = w.len();
        let mut cur: Vec<Piece> = w.to_vec();
        let mut total = AlgElem::zero(k);
        for j in centered..m {
            let e = self.expect(&cur[j]);
            // An exactly zero mean contributes an exactly zero term.
            if e.norm_max() > 0.0 {
                let left = j.checked_sub(1).map(|i| &cur[i]);
                let right = cur.get(j + 1);
                let merged = self.merge(left, &e, right);
                let start = j.saturating_sub(1);
                let mut next: Vec<Piece> = cur[..start].to_vec();
                next.push(merged);
                next.extend(cur.iter().skip(j + 2).cloned());
                total += &self.eval(&next, start);
            }
            cur[j] = self.center(&cur[j], &e);
        }
        total
    }
}

/// `E(w)` by the centering recursion. Needs the Fock depth to cover every
/// C-letter that can arise, i.e. `1 + ⌊V/2⌋` for `V` occurrences of `v`
/// and `v*` in the whole word.
pub fn evaluate(w: &MixedWord, r: &Realization, f: &FockSpace) -> Result<AlgElem> {
    if r.k() != f.k() {
        return Err(Error::Dimension(format!(
            "realization is over M_{}, Fock space over M_{}",
            r.k(),
            f.k()
        )));
    }
    let mut shifts = 0;
    let mut pieces = Vec::with_capacity(w.len());
    let mut scalar = None;
    for letter in w.letters() {
        match letter {
            MixedLetter::B(x) => {
                if x.shape() != (r.d(), r.d()) {
                    return Err(Error::Dimension(format!(
                        "B-letter is {}x{}, realization has d = {}",
                        x.nrows(),
                        x.ncols(),
                        r.d()
                    )));
                }
                pieces.push(Piece::B(x.clone()));
            }
            MixedLetter::C(c) => {
                shifts += c.shift_count();
                pieces.push(Piece::C(Rc::clone(c)));
            }
            MixedLetter::Scalar(a) => scalar = Some(a.clone()),
        }
    }
    if let Some(a) = scalar {
        // Normal form keeps a scalar only when it is the whole word.
        return Ok(a);
    }
    let required = (1 + shifts / 2).max(2);
    if f.depth() < required {
        return Err(Error::DepthTooSmall {
            depth: f.depth(),
            required,
        });
    }
    let ev = Evaluator {
        r,
        f,
        unit: FockVector::unit(f),
    };
    Ok(ev.eval(&pieces, 0))
}

/// The word `v* X v a_1 v* X v … a_{n-1} v* X v` as alternating letters.
fn compressed_word(x: &CMat, args: &[AlgElem]) -> MixedWord {
    use FockLetter::{Lambda, VStar, V};
    let mut letters = vec![MixedLetter::C(CElem::word(vec![VStar]))];
    for a in args {
        letters.push(MixedLetter::B(x.clone()));
        letters.push(MixedLetter::C(CElem::word(vec![
            V,
            Lambda(a.clone()),
            VStar,
        ])));
    }
    letters.push(MixedLetter::B(x.clone()));
    letters.push(MixedLetter::C(CElem::word(vec![V])));
    MixedWord::new(letters)
}

/// Distribution of `X̂ = v* X v`, with `X` from `r` and `v` from the Fock
/// space of `η - id`, computed by [`evaluate`].
pub fn compressed_distribution(
    r: &Realization,
    eta: &CpMap,
    order: usize,
) -> Result<OvDistribution> {
    compressed_distribution_at_depth(r, eta, order, order + 1)
}

/// [`compressed_distribution`] on a Fock space truncated at `depth`, which
/// must be at least `order + 1`.
pub fn compressed_distribution_at_depth(
    r: &Realization,
    eta: &CpMap,
    order: usize,
    depth: usize,
) -> Result<OvDistribution> {
    if order == 0 || order > MAX_COMPRESSED_ORDER {
        return Err(Error::OutOfRange {
            what: "compressed order",
            value: order,
            bound: format!("1..={MAX_COMPRESSED_ORDER}"),
        });
    }
    if eta.k() != r.k() {
        return Err(Error::Dimension(format!(
            "realization is over M_{}, map acts on M_{}",
            r.k(),
            eta.k()
        )));
    }
    let k = r.k();
    if depth < order + 1 {
        return Err(Error::DepthTooSmall {
            depth,
            required: order + 1,
        });
    }
    let f = FockSpace::for_eta(eta, depth, DEFAULT_TOL)?;
    let mut moments = Vec::with_capacity(order);
    for n in 1..=order {
        let mut failure = None;
        let m = MultiMap::from_fn(k, n - 1, |tuple| {
            let args: Vec<AlgElem> = tuple.iter().map(|&i| AlgElem::basis(k, i)).collect();
            match evaluate(&compressed_word(r.x(), &args), r, &f) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    AlgElem::zero(k)
                }
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        moments.push(m);
    }
    // Rounding can leave the tables slightly off Hermitian symmetry.
    let moments = moments.iter().map(MultiMap::hermitian_part).collect();
    OvDistribution::new(k, moments, "compressed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ovdist::{cumulants_from_moments, eta_power, moments_from_realization};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use FockLetter::{Lambda, VStar, V};

    fn setup(seed: u64) -> (Realization, CpMap, FockSpace) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = sample::realization(&mut rng, 2, 2);
        let eta = sample::cp_map(&mut rng, 2, 2).plus_identity();
        let f = FockSpace::for_eta(&eta, 5, DEFAULT_TOL).unwrap();
        (r, eta, f)
    }

    #[test]
    fn normal_form_alternates() {
        let x = CMat::identity(4, 4);
        let a = AlgElem::identity(2);
        let w = MixedWord::new(vec![
            MixedLetter::Scalar(a.clone()),
            MixedLetter::B(x.clone()),
            MixedLetter::B(x.clone()),
            MixedLetter::Scalar(a.clone()),
            MixedLetter::C(CElem::word(vec![V])),
            MixedLetter::C(CElem::word(vec![VStar])),
            MixedLetter::B(x),
            MixedLetter::Scalar(a),
        ]);
        assert_eq!(w.len(), 3);
        assert!(matches!(w.letters()[1], MixedLetter::C(_)));
        assert!(MixedWord::new(Vec::new()).is_empty());
    }

    #[test]
    fn marginals() {
        let (r, eta, f) = setup(80);
        let w = MixedWord::new(vec![MixedLetter::B(r.x().clone())]);
        let e = evaluate(&w, &r, &f).unwrap();
        assert!(e.max_abs_diff(&r.condexp(r.x())) < 1e-14);
        for i in 0..4 {
            let a = AlgElem::basis(2, i);
            let w = MixedWord::new(vec![MixedLetter::C(CElem::word(vec![
                VStar,
                Lambda(a.clone()),
                V,
            ]))]);
            let e = evaluate(&w, &r, &f).unwrap();
            assert!(e.max_abs_diff(&eta.apply(&a).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn centered_pair_vanishes() {
        let (r, _, f) = setup(81);
        let ex = r.condexp(r.x());
        let vvs = CElem::word(vec![V, VStar]);
        let w = MixedWord::new(vec![MixedLetter::C(Rc::clone(&vvs))]);
        let evv = evaluate(&w, &r, &f).unwrap();
        let centered = MixedWord::new(vec![
            MixedLetter::B(r.x() - r.embed(&ex)),
            MixedLetter::C(Rc::new(CElem::Centered {
                inner: vvs,
                mean: evv,
            })),
        ]);
        assert!(evaluate(&centered, &r, &f).unwrap().norm_max() < 1e-14);
    }

    #[test]
    fn single_non_scalar_letter_reduces_to_marginal() {
        let (r, _, f) = setup(82);
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let a = AlgElem::from_mat(sample::complex_matrix(&mut rng, 2, 2));
        let b = AlgElem::from_mat(sample::complex_matrix(&mut rng, 2, 2));
        let y = sample::hermitian(&mut rng, 4);
        let w = MixedWord::new(vec![
            MixedLetter::Scalar(a.clone()),
            MixedLetter::B(y.clone()),
            MixedLetter::Scalar(b.clone()),
        ]);
        let want = &(&a * &r.condexp(&y)) * &b;
        assert!(evaluate(&w, &r, &f).unwrap().max_abs_diff(&want) < 1e-13);
    }

    #[test]
    fn bilinear_in_scalars() {
        let (r, _, f) = setup(84);
        let mut rng = ChaCha8Rng::seed_from_u64(85);
        let a = AlgElem::from_mat(sample::complex_matrix(&mut rng, 2, 2));
        let b = AlgElem::from_mat(sample::complex_matrix(&mut rng, 2, 2));
        let c = AlgElem::from_mat(sample::complex_matrix(&mut rng, 2, 2));
        let core = vec![
            MixedLetter::C(CElem::word(vec![VStar])),
            MixedLetter::B(r.x().clone()),
            MixedLetter::C(CElem::word(vec![V, Lambda(c), VStar])),
            MixedLetter::B(r.x().clone()),
            MixedLetter::C(CElem::word(vec![V])),
        ];
        let plain = evaluate(&MixedWord::new(core.clone()), &r, &f).unwrap();
        let mut wrapped = vec![MixedLetter::Scalar(a.clone())];
        wrapped.extend(core);
        wrapped.push(MixedLetter::Scalar(b.clone()));
        let got = evaluate(&MixedWord::new(wrapped), &r, &f).unwrap();
        assert!(got.max_abs_diff(&(&(&a * &plain) * &b)) < 1e-12);
    }

    #[test]
    fn first_two_compressed_moments() {
        let (r, eta, _) = setup(86);
        let d = moments_from_realization(&r, 2).unwrap();
        let cums = cumulants_from_moments(&d).unwrap();
        let hat = compressed_distribution(&r, &eta, 2).unwrap();
        let w1 = eta.apply(cums[0].at_index(0)).unwrap();
        assert!(hat.moment(1).at_index(0).max_abs_diff(&w1) < 1e-12);
        for i in 0..4 {
            let a = AlgElem::basis(2, i);
            let want = &eta.apply(cums[1].at(&[i])).unwrap() + &(&(&w1 * &a) * &w1);
            assert!(hat.moment(2).at(&[i]).max_abs_diff(&want) < 1e-12);
        }
    }

    #[test]
    fn identity_map_keeps_the_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(87);
        let r = sample::realization(&mut rng, 2, 2);
        let hat = compressed_distribution(&r, &CpMap::identity(2), 4).unwrap();
        let d = moments_from_realization(&r, 4).unwrap();
        assert!(hat.max_abs_diff(&d) < 1e-9);
    }

    #[test]
    fn agrees_with_cumulant_route() {
        let (r, eta, _) = setup(88);
        let hat = compressed_distribution(&r, &eta, 3).unwrap();
        let want = eta_power(&moments_from_realization(&r, 3).unwrap(), &eta).unwrap();
        assert!(hat.max_abs_diff(&want) < 1e-9);
    }

    #[test]
    fn scalar_case_matches_free_power() {
        let x = CMat::from_diagonal(
            &vec![crate::algebra::real(-1.0), crate::algebra::real(1.0)].into(),
        );
        let r = Realization::normalized_trace(1, 2, x).unwrap();
        let eta = CpMap::scaled_identity(1, 2.0);
        let hat = compressed_distribution(&r, &eta, 4).unwrap();
        let m = crate::ovdist::scalar::moment_values(&hat);
        // Bernoulli ⊞ 2: cumulants 0, 2, 0, -2 give moments 0, 2, 0, 2*2^2 - 2 = 6.
        for (got, want) in m.iter().zip([0.0, 2.0, 0.0, 6.0]) {
            assert!((got - want).abs() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn guards() {
        let (r, eta, f) = setup(89);
        assert!(matches!(
            compressed_distribution(&r, &eta, 7),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            compressed_distribution(&r, &CpMap::scaled_identity(2, 0.5), 2),
            Err(Error::NotCompletelyPositive(_))
        ));
        let shallow = FockSpace::for_eta(&eta, 2, DEFAULT_TOL).unwrap();
        let w = compressed_word(r.x(), &[AlgElem::identity(2), AlgElem::identity(2)]);
        assert!(matches!(
            evaluate(&w, &r, &shallow),
            Err(Error::DepthTooSmall { required: 4, .. })
        ));
        assert!(evaluate(&w, &r, &f).is_ok());
        assert!(matches!(
            compressed_distribution_at_depth(&r, &eta, 3, 3),
            Err(Error::DepthTooSmall { required: 4, .. })
        ));
        let deeper = compressed_distribution_at_depth(&r, &eta, 2, 5).unwrap();
        assert!(deeper.max_abs_diff(&compressed_distribution(&r, &eta, 2).unwrap()) < 1e-12);
    }
}
