//! Moment ↔ cumulant transforms via nested evaluation over non-crossing
//! partitions.
//!
//! For a partition `π` of the positions of `X a_0 X a_1 … a_{n-2} X`, the
//! value `κ_π[a_0, …, a_{n-2}]` multiplies its outer blocks left to right,
//! separated by the argument following each block. A block
//! `{v_0 < … < v_{s-1}}` contributes `ω_s(b_0, …, b_{s-2})`, where `b_g` is
//! `a_{v_g}` when the gap is empty and otherwise
//! `a_{v_g} · (nested value of the gap) · a_{v_{g+1}-1}`. The operator-valued
//! coefficients do not commute, so no Möbius inversion is involved: cumulants
//! are peeled off one order at a time.

use crate::algebra::AlgElem;
use crate::error::{Error, Result};
use crate::ncpart::{enumerate_nc, nesting_forest, NestingForest};

use super::multimap::MultiMap;
use super::OvDistribution;

/// Evaluates `κ_π[args]`. `block_value(positions, block_args)` supplies the
/// cumulant of one block on its (already nested) arguments.
pub(crate) fn eval_forest<F>(
    forest: &NestingForest,
    args: &[AlgElem],
    k: usize,
    block_value: &F,
) -> AlgElem
where
    F: Fn(&[usize], &[AlgElem]) -> AlgElem,
{
    debug_assert_eq!(args.len() + 1, forest.n);
    let mut values: Vec<Option<AlgElem>> = vec![None; forest.nodes.len()];
    for node_id in forest.post_order() {
        let node = &forest.nodes[node_id];
        let block_args: Vec<AlgElem> = node
            .elements
            .windows(2)
            .zip(&node.children)
            .map(|(w, children)| {
                if children.is_empty() {
                    args[w[0]].clone()
                } else {
                    let inner = sequence_value(forest, children, args, &values, k);
                    &(&args[w[0]] * &inner) * &args[w[1] - 1]
                }
            })
            .collect();
        values[node_id] = Some(block_value(&node.elements, &block_args));
    }
    sequence_value(forest, &forest.roots, args, &values, k)
}

/// Product `val(c_0) a_{max c_0} val(c_1) … val(c_last)` over adjacent
/// sibling blocks.
fn sequence_value(
    forest: &NestingForest,
    siblings: &[usize],
    args: &[AlgElem],
    values: &[Option<AlgElem>],
    k: usize,
) -> AlgElem {
    let mut acc = AlgElem::identity(k);
    for (i, &s) in siblings.iter().enumerate() {
        let v = values[s].as_ref().expect("children are evaluated first");
        acc = &acc * v;
        if i + 1 < siblings.len() {
            let last = *forest.nodes[s]
                .elements
                .last()
                .expect("blocks are nonempty");
            acc = &acc * &args[last];
        }
    }
    acc
}

pub(crate) fn forests(n: usize) -> Result<Vec<(bool, NestingForest)>> {
    Ok(enumerate_nc(n)?
        .iter()
        .map(|p| (p.is_one_block(), nesting_forest(p)))
        .collect())
}

fn check_family(cums: &[MultiMap]) -> Result<usize> {
    let k = cums
        .first()
        .map(MultiMap::k)
        .ok_or_else(|| Error::Input("empty cumulant family".into()))?;
    for (i, c) in cums.iter().enumerate() {
        if c.arity() != i || c.k() != k {
            return Err(Error::Dimension(format!(
                "cumulant {} must have arity {i} over M_{k}, got arity {} over M_{}",
                i + 1,
                c.arity(),
                c.k()
            )));
        }
    }
    Ok(k)
}

/// `M_n = Σ_{π ∈ NC(n)} κ_π` for `n = 1..=order`. `cums[i]` is the cumulant
/// `ω_{i+1}` of arity `i`.
pub fn moments_from_cumulants(cums: &[MultiMap], order: usize) -> Result<OvDistribution> {
    let k = check_family(cums)?;
    if cums.len() < order {
        return Err(Error::Input(format!(
            "need cumulants up to order {order}, got {}",
            cums.len()
        )));
    }
    let block_value = |positions: &[usize], block_args: &[AlgElem]| -> AlgElem {
        cums[positions.len() - 1].eval(block_args)
    };
    let mut moments = Vec::with_capacity(order);
    for n in 1..=order {
        let plans = forests(n)?;
        let m = MultiMap::from_fn(k, n - 1, |tuple| {
            let args: Vec<AlgElem> = tuple.iter().map(|&i| AlgElem::basis(k, i)).collect();
            let mut acc = AlgElem::zero(k);
            for (_, forest) in &plans {
                acc += &eval_forest(forest, &args, k, &block_value);
            }
            acc
        })?;
        moments.push(m);
    }
    OvDistribution::new(k, moments, "from cumulants")
}

/// Inverse of [`moments_from_cumulants`]:
/// `ω_n = M_n - Σ_{π ≠ 1_n} κ_π`, using only lower-order cumulants.
pub fn cumulants_from_moments(d: &OvDistribution) -> Result<Vec<MultiMap>> {
    let k = d.k();
    let mut cums: Vec<MultiMap> = Vec::with_capacity(d.order());
    for n in 1..=d.order() {
        let plans = forests(n)?;
        let moment = d.moment(n);
        let lower = &cums;
        let block_value = |positions: &[usize], block_args: &[AlgElem]| -> AlgElem {
            lower[positions.len() - 1].eval(block_args)
        };
        let c = MultiMap::from_fn(k, n - 1, |tuple| {
            let args: Vec<AlgElem> = tuple.iter().map(|&i| AlgElem::basis(k, i)).collect();
            let mut acc = moment.at(tuple).clone();
            for (one_block, forest) in &plans {
                if !one_block {
                    acc = &acc - &eval_forest(forest, &args, k, &block_value);
                }
            }
            acc
        })?;
        cums.push(c);
    }
    Ok(cums)
}
