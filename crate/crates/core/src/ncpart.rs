//! Non-crossing partitions of `{0, …, n-1}` and their nesting forests.
//!
//! Positions are zero-based throughout. Position `i` stands for the `i`-th
//! occurrence of the random variable in a word `X a_0 X a_1 … a_{n-2} X`.

use crate::error::{Error, Result};

/// Largest ground set accepted by [`enumerate_nc`].
pub const MAX_NC_SIZE: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NcPartition {
    n: usize,
    /// Increasing blocks, sorted by first element.
    blocks: Vec<Vec<usize>>,
}

impl NcPartition {
    /// Validates and canonicalizes a partition.
    pub fn new(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::Input("partition has an empty block".into()));
            }
            block.sort_unstable();
            for &x in block.iter() {
                if x >= n || seen[x] {
                    return Err(Error::Input(format!(
                        "element {x} is out of range or repeated"
                    )));
                }
                seen[x] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Input("blocks do not cover the ground set".into()));
        }
        if !is_noncrossing(&blocks) {
            return Err(Error::Input("partition is crossing".into()));
        }
        blocks.sort();
        Ok(NcPartition { n, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn is_one_block(&self) -> bool {
        self.blocks.len() == 1
    }
}

/// Brute-force crossing test: no `a < b < c < d` with `a, c` in one block and
/// `b, d` in another.
pub fn is_noncrossing(blocks: &[Vec<usize>]) -> bool {
    for (i, u) in blocks.iter().enumerate() {
        for (j, w) in blocks.iter().enumerate() {
            if i == j {
                continue;
            }
            for &a in u {
                for &c in u {
                    if a >= c {
                        continue;
                    }
                    for &b in w {
                        if a < b && b < c && w.iter().any(|&d| d > c) {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

/// All non-crossing partitions of `{0, …, n-1}`, sorted lexicographically by
/// their block lists.
pub fn enumerate_nc(n: usize) -> Result<Vec<NcPartition>> {
    if !(1..=MAX_NC_SIZE).contains(&n) {
        return Err(Error::OutOfRange {
            what: "non-crossing partition size n",
            value: n,
            bound: format!("1 <= n <= {MAX_NC_SIZE}"),
        });
    }
    let mut out: Vec<NcPartition> = enumerate_interval(0, n)
        .into_iter()
        .map(|mut blocks| {
            blocks.sort();
            NcPartition { n, blocks }
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Non-crossing partitions of the interval `[start, end)`, built from the
/// block containing `start`: its gaps and the tail after it are independent
/// sub-problems.
fn enumerate_interval(start: usize, end: usize) -> Vec<Vec<Vec<usize>>> {
    if start >= end {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let rest: Vec<usize> = (start + 1..end).collect();
    // Every subset of the remaining points may join the first block.
    for mask in 0u32..(1u32 << rest.len()) {
        let mut block = vec![start];
        block.extend(
            rest.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &x)| x),
        );
        let mut pieces: Vec<Vec<Vec<Vec<usize>>>> = Vec::new();
        for w in block.windows(2) {
            pieces.push(enumerate_interval(w[0] + 1, w[1]));
        }
        pieces.push(enumerate_interval(block[block.len() - 1] + 1, end));

        let mut combos: Vec<Vec<Vec<usize>>> = vec![vec![block.clone()]];
        for piece in &pieces {
            let mut next = Vec::with_capacity(combos.len() * piece.len());
            for base in &combos {
                for sub in piece {
                    let mut merged = base.clone();
                    merged.extend(sub.iter().cloned());
                    next.push(merged);
                }
            }
            combos = next;
        }
        out.extend(combos);
    }
    out
}

/// One block in a nesting forest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForestNode {
    /// Sorted positions of the block.
    pub elements: Vec<usize>,
    /// `children[g]` lists, left to right, the nodes nested directly between
    /// `elements[g]` and `elements[g + 1]`.
    pub children: Vec<Vec<usize>>,
    /// Enclosing node and gap index, `None` for outer blocks.
    pub parent: Option<(usize, usize)>,
}

/// Evaluation plan for a non-crossing partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestingForest {
    pub n: usize,
    pub nodes: Vec<ForestNode>,
    /// Outer blocks, left to right.
    pub roots: Vec<usize>,
}

impl NestingForest {
    /// Nodes in an order where every child precedes its parent.
    pub fn post_order(&self) -> Vec<usize> {
        fn visit(forest: &NestingForest, node: usize, out: &mut Vec<usize>) {
            for gap in &forest.nodes[node].children {
                for &child in gap {
                    visit(forest, child, out);
                }
            }
            out.push(node);
        }
        let mut out = Vec::with_capacity(self.nodes.len());
        for &root in &self.roots {
            visit(self, root, &mut out);
        }
        out
    }
}

/// Builds the nesting forest of `p`. Node `i` corresponds to `p.blocks()[i]`.
pub fn nesting_forest(p: &NcPartition) -> NestingForest {
    let blocks = p.blocks();
    let mut nodes: Vec<ForestNode> = blocks
        .iter()
        .map(|b| ForestNode {
            elements: b.clone(),
            children: vec![Vec::new(); b.len() - 1],
            parent: None,
        })
        .collect();
    let mut roots = Vec::new();
    // Blocks are sorted by first element, so children are discovered left to
    // right within each gap.
    for (i, b) in blocks.iter().enumerate() {
        let (lo, hi) = (b[0], b[b.len() - 1]);
        let parent = blocks
            .iter()
            .enumerate()
            .filter(|(j, c)| *j != i && c[0] < lo && hi < c[c.len() - 1])
            .min_by_key(|(_, c)| c[c.len() - 1] - c[0])
            .map(|(j, c)| (j, c.iter().filter(|&&x| x < lo).count() - 1));
        match parent {
            Some((j, gap)) => {
                nodes[i].parent = Some((j, gap));
                nodes[j].children[gap].push(i);
            }
            None => roots.push(i),
        }
    }
    NestingForest {
        n: p.n(),
        nodes,
        roots,
    }
}

/// Catalan number `C_n`.
pub fn catalan(n: usize) -> u64 {
    let mut c: u64 = 1;
    for i in 0..n as u64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn catalan_counts() {
        assert_eq!(enumerate_nc(1).unwrap().len(), 1);
        assert_eq!(enumerate_nc(3).unwrap().len(), 5);
        assert_eq!(enumerate_nc(4).unwrap().len(), 14);
        for n in 1..=10 {
            assert_eq!(enumerate_nc(n).unwrap().len() as u64, catalan(n), "n = {n}");
        }
    }

    #[test]
    fn out_of_range_sizes_rejected() {
        assert!(enumerate_nc(0).is_err());
        assert!(enumerate_nc(MAX_NC_SIZE + 1).is_err());
    }

    /// Every set partition of a small ground set, by restricted growth strings.
    fn all_set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
        fn go(i: usize, n: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
            if i == n {
                let count = labels.iter().max().map_or(0, |m| m + 1);
                let mut blocks = vec![Vec::new(); count];
                for (x, &l) in labels.iter().enumerate() {
                    blocks[l].push(x);
                }
                blocks.sort();
                out.push(blocks);
                return;
            }
            let next = labels.iter().max().map_or(0, |m| m + 1);
            for l in 0..=next {
                labels.push(l);
                go(i + 1, n, labels, out);
                labels.pop();
            }
        }
        let mut out = Vec::new();
        go(0, n, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn enumeration_matches_filtered_set_partitions() {
        for n in 1..=7 {
            let mut brute: Vec<Vec<Vec<usize>>> = all_set_partitions(n)
                .into_iter()
                .filter(|b| is_noncrossing(b))
                .collect();
            brute.sort();
            let got: Vec<Vec<Vec<usize>>> = enumerate_nc(n)
                .unwrap()
                .into_iter()
                .map(|p| p.blocks().to_vec())
                .collect();
            assert_eq!(got, brute, "n = {n}");
        }
    }

    #[test]
    fn enumeration_has_no_duplicates_and_is_sorted() {
        let parts = enumerate_nc(8).unwrap();
        let set: HashSet<_> = parts.iter().collect();
        assert_eq!(set.len(), parts.len());
        assert!(parts.windows(2).all(|w| w[0] < w[1]));
        assert!(parts.iter().all(|p| is_noncrossing(p.blocks())));
    }

    #[test]
    fn crossing_partition_rejected() {
        assert!(NcPartition::new(4, vec![vec![0, 2], vec![1, 3]]).is_err());
        assert!(NcPartition::new(4, vec![vec![0, 3], vec![1, 2]]).is_ok());
        assert!(NcPartition::new(3, vec![vec![0, 1]]).is_err());
    }

    #[test]
    fn forest_of_singletons() {
        let p = NcPartition::new(3, vec![vec![0], vec![1], vec![2]]).unwrap();
        let f = nesting_forest(&p);
        assert_eq!(f.roots, vec![0, 1, 2]);
        assert!(f
            .nodes
            .iter()
            .all(|n| n.parent.is_none() && n.children.is_empty()));
    }

    #[test]
    fn forest_of_nested_pair() {
        let p = NcPartition::new(4, vec![vec![0, 3], vec![1, 2]]).unwrap();
        let f = nesting_forest(&p);
        assert_eq!(f.roots, vec![0]);
        assert_eq!(f.nodes[0].children, vec![vec![1]]);
        assert_eq!(f.nodes[1].parent, Some((0, 0)));
        assert_eq!(f.post_order(), vec![1, 0]);
    }

    #[test]
    fn forest_of_one_block() {
        let p = NcPartition::new(5, vec![(0..5).collect()]).unwrap();
        let f = nesting_forest(&p);
        assert_eq!(f.roots, vec![0]);
        assert!(f.nodes[0].children.iter().all(Vec::is_empty));
    }

    #[test]
    fn forest_gap_indices() {
        // {0,2,5} with {1} in gap 0 and {3,4} in gap 1.
        let p = NcPartition::new(6, vec![vec![0, 2, 5], vec![1], vec![3, 4]]).unwrap();
        let f = nesting_forest(&p);
        assert_eq!(f.nodes[0].children, vec![vec![1], vec![2]]);
    }

    #[test]
    fn post_order_visits_each_block_once_with_valid_gaps() {
        for n in 1..=8 {
            for p in enumerate_nc(n).unwrap() {
                let f = nesting_forest(&p);
                let order = f.post_order();
                let mut sorted = order.clone();
                sorted.sort();
                assert_eq!(sorted, (0..p.blocks().len()).collect::<Vec<_>>());
                let pos: Vec<usize> = {
                    let mut pos = vec![0; order.len()];
                    for (i, &node) in order.iter().enumerate() {
                        pos[node] = i;
                    }
                    pos
                };
                for (i, node) in f.nodes.iter().enumerate() {
                    if let Some((parent, gap)) = node.parent {
                        let pe = &f.nodes[parent].elements;
                        assert!(gap + 1 < pe.len());
                        assert!(pe[gap] < node.elements[0]);
                        assert!(*node.elements.last().unwrap() < pe[gap + 1]);
                        assert!(pos[i] < pos[parent]);
                    }
                }
            }
        }
    }
}
