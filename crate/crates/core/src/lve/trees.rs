use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vertex count accepted by [`enumerate_trees`] (8^6 trees).
pub const MAX_TREE_VERTICES: usize = 8;

/// Labeled tree on vertices `0..n`, stored as an undirected edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tree {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Tree {
    /// Builds a tree, checking that the edges span `0..n` without cycles.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 || edges.len() != n - 1 {
            return Err(Error::Contract(format!(
                "a tree on {n} vertices needs {} edges, got {}",
                n.saturating_sub(1),
                edges.len()
            )));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(u, v) in &edges {
            if u >= n || v >= n || u == v {
                return Err(Error::Contract(format!("bad edge ({u}, {v})")));
            }
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return Err(Error::Contract(format!("edge ({u}, {v}) closes a cycle")));
            }
            parent[ru] = rv;
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    /// Neighbours of every vertex together with the index of the connecting edge.
    pub(crate) fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (k, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((v, k));
            adj[v].push((u, k));
        }
        adj
    }

    pub fn orientation_count(&self) -> usize {
        1 << self.edges.len()
    }
}

/// Decodes a Prüfer sequence over `0..n` (length `n - 2`).
pub fn decode_prufer(n: usize, seq: &[usize]) -> Tree {
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for &x in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf always exists");
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    if rest.len() == 2 {
        edges.push((rest[0], rest[1]));
    }
    Tree { n, edges }
}

/// All `n^{n-2}` labeled trees on `n` vertices, in Prüfer-sequence order.
/// `n = 1` gives the single tree with no edges.
pub fn enumerate_trees(n: usize) -> Result<Vec<Tree>> {
    if n == 0 {
        return Err(Error::Contract("trees need at least one vertex".into()));
    }
    if n > MAX_TREE_VERTICES {
        return Err(Error::Size(format!(
            "tree enumeration capped at {MAX_TREE_VERTICES} vertices, asked for {n}"
        )));
    }
    if n == 1 {
        return Ok(vec![Tree { n: 1, edges: vec![] }]);
    }
    let len = n - 2;
    let total = n.pow(len as u32);
    let mut out = Vec::with_capacity(total);
    let mut seq = vec![0usize; len];
    for code in 0..total {
        let mut rest = code;
        for slot in seq.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        out.push(decode_prufer(n, &seq));
    }
    Ok(out)
}

/// A tree with a direction on every edge. The tail of an edge carries a
/// `d/dphibar` derivative and the head a `d/dphi` derivative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientedTree {
    pub n: usize,
    /// `(tail, head)` pairs.
    pub edges: Vec<(usize, usize)>,
    pub in_degree: Vec<usize>,
    pub out_degree: Vec<usize>,
}

impl OrientedTree {
    /// Derivative load `in + out` at each vertex.
    pub fn loads(&self) -> Vec<usize> {
        self.in_degree
            .iter()
            .zip(&self.out_degree)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Orients edge `k` of `tree` as stored when bit `k` of `index` is clear and
/// reversed when it is set.
pub fn orient_tree(tree: &Tree, index: usize) -> Result<OrientedTree> {
    if index >= tree.orientation_count() {
        return Err(Error::Contract(format!(
            "orientation index {index} out of range for {} edges",
            tree.edges.len()
        )));
    }
    let mut in_degree = vec![0; tree.n];
    let mut out_degree = vec![0; tree.n];
    let edges = tree
        .edges
        .iter()
        .enumerate()
        .map(|(k, &(u, v))| {
            let (tail, head) = if index >> k & 1 == 0 { (u, v) } else { (v, u) };
            out_degree[tail] += 1;
            in_degree[head] += 1;
            (tail, head)
        })
        .collect();
    Ok(OrientedTree {
        n: tree.n,
        edges,
        in_degree,
        out_degree,
    })
}
