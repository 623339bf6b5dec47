//! Core domain types: graphs, the linear SEM parameterization, orderings,
//! data matrices and noise families.
//!
//! Node indices are 0-based everywhere.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A directed acyclic graph stored as sorted parent lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
}

impl Dag {
    /// Builds a DAG from per-node parent lists. Lists are sorted here; duplicates,
    /// self-loops, out-of-range indices and cycles are rejected.
    pub fn new(mut parents: Vec<Vec<usize>>) -> Result<Self> {
        let p = parents.len();
        if p == 0 {
            return Err(Error::InvalidParameter("a DAG needs at least one node".into()));
        }
        for (k, pa) in parents.iter_mut().enumerate() {
            pa.sort_unstable();
            for w in pa.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::DuplicateParent { node: k, parent: w[0] });
                }
            }
            for &j in pa.iter() {
                if j >= p {
                    return Err(Error::NodeOutOfRange { index: j, p });
                }
                if j == k {
                    return Err(Error::SelfLoop(k));
                }
            }
        }
        let dag = Dag { parents };
        if dag.kahn_order().is_none() {
            return Err(Error::Cyclic);
        }
        Ok(dag)
    }

    /// Graph with `p` nodes and no edges.
    pub fn empty(p: usize) -> Result<Self> {
        Dag::new(vec![Vec::new(); p])
    }

    /// Builds a DAG from `(from, to)` pairs.
    pub fn from_edges(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![Vec::new(); p];
        for &(from, to) in edges {
            if to >= p {
                return Err(Error::NodeOutOfRange { index: to, p });
            }
            parents[to].push(from);
        }
        Dag::new(parents)
    }

    pub fn p(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, k: usize) -> &[usize] {
        &self.parents[k]
    }

    pub fn parent_lists(&self) -> &[Vec<usize>] {
        &self.parents
    }

    /// Children lists, obtained by inverting the parent lists. Sorted ascending.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.p()];
        for (k, pa) in self.parents.iter().enumerate() {
            for &j in pa {
                ch[j].push(k);
            }
        }
        ch
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Edges as `(from, to)` pairs, grouped by child.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(k, pa)| pa.iter().map(move |&j| (j, k)))
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    /// A topological ordering found by Kahn's algorithm (smallest ready index first).
    pub fn topological_order(&self) -> Ordering {
        Ordering {
            perm: self.kahn_order().expect("acyclicity is checked at construction"),
        }
    }

    fn kahn_order(&self) -> Option<Vec<usize>> {
        let p = self.p();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let children = self.children();
        let mut ready: VecDeque<usize> = (0..p).filter(|&k| indeg[k] == 0).collect();
        let mut out = Vec::with_capacity(p);
        while let Some(j) = ready.pop_front() {
            out.push(j);
            for &k in &children[j] {
                indeg[k] -= 1;
                if indeg[k] == 0 {
                    ready.push_back(k);
                }
            }
        }
        (out.len() == p).then_some(out)
    }
}

/// Parametric error family for the structural noise terms.
///
/// `Gaussian` exists only as a reference density: it is used for negative
/// controls and held-out likelihood comparisons, never for ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseFamily {
    Laplace,
    Logistic,
    ScaledT { df: f64 },
    Gaussian,
}

impl NoiseFamily {
    pub fn scaled_t(df: f64) -> Result<Self> {
        let fam = NoiseFamily::ScaledT { df };
        fam.validate()?;
        Ok(fam)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseFamily::ScaledT { df } if !(df > 2.0 && df.is_finite()) => Err(
                Error::InvalidParameter(format!("scaled-t needs finite df > 2, got {df}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            NoiseFamily::Laplace => "laplace",
            NoiseFamily::Logistic => "logistic",
            NoiseFamily::ScaledT { .. } => "scaled-t",
            NoiseFamily::Gaussian => "gaussian",
        }
    }

    pub fn df(&self) -> Option<f64> {
        match *self {
            NoiseFamily::ScaledT { df } => Some(df),
            _ => None,
        }
    }

    /// Variance of the noise at scale `theta`.
    pub fn variance(&self, theta: f64) -> f64 {
        let t2 = theta * theta;
        match *self {
            NoiseFamily::Laplace => 2.0 * t2,
            NoiseFamily::Logistic => std::f64::consts::PI.powi(2) / 3.0 * t2,
            NoiseFamily::ScaledT { df } => t2 * df / (df - 2.0),
            NoiseFamily::Gaussian => t2,
        }
    }

    /// Parses `laplace`, `logistic`, `gaussian` or `scaled-t:<df>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "laplace" => Ok(NoiseFamily::Laplace),
            "logistic" => Ok(NoiseFamily::Logistic),
            "gaussian" => Ok(NoiseFamily::Gaussian),
            _ => {
                let df = s
                    .strip_prefix("scaled-t:")
                    .and_then(|d| d.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown noise family `{s}`")))?;
                NoiseFamily::scaled_t(df)
            }
        }
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseFamily::ScaledT { df } => write!(f, "scaled-t:{df}"),
            other => f.write_str(other.tag()),
        }
    }
}

/// A DAG together with edge weights, the noise family and per-node noise scales.
///
/// Weights are stored column-sparse: `weights[k][i]` is `B[parents(k)[i]][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDag {
    dag: Dag,
    weights: Vec<Vec<f64>>,
    family: NoiseFamily,
    scales: Vec<f64>,
}

impl WeightedDag {
    pub fn new(dag: Dag, weights: Vec<Vec<f64>>, family: NoiseFamily, scales: Vec<f64>) -> Result<Self> {
        let p = dag.p();
        family.validate()?;
        if weights.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: weights.len() });
        }
        if scales.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: scales.len() });
        }
        for (k, w) in weights.iter().enumerate() {
            if w.len() != dag.parents(k).len() {
                return Err(Error::DimensionMismatch { expected: dag.parents(k).len(), found: w.len() });
            }
            if let Some(bad) = w.iter().find(|x| **x == 0.0 || !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "edge weight into node {k} must be finite and nonzero, got {bad}"
                )));
            }
        }
        if let Some((k, s)) = scales.iter().enumerate().find(|(_, s)| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(format!("scale of node {k} must be positive, got {s}")));
        }
        Ok(WeightedDag { dag, weights, family, scales })
    }

    /// Builds from `(from, to, weight)` triples.
    pub fn from_weighted_edges(
        p: usize,
        edges: &[(usize, usize, f64)],
        family: NoiseFamily,
        scales: Vec<f64>,
    ) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = edges.iter().map(|&(j, k, _)| (j, k)).collect();
        let dag = Dag::from_edges(p, &pairs)?;
        let mut weights: Vec<Vec<f64>> = dag.parent_lists().iter().map(|pa| vec![0.0; pa.len()]).collect();
        for &(j, k, w) in edges {
            let i = dag.parents(k).binary_search(&j).expect("edge present in dag");
            weights[k][i] = w;
        }
        WeightedDag::new(dag, weights, family, scales)
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn p(&self) -> usize {
        self.dag.p()
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Parent weights of node `k`, aligned with `dag().parents(k)`.
    pub fn parent_weights(&self, k: usize) -> &[f64] {
        &self.weights[k]
    }

    /// `B[j][k]`, zero when `j` is not a parent of `k`.
    pub fn weight(&self, j: usize, k: usize) -> f64 {
        match self.dag.parents(k).binary_search(&j) {
            Ok(i) => self.weights[k][i],
            Err(_) => 0.0,
        }
    }

    pub fn weighted_edges(&self) -> Vec<(usize, usize, f64)> {
        self.dag
            .parent_lists()
            .iter()
            .enumerate()
            .flat_map(|(k, pa)| pa.iter().zip(&self.weights[k]).map(move |(&j, &w)| (j, k, w)))
            .collect()
    }

    /// Dense row-major `B` (row = source, column = target).
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let p = self.p();
        let mut b = vec![vec![0.0; p]; p];
        for (j, k, w) in self.weighted_edges() {
            b[j][k] = w;
        }
        b
    }
}

/// Sparse square matrix with sorted `(column, value)` pairs per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn p(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, k: usize) -> &[(usize, f64)] {
        &self.rows[k]
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        match self.rows[k].binary_search_by_key(&j, |e| e.0) {
            Ok(i) => self.rows[k][i].1,
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let p = self.p();
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![0.0; p];
                for &(j, v) in r {
                    d[j] = v;
                }
                d
            })
            .collect()
    }
}

/// `M = (I - B)^{-T}`, so that `X = M ε`. Row `k` holds the loadings of `X_k` on
/// the noise terms of its ancestors and itself.
///
/// Computed by forward substitution in topological order:
/// `M[k] = e_k + Σ_{j ∈ PA_k} B[j][k] M[j]`. The diagonal is exactly 1.
pub fn mixing_matrix(w: &WeightedDag) -> SparseRows {
    let p = w.p();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
    let mut acc = vec![0.0; p];
    let mut seen = vec![false; p];
    let mut touched: Vec<usize> = Vec::new();
    for k in w.dag().topological_order().perm {
        for (&j, &b) in w.dag().parents(k).iter().zip(w.parent_weights(k)) {
            for &(a, m) in &rows[j] {
                if !seen[a] {
                    seen[a] = true;
                    touched.push(a);
                }
                acc[a] += b * m;
            }
        }
        touched.sort_unstable();
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(touched.len() + 1);
        for &a in &touched {
            row.push((a, acc[a]));
            acc[a] = 0.0;
            seen[a] = false;
        }
        touched.clear();
        let pos = row.partition_point(|e| e.0 < k);
        row.insert(pos, (k, 1.0));
        rows[k] = row;
    }
    SparseRows { rows }
}

/// A permutation of `0..p`; `perm[t]` is the node placed at position `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Ordering {
    perm: Vec<usize>,
}

impl Ordering {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let p = perm.len();
        let mut seen = vec![false; p];
        for &k in &perm {
            if k >= p || seen[k] {
                return Err(Error::NotAPermutation(p));
            }
            seen[k] = true;
        }
        Ok(Ordering { perm })
    }

    pub fn identity(p: usize) -> Self {
        Ordering { perm: (0..p).collect() }
    }

    pub fn p(&self) -> usize {
        self.perm.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    /// Position of each node: `positions()[k] = t` iff `perm[t] = k`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.perm.len()];
        for (t, &k) in self.perm.iter().enumerate() {
            pos[k] = t;
        }
        pos
    }
}

impl TryFrom<Vec<usize>> for Ordering {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Ordering::new(v)
    }
}

impl From<Ordering> for Vec<usize> {
    fn from(o: Ordering) -> Self {
        o.perm
    }
}

/// `true` iff every edge `j -> k` has `j` placed before `k`.
pub fn is_topological(dag: &Dag, ord: &Ordering) -> Result<bool> {
    if dag.p() != ord.p() {
        return Err(Error::DimensionMismatch { expected: dag.p(), found: ord.p() });
    }
    let pos = ord.positions();
    Ok(dag.edges().all(|(j, k)| pos[j] < pos[k]))
}

/// Nodes sorted so far, in selection order, plus a membership mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialOrdering {
    chosen: Vec<usize>,
    member: Vec<bool>,
}

impl PartialOrdering {
    pub fn new(p: usize) -> Self {
        PartialOrdering { chosen: Vec::with_capacity(p), member: vec![false; p] }
    }

    pub fn push(&mut self, k: usize) {
        assert!(!self.member[k], "node {k} already sorted");
        self.member[k] = true;
        self.chosen.push(k);
    }

    pub fn contains(&self, k: usize) -> bool {
        self.member[k]
    }

    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.chosen.len() == self.member.len()
    }

    pub fn unsorted(&self) -> impl Iterator<Item = usize> + '_ {
        self.member.iter().enumerate().filter(|(_, m)| !**m).map(|(k, _)| k)
    }

    pub fn into_ordering(self) -> Result<Ordering> {
        Ordering::new(self.chosen)
    }
}

/// Candidate neighborhood `N̂_k` for each node. Serializes as an array of arrays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct NeighborhoodSets {
    sets: Vec<Vec<usize>>,
}

impl NeighborhoodSets {
    /// Sorts and deduplicates each set; rejects self-membership and out-of-range indices.
    pub fn new(mut sets: Vec<Vec<usize>>) -> Result<Self> {
        let p = sets.len();
        for (k, s) in sets.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if let Some(&j) = s.iter().find(|&&j| j >= p) {
                return Err(Error::NodeOutOfRange { index: j, p });
            }
            if s.binary_search(&k).is_ok() {
                return Err(Error::InvalidParameter(format!("node {k} is in its own neighborhood")));
            }
        }
        Ok(NeighborhoodSets { sets })
    }

    pub fn p(&self) -> usize {
        self.sets.len()
    }

    pub fn get(&self, k: usize) -> &[usize] {
        &self.sets[k]
    }

    pub fn contains(&self, k: usize, j: usize) -> bool {
        self.sets[k].binary_search(&j).is_ok()
    }

    pub fn max_size(&self) -> usize {
        self.sets.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `N̂_k ∩ A_t`, in the order the members were sorted.
    pub fn sorted_members(&self, k: usize, partial: &PartialOrdering) -> Vec<usize> {
        let mut out: Vec<usize> = self.sets[k].iter().copied().filter(|&j| partial.contains(j)).collect();
        out.sort_unstable();
        out
    }
}

impl TryFrom<Vec<Vec<usize>>> for NeighborhoodSets {
    type Error = Error;

    fn try_from(v: Vec<Vec<usize>>) -> Result<Self> {
        NeighborhoodSets::new(v)
    }
}

impl From<NeighborhoodSets> for Vec<Vec<usize>> {
    fn from(n: NeighborhoodSets) -> Self {
        n.sets
    }
}

/// An `n × p` observation matrix stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
    standardized: bool,
}

impl DataMatrix {
    /// From column-major values.
    pub fn from_column_major(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidParameter("data matrix needs n >= 1 and p >= 1".into()));
        }
        if values.len() != n * p {
            return Err(Error::DimensionMismatch { expected: n * p, found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i % n, col: i / n });
        }
        Ok(DataMatrix { n, p, values, standardized: false })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: c.len() });
        }
        DataMatrix::from_column_major(n, p, columns.concat())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut values = vec![0.0; n * p];
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: r.len() });
            }
            for (k, &v) in r.iter().enumerate() {
                values[k * n + i] = v;
            }
        }
        DataMatrix::from_column_major(n, p, values)
    }

    pub(crate) fn mark_standardized(mut self) -> Self {
        self.standardized = true;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n)
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[k * self.n + i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.p).map(|k| self.get(i, k)).collect()
    }

    pub fn column_major(&self) -> &[f64] {
        &self.values
    }

    /// New matrix with the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.p);
        for col in self.columns() {
            values.extend(rows.iter().map(|&i| col[i]));
        }
        DataMatrix::from_column_major(rows.len(), self.p, values)
    }

    /// Multiplies column `k` by `factor[k]`. Clears the standardized flag.
    pub fn scale_columns(&self, factor: &[f64]) -> Result<Self> {
        if factor.len() != self.p {
            return Err(Error::DimensionMismatch { expected: self.p, found: factor.len() });
        }
        let mut values = self.values.clone();
        for (col, f) in values.chunks_exact_mut(self.n).zip(factor) {
            col.iter_mut().for_each(|v| *v *= f);
        }
        DataMatrix::from_column_major(self.n, self.p, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> Dag {
        Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn rejects_cycles_and_bad_indices() {
        assert_eq!(Dag::from_edges(2, &[(0, 1), (1, 0)]), Err(Error::Cyclic));
        assert_eq!(Dag::new(vec![vec![0]]), Err(Error::SelfLoop(0)));
        assert_eq!(Dag::new(vec![vec![], vec![0, 0]]), Err(Error::DuplicateParent { node: 1, parent: 0 }));
        assert!(matches!(Dag::new(vec![vec![5]]), Err(Error::NodeOutOfRange { .. })));
    }

    #[test]
    fn parents_are_sorted() {
        let d = Dag::new(vec![vec![], vec![], vec![1, 0]]).unwrap();
        assert_eq!(d.parents(2), &[0, 1]);
        assert_eq!(d.children(), vec![vec![2], vec![2], vec![]]);
    }

    #[test]
    fn topological_checks() {
        let d = chain3();
        assert!(is_topological(&d, &Ordering::new(vec![0, 1, 2]).unwrap()).unwrap());
        assert!(!is_topological(&d, &Ordering::new(vec![1, 0, 2]).unwrap()).unwrap());
        let e = Dag::empty(4).unwrap();
        assert!(is_topological(&e, &Ordering::new(vec![3, 1, 0, 2]).unwrap()).unwrap());
        assert!(is_topological(&d, &Ordering::identity(4)).is_err());
        assert!(is_topological(&d, &d.topological_order()).unwrap());
    }

    #[test]
    fn ordering_rejects_non_permutations() {
        assert!(Ordering::new(vec![0, 0]).is_err());
        assert!(Ordering::new(vec![0, 2]).is_err());
        let o: Ordering = serde_json::from_str("[2,0,1]").unwrap();
        assert_eq!(o.positions(), vec![1, 2, 0]);
        assert!(serde_json::from_str::<Ordering>("[1,1]").is_err());
    }

    #[test]
    fn mixing_identity_when_no_edges() {
        let w = WeightedDag::new(Dag::empty(3).unwrap(), vec![vec![]; 3], NoiseFamily::Laplace, vec![1.0; 3]).unwrap();
        let m = mixing_matrix(&w).to_dense();
        assert_eq!(m, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
    }

    #[test]
    fn mixing_two_node_chain() {
        let w = WeightedDag::from_weighted_edges(2, &[(0, 1, 0.5)], NoiseFamily::Laplace, vec![1.0; 2]).unwrap();
        assert_eq!(mixing_matrix(&w).to_dense(), vec![vec![1.0, 0.0], vec![0.5, 1.0]]);
    }

    #[test]
    fn mixing_path_sum() {
        let (a, b, c) = (0.7, -0.4, 0.9);
        let w = WeightedDag::from_weighted_edges(3, &[(0, 1, a), (1, 2, b), (0, 2, c)], NoiseFamily::Laplace, vec![1.0; 3])
            .unwrap();
        let m = mixing_matrix(&w);
        assert!((m.get(2, 0) - (c + a * b)).abs() < 1e-15);
        assert_eq!(m.get(2, 1), b);
        assert_eq!(m.get(0, 2), 0.0);
        for k in 0..3 {
            assert_eq!(m.get(k, k), 1.0);
        }
    }

    #[test]
    fn weighted_dag_validation() {
        let d = chain3();
        assert!(WeightedDag::new(d.clone(), vec![vec![], vec![0.5], vec![0.5]], NoiseFamily::Laplace, vec![1.0, 0.0, 1.0]).is_err());
        assert!(WeightedDag::new(d.clone(), vec![vec![], vec![0.0], vec![0.5]], NoiseFamily::Laplace, vec![1.0; 3]).is_err());
        assert!(WeightedDag::new(d, vec![vec![], vec![0.5], vec![0.5]], NoiseFamily::ScaledT { df: 2.0 }, vec![1.0; 3]).is_err());
    }

    #[test]
    fn family_parse_roundtrip() {
        for s in ["laplace", "logistic", "gaussian", "scaled-t:10"] {
            assert_eq!(NoiseFamily::parse(s).unwrap().to_string(), s);
        }
        assert!(NoiseFamily::parse("scaled-t:1.5").is_err());
        assert!(NoiseFamily::parse("cauchy").is_err());
    }

    #[test]
    fn neighborhood_sets_validate() {
        let n = NeighborhoodSets::new(vec![vec![2, 1, 1], vec![], vec![0]]).unwrap();
        assert_eq!(n.get(0), &[1, 2]);
        assert!(NeighborhoodSets::new(vec![vec![0]]).is_err());
        let json = serde_json::to_string(&n).unwrap();
        assert_eq!(json, "[[1,2],[],[0]]");
    }

    #[test]
    fn data_matrix_layout() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(x.column(1), &[2.0, 4.0, 6.0]);
        assert_eq!(x.row(2), vec![5.0, 6.0]);
        assert!(DataMatrix::from_rows(&[vec![f64::NAN]]).is_err());
        let s = x.select_rows(&[2, 0]).unwrap();
        assert_eq!(s.column(0), &[5.0, 1.0]);
    }
}
