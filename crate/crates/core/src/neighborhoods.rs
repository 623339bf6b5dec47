//! Candidate neighborhood sets: oracle Markov blankets, top-m absolute
//! correlation sets estimated from a holdout, and the full complement.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DataMatrix, Dag, NeighborhoodSets};

/// Parents, children and co-parents of every node.
pub fn markov_blankets(dag: &Dag) -> NeighborhoodSets {
    let children = dag.children();
    let sets = (0..dag.p())
        .map(|k| {
            let mut mb: Vec<usize> = dag.parents(k).to_vec();
            for &c in &children[k] {
                mb.push(c);
                mb.extend(dag.parents(c).iter().copied().filter(|&j| j != k));
            }
            mb
        })
        .collect();
    NeighborhoodSets::new(sets).expect("markov blankets are valid neighborhood sets")
}

/// `N̂_k = {0..p} \ {k}`.
pub fn full_neighborhoods(p: usize) -> NeighborhoodSets {
    NeighborhoodSets::new((0..p).map(|k| (0..p).filter(|&j| j != k).collect()).collect())
        .expect("complement sets are valid")
}

/// Standardized columns (denominator n). Zero-variance columns become all zeros,
/// so their correlations are 0.
fn standardized_or_zero(x: &DataMatrix) -> Vec<Vec<f64>> {
    let n = x.n() as f64;
    x.columns()
        .map(|c| {
            let m = c.iter().sum::<f64>() / n;
            let sd = (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
            if sd > f64::EPSILON * m.abs().max(1.0) {
                c.iter().map(|v| (v - m) / sd).collect()
            } else {
                vec![0.0; c.len()]
            }
        })
        .collect()
}

/// For each node, the `m` other nodes with largest absolute Pearson
/// correlation on the holdout. Ties go to the lower index.
pub fn top_correlated(holdout: &DataMatrix, m: usize) -> Result<NeighborhoodSets> {
    let p = holdout.p();
    if m >= p {
        return Err(Error::InvalidParameter(format!("m = {m} must be smaller than p = {p}")));
    }
    if holdout.n() < 3 {
        return Err(Error::InvalidParameter("correlation holdout needs at least 3 rows".into()));
    }
    let z = standardized_or_zero(holdout);
    let n = holdout.n() as f64;
    let sets = (0..p)
        .into_par_iter()
        .map(|k| {
            let mut cand: Vec<(f64, usize)> = (0..p)
                .filter(|&j| j != k)
                .map(|j| {
                    let r = z[k].iter().zip(&z[j]).map(|(a, b)| a * b).sum::<f64>() / n;
                    (r.clamp(-1.0, 1.0).abs(), j)
                })
                .collect();
            let by_rank = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
            if m < cand.len() {
                cand.select_nth_unstable_by(m, by_rank);
                cand.truncate(m);
            }
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    NeighborhoodSets::new(sets)
}

/// Fraction of Markov-blanket members recovered by `nbhd`, pooled over nodes.
/// Returns 1 when every blanket is empty.
pub fn blanket_recall(nbhd: &NeighborhoodSets, dag: &Dag) -> f64 {
    let mb = markov_blankets(dag);
    let (mut hit, mut total) = (0usize, 0usize);
    for k in 0..dag.p() {
        total += mb.get(k).len();
        hit += mb.get(k).iter().filter(|&&j| nbhd.contains(k, j)).count();
    }
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}

/// Whether `nbhd` contains every Markov blanket of `dag`.
pub fn contains_blankets(nbhd: &NeighborhoodSets, dag: &Dag) -> bool {
    let mb = markov_blankets(dag);
    (0..dag.p()).all(|k| mb.get(k).iter().all(|&j| nbhd.contains(k, j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{generate_large_sparse_dag, stream_rng};
    use proptest::prelude::*;

    #[test]
    fn chain_blankets() {
        let d = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mb = markov_blankets(&d);
        assert_eq!(mb.get(0), &[1]);
        assert_eq!(mb.get(1), &[0, 2]);
        assert_eq!(mb.get(2), &[1]);
    }

    #[test]
    fn collider_has_coparent() {
        let d = Dag::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let mb = markov_blankets(&d);
        assert_eq!(mb.get(0), &[1, 2]);
        assert_eq!(mb.get(1), &[0, 2]);
        assert_eq!(mb.get(2), &[0, 1]);
    }

    #[test]
    fn empty_graph_blankets() {
        let mb = markov_blankets(&Dag::empty(4).unwrap());
        assert!((0..4).all(|k| mb.get(k).is_empty()));
    }

    #[test]
    fn full_sets() {
        let f = full_neighborhoods(3);
        assert_eq!(f.get(0), &[1, 2]);
        assert_eq!(f.get(1), &[0, 2]);
        assert_eq!(f.get(2), &[0, 1]);
        assert!(full_neighborhoods(1).get(0).is_empty());
        let d = Dag::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(contains_blankets(&f, &d));
    }

    #[test]
    fn duplicate_column_is_top_neighbor() {
        let a = vec![0.1, 2.0, -1.0, 0.5, 0.3];
        let x = DataMatrix::from_columns(vec![a.clone(), a, vec![1.0, -0.2, 0.0, 0.4, 2.0]]).unwrap();
        let n = top_correlated(&x, 1).unwrap();
        assert_eq!(n.get(0), &[1]);
        assert_eq!(n.get(1), &[0]);
    }

    #[test]
    fn constant_column_counts_as_uncorrelated() {
        let x = DataMatrix::from_columns(vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![5.0, 5.0, 5.0, 5.0],
            vec![1.0, 2.5, 2.9, 4.2],
        ])
        .unwrap();
        let n = top_correlated(&x, 1).unwrap();
        assert_eq!(n.get(0), &[2]);
        // all correlations zero: ties go to the lowest index
        assert_eq!(n.get(1), &[0]);
    }

    #[test]
    fn top_correlated_preconditions() {
        let x = DataMatrix::from_columns(vec![vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 3.0]]).unwrap();
        assert!(top_correlated(&x, 2).is_err());
        let short = DataMatrix::from_columns(vec![vec![1.0, 2.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(top_correlated(&short, 1).is_err());
    }

    proptest! {
        #[test]
        fn blankets_are_symmetric_and_contain_parents(p in 2usize..30, seed in any::<u64>()) {
            let mut rng = stream_rng(seed, 0);
            let (d, _) = generate_large_sparse_dag(p, 0.1, 1, 3, &mut rng).unwrap();
            let mb = markov_blankets(&d);
            for k in 0..p {
                for &j in d.parents(k) {
                    prop_assert!(mb.contains(k, j));
                }
                for &j in mb.get(k) {
                    prop_assert!(mb.contains(j, k));
                }
            }
        }

        #[test]
        fn top_correlated_cardinality_and_scale_invariance(
            cols in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 12), 3..7),
            m in 1usize..3,
            factors in prop::collection::vec(0.01f64..100.0, 7),
        ) {
            let p = cols.len();
            prop_assume!(m < p);
            let x = DataMatrix::from_columns(cols).unwrap();
            let a = top_correlated(&x, m).unwrap();
            for k in 0..p {
                prop_assert_eq!(a.get(k).len(), m);
                prop_assert!(!a.contains(k, k));
            }
            let scaled = x.scale_columns(&factors[..p]).unwrap();
            let b = top_correlated(&scaled, m).unwrap();
            // correlations may differ in the last bits; only compare sets whose
            // ranking gaps are well above rounding
            let z = standardized_or_zero(&x);
            for k in 0..p {
                let mut r: Vec<f64> = (0..p).filter(|&j| j != k).map(|j| {
                    (z[k].iter().zip(&z[j]).map(|(u, v)| u * v).sum::<f64>() / 12.0).abs()
                }).collect();
                r.sort_by(|u, v| v.total_cmp(u));
                let clear = r.windows(2).all(|w| w[0] - w[1] > 1e-9);
                if clear {
                    prop_assert_eq!(a.get(k), b.get(k));
                }
            }
        }
    }
}
