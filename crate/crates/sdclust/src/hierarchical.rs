//! Agglomerative average-linkage clustering over a coefficient matrix.
//!
//! Starts from singletons and repeatedly merges the pair of clusters with the
//! smallest average pairwise coefficient until everything is agglomerated,
//! recording the full merge sequence. A K-cluster partition is the state of
//! that sequence after n - K merges. Linkage values are maintained with the
//! Lance-Williams update for average linkage,
//! d(A u B, C) = (|A| d(A,C) + |B| d(B,C)) / (|A| + |B|),
//! which reproduces direct recomputation over the original matrix exactly up
//! to float associativity.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clustering::Clustering;
use crate::error::{Result, SdError};
use crate::matrix::SdMatrix;

/// One agglomeration step. `a` and `b` are cluster ids: leaves take the asset
/// index 0..n, the cluster created by merge `m` takes id n + m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Full merge sequence over `n_leaves` assets: exactly n - 1 merges with
/// nondecreasing heights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Partition after applying merges until `k` clusters remain. Clusters
    /// are returned as sorted leaf-index lists, ordered by smallest member.
    pub fn cut(&self, k: usize) -> Result<Vec<Vec<usize>>> {
        let n = self.n_leaves;
        if k == 0 || k > n {
            return Err(SdError::KOutOfRange { k, n });
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = (0..n).map(|i| (i, vec![i])).collect();
        for (m, merge) in self.merges.iter().take(n - k).enumerate() {
            let a = groups.remove(&merge.a).ok_or_else(|| {
                SdError::Config(format!("merge references unknown cluster {}", merge.a))
            })?;
            let mut b = groups.remove(&merge.b).ok_or_else(|| {
                SdError::Config(format!("merge references unknown cluster {}", merge.b))
            })?;
            let mut joined = a;
            joined.append(&mut b);
            joined.sort_unstable();
            groups.insert(n + m, joined);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|g| g[0]);
        Ok(out)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Dendrogram> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

struct Node {
    id: usize,
    size: usize,
    /// Lexicographically smallest member ticker; merge ties are broken on
    /// (min rep, max rep) so the result does not depend on asset order.
    rep: String,
}

/// Cluster the matrix into `k` groups (1 <= k <= n), returning the partition
/// and the full dendrogram it was cut from. Centers are left empty; attach
/// them with `Clustering::recompute_centers` when a panel is available.
pub fn sd_hierarchical(matrix: &SdMatrix, k: usize) -> Result<(Clustering, Dendrogram)> {
    let n = matrix.n();
    if k == 0 || k > n {
        return Err(SdError::KOutOfRange { k, n });
    }

    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node { id: i, size: 1, rep: matrix.tickers[i].clone() })
        .collect();
    let mut dist: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..n {
        for j in (i + 1)..n {
            dist.insert((i, j), matrix.get(i, j));
        }
    }

    let mut merges = Vec::with_capacity(n - 1);
    while nodes.len() > 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for ai in 0..nodes.len() {
            for bi in (ai + 1)..nodes.len() {
                let key = ordered(nodes[ai].id, nodes[bi].id);
                let d = dist[&key];
                let better = match best {
                    None => true,
                    Some((pa, pb, pd)) => {
                        if d != pd {
                            d < pd
                        } else {
                            rep_key(&nodes[ai], &nodes[bi]) < rep_key(&nodes[pa], &nodes[pb])
                        }
                    }
                };
                if better {
                    best = Some((ai, bi, d));
                }
            }
        }
        let (ai, bi, height) = best.expect("at least two nodes remain");
        let (ida, idb) = (nodes[ai].id, nodes[bi].id);
        let (sa, sb) = (nodes[ai].size, nodes[bi].size);
        let new_id = n + merges.len();
        let new_size = sa + sb;
        let (a, b) = ordered(ida, idb);
        merges.push(Merge { a, b, height, size: new_size });

        for node in &nodes {
            if node.id == ida || node.id == idb {
                continue;
            }
            let da = dist[&ordered(ida, node.id)];
            let db = dist[&ordered(idb, node.id)];
            let updated = (sa as f64 * da + sb as f64 * db) / new_size as f64;
            dist.insert(ordered(new_id, node.id), updated);
        }
        dist.retain(|&(x, y), _| x != ida && x != idb && y != ida && y != idb);

        let rep =
            std::cmp::min(nodes[ai].rep.clone(), nodes[bi].rep.clone());
        // Remove the higher position first so the lower index stays valid.
        nodes.remove(bi);
        nodes.remove(ai);
        nodes.push(Node { id: new_id, size: new_size, rep });
    }

    let dendrogram = Dendrogram { n_leaves: n, merges };
    let groups = dendrogram.cut(k)?;
    let mut assignments = BTreeMap::new();
    for (label, group) in groups.iter().enumerate() {
        for &i in group {
            assignments.insert(matrix.tickers[i].clone(), label);
        }
    }
    let clustering = Clustering {
        k,
        assignments,
        iterations_used: n - k,
        converged: true,
        centers: Vec::new(),
        distances: BTreeMap::new(),
    };
    clustering.validate()?;
    Ok((clustering, dendrogram))
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn rep_key<'a>(a: &'a Node, b: &'a Node) -> (&'a str, &'a str) {
    if a.rep <= b.rep {
        (a.rep.as_str(), b.rep.as_str())
    } else {
        (b.rep.as_str(), a.rep.as_str())
    }
}

/// Average linkage between two leaf groups read directly off the matrix.
pub fn average_linkage(matrix: &SdMatrix, a: &[usize], b: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &i in a {
        for &j in b {
            sum += matrix.get(i, j);
        }
    }
    sum / (a.len() * b.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdstat::{Direction, Order};
    use rand::Rng;

    fn matrix_from(tickers: &[&str], entries: &[&[f64]]) -> SdMatrix {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let mut text = String::from(
            "# order: 1\n# direction: asc\n# reps: 100\n# grid_points: 10\n# seed: 1\n# var_floor: 1e-12\nticker",
        );
        for t in tickers {
            text.push(',');
            text.push_str(t);
        }
        text.push('\n');
        for (i, t) in tickers.iter().enumerate() {
            text.push_str(t);
            for v in entries[i] {
                text.push_str(&format!(",{v:.12}"));
            }
            text.push('\n');
        }
        std::fs::write(&path, text).unwrap();
        SdMatrix::load_csv(&path).unwrap()
    }

    fn random_matrix(seedling: u64, n: usize) -> SdMatrix {
        let mut rng = crate::seed::rng(seedling, &[13]);
        let mut entries = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v: f64 = rng.gen_range(0.01..0.99);
                entries[i][j] = v;
                entries[j][i] = v;
            }
        }
        let tickers: Vec<String> = (0..n).map(|i| format!("T{i:02}")).collect();
        let refs: Vec<&str> = tickers.iter().map(String::as_str).collect();
        let rows: Vec<&[f64]> = entries.iter().map(Vec::as_slice).collect();
        matrix_from(&refs, &rows)
    }

    #[test]
    fn block_structure_recovered_at_k2() {
        let m = matrix_from(
            &["AAA", "BBB", "CCC", "DDD"],
            &[
                &[0.0, 0.1, 0.9, 0.9],
                &[0.1, 0.0, 0.9, 0.9],
                &[0.9, 0.9, 0.0, 0.1],
                &[0.9, 0.9, 0.1, 0.0],
            ],
        );
        let (c, d) = sd_hierarchical(&m, 2).unwrap();
        let mut groups = c.members();
        groups.sort();
        assert_eq!(groups, vec![vec!["AAA", "BBB"], vec!["CCC", "DDD"]]);
        assert_eq!(d.merges.len(), 3);
        assert_eq!(d.merges[0].height, 0.1);
        assert_eq!(d.merges[1].height, 0.1);
        assert_eq!(d.merges[2].height, 0.9);
        // Equal heights resolve by ticker order: (AAA,BBB) merges first.
        assert_eq!((d.merges[0].a, d.merges[0].b), (0, 1));
        assert_eq!((d.merges[1].a, d.merges[1].b), (2, 3));
    }

    #[test]
    fn extreme_cuts_are_trivial_partitions() {
        let m = random_matrix(1, 6);
        let (singletons, d) = sd_hierarchical(&m, 6).unwrap();
        assert!(singletons.members().iter().all(|g| g.len() == 1));
        assert_eq!(d.merges.len(), 5);

        let (one, _) = sd_hierarchical(&m, 1).unwrap();
        assert_eq!(one.members().len(), 1);
        assert_eq!(one.members()[0].len(), 6);

        assert!(matches!(sd_hierarchical(&m, 0), Err(SdError::KOutOfRange { .. })));
        assert!(matches!(sd_hierarchical(&m, 7), Err(SdError::KOutOfRange { .. })));
    }

    #[test]
    fn lance_williams_heights_match_direct_recomputation() {
        for seedling in 0..6u64 {
            let m = random_matrix(seedling, 8);
            let (_, d) = sd_hierarchical(&m, 1).unwrap();
            let n = m.n();
            let mut members: BTreeMap<usize, Vec<usize>> =
                (0..n).map(|i| (i, vec![i])).collect();
            let mut prev = f64::NEG_INFINITY;
            for (idx, merge) in d.merges.iter().enumerate() {
                let a = members.remove(&merge.a).unwrap();
                let b = members.remove(&merge.b).unwrap();
                let direct = average_linkage(&m, &a, &b);
                assert!(
                    (merge.height - direct).abs() <= 1e-12,
                    "merge {idx}: recurrence {} vs direct {direct}",
                    merge.height
                );
                assert!(merge.height >= prev - 1e-12, "heights must not decrease");
                prev = merge.height;
                let mut joined = a;
                joined.extend(b);
                members.insert(n + idx, joined);
            }
        }
    }

    #[test]
    fn each_cut_refines_the_next_coarser_one() {
        let m = random_matrix(3, 8);
        let (_, d) = sd_hierarchical(&m, 1).unwrap();
        for k in 2..=8usize {
            let fine = d.cut(k).unwrap();
            let coarse = d.cut(k - 1).unwrap();
            for group in &fine {
                assert!(
                    coarse.iter().any(|c| group.iter().all(|g| c.contains(g))),
                    "cut at {k} does not refine cut at {}",
                    k - 1
                );
            }
            let (c, _) = sd_hierarchical(&m, k).unwrap();
            let from_cut: Vec<Vec<String>> = fine
                .iter()
                .map(|g| g.iter().map(|&i| m.tickers[i].clone()).collect())
                .collect();
            let mut got = c.members();
            got.sort();
            let mut want = from_cut;
            want.sort();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn asset_order_does_not_change_the_partition() {
        let base = random_matrix(5, 7);
        let n = base.n();
        let perm = [3usize, 0, 6, 1, 5, 2, 4];
        let tickers: Vec<String> = perm.iter().map(|&i| base.tickers[i].clone()).collect();
        let refs: Vec<&str> = tickers.iter().map(String::as_str).collect();
        let mut entries = vec![vec![0.0; n]; n];
        for r in 0..n {
            for c in 0..n {
                entries[r][c] = base.get(perm[r], perm[c]);
            }
        }
        let rows: Vec<&[f64]> = entries.iter().map(Vec::as_slice).collect();
        let permuted = matrix_from(&refs, &rows);

        for k in [1usize, 2, 3, 5] {
            let (ca, _) = sd_hierarchical(&base, k).unwrap();
            let (cb, _) = sd_hierarchical(&permuted, k).unwrap();
            let mut ga = ca.members();
            ga.sort();
            let mut gb = cb.members();
            gb.sort();
            assert_eq!(ga, gb, "partition changed under asset permutation at k = {k}");
        }
    }

    #[test]
    fn average_linkage_hand_values() {
        let m = matrix_from(
            &["XXX", "YYY", "ZZZ"],
            &[&[0.0, 0.2, 0.4], &[0.2, 0.0, 0.6], &[0.4, 0.6, 0.0]],
        );
        assert!((average_linkage(&m, &[0], &[1, 2]) - 0.3).abs() <= 1e-15);
        assert_eq!(average_linkage(&m, &[0], &[1]), 0.2);
        assert_eq!(m.order, Order::First);
        assert_eq!(m.direction, Direction::Ascending);
    }

    #[test]
    fn dendrogram_json_roundtrip() {
        let m = random_matrix(9, 5);
        let (_, d) = sd_hierarchical(&m, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dendro.json");
        d.save_json(&path).unwrap();
        assert_eq!(Dendrogram::load_json(&path).unwrap(), d);
    }
}
