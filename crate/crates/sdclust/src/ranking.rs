//! Directional dominance tests between cluster centers, equivalence-aware
//! cluster ranking, and pool refinement for multi-stage runs.
//!
//! A directional test reads the signed extremes of the statistic profile
//! against the bootstrap critical value. Under the ascending integral a
//! distributionally better series pushes the statistic down, so dominance of
//! the first argument rejects on the left tail; under the descending
//! integral the inequality flips and dominance rejects on the right tail.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{signed_tails, BootstrapConfig};
use crate::clustering::Clustering;
use crate::error::{Result, SdError};
use crate::market_data::ReturnPanel;
use crate::sdstat::{Direction, Order, Sample};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// First argument dominates the second.
    Dominates,
    /// Second argument dominates the first.
    DominatedBy,
    /// Neither rejection region is hit.
    Equivalent,
    /// Both rejection regions are hit; no ordering can be claimed.
    NoClear,
}

impl Outcome {
    /// The same verdict seen from the other argument's side.
    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Dominates => Outcome::DominatedBy,
            Outcome::DominatedBy => Outcome::Dominates,
            other => other,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Outcome::Dominates => "\u{227b}",
            Outcome::DominatedBy => "\u{227a}",
            Outcome::Equivalent => "\u{2261}",
            Outcome::NoClear => "\u{2281}",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceVerdict {
    pub order: Order,
    pub direction: Direction,
    pub outcome: Outcome,
    pub alpha: f64,
    pub max_t: f64,
    pub min_t: f64,
    pub crit: f64,
}

/// Test the first sample against the second at the configured order and
/// direction.
pub fn directional_test(
    f: &Sample,
    g: &Sample,
    alpha: f64,
    cfg: &BootstrapConfig,
) -> Result<DominanceVerdict> {
    let tails = signed_tails(f, g, cfg, alpha)?;
    // Ascending: f better makes T negative, so f-dominance rejects left.
    // Descending: f better makes T positive, so f-dominance rejects right.
    let (f_side, g_side) = match cfg.direction {
        Direction::Ascending => (tails.min_t < -tails.crit, tails.max_t > tails.crit),
        Direction::Descending => (tails.max_t > tails.crit, tails.min_t < -tails.crit),
    };
    let outcome = match (f_side, g_side) {
        (true, false) => Outcome::Dominates,
        (false, true) => Outcome::DominatedBy,
        (false, false) => Outcome::Equivalent,
        (true, true) => Outcome::NoClear,
    };
    Ok(DominanceVerdict {
        order: cfg.order,
        direction: cfg.direction,
        outcome,
        alpha,
        max_t: tails.max_t,
        min_t: tails.min_t,
        crit: tails.crit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub a: usize,
    pub b: usize,
    pub verdict: DominanceVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRanking {
    pub alpha: f64,
    /// Cluster-level verdicts, one per unordered pair, from a's perspective.
    pub verdicts: Vec<PairVerdict>,
    /// Equivalence groups of cluster ids, each sorted, ordered by smallest id.
    pub merged_groups: Vec<Vec<usize>>,
    /// Group-level verdicts between group mean series, indices into
    /// `merged_groups`.
    pub group_verdicts: Vec<PairVerdict>,
    /// Investor-optimal cluster ids, sorted.
    pub optimal: Vec<usize>,
}

impl ClusterRanking {
    pub fn verdict_between(&self, a: usize, b: usize) -> Option<Outcome> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let v = self.verdicts.iter().find(|p| p.a == lo && p.b == hi)?;
        Some(if a < b { v.verdict.outcome } else { v.verdict.outcome.flipped() })
    }

    /// K-by-K symbol table; row cluster relates to column cluster.
    pub fn summary_table(&self, k: usize) -> String {
        let mut out = String::from("cluster");
        for c in 0..k {
            out.push_str(&format!(",C{c}"));
        }
        out.push('\n');
        for r in 0..k {
            out.push_str(&format!("C{r}"));
            for c in 0..k {
                if r == c {
                    out.push_str(",.");
                } else {
                    let sym =
                        self.verdict_between(r, c).map(Outcome::symbol).unwrap_or("?");
                    out.push(',');
                    out.push_str(sym);
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<ClusterRanking> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Rank cluster centers by directional dominance.
///
/// Pairwise center verdicts are computed first; clusters judged Equivalent
/// are merged into groups (connected components), each group re-centered on
/// the member-weighted mean series, and the groups re-tested. Optimal groups
/// are those never dominated that dominate at least one other; when strict
/// verdicts exist but every group is dominated somewhere (a cycle), the
/// groups with the best dominates-minus-dominated balance are taken. With no
/// strict verdict anywhere all clusters are optimal.
pub fn rank_centers(
    clustering: &Clustering,
    alpha: f64,
    cfg: &BootstrapConfig,
) -> Result<ClusterRanking> {
    clustering.validate()?;
    let k = clustering.k;
    if k < 2 {
        return Err(SdError::KOutOfRange { k, n: clustering.assignments.len() });
    }
    if clustering.centers.len() != k {
        return Err(SdError::Config(format!(
            "clustering carries {} centers for k = {k}; recompute centers first",
            clustering.centers.len()
        )));
    }
    let centers: Vec<Sample> =
        clustering.centers.iter().map(|c| Sample::new(c.clone())).collect::<Result<_>>()?;
    let mut sizes = vec![0usize; k];
    for &c in clustering.assignments.values() {
        sizes[c] += 1;
    }

    let pairs: Vec<(usize, usize)> =
        (0..k).flat_map(|a| ((a + 1)..k).map(move |b| (a, b))).collect();
    let verdicts: Vec<PairVerdict> = pairs
        .into_par_iter()
        .map(|(a, b)| {
            let s = seed::derive(cfg.seed, &[seed::TAG_RANK, a as u64, b as u64]);
            let verdict = directional_test(&centers[a], &centers[b], alpha, &cfg.with_seed(s))?;
            Ok(PairVerdict { a, b, verdict })
        })
        .collect::<Result<_>>()?;

    // Equivalence groups: connected components over Equivalent verdicts.
    let mut group_of: Vec<usize> = (0..k).collect();
    fn root(group_of: &mut Vec<usize>, mut x: usize) -> usize {
        while group_of[x] != x {
            group_of[x] = group_of[group_of[x]];
            x = group_of[x];
        }
        x
    }
    for pv in &verdicts {
        if pv.verdict.outcome == Outcome::Equivalent {
            let (ra, rb) = (root(&mut group_of, pv.a), root(&mut group_of, pv.b));
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            group_of[hi] = lo;
        }
    }
    let mut groups_map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in 0..k {
        groups_map.entry(root(&mut group_of, c)).or_default().push(c);
    }
    let merged_groups: Vec<Vec<usize>> = groups_map.into_values().collect();
    let g = merged_groups.len();

    // Size-weighted group centers equal the mean series over all members.
    let periods = clustering.centers[0].len();
    let group_centers: Vec<Sample> = merged_groups
        .iter()
        .map(|group| {
            let total: usize = group.iter().map(|&c| sizes[c]).sum();
            let mut series = vec![0.0; periods];
            for &c in group {
                for (t, v) in clustering.centers[c].iter().enumerate() {
                    series[t] += sizes[c] as f64 * v;
                }
            }
            for v in &mut series {
                *v /= total as f64;
            }
            Sample::new(series)
        })
        .collect::<Result<_>>()?;

    let group_pairs: Vec<(usize, usize)> =
        (0..g).flat_map(|a| ((a + 1)..g).map(move |b| (a, b))).collect();
    let group_verdicts: Vec<PairVerdict> = group_pairs
        .into_par_iter()
        .map(|(a, b)| {
            let s = seed::derive(cfg.seed, &[seed::TAG_RANK_GROUP, a as u64, b as u64]);
            let verdict =
                directional_test(&group_centers[a], &group_centers[b], alpha, &cfg.with_seed(s))?;
            Ok(PairVerdict { a, b, verdict })
        })
        .collect::<Result<_>>()?;

    let mut dominates = vec![0usize; g];
    let mut dominated = vec![0usize; g];
    for pv in &group_verdicts {
        match pv.verdict.outcome {
            Outcome::Dominates => {
                dominates[pv.a] += 1;
                dominated[pv.b] += 1;
            }
            Outcome::DominatedBy => {
                dominates[pv.b] += 1;
                dominated[pv.a] += 1;
            }
            _ => {}
        }
    }
    let any_strict = dominates.iter().any(|&d| d > 0);
    let chosen_groups: Vec<usize> = if !any_strict {
        (0..g).collect()
    } else {
        let primary: Vec<usize> =
            (0..g).filter(|&i| dominated[i] == 0 && dominates[i] >= 1).collect();
        if !primary.is_empty() {
            primary
        } else {
            let never_dominated: Vec<usize> = (0..g).filter(|&i| dominated[i] == 0).collect();
            if !never_dominated.is_empty() {
                never_dominated
            } else {
                // Dominance cycle: fall back to the best net balance.
                let best = (0..g)
                    .map(|i| dominates[i] as i64 - dominated[i] as i64)
                    .max()
                    .expect("at least one group");
                (0..g)
                    .filter(|&i| dominates[i] as i64 - dominated[i] as i64 == best)
                    .collect()
            }
        }
    };
    let mut optimal: Vec<usize> =
        chosen_groups.iter().flat_map(|&gi| merged_groups[gi].iter().copied()).collect();
    optimal.sort_unstable();

    Ok(ClusterRanking { alpha, verdicts, merged_groups, group_verdicts, optimal })
}

/// Stocks carried into the next refinement stage: members of optimal
/// clusters plus any stock from the remaining clusters that no optimal
/// center dominates.
pub fn refine_pool(
    panel: &ReturnPanel,
    clustering: &Clustering,
    ranking: &ClusterRanking,
    alpha: f64,
    cfg: &BootstrapConfig,
) -> Result<Vec<String>> {
    clustering.validate()?;
    if clustering.centers.len() != clustering.k {
        return Err(SdError::Config("clustering carries no centers".into()));
    }
    let optimal: Vec<usize> = ranking.optimal.clone();
    if optimal.is_empty() {
        return Err(SdError::EmptyPool);
    }
    let optimal_centers: Vec<(usize, Sample)> = optimal
        .iter()
        .map(|&c| Ok((c, Sample::new(clustering.centers[c].clone())?)))
        .collect::<Result<_>>()?;

    let outsiders: Vec<(String, usize)> = clustering
        .assignments
        .iter()
        .filter(|(_, c)| !optimal.contains(c))
        .map(|(t, _)| {
            let idx = panel
                .index_of(t)
                .ok_or_else(|| SdError::Config(format!("ticker {t} not in panel")))?;
            Ok((t.clone(), idx))
        })
        .collect::<Result<_>>()?;

    let rescued: Vec<Option<String>> = outsiders
        .into_par_iter()
        .map(|(ticker, idx)| {
            let stock = panel.sample(idx)?;
            for (c, center) in &optimal_centers {
                let s = seed::derive(cfg.seed, &[seed::TAG_REFINE, idx as u64, *c as u64]);
                let v = directional_test(&stock, center, alpha, &cfg.with_seed(s))?;
                if v.outcome == Outcome::DominatedBy {
                    return Ok(None);
                }
            }
            Ok(Some(ticker))
        })
        .collect::<Result<_>>()?;

    let mut pool: Vec<String> = clustering
        .assignments
        .iter()
        .filter(|(_, c)| optimal.contains(c))
        .map(|(t, _)| t.clone())
        .collect();
    pool.extend(rescued.into_iter().flatten());
    pool.sort();
    if pool.is_empty() {
        return Err(SdError::EmptyPool);
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn sample(values: Vec<f64>) -> Sample {
        Sample::new(values).unwrap()
    }

    fn noisy(seedling: u64, len: usize, shift: f64) -> Vec<f64> {
        let mut rng = seed::rng(seedling, &[7]);
        (0..len).map(|_| rng.gen_range(-0.05..0.05) + shift).collect()
    }

    fn cfg(order: Order, dir: Direction, reps: usize) -> BootstrapConfig {
        BootstrapConfig {
            order,
            direction: dir,
            reps,
            grid_points: 40,
            ..BootstrapConfig::default()
        }
    }

    #[test]
    fn identical_samples_are_equivalent() {
        let f = sample(noisy(1, 60, 0.0));
        let v = directional_test(&f, &f, 0.05, &cfg(Order::First, Direction::Ascending, 100))
            .unwrap();
        assert_eq!(v.outcome, Outcome::Equivalent);
        assert_eq!(v.max_t, 0.0);
        assert_eq!(v.min_t, 0.0);
    }

    #[test]
    fn upward_shift_dominates_in_both_directions() {
        let mut rng = seed::rng(3, &[40]);
        let g: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f: Vec<f64> = g.iter().map(|v| v + 5.0).collect();
        let (f, g) = (sample(f), sample(g));

        for dir in [Direction::Ascending, Direction::Descending] {
            let c = cfg(Order::First, dir, 200);
            let v = directional_test(&f, &g, 0.05, &c).unwrap();
            assert_eq!(v.outcome, Outcome::Dominates, "direction {}", dir.label());
            let w = directional_test(&g, &f, 0.05, &c).unwrap();
            assert_eq!(w.outcome, Outcome::DominatedBy);
        }
    }

    #[test]
    fn verdicts_are_antisymmetric_bitwise() {
        // Overlapping samples so every outcome class is reachable.
        let f = sample(noisy(10, 45, 0.01));
        let g = sample(noisy(11, 62, 0.0));
        for order in [Order::First, Order::Second, Order::Third] {
            for dir in [Direction::Ascending, Direction::Descending] {
                let c = cfg(order, dir, 150);
                let ab = directional_test(&f, &g, 0.05, &c).unwrap();
                let ba = directional_test(&g, &f, 0.05, &c).unwrap();
                assert_eq!(ab.outcome, ba.outcome.flipped());
                assert_eq!(ab.max_t.to_bits(), (-ba.min_t).to_bits());
                assert_eq!(ab.min_t.to_bits(), (-ba.max_t).to_bits());
                assert_eq!(ab.crit.to_bits(), ba.crit.to_bits());
            }
        }
    }

    #[test]
    fn first_order_margin_implies_second_order() {
        let mut rng = seed::rng(5, &[41]);
        let g: Vec<f64> = (0..150).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let f: Vec<f64> = g.iter().map(|v| v + 1.2).collect();
        let (f, g) = (sample(f), sample(g));

        let c1 = cfg(Order::First, Direction::Ascending, 200);
        let v1 = directional_test(&f, &g, 0.05, &c1).unwrap();
        assert_eq!(v1.outcome, Outcome::Dominates);
        assert!(
            v1.min_t < -2.0 * v1.crit,
            "shift should reject with margin, min_t {} crit {}",
            v1.min_t,
            v1.crit
        );

        let c2 = cfg(Order::Second, Direction::Ascending, 200);
        let v2 = directional_test(&f, &g, 0.05, &c2).unwrap();
        assert_eq!(v2.outcome, Outcome::Dominates);
    }

    #[test]
    fn lower_spread_wins_at_second_order_only() {
        let mut rng = seed::rng(8, &[55]);
        let tight_dist = Normal::new(0.0, 0.01).unwrap();
        let wide_dist = Normal::new(0.0, 0.05).unwrap();
        let tight: Vec<f64> = (0..250).map(|_| tight_dist.sample(&mut rng)).collect();
        let wide: Vec<f64> = (0..250).map(|_| wide_dist.sample(&mut rng)).collect();
        let (tight, wide) = (sample(tight), sample(wide));

        let v1 = directional_test(
            &tight,
            &wide,
            0.05,
            &cfg(Order::First, Direction::Ascending, 200),
        )
        .unwrap();
        assert!(
            matches!(v1.outcome, Outcome::Equivalent | Outcome::NoClear),
            "crossing distributions cannot have first-order dominance, got {:?}",
            v1.outcome
        );

        let v2 = directional_test(
            &tight,
            &wide,
            0.05,
            &cfg(Order::Second, Direction::Ascending, 200),
        )
        .unwrap();
        assert_eq!(v2.outcome, Outcome::Dominates, "risk-averse order prefers the tight series");
    }

    #[test]
    fn critical_value_shrinks_as_alpha_grows() {
        let f = sample(noisy(20, 50, 0.01));
        let g = sample(noisy(21, 50, 0.0));
        let c = cfg(Order::First, Direction::Ascending, 300);
        let crits: Vec<f64> = [0.01, 0.05, 0.10, 0.25]
            .iter()
            .map(|&a| directional_test(&f, &g, a, &c).unwrap().crit)
            .collect();
        for w in crits.windows(2) {
            assert!(w[0] >= w[1], "critical values must be nonincreasing in alpha: {crits:?}");
        }
    }

    fn clustering_with_centers(centers: Vec<Vec<f64>>, members_per: usize) -> Clustering {
        let k = centers.len();
        let assignments = (0..k)
            .flat_map(|c| (0..members_per).map(move |m| (format!("C{c}M{m}"), c)))
            .collect();
        Clustering {
            k,
            assignments,
            iterations_used: 1,
            converged: true,
            centers,
            distances: BTreeMap::new(),
        }
    }

    #[test]
    fn shifted_center_is_chosen_optimal() {
        let base = noisy(30, 60, 0.0);
        let up: Vec<f64> = base.iter().map(|v| v + 0.5).collect();
        let c = clustering_with_centers(vec![up, base], 2);
        let ranking =
            rank_centers(&c, 0.05, &cfg(Order::First, Direction::Ascending, 150)).unwrap();
        assert_eq!(ranking.optimal, vec![0]);
        assert_eq!(ranking.merged_groups, vec![vec![0], vec![1]]);
        assert_eq!(ranking.verdicts[0].verdict.outcome, Outcome::Dominates);
    }

    #[test]
    fn identical_centers_form_one_group_all_optimal() {
        let base = noisy(31, 60, 0.0);
        let c = clustering_with_centers(vec![base.clone(), base.clone(), base], 2);
        let ranking =
            rank_centers(&c, 0.05, &cfg(Order::First, Direction::Ascending, 120)).unwrap();
        assert_eq!(ranking.merged_groups, vec![vec![0, 1, 2]]);
        assert_eq!(ranking.optimal, vec![0, 1, 2]);
        assert!(ranking.group_verdicts.is_empty());
    }

    #[test]
    fn equivalent_pair_merges_and_loses_to_dominant_center() {
        let base = noisy(32, 70, 0.0);
        let up: Vec<f64> = base.iter().map(|v| v + 0.5).collect();
        let near: Vec<f64> = base.iter().map(|v| v + 1e-4).collect();
        let c = clustering_with_centers(vec![up, base, near], 2);
        let ranking =
            rank_centers(&c, 0.05, &cfg(Order::First, Direction::Ascending, 150)).unwrap();
        assert_eq!(ranking.merged_groups, vec![vec![0], vec![1, 2]]);
        assert_eq!(ranking.optimal, vec![0]);
        assert_eq!(ranking.verdict_between(1, 2), Some(Outcome::Equivalent));
        assert_eq!(ranking.verdict_between(0, 1), Some(Outcome::Dominates));
        assert_eq!(ranking.verdict_between(1, 0), Some(Outcome::DominatedBy));

        let table = ranking.summary_table(3);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "cluster,C0,C1,C2");
        assert!(lines[1].starts_with("C0,.,\u{227b}"));
        assert!(lines[2].starts_with("C1,\u{227a},."));
    }

    #[test]
    fn ranking_requires_centers() {
        let mut c = clustering_with_centers(vec![noisy(1, 40, 0.0), noisy(2, 40, 0.1)], 2);
        c.centers.clear();
        assert!(matches!(
            rank_centers(&c, 0.05, &cfg(Order::First, Direction::Ascending, 100)),
            Err(SdError::Config(_))
        ));
    }

    fn panel_from_columns(cols: &[(&str, Vec<f64>)]) -> ReturnPanel {
        let rows = cols[0].1.len();
        let start = chrono::NaiveDate::from_ymd_opt(2024, 1, 5).unwrap();
        let periods = (0..rows).map(|i| start + chrono::Days::new(7 * i as u64)).collect();
        let tickers = cols.iter().map(|(t, _)| t.to_string()).collect();
        let returns = (0..rows).map(|r| cols.iter().map(|(_, c)| c[r]).collect()).collect();
        ReturnPanel::new(periods, tickers, returns).unwrap()
    }

    #[test]
    fn refine_keeps_optimal_members_and_rescues_strong_outsiders() {
        let base = noisy(40, 60, 0.0);
        let up: Vec<f64> = base.iter().map(|v| v + 0.5).collect();
        // DOM* sit at the top; LOSER is dominated; HERO matches the
        // dominant center's level and must be rescued.
        let panel = panel_from_columns(&[
            ("DOM1", up.clone()),
            ("DOM2", up.iter().map(|v| v + 0.001).collect()),
            ("LOSER", base.clone()),
            ("HERO", up.iter().map(|v| v + 0.002).collect()),
        ]);
        let mut clustering = Clustering {
            k: 2,
            assignments: [("DOM1", 0), ("DOM2", 0), ("LOSER", 1), ("HERO", 1)]
                .into_iter()
                .map(|(t, c)| (t.to_string(), c))
                .collect(),
            iterations_used: 1,
            converged: true,
            centers: Vec::new(),
            distances: BTreeMap::new(),
        };
        clustering.recompute_centers(&panel).unwrap();
        let c = cfg(Order::First, Direction::Ascending, 150);
        let ranking = rank_centers(&clustering, 0.05, &c).unwrap();
        assert_eq!(ranking.optimal, vec![0]);

        let pool = refine_pool(&panel, &clustering, &ranking, 0.05, &c).unwrap();
        assert_eq!(pool, vec!["DOM1", "DOM2", "HERO"]);
    }

    #[test]
    fn refine_with_no_dominance_keeps_everyone() {
        let panel = panel_from_columns(&[
            ("AAA", noisy(50, 60, 0.0)),
            ("BBB", noisy(51, 60, 0.001)),
            ("CCC", noisy(52, 60, 0.0)),
            ("DDD", noisy(53, 60, 0.001)),
        ]);
        let mut clustering = Clustering {
            k: 2,
            assignments: [("AAA", 0), ("BBB", 0), ("CCC", 1), ("DDD", 1)]
                .into_iter()
                .map(|(t, c)| (t.to_string(), c))
                .collect(),
            iterations_used: 1,
            converged: true,
            centers: Vec::new(),
            distances: BTreeMap::new(),
        };
        clustering.recompute_centers(&panel).unwrap();
        let c = cfg(Order::First, Direction::Ascending, 150);
        let ranking = rank_centers(&clustering, 0.05, &c).unwrap();
        // Near-identical centers: everything lands in one group.
        assert_eq!(ranking.optimal, vec![0, 1]);
        let pool = refine_pool(&panel, &clustering, &ranking, 0.05, &c).unwrap();
        assert_eq!(pool, vec!["AAA", "BBB", "CCC", "DDD"]);
    }

    #[test]
    fn ranking_json_roundtrip() {
        let base = noisy(60, 50, 0.0);
        let up: Vec<f64> = base.iter().map(|v| v + 0.4).collect();
        let c = clustering_with_centers(vec![up, base], 2);
        let ranking =
            rank_centers(&c, 0.05, &cfg(Order::First, Direction::Ascending, 100)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ranking.json");
        ranking.save_json(&path).unwrap();
        assert_eq!(ClusterRanking::load_json(&path).unwrap(), ranking);
    }
}
