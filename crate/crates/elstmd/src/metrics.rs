//! Evaluation metrics for dynamic link prediction.
//!
//! AUC is the probability that an existing link outscores a nonexistent one
//! (half credit for ties). GMAUC combines a baseline-adjusted average
//! precision over new links with a recentered AUC over previously observed
//! links. Error Rate is the symmetric-difference count over the number of
//! truly existing links, so it can exceed 1.

use crate::error::{Error, Result};
use crate::graph::Snapshot;
use crate::numeric::{Matrix, SeededRng};

/// One candidate pair with its score and ground-truth label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample {
    pub pair: (usize, usize),
    pub score: f64,
    pub existing: bool,
}

/// Per-window metric values; `None` marks an undefined metric (reported
/// distinctly, never folded into averages as zero).
#[derive(Debug, Clone, Default)]
pub struct MetricsReport {
    pub delta: usize,
    pub auc: Option<f64>,
    pub gmauc: Option<f64>,
    pub prauc_new: Option<f64>,
    pub auc_prev: Option<f64>,
    pub error_rate: Option<f64>,
    pub er_top_dc: Option<f64>,
    pub er_top_ebc: Option<f64>,
    pub added: usize,
    pub removed: usize,
    pub n_true: usize,
    pub n_false: usize,
    pub notes: Vec<String>,
}

/// Importance scores and ranks for the existing links of one snapshot.
/// Ranks are a permutation of 1..=m, descending importance, ties broken by
/// lexicographic pair order.
#[derive(Debug, Clone)]
pub struct LinkImportance {
    pub links: Vec<(usize, usize)>,
    pub scores: Vec<f64>,
    pub ranks: Vec<usize>,
}

impl LinkImportance {
    fn from_scores(links: Vec<(usize, usize)>, scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..links.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(links[a].cmp(&links[b]))
        });
        let mut ranks = vec![0usize; links.len()];
        for (pos, &idx) in order.iter().enumerate() {
            ranks[idx] = pos + 1;
        }
        LinkImportance { links, scores, ranks }
    }

    /// Links ordered by rank (most important first).
    pub fn ranked_links(&self) -> Vec<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.links.len()).collect();
        order.sort_by_key(|&i| self.ranks[i]);
        order.into_iter().map(|i| self.links[i]).collect()
    }
}

fn split_pairs(scores: &Matrix, target: &Snapshot) -> (Vec<f64>, Vec<f64>) {
    let n = target.node_count();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if target.adjacency.get(i, j) >= 0.5 {
                pos.push(scores.get(i, j));
            } else {
                neg.push(scores.get(i, j));
            }
        }
    }
    (pos, neg)
}

/// Exact rank-statistic AUC with 0.5 tie credit: average ranks of the
/// positives via the Mann-Whitney identity. Equivalent to the pairwise
/// double loop but O((m+k) log(m+k)).
fn rank_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum_pos = 0.0;
    let mut idx = 0;
    while idx < all.len() {
        let mut end = idx;
        while end < all.len() && all[end].0 == all[idx].0 {
            end += 1;
        }
        // Average rank over the tie group (1-based ranks).
        let avg_rank = ((idx + 1) + end) as f64 / 2.0;
        for item in &all[idx..end] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        idx = end;
    }
    let m = pos.len() as f64;
    let k = neg.len() as f64;
    (rank_sum_pos - m * (m + 1.0) / 2.0) / (m * k)
}

/// Sampled AUC: nonexistent links are first down-sampled to the number of
/// existing links, then `samples` independent (existing, nonexistent)
/// comparisons are drawn.
pub fn auc_sampled(
    scores: &Matrix,
    target: &Snapshot,
    samples: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    let (pos, neg) = split_pairs(scores, target);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::UndefinedMetric(
            "AUC needs both existing and nonexistent links".into(),
        ));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let neg_pool: Vec<f64> = if neg.len() > pos.len() {
        rng.sample_indices(neg.len(), pos.len())
            .into_iter()
            .map(|i| neg[i])
            .collect()
    } else {
        neg
    };
    let mut higher = 0u64;
    let mut ties = 0u64;
    for _ in 0..samples {
        let p = pos[rng.next_usize(pos.len())];
        let q = neg_pool[rng.next_usize(neg_pool.len())];
        if p > q {
            higher += 1;
        } else if p == q {
            ties += 1;
        }
    }
    Ok((higher as f64 + 0.5 * ties as f64) / samples as f64)
}

/// Deterministic AUC over all existing x nonexistent pairs.
pub fn auc_exact(scores: &Matrix, target: &Snapshot) -> Result<f64> {
    let (pos, neg) = split_pairs(scores, target);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::UndefinedMetric(
            "AUC needs both existing and nonexistent links".into(),
        ));
    }
    Ok(rank_auc(&pos, &neg))
}

/// Average precision over pairs absent at t-1, with positives = added links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PraucOutcome {
    pub value: f64,
    /// Random-classifier baseline: positives / candidates.
    pub baseline: f64,
    /// Set when there were no added links and `value` is the baseline.
    pub degenerate: bool,
}

pub fn prauc_new(scores: &Matrix, prev: &Snapshot, target: &Snapshot) -> Result<PraucOutcome> {
    let n = target.node_count();
    let mut candidates: Vec<PairSample> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || prev.adjacency.get(i, j) >= 0.5 {
                continue;
            }
            candidates.push(PairSample {
                pair: (i, j),
                score: scores.get(i, j),
                existing: target.adjacency.get(i, j) >= 0.5,
            });
        }
    }
    if candidates.is_empty() {
        return Err(Error::UndefinedMetric(
            "PRAUC_new: no candidate pairs (previous graph complete)".into(),
        ));
    }
    let positives = candidates.iter().filter(|c| c.existing).count();
    let baseline = positives as f64 / candidates.len() as f64;
    if positives == 0 {
        return Ok(PraucOutcome { value: baseline, baseline, degenerate: true });
    }
    // Step-method area: precision averaged at each positive hit.
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.pair.cmp(&b.pair)));
    let mut hits = 0usize;
    let mut ap = 0.0;
    for (k, c) in candidates.iter().enumerate() {
        if c.existing {
            hits += 1;
            ap += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(PraucOutcome { value: ap / positives as f64, baseline, degenerate: false })
}

/// Exact AUC restricted to pairs present at t-1; positives are persisting
/// links, negatives are removed links.
pub fn auc_prev(scores: &Matrix, prev: &Snapshot, target: &Snapshot) -> Result<f64> {
    let n = target.node_count();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || prev.adjacency.get(i, j) < 0.5 {
                continue;
            }
            if target.adjacency.get(i, j) >= 0.5 {
                pos.push(scores.get(i, j));
            } else {
                neg.push(scores.get(i, j));
            }
        }
    }
    if pos.is_empty() {
        return Err(Error::UndefinedMetric("AUC_prev: no persisting links".into()));
    }
    if neg.is_empty() {
        return Err(Error::UndefinedMetric("AUC_prev: no removed links".into()));
    }
    Ok(rank_auc(&pos, &neg))
}

/// Geometric mean of the baseline-adjusted PRAUC over new links and the
/// recentered AUC over observed links; each factor is clamped below at 0
/// before the product so the result stays real.
pub fn gmauc(prauc_new_v: f64, auc_prev_v: f64, added: usize, removed: usize) -> Result<f64> {
    if added + removed == 0 {
        return Err(Error::UndefinedMetric("GMAUC: no added or removed links".into()));
    }
    if removed == 0 {
        return Err(Error::UndefinedMetric(
            "GMAUC: no removed links (first factor denominator is zero)".into(),
        ));
    }
    let base = added as f64 / (added + removed) as f64;
    let f1 = ((prauc_new_v - base) / (1.0 - base)).max(0.0);
    let f2 = (2.0 * (auc_prev_v - 0.5)).max(0.0);
    Ok((f1 * f2).sqrt())
}

/// Mispredicted off-diagonal pairs (false positives + false negatives) over
/// the number of truly existing links.
pub fn error_rate(predicted: &Snapshot, target: &Snapshot) -> Result<f64> {
    let n = target.node_count();
    let mut n_true = 0usize;
    let mut n_false = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let t = target.adjacency.get(i, j) >= 0.5;
            let p = predicted.adjacency.get(i, j) >= 0.5;
            if t {
                n_true += 1;
            }
            if t != p {
                n_false += 1;
            }
        }
    }
    if n_true == 0 {
        return Err(Error::UndefinedMetric("Error Rate: target has no links".into()));
    }
    Ok(n_false as f64 / n_true as f64)
}

pub fn misprediction_counts(predicted: &Snapshot, target: &Snapshot) -> (usize, usize) {
    let n = target.node_count();
    let mut n_true = 0usize;
    let mut n_false = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let t = target.adjacency.get(i, j) >= 0.5;
            let p = predicted.adjacency.get(i, j) >= 0.5;
            if t {
                n_true += 1;
            }
            if t != p {
                n_false += 1;
            }
        }
    }
    (n_false, n_true)
}

/// False negatives only: truly existing links missing from the prediction.
pub fn false_negative_count(predicted: &Snapshot, target: &Snapshot) -> usize {
    target
        .edges()
        .into_iter()
        .filter(|&(i, j)| !predicted.has_edge(i, j))
        .count()
}

/// Link importance as the sum of the terminal nodes' degrees (in + out).
pub fn degree_importance(target: &Snapshot) -> LinkImportance {
    let n = target.node_count();
    let mut degree = vec![0usize; n];
    let links = target.edges();
    for &(i, j) in &links {
        degree[i] += 1;
        degree[j] += 1;
    }
    let scores = links.iter().map(|&(i, j)| (degree[i] + degree[j]) as f64).collect();
    LinkImportance::from_scores(links, scores)
}

/// Exact edge betweenness on the directed unweighted graph via per-source
/// shortest-path DAG accumulation. Unreachable pairs contribute 0; the
/// endpoints of a shortest path count toward every edge on it.
pub fn edge_betweenness(target: &Snapshot) -> LinkImportance {
    let n = target.node_count();
    let links = target.edges();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in &links {
        adj[i].push(j);
    }
    let mut bc = Matrix::zeros(n, n);
    for s in 0..n {
        // BFS shortest-path counts.
        let mut dist = vec![-1i64; n];
        let mut sigma = vec![0.0f64; n];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut order: Vec<usize> = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        dist[s] = 0;
        sigma[s] = 1.0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        // Dependency accumulation over the DAG, edge variant.
        let mut delta = vec![0.0f64; n];
        for &w in order.iter().rev() {
            for &v in &preds[w] {
                let c = sigma[v] / sigma[w] * (1.0 + delta[w]);
                bc.set(v, w, bc.get(v, w) + c);
                delta[v] += c;
            }
        }
    }
    let scores = links.iter().map(|&(i, j)| bc.get(i, j)).collect();
    LinkImportance::from_scores(links, scores)
}

/// Error Rate restricted to the ceil(fraction * m) most important existing
/// links; only misses of those links count.
pub fn top_fraction_error_rate(
    predicted: &Snapshot,
    importance: &LinkImportance,
    fraction: f64,
) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction must be in (0,1], got {fraction}")));
    }
    let m = importance.links.len();
    let take = ((fraction * m as f64).ceil() as usize).min(m);
    if take == 0 {
        return Err(Error::UndefinedMetric("top-fraction Error Rate: no links to rank".into()));
    }
    let top = importance.ranked_links();
    let missed = top[..take].iter().filter(|&&(i, j)| !predicted.has_edge(i, j)).count();
    Ok(missed as f64 / take as f64)
}

pub const TOP_IMPORTANCE_FRACTION: f64 = 0.10;

/// Mean degree of the symmetrized graph: 2 * undirected edges / n.
pub fn avg_degree(snapshot: &Snapshot) -> f64 {
    let n = snapshot.node_count();
    if n == 0 {
        return 0.0;
    }
    let mut und = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if snapshot.has_edge(i, j) || snapshot.has_edge(j, i) {
                und += 1;
            }
        }
    }
    2.0 * und as f64 / n as f64
}

/// Mean local clustering coefficient of the symmetrized graph; nodes with
/// fewer than two neighbors contribute 0.
pub fn avg_clustering(snapshot: &Snapshot) -> f64 {
    let n = snapshot.node_count();
    if n == 0 {
        return 0.0;
    }
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && (snapshot.has_edge(i, j) || snapshot.has_edge(j, i)) {
                neighbors[i].push(j);
            }
        }
    }
    let connected = |a: usize, b: usize| {
        snapshot.has_edge(a, b) || snapshot.has_edge(b, a)
    };
    let mut sum = 0.0;
    for v in 0..n {
        let k = neighbors[v].len();
        if k < 2 {
            continue;
        }
        let mut triangles = 0usize;
        for a in 0..k {
            for b in a + 1..k {
                if connected(neighbors[v][a], neighbors[v][b]) {
                    triangles += 1;
                }
            }
        }
        sum += 2.0 * triangles as f64 / (k * (k - 1)) as f64;
    }
    sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn snapshot_from(n: usize, edges: &[(usize, usize)]) -> Snapshot {
        let mut m = Matrix::zeros(n, n);
        for &(i, j) in edges {
            m.set(i, j, 1.0);
        }
        Snapshot { adjacency: m, index: 0 }
    }

    fn random_snapshot(n: usize, p: f64, rng: &mut SeededRng) -> Snapshot {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.next_bool(p) {
                    m.set(i, j, 1.0);
                }
            }
        }
        Snapshot { adjacency: m, index: 0 }
    }

    fn random_scores(n: usize, rng: &mut SeededRng) -> Matrix {
        Matrix::from_fn(n, n, |_, _| 0.001 + 0.998 * rng.next_f64())
    }

    /// Brute-force pairwise AUC oracle.
    fn auc_double_loop(scores: &Matrix, target: &Snapshot) -> f64 {
        let n = target.node_count();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if target.adjacency.get(i, j) >= 0.5 {
                    pos.push(scores.get(i, j));
                } else {
                    neg.push(scores.get(i, j));
                }
            }
        }
        let mut acc = 0.0;
        for &p in &pos {
            for &q in &neg {
                if p > q {
                    acc += 1.0;
                } else if p == q {
                    acc += 0.5;
                }
            }
        }
        acc / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn auc_exact_matches_double_loop_oracle() {
        let mut rng = SeededRng::new(1);
        for trial in 0..30 {
            let n = 4 + trial % 10;
            let target = random_snapshot(n, 0.3, &mut rng);
            if target.edge_count() == 0 || target.edge_count() == n * (n - 1) {
                continue;
            }
            // Quantized scores force plenty of ties.
            let scores =
                Matrix::from_fn(n, n, |_, _| (rng.next_usize(5) as f64) / 4.0 * 0.8 + 0.1);
            let got = auc_exact(&scores, &target).unwrap();
            let want = auc_double_loop(&scores, &target);
            assert!((got - want).abs() < 1e-12, "trial {trial}: {got} vs {want}");
        }
    }

    #[test]
    fn auc_exact_edge_cases() {
        let target = snapshot_from(3, &[(0, 1), (1, 2)]);
        // Scores equal to the target entries separate perfectly.
        let got = auc_exact(&target.adjacency, &target).unwrap();
        assert_eq!(got, 1.0);
        // Monotone transformation leaves the rank statistic unchanged.
        let mut rng = SeededRng::new(2);
        let target = random_snapshot(8, 0.3, &mut rng);
        let scores = random_scores(8, &mut rng);
        let transformed = scores.map(|s| (5.0 * s).exp() / 100.0);
        assert!(
            (auc_exact(&scores, &target).unwrap() - auc_exact(&transformed, &target).unwrap())
                .abs()
                < 1e-12
        );
        // Degenerate targets are rejected.
        let empty = snapshot_from(3, &[]);
        assert!(auc_exact(&scores, &empty).is_err());
    }

    #[test]
    fn auc_sampled_basics() {
        let target = snapshot_from(4, &[(0, 1), (2, 3)]);
        let mut scores = Matrix::from_fn(4, 4, |_, _| 0.1);
        scores.set(0, 1, 0.9);
        scores.set(2, 3, 0.9);
        let mut rng = SeededRng::new(3);
        assert_eq!(auc_sampled(&scores, &target, 1000, &mut rng).unwrap(), 1.0);
        let flat = Matrix::from_fn(4, 4, |_, _| 0.5);
        assert_eq!(auc_sampled(&flat, &target, 1000, &mut rng).unwrap(), 0.5);
    }

    #[test]
    fn auc_sampled_converges_to_exact() {
        let mut rng = SeededRng::new(4);
        for trial in 0..20 {
            let target = random_snapshot(10, 0.3, &mut rng);
            if target.edge_count() == 0 {
                continue;
            }
            let scores = random_scores(10, &mut rng);
            let exact = auc_exact(&scores, &target).unwrap();
            // Down-sampling the nonexistent links adds variance on small
            // graphs; the estimator is unbiased, so the mean over reseeded
            // runs is what converges.
            let reseeds = 50;
            let mut sum = 0.0;
            for r in 0..reseeds {
                let mut srng = SeededRng::new(1000 + trial * 100 + r);
                sum += auc_sampled(&scores, &target, 10_000, &mut srng).unwrap();
            }
            let sampled = sum / reseeds as f64;
            assert!((sampled - exact).abs() < 0.02, "trial {trial}: {sampled} vs {exact}");
        }
    }

    #[test]
    fn prauc_new_perfect_ranking() {
        let prev = snapshot_from(4, &[(0, 1)]);
        let target = snapshot_from(4, &[(0, 1), (1, 2), (2, 3)]);
        let mut scores = Matrix::from_fn(4, 4, |_, _| 0.1);
        scores.set(1, 2, 0.9);
        scores.set(2, 3, 0.8);
        let out = prauc_new(&scores, &prev, &target).unwrap();
        assert_eq!(out.value, 1.0);
        assert!(!out.degenerate);
    }

    #[test]
    fn prauc_new_random_scores_near_baseline() {
        // Permutation simulation: mean AP of random rankings approaches the
        // positives/candidates baseline.
        let n = 8;
        let prev = snapshot_from(n, &[]);
        let mut rng = SeededRng::new(5);
        let target = random_snapshot(n, 0.25, &mut rng);
        let positives = target.edge_count();
        let candidates = n * (n - 1);
        let baseline = positives as f64 / candidates as f64;
        let trials = 100;
        let mut sum = 0.0;
        let mut values = Vec::new();
        for _ in 0..trials {
            let scores = random_scores(n, &mut rng);
            let v = prauc_new(&scores, &prev, &target).unwrap().value;
            sum += v;
            values.push(v);
        }
        let mean = sum / trials as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (trials - 1) as f64;
        let sigma_mean = (var / trials as f64).sqrt();
        // AP of a random ranking is biased slightly above the baseline for
        // small candidate sets; 3 sigma around the empirical mean must still
        // bracket a value close to the baseline.
        assert!(
            (mean - baseline).abs() < 3.0 * sigma_mean + 0.05,
            "mean {mean} vs baseline {baseline} (sigma {sigma_mean})"
        );
    }

    #[test]
    fn prauc_new_degenerate_cases() {
        // Complete previous graph: no candidates.
        let n = 3;
        let all: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        let prev = snapshot_from(n, &all);
        let target = snapshot_from(n, &all);
        let scores = Matrix::from_fn(n, n, |_, _| 0.5);
        assert!(prauc_new(&scores, &prev, &target).is_err());
        // No added links: baseline value with flag.
        let prev = snapshot_from(3, &[(0, 1)]);
        let target = snapshot_from(3, &[(0, 1)]);
        let out = prauc_new(&scores, &prev, &target).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn auc_prev_cases() {
        let prev = snapshot_from(4, &[(0, 1), (1, 2), (2, 3)]);
        let target = snapshot_from(4, &[(0, 1), (1, 2)]); // (2,3) removed
        let mut scores = Matrix::from_fn(4, 4, |_, _| 0.1);
        scores.set(0, 1, 0.9);
        scores.set(1, 2, 0.8);
        scores.set(2, 3, 0.2);
        assert_eq!(auc_prev(&scores, &prev, &target).unwrap(), 1.0);
        let flat = Matrix::from_fn(4, 4, |_, _| 0.5);
        assert_eq!(auc_prev(&flat, &prev, &target).unwrap(), 0.5);
        // Small-instance double-loop oracle.
        let mut rng = SeededRng::new(6);
        for _ in 0..20 {
            let prev = random_snapshot(6, 0.5, &mut rng);
            let target = random_snapshot(6, 0.5, &mut rng);
            let scores = random_scores(6, &mut rng);
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for i in 0..6 {
                for j in 0..6 {
                    if i != j && prev.has_edge(i, j) {
                        if target.has_edge(i, j) {
                            pos.push(scores.get(i, j));
                        } else {
                            neg.push(scores.get(i, j));
                        }
                    }
                }
            }
            if pos.is_empty() || neg.is_empty() {
                assert!(auc_prev(&scores, &prev, &target).is_err());
                continue;
            }
            let mut acc = 0.0;
            for &p in &pos {
                for &q in &neg {
                    acc += if p > q {
                        1.0
                    } else if p == q {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
            let want = acc / (pos.len() * neg.len()) as f64;
            assert!((auc_prev(&scores, &prev, &target).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn gmauc_algebra() {
        assert!((gmauc(1.0, 1.0, 3, 2).unwrap() - 1.0).abs() < 1e-12);
        // PRAUC at baseline zeroes the first factor.
        let base = 3.0 / 5.0;
        assert_eq!(gmauc(base, 0.9, 3, 2).unwrap(), 0.0);
        // AUC_prev = 0.5 zeroes the second factor.
        assert_eq!(gmauc(0.9, 0.5, 3, 2).unwrap(), 0.0);
        // Worse-than-random factors clamp to zero instead of going complex.
        assert_eq!(gmauc(0.0, 0.9, 3, 2).unwrap(), 0.0);
        assert_eq!(gmauc(0.9, 0.2, 3, 2).unwrap(), 0.0);
        assert!(gmauc(0.9, 0.9, 0, 0).is_err());
        assert!(gmauc(0.9, 0.9, 3, 0).is_err());
    }

    #[test]
    fn error_rate_cases() {
        let target = snapshot_from(3, &[(0, 1), (1, 2)]);
        assert_eq!(error_rate(&target, &target).unwrap(), 0.0);
        let empty = snapshot_from(3, &[]);
        assert_eq!(error_rate(&empty, &target).unwrap(), 1.0);
        // False positives can push the rate above 1.
        let noisy = snapshot_from(3, &[(0, 2), (1, 0), (2, 0), (2, 1), (0, 1)]);
        // target has 2 links; mismatches: (1,2) missed + 4 extra = 5.
        assert_eq!(error_rate(&noisy, &target).unwrap(), 2.5);
        assert!(error_rate(&target, &empty).is_err());
        // Zero iff exact off-diagonal match.
        let other = snapshot_from(3, &[(0, 1)]);
        assert!(error_rate(&other, &target).unwrap() > 0.0);
    }

    #[test]
    fn degree_importance_star_and_dyads() {
        // Star: spokes all share importance (n-1) + 1.
        let star = snapshot_from(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let imp = degree_importance(&star);
        assert!(imp.scores.iter().all(|&s| s == 5.0));
        let ranks: Vec<usize> = imp.ranks.clone();
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 2, 3, 4]);
        // Disjoint dyads: each link scores 1 + 1.
        let dyads = snapshot_from(4, &[(0, 1), (2, 3)]);
        let imp = degree_importance(&dyads);
        assert!(imp.scores.iter().all(|&s| s == 2.0));
    }

    #[test]
    fn degree_importance_hand_computed() {
        // 5-node example: degrees are in+out sums on the directed graph.
        let snap = snapshot_from(5, &[(0, 1), (1, 2), (2, 0), (0, 3)]);
        // degree: 0 -> 3 (out 2, in 1), 1 -> 2, 2 -> 2, 3 -> 1, 4 -> 0.
        let imp = degree_importance(&snap);
        let lookup = |pair: (usize, usize)| -> f64 {
            imp.scores[imp.links.iter().position(|&l| l == pair).unwrap()]
        };
        assert_eq!(lookup((0, 1)), 5.0);
        assert_eq!(lookup((1, 2)), 4.0);
        assert_eq!(lookup((2, 0)), 5.0);
        assert_eq!(lookup((0, 3)), 4.0);
        // Tie between (0,1) and (2,0): lexicographic order wins.
        assert!(imp.ranks[imp.links.iter().position(|&l| l == (0, 1)).unwrap()]
            < imp.ranks[imp.links.iter().position(|&l| l == (2, 0)).unwrap()]);
    }

    /// Exhaustive shortest-path oracle: enumerate all shortest paths between
    /// every ordered pair by DFS and count fractional traversals per edge.
    fn betweenness_brute_force(target: &Snapshot) -> Matrix {
        let n = target.node_count();
        let mut out = Matrix::zeros(n, n);
        for s in 0..n {
            // BFS distances from s.
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for w in 0..n {
                    if target.has_edge(v, w) && dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            for t in 0..n {
                if t == s || dist[t] == usize::MAX {
                    continue;
                }
                // Enumerate every shortest s->t path.
                let mut paths: Vec<Vec<usize>> = Vec::new();
                let mut stack = vec![vec![s]];
                while let Some(path) = stack.pop() {
                    let v = *path.last().unwrap();
                    if v == t {
                        paths.push(path);
                        continue;
                    }
                    if path.len() - 1 >= dist[t] {
                        continue;
                    }
                    for w in 0..n {
                        if target.has_edge(v, w) && dist[w] == dist[v] + 1 {
                            let mut next = path.clone();
                            next.push(w);
                            stack.push(next);
                        }
                    }
                }
                let total = paths.len() as f64;
                for path in &paths {
                    for e in path.windows(2) {
                        out.set(e[0], e[1], out.get(e[0], e[1]) + 1.0 / total);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn edge_betweenness_single_path() {
        // a -> b -> c: each edge lies on two source-target shortest paths.
        let snap = snapshot_from(3, &[(0, 1), (1, 2)]);
        let imp = edge_betweenness(&snap);
        let lookup = |pair: (usize, usize)| -> f64 {
            imp.scores[imp.links.iter().position(|&l| l == pair).unwrap()]
        };
        assert_eq!(lookup((0, 1)), 2.0);
        assert_eq!(lookup((1, 2)), 2.0);
    }

    #[test]
    fn edge_betweenness_disconnected_dyads() {
        let snap = snapshot_from(4, &[(0, 1), (2, 3)]);
        let imp = edge_betweenness(&snap);
        assert!(imp.scores.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn edge_betweenness_matches_exhaustive_oracle() {
        let mut rng = SeededRng::new(7);
        for trial in 0..100 {
            let n = 3 + trial % 4; // up to 6 nodes
            let snap = random_snapshot(n, 0.4, &mut rng);
            let imp = edge_betweenness(&snap);
            let oracle = betweenness_brute_force(&snap);
            for (idx, &(i, j)) in imp.links.iter().enumerate() {
                assert!(
                    (imp.scores[idx] - oracle.get(i, j)).abs() < 1e-9,
                    "trial {trial} edge ({i},{j}): {} vs {}",
                    imp.scores[idx],
                    oracle.get(i, j)
                );
            }
        }
    }

    #[test]
    fn top_fraction_error_rate_cases() {
        let target = snapshot_from(5, &[(0, 1), (0, 2), (0, 3), (1, 2)]);
        let imp = degree_importance(&target);
        assert_eq!(
            top_fraction_error_rate(&target, &imp, 0.10).unwrap(),
            0.0
        );
        let empty = snapshot_from(5, &[]);
        assert_eq!(
            top_fraction_error_rate(&empty, &imp, 0.10).unwrap(),
            1.0
        );
        assert!(top_fraction_error_rate(&target, &imp, 0.0).is_err());
        assert!(top_fraction_error_rate(&target, &imp, 1.5).is_err());
        let no_links = degree_importance(&empty);
        assert!(top_fraction_error_rate(&target, &no_links, 0.1).is_err());
    }

    #[test]
    fn top_fraction_full_equals_false_negative_rate() {
        let mut rng = SeededRng::new(8);
        for _ in 0..20 {
            let target = random_snapshot(7, 0.3, &mut rng);
            if target.edge_count() == 0 {
                continue;
            }
            let predicted = random_snapshot(7, 0.3, &mut rng);
            let imp = degree_importance(&target);
            let got = top_fraction_error_rate(&predicted, &imp, 1.0).unwrap();
            let want = false_negative_count(&predicted, &target) as f64
                / target.edge_count() as f64;
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn structural_properties() {
        let triangle = snapshot_from(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(avg_degree(&triangle), 2.0);
        assert_eq!(avg_clustering(&triangle), 1.0);
        let star = snapshot_from(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(avg_clustering(&star), 0.0);
        assert!((avg_degree(&star) - 8.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn clustering_matches_triple_loop_oracle() {
        let mut rng = SeededRng::new(9);
        for _ in 0..100 {
            let snap = random_snapshot(10, 0.3, &mut rng);
            let n = 10;
            // Triple-loop triangle counting on the symmetrized graph.
            let sym = |a: usize, b: usize| snap.has_edge(a, b) || snap.has_edge(b, a);
            let mut sum = 0.0;
            for v in 0..n {
                let nbrs: Vec<usize> = (0..n).filter(|&u| u != v && sym(v, u)).collect();
                let k = nbrs.len();
                if k < 2 {
                    continue;
                }
                let mut tri = 0usize;
                for x in 0..k {
                    for y in x + 1..k {
                        if sym(nbrs[x], nbrs[y]) {
                            tri += 1;
                        }
                    }
                }
                sum += 2.0 * tri as f64 / (k * (k - 1)) as f64;
            }
            let want = sum / n as f64;
            assert!((avg_clustering(&snap) - want).abs() < 1e-12);
        }
    }
}
