//! Workload clustering by direct minimization of the quality measure Q.
//!
//! Greedy agglomeration (repeatedly merge the cluster pair whose merge most
//! decreases Q) alternating with single-query relocation passes, until no
//! single merge or move improves Q. The number of clusters is emergent.
//!
//! Because cross-cluster similarity equals the partition-independent total
//! pairwise similarity minus the intra-cluster similarity, Q decomposes as
//!
//!   Q(P) = total_sim + sum over clusters of (intra Dissim - intra Sim)
//!
//! so the change from merging clusters A and B is the sum of
//! `dissim(k,l) - sim(k,l)` over the cross pairs, and moves are equally
//! local. Every step's delta comes from this cached pair-score matrix; the
//! running Q is maintained incrementally and checked against the full
//! definition in tests.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::similarity::{pair_measures, Partition};
use crate::workload::ClusteringContext;

/// One accepted step of the local search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    /// Cluster `from` merged into cluster `into`.
    Merge { into: usize, from: usize },
    /// Query `query` moved from cluster `from` to cluster `to`.
    Move { query: usize, from: usize, to: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub kind: StepKind,
    pub delta_q: i64,
    pub q_after: u64,
}

impl TraceStep {
    /// One-line rendering for the `--trace` dump.
    pub fn render(&self) -> String {
        match &self.kind {
            StepKind::Merge { into, from } => {
                format!("merge into={into} from={from} delta={} q={}", self.delta_q, self.q_after)
            }
            StepKind::Move { query, from, to } => format!(
                "move query={query} from={from} to={to} delta={} q={}",
                self.delta_q, self.q_after
            ),
        }
    }
}

/// Result of a clustering run.
#[derive(Debug, Clone)]
pub struct ClusteringOutcome {
    pub partition: Partition,
    pub trace: Vec<TraceStep>,
    pub q_singletons: u64,
    pub q_final: u64,
}

struct Search {
    // signed pair scores: dissim - sim, flattened n x n
    scores: Vec<i64>,
    n: usize,
    // cluster id -> members; empty vec marks a dead cluster
    members: Vec<Vec<usize>>,
    cluster_of: Vec<usize>,
    free_ids: BTreeSet<usize>,
    q_current: u64,
    trace: Vec<TraceStep>,
}

impl Search {
    fn score(&self, k: usize, l: usize) -> i64 {
        self.scores[k * self.n + l]
    }

    /// Sum of pair scores between query `q` and the members of a cluster,
    /// `q` itself excluded.
    fn link(&self, q: usize, cluster: usize) -> i64 {
        self.members[cluster]
            .iter()
            .filter(|&&l| l != q)
            .map(|&l| self.score(q, l))
            .sum()
    }

    fn cross(&self, a: usize, b: usize) -> i64 {
        self.members[a]
            .iter()
            .map(|&k| self.members[b].iter().map(|&l| self.score(k, l)).sum::<i64>())
            .sum()
    }

    fn live_ids(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&c| !self.members[c].is_empty()).collect()
    }

    fn apply_delta(&mut self, delta: i64) -> u64 {
        let q = self.q_current as i64 + delta;
        debug_assert!(q >= 0, "Q must stay non-negative");
        self.q_current = q as u64;
        self.q_current
    }

    /// Merge the best pair while some merge strictly lowers Q. Ties prefer
    /// the smallest (id, id) pair.
    fn merge_pass(&mut self) -> bool {
        let mut changed = false;
        loop {
            let live = self.live_ids();
            let mut best: Option<(i64, usize, usize)> = None;
            for (i, &a) in live.iter().enumerate() {
                for &b in &live[i + 1..] {
                    let delta = self.cross(a, b);
                    if best.is_none_or(|(d, _, _)| delta < d) {
                        best = Some((delta, a, b));
                    }
                }
            }
            match best {
                Some((delta, a, b)) if delta < 0 => {
                    let moved = std::mem::take(&mut self.members[b]);
                    for &q in &moved {
                        self.cluster_of[q] = a;
                    }
                    self.members[a].extend(moved);
                    self.members[a].sort_unstable();
                    self.free_ids.insert(b);
                    let q_after = self.apply_delta(delta);
                    self.trace.push(TraceStep {
                        kind: StepKind::Merge { into: a, from: b },
                        delta_q: delta,
                        q_after,
                    });
                    changed = true;
                }
                _ => return changed,
            }
        }
    }

    /// Relocate single queries while some move strictly lowers Q. Existing
    /// clusters are tried in id order; splitting out into a fresh singleton
    /// is considered last.
    fn move_pass(&mut self) -> bool {
        let mut changed = false;
        loop {
            let mut moved_any = false;
            for q in 0..self.n {
                let from = self.cluster_of[q];
                let link_from = self.link(q, from);
                let mut best: Option<(i64, Option<usize>)> = None;
                for c in self.live_ids() {
                    if c == from {
                        continue;
                    }
                    let delta = self.link(q, c) - link_from;
                    if best.is_none_or(|(d, _)| delta < d) {
                        best = Some((delta, Some(c)));
                    }
                }
                if self.members[from].len() > 1 {
                    let delta = -link_from;
                    if best.is_none_or(|(d, _)| delta < d) {
                        best = Some((delta, None));
                    }
                }
                if let Some((delta, target)) = best {
                    if delta < 0 {
                        let to = match target {
                            Some(c) => c,
                            None => {
                                let id = *self
                                    .free_ids
                                    .iter()
                                    .next()
                                    .expect("a split implies an earlier merge freed an id");
                                self.free_ids.remove(&id);
                                id
                            }
                        };
                        self.members[from].retain(|&m| m != q);
                        if self.members[from].is_empty() {
                            self.free_ids.insert(from);
                        }
                        self.members[to].push(q);
                        self.members[to].sort_unstable();
                        self.cluster_of[q] = to;
                        let q_after = self.apply_delta(delta);
                        self.trace.push(TraceStep {
                            kind: StepKind::Move { query: q, from, to },
                            delta_q: delta,
                            q_after,
                        });
                        moved_any = true;
                        changed = true;
                    }
                }
            }
            if !moved_any {
                return changed;
            }
        }
    }
}

/// Partition the context's queries so that Q is at a local minimum under
/// single merges and single-query moves. Deterministic; `seed` is accepted
/// for interface stability but the search itself takes no random choices.
pub fn cluster_queries(ctx: &ClusteringContext, _seed: u64) -> Result<ClusteringOutcome> {
    let n = ctx.num_queries();
    let mut scores = vec![0i64; n * n];
    let mut total_sim = 0u64;
    for k in 0..n {
        for l in (k + 1)..n {
            let (sim, dissim) = pair_measures(ctx, k, l)?;
            let score = dissim as i64 - sim as i64;
            scores[k * n + l] = score;
            scores[l * n + k] = score;
            total_sim += sim;
        }
    }

    // Q(singletons) is exactly the total cross similarity.
    let mut search = Search {
        scores,
        n,
        members: (0..n).map(|i| vec![i]).collect(),
        cluster_of: (0..n).collect(),
        free_ids: BTreeSet::new(),
        q_current: total_sim,
        trace: Vec::new(),
    };

    loop {
        let merged = search.merge_pass();
        let moved = search.move_pass();
        if !merged && !moved {
            break;
        }
    }

    let mut partition = Partition::new(
        search
            .members
            .iter()
            .filter(|m| !m.is_empty())
            .map(|m| m.iter().copied().collect())
            .collect(),
    );
    partition.canonicalize();
    Ok(ClusteringOutcome {
        partition,
        trace: search.trace,
        q_singletons: total_sim,
        q_final: search.q_current,
    })
}
