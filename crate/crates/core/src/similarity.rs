//! Pairwise, inter-set, and intra-set similarity/dissimilarity measures over
//! the query-attribute matrix, and the clustering quality measure Q.
//!
//! All measures are exact integer counts. Two queries are similar on an
//! attribute when both use it; dissimilar when exactly one uses it. Shared
//! absence contributes to neither.

use std::collections::BTreeSet;

use crate::error::{AdvisorError, Result};
use crate::workload::ClusteringContext;

/// A partition of the context's rows into disjoint non-empty clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    clusters: Vec<BTreeSet<usize>>,
}

impl Partition {
    pub fn new(clusters: Vec<BTreeSet<usize>>) -> Self {
        Partition { clusters }
    }

    /// One singleton cluster per row.
    pub fn singletons(n: usize) -> Self {
        Partition {
            clusters: (0..n).map(|i| BTreeSet::from([i])).collect(),
        }
    }

    /// All rows in one cluster.
    pub fn single_cluster(n: usize) -> Self {
        Partition {
            clusters: vec![(0..n).collect()],
        }
    }

    pub fn clusters(&self) -> &[BTreeSet<usize>] {
        &self.clusters
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Check disjointness, coverage of `0..n`, and absence of empty clusters.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for c in &self.clusters {
            if c.is_empty() {
                return Err(AdvisorError::InvalidPartition("empty cluster".into()));
            }
            for &q in c {
                if q >= n {
                    return Err(AdvisorError::InvalidPartition(format!(
                        "query id {q} out of range {n}"
                    )));
                }
                if seen[q] {
                    return Err(AdvisorError::InvalidPartition(format!(
                        "query id {q} appears in two clusters"
                    )));
                }
                seen[q] = true;
            }
        }
        if let Some(q) = seen.iter().position(|&s| !s) {
            return Err(AdvisorError::InvalidPartition(format!(
                "query id {q} is not covered"
            )));
        }
        Ok(())
    }

    /// Clusters sorted by their smallest member, for canonical output.
    pub fn canonicalize(&mut self) {
        self.clusters.sort_by_key(|c| *c.first().expect("non-empty cluster"));
    }
}

/// sim and dissim between two queries: counts of attributes present in both,
/// and of attributes present in exactly one.
pub fn pair_measures(ctx: &ClusteringContext, k: usize, l: usize) -> Result<(u64, u64)> {
    ctx.check_row(k)?;
    ctx.check_row(l)?;
    let (a, b) = (ctx.row(k), ctx.row(l));
    Ok((a.and_count(b), a.xor_count(b)))
}

/// Sim and Dissim between two disjoint query sets: sums over the full cross
/// product of pairs.
pub fn inter_set_measures(
    ctx: &ClusteringContext,
    ca: &BTreeSet<usize>,
    cb: &BTreeSet<usize>,
) -> Result<(u64, u64)> {
    if let Some(&shared) = ca.intersection(cb).next() {
        return Err(AdvisorError::OverlappingSets { id: shared });
    }
    let mut sim = 0;
    let mut dissim = 0;
    for &k in ca {
        for &l in cb {
            let (s, d) = pair_measures(ctx, k, l)?;
            sim += s;
            dissim += d;
        }
    }
    Ok((sim, dissim))
}

/// Sim and Dissim within one query set: sums over unordered pairs.
pub fn intra_set_measures(ctx: &ClusteringContext, ca: &BTreeSet<usize>) -> Result<(u64, u64)> {
    let members: Vec<usize> = ca.iter().copied().collect();
    let mut sim = 0;
    let mut dissim = 0;
    for (i, &k) in members.iter().enumerate() {
        for &l in &members[i + 1..] {
            let (s, d) = pair_measures(ctx, k, l)?;
            sim += s;
            dissim += d;
        }
    }
    Ok((sim, dissim))
}

/// Clustering quality: cross-cluster similarity plus within-cluster
/// dissimilarity. Lower values indicate a more natural clustering.
pub fn quality(ctx: &ClusteringContext, partition: &Partition) -> Result<u64> {
    partition.validate(ctx.num_queries())?;
    let clusters = partition.clusters();
    let mut q = 0;
    for (i, ca) in clusters.iter().enumerate() {
        for cb in &clusters[i + 1..] {
            q += inter_set_measures(ctx, ca, cb)?.0;
        }
        q += intra_set_measures(ctx, ca)?.1;
    }
    Ok(q)
}
