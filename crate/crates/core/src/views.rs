//! Candidate views: derivation from queries, pairwise merging, levelwise
//! merged-view generation per cluster, and view-to-query answerability.
//!
//! Merging two views keeps only their shared selection predicates and
//! promotes the attributes of every non-shared predicate into the grouping
//! set, so the merged view still answers everything its parents answered.
//! Levelwise generation walks the merge lattice the way frequent-itemset
//! miners walk theirs: two level-(k-1) views combine when their ordered leaf
//! lists share the first k-2 entries.

use std::collections::BTreeSet;

use crate::workload::{
    AggregateOp, Aggregation, Attribute, ParsedQuery, SelectionPredicate,
};

/// Direction of the merge-effectiveness cost gate.
///
/// `Paper` keeps a merged view when its cost is at least `x` times the sum
/// of its parents' costs; `Inverted` keeps it when the cost is at most that
/// bound, which matches the prose reading that a merged view must not be
/// significantly more expensive than its parents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeGate {
    Paper,
    Inverted,
}

impl MergeGate {
    fn passes(self, merged_cost: f64, parent_cost_sum: f64, x: f64) -> bool {
        match self {
            MergeGate::Paper => merged_cost >= parent_cost_sum * x,
            MergeGate::Inverted => merged_cost <= parent_cost_sum * x,
        }
    }
}

/// A materializable view over the star schema; a node of the merge lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateView {
    id: usize,
    tables: BTreeSet<String>,
    grouping: BTreeSet<Attribute>,
    predicates: BTreeSet<SelectionPredicate>,
    aggregations: BTreeSet<Aggregation>,
    parents: BTreeSet<usize>,
    source_queries: BTreeSet<usize>,
    /// Ordered leaf ids, the lexicographic position list used by levelwise
    /// candidate generation.
    leaf_ids: Vec<usize>,
    est_rows: Option<f64>,
    est_bytes: Option<f64>,
}

impl CandidateView {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tables(&self) -> &BTreeSet<String> {
        &self.tables
    }

    pub fn grouping(&self) -> &BTreeSet<Attribute> {
        &self.grouping
    }

    pub fn predicates(&self) -> &BTreeSet<SelectionPredicate> {
        &self.predicates
    }

    pub fn aggregations(&self) -> &BTreeSet<Aggregation> {
        &self.aggregations
    }

    pub fn parents(&self) -> &BTreeSet<usize> {
        &self.parents
    }

    pub fn source_queries(&self) -> &BTreeSet<usize> {
        &self.source_queries
    }

    pub fn leaf_ids(&self) -> &[usize] {
        &self.leaf_ids
    }

    pub fn est_rows(&self) -> Option<f64> {
        self.est_rows
    }

    pub fn est_bytes(&self) -> Option<f64> {
        self.est_bytes
    }

    pub fn set_estimates(&mut self, rows: f64, bytes: f64) {
        self.est_rows = Some(rows);
        self.est_bytes = Some(bytes);
    }

    /// Definition equality: same tables, grouping, predicates, and
    /// aggregations, ignoring lattice bookkeeping.
    pub fn same_definition(&self, other: &CandidateView) -> bool {
        self.tables == other.tables
            && self.grouping == other.grouping
            && self.predicates == other.predicates
            && self.aggregations == other.aggregations
    }

    /// A predicate whose attribute is kept unaggregated in the grouping set
    /// can be applied on top of the view, so it must not also restrict the
    /// view's contents.
    fn normalize(&mut self) {
        let grouping = &self.grouping;
        self.predicates.retain(|p| !grouping.contains(&p.attribute));
    }
}

/// Rewrite avg(m) into sum(m) + count(m) so the result stays re-aggregable
/// over any coarser grouping.
fn expand_avg(aggregations: &BTreeSet<Aggregation>) -> BTreeSet<Aggregation> {
    let mut out = BTreeSet::new();
    for a in aggregations {
        if a.op == AggregateOp::Avg {
            out.insert(Aggregation { op: AggregateOp::Sum, measure: a.measure.clone() });
            out.insert(Aggregation { op: AggregateOp::Count, measure: a.measure.clone() });
        } else {
            out.insert(a.clone());
        }
    }
    out
}

/// The leaf view answering exactly one query. Uses the query id as both view
/// id and leaf id.
pub fn view_from_query(query: &ParsedQuery) -> CandidateView {
    let mut view = CandidateView {
        id: query.id(),
        tables: query.tables().clone(),
        grouping: query.grouping().clone(),
        predicates: query.predicates().clone(),
        aggregations: expand_avg(query.aggregations()),
        parents: BTreeSet::new(),
        source_queries: BTreeSet::from([query.id()]),
        leaf_ids: vec![query.id()],
        est_rows: None,
        est_bytes: None,
    };
    view.normalize();
    view
}

/// Merge two views of the same cluster into the smallest view answering
/// both views' queries: shared predicates are kept, the attributes of
/// non-shared predicates join the grouping set, aggregations and tables are
/// unioned.
pub fn merge_view_pair(v1: &CandidateView, v2: &CandidateView, id: usize) -> CandidateView {
    let shared: BTreeSet<SelectionPredicate> =
        v1.predicates.intersection(&v2.predicates).cloned().collect();
    let mut grouping: BTreeSet<Attribute> =
        v1.grouping.union(&v2.grouping).cloned().collect();
    for p in v1.predicates.union(&v2.predicates) {
        if !shared.contains(p) {
            grouping.insert(p.attribute.clone());
        }
    }
    let mut leaf_ids: Vec<usize> = v1.leaf_ids.iter().chain(&v2.leaf_ids).copied().collect();
    leaf_ids.sort_unstable();
    leaf_ids.dedup();
    let mut view = CandidateView {
        id,
        tables: v1.tables.union(&v2.tables).cloned().collect(),
        grouping,
        predicates: shared,
        aggregations: expand_avg(&v1.aggregations.union(&v2.aggregations).cloned().collect()),
        parents: BTreeSet::from([v1.id, v2.id]),
        source_queries: v1.source_queries.union(&v2.source_queries).cloned().collect(),
        leaf_ids,
        est_rows: None,
        est_bytes: None,
    };
    view.normalize();
    view
}

/// Can `view` answer `query`?
///
/// True when the view joins at least the query's tables, every requested
/// aggregate is derivable from the view's aggregation columns, the query's
/// grouping survives in the view, every query predicate is either identical
/// to a view predicate or applicable on top (its attribute is kept in the
/// grouping), and the view itself applies no predicate the query does not.
pub fn can_answer(view: &CandidateView, query: &ParsedQuery) -> bool {
    if !query.tables().is_subset(view.tables()) {
        return false;
    }
    if !query.grouping().is_subset(view.grouping()) {
        return false;
    }
    for agg in query.aggregations() {
        let derivable = match agg.op {
            // avg must be recomputed from sum and count: re-aggregating
            // stored averages over a coarser grouping would be wrong.
            AggregateOp::Avg => {
                view.aggregations.contains(&Aggregation {
                    op: AggregateOp::Sum,
                    measure: agg.measure.clone(),
                }) && view.aggregations.contains(&Aggregation {
                    op: AggregateOp::Count,
                    measure: agg.measure.clone(),
                })
            }
            _ => view.aggregations.contains(agg),
        };
        if !derivable {
            return false;
        }
    }
    for pred in query.predicates() {
        if !view.predicates.contains(pred) && !view.grouping.contains(&pred.attribute) {
            return false;
        }
    }
    // The view must not filter rows the query still needs.
    view.predicates.is_subset(query.predicates())
}

/// One level of candidate generation: combine views whose ordered leaf lists
/// share all but the last entry, then apply the cost gate.
pub fn view_gen(
    previous: &[CandidateView],
    x: f64,
    gate: MergeGate,
    cost: &dyn Fn(&CandidateView) -> f64,
    next_id: &mut usize,
) -> Vec<CandidateView> {
    let mut ordered: Vec<&CandidateView> = previous.iter().collect();
    ordered.sort_by(|a, b| a.leaf_ids.cmp(&b.leaf_ids));
    let mut out = Vec::new();
    for (i, v) in ordered.iter().enumerate() {
        for u in &ordered[i + 1..] {
            let k = v.leaf_ids.len();
            debug_assert_eq!(u.leaf_ids.len(), k);
            if v.leaf_ids[..k - 1] != u.leaf_ids[..k - 1] {
                // ordered by leaf list, so no later u can share the prefix
                break;
            }
            if v.leaf_ids[k - 1] >= u.leaf_ids[k - 1] {
                continue;
            }
            let candidate = merge_view_pair(v, u, *next_id);
            if gate.passes(cost(&candidate), cost(v) + cost(u), x) {
                *next_id += 1;
                out.push(candidate);
            }
        }
    }
    out
}

/// Result of running the merging process on one cluster.
#[derive(Debug, Clone)]
pub struct MergeOutcome {
    pub views: Vec<CandidateView>,
    /// Number of views generated at each lattice level, leaves first.
    pub per_level: Vec<usize>,
}

/// Levelwise merged-view generation for one cluster's leaf views. Each new
/// level's candidates displace their parents, so the returned set holds the
/// maximal merges plus any views that never merged.
pub fn merged_view_generation(
    leaves: Vec<CandidateView>,
    x: f64,
    gate: MergeGate,
    cost: &dyn Fn(&CandidateView) -> f64,
    next_id: &mut usize,
) -> MergeOutcome {
    let mut per_level = vec![leaves.len()];
    let mut merged: Vec<CandidateView> = leaves.clone();
    let mut frontier = leaves;
    while !frontier.is_empty() {
        let candidates = view_gen(&frontier, x, gate, cost, next_id);
        if candidates.is_empty() {
            break;
        }
        per_level.push(candidates.len());
        merged.extend(candidates.iter().cloned());
        let parent_ids: BTreeSet<usize> =
            merged.iter().flat_map(|v| v.parents.iter().copied()).collect();
        merged.retain(|v| !parent_ids.contains(&v.id));
        frontier = candidates;
    }
    MergeOutcome { views: merged, per_level }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_fixtures::{parse_fig2_workload, parse_queries, FIG2_Q1, FIG2_Q3};
    use crate::workload::{parse_query, Literal, PredicateOp};

    fn attr(s: &str) -> Attribute {
        let (t, c) = s.split_once('.').unwrap();
        Attribute::new(t, c)
    }

    fn pred_eq(attr_name: &str, value: f64) -> SelectionPredicate {
        SelectionPredicate {
            attribute: attr(attr_name),
            op: PredicateOp::Eq(Literal::number(value)),
        }
    }

    #[test]
    fn leaf_view_mirrors_its_query() {
        let q = parse_query(FIG2_Q1, "sales").unwrap();
        let v = view_from_query(&q);
        assert_eq!(v.tables(), q.tables());
        assert_eq!(v.grouping(), q.grouping());
        assert_eq!(v.predicates(), q.predicates());
        assert_eq!(v.aggregations(), q.aggregations());
        assert_eq!(v.source_queries(), &BTreeSet::from([q.id()]));
        assert!(v.parents().is_empty());
        assert!(can_answer(&v, &q));
    }

    #[test]
    fn aggregate_only_query_yields_single_row_view() {
        let q = crate::workload::parse_query("select sum(m) from f", "f").unwrap();
        let v = view_from_query(&q);
        assert!(v.grouping().is_empty());
        assert!(v.predicates().is_empty());
        assert!(can_answer(&v, &q));
    }

    #[test]
    fn avg_leaf_is_expanded_to_sum_and_count() {
        let q = crate::workload::parse_query("select avg(m) from f group by f.a", "f").unwrap();
        let v = view_from_query(&q);
        assert_eq!(
            v.aggregations(),
            &BTreeSet::from([
                Aggregation { op: AggregateOp::Sum, measure: attr("f.m") },
                Aggregation { op: AggregateOp::Count, measure: attr("f.m") },
            ])
        );
        assert!(can_answer(&v, &q));
    }

    #[test]
    fn merge_of_q1_and_q3_follows_the_shared_predicate_rule() {
        let workload = parse_fig2_workload();
        let v1 = view_from_query(&workload[0]);
        let v3 = view_from_query(&workload[2]);
        let merged = merge_view_pair(&v1, &v3, 100);

        assert_eq!(
            merged.aggregations(),
            &BTreeSet::from([
                Aggregation { op: AggregateOp::Sum, measure: attr("sales.quantity_sold") },
                Aggregation { op: AggregateOp::Sum, measure: attr("sales.amount_sold") },
            ])
        );
        assert!(merged.predicates().is_empty(), "fiscal_day=2 and =3 are not shared");
        assert_eq!(
            merged.grouping(),
            &BTreeSet::from([
                attr("sales.time_id"),
                attr("sales.cust_id"),
                attr("times.fiscal_day"),
                attr("customers.cust_marital_status"),
                attr("products.prod_category"),
            ])
        );
        assert_eq!(
            merged.tables(),
            &["sales", "times", "customers", "products"]
                .map(str::to_string)
                .into_iter()
                .collect()
        );
        assert_eq!(merged.source_queries(), &BTreeSet::from([0, 2]));
        assert!(can_answer(&merged, &workload[0]));
        assert!(can_answer(&merged, &workload[2]));
    }

    #[test]
    fn merge_is_idempotent_on_identical_views() {
        let q = parse_query(FIG2_Q1, "sales").unwrap();
        let v = view_from_query(&q);
        let merged = merge_view_pair(&v, &v, 1);
        assert!(merged.same_definition(&v));
    }

    #[test]
    fn shared_predicate_is_retained_not_promoted() {
        let qs = parse_queries(&[
            "select sum(quantity_sold) from sales, times where sales.time_id = times.time_id \
             and times.fiscal_day = 2 group by sales.time_id",
            "select sum(amount_sold) from sales, times where sales.time_id = times.time_id \
             and times.fiscal_day = 2 group by sales.cust_id",
        ]);
        let merged = merge_view_pair(&view_from_query(&qs[0]), &view_from_query(&qs[1]), 9);
        assert_eq!(merged.predicates(), &BTreeSet::from([pred_eq("times.fiscal_day", 2.0)]));
        assert!(!merged.grouping().contains(&attr("times.fiscal_day")));
    }

    #[test]
    fn merge_is_commutative() {
        let workload = parse_fig2_workload();
        for a in 0..3 {
            for b in 0..3 {
                let va = view_from_query(&workload[a]);
                let vb = view_from_query(&workload[b]);
                assert!(merge_view_pair(&va, &vb, 7).same_definition(&merge_view_pair(
                    &vb, &va, 7
                )));
            }
        }
    }

    #[test]
    fn predicate_conflict_blocks_answering() {
        let qs = parse_queries(&[
            "select sum(quantity_sold) from sales, times where sales.time_id = times.time_id \
             and times.fiscal_day = 2 group by sales.time_id",
            "select sum(quantity_sold) from sales, times where sales.time_id = times.time_id \
             and times.fiscal_day = 3 group by sales.time_id",
        ]);
        let view = view_from_query(&qs[0]);
        assert!(!can_answer(&view, &qs[1]));
    }

    #[test]
    fn view_with_extra_predicate_cannot_answer_looser_query() {
        let qs = parse_queries(&[
            "select sum(quantity_sold) from sales, times where sales.time_id = times.time_id \
             and times.fiscal_day = 2 group by sales.time_id",
            "select sum(quantity_sold) from sales, times where sales.time_id = times.time_id \
             group by sales.time_id",
        ]);
        let view = view_from_query(&qs[0]);
        assert!(!can_answer(&view, &qs[1]), "the view is missing rows with fiscal_day != 2");
        // and the other way around works: the unfiltered view answers both
        let loose = view_from_query(&qs[1]);
        assert!(!can_answer(&loose, &qs[0]), "fiscal_day is aggregated away in the loose view");
    }

    #[test]
    fn view_gen_prefix_rule() {
        let workload = parse_fig2_workload();
        let leaves: Vec<CandidateView> = workload.iter().map(view_from_query).collect();
        let mut next_id = 10;
        let free = |_: &CandidateView| 1.0;
        // level 2 from 3 leaves: all pairs share the empty prefix
        let level2 = view_gen(&leaves, 0.33, MergeGate::Paper, &free, &mut next_id);
        assert_eq!(level2.len(), 3);
        let lists: Vec<Vec<usize>> = level2.iter().map(|v| v.leaf_ids().to_vec()).collect();
        assert_eq!(lists, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        // level 3: {0,1} and {0,2} share prefix [0]; {1,2} pairs with nobody
        let level3 = view_gen(&level2, 0.33, MergeGate::Paper, &free, &mut next_id);
        assert_eq!(level3.len(), 1);
        assert_eq!(level3[0].leaf_ids(), &[0, 1, 2]);
    }

    #[test]
    fn view_gen_requires_shared_prefix() {
        let workload = parse_queries(&[FIG2_Q1, FIG2_Q1, FIG2_Q3, FIG2_Q3]);
        let leaves: Vec<CandidateView> = workload.iter().map(view_from_query).collect();
        let mut next_id = 50;
        let free = |_: &CandidateView| 1.0;
        let level2 = view_gen(&leaves, 0.33, MergeGate::Paper, &free, &mut next_id);
        // keep only {0,1} and {2,3}: disjoint prefixes
        let kept: Vec<&CandidateView> =
            level2.iter().filter(|v| v.leaf_ids() == [0, 1] || v.leaf_ids() == [2, 3]).collect();
        let level3 = view_gen(
            &kept.into_iter().cloned().collect::<Vec<_>>(),
            0.33,
            MergeGate::Paper,
            &free,
            &mut next_id,
        );
        assert!(level3.is_empty());
    }

    #[test]
    fn view_gen_cost_gate_excludes_candidates() {
        let workload = parse_queries(&[FIG2_Q1, FIG2_Q3]);
        let leaves: Vec<CandidateView> = workload.iter().map(view_from_query).collect();
        let mut next_id = 20;
        // parents cost 10 each; merged view costs 1 -> fails cost >= 20*0.33
        let stub = |v: &CandidateView| if v.parents().is_empty() { 10.0 } else { 1.0 };
        let none = view_gen(&leaves, 0.33, MergeGate::Paper, &stub, &mut next_id);
        assert!(none.is_empty());
        // inverted gate keeps exactly that candidate
        let some = view_gen(&leaves, 0.33, MergeGate::Inverted, &stub, &mut next_id);
        assert_eq!(some.len(), 1);
    }

    #[test]
    fn single_query_cluster_passes_through() {
        let workload = parse_queries(&[FIG2_Q1]);
        let leaves = vec![view_from_query(&workload[0])];
        let mut next_id = 1;
        let out = merged_view_generation(
            leaves.clone(),
            0.33,
            MergeGate::Paper,
            &|_| 1.0,
            &mut next_id,
        );
        assert_eq!(out.views.len(), 1);
        assert!(out.views[0].same_definition(&leaves[0]));
        assert_eq!(out.per_level, vec![1]);
    }

    #[test]
    fn identical_pair_collapses_to_single_view() {
        let workload = parse_queries(&[FIG2_Q1, FIG2_Q1]);
        let leaves: Vec<CandidateView> = workload.iter().map(view_from_query).collect();
        let mut next_id = 2;
        let out =
            merged_view_generation(leaves.clone(), 0.33, MergeGate::Paper, &|_| 1.0, &mut next_id);
        assert_eq!(out.views.len(), 1);
        assert!(out.views[0].same_definition(&leaves[0]));
        assert_eq!(out.views[0].source_queries(), &BTreeSet::from([0, 1]));
    }

    #[test]
    fn failed_gate_keeps_both_leaves() {
        let workload = parse_queries(&[FIG2_Q1, FIG2_Q3]);
        let leaves: Vec<CandidateView> = workload.iter().map(view_from_query).collect();
        let mut next_id = 2;
        let stub = |v: &CandidateView| if v.parents().is_empty() { 10.0 } else { 1.0 };
        let out = merged_view_generation(leaves, 0.33, MergeGate::Paper, &stub, &mut next_id);
        assert_eq!(out.views.len(), 2);
        assert!(out.views.iter().all(|v| v.parents().is_empty()));
    }

    #[test]
    fn every_cluster_query_stays_answerable_and_parents_are_gone() {
        let workload = parse_fig2_workload();
        let leaves: Vec<CandidateView> = workload.iter().map(view_from_query).collect();
        let mut next_id = workload.len();
        let out = merged_view_generation(leaves, 0.33, MergeGate::Paper, &|_| 1.0, &mut next_id);
        for q in &workload {
            assert!(
                out.views.iter().any(|v| can_answer(v, q)),
                "query {} lost answerability",
                q.id()
            );
        }
        // no view in M is an ancestor (through recorded parents) of another
        let ids: BTreeSet<usize> = out.views.iter().map(|v| v.id()).collect();
        for v in &out.views {
            for p in v.parents() {
                assert!(!ids.contains(p), "parent {p} of view {} survived", v.id());
            }
        }
    }

    #[test]
    fn merged_sources_cover_parent_sources() {
        let workload = parse_fig2_workload();
        let v1 = view_from_query(&workload[0]);
        let v2 = view_from_query(&workload[1]);
        let merged = merge_view_pair(&v1, &v2, 42);
        assert!(merged.source_queries().is_superset(v1.source_queries()));
        assert!(merged.source_queries().is_superset(v2.source_queries()));
        for q in [&workload[0], &workload[1]] {
            assert!(can_answer(&merged, q));
        }
    }

    #[test]
    fn proposition_one_field_check_on_fig2_pairs() {
        // independent set-algebra oracle, plus the documented normalization:
        // a shared predicate whose attribute lands in the merged grouping is
        // applied on top instead of restricting the view
        let workload = parse_fig2_workload();
        for a in 0..3 {
            for b in 0..3 {
                let v1 = view_from_query(&workload[a]);
                let v2 = view_from_query(&workload[b]);
                let merged = merge_view_pair(&v1, &v2, 99);

                let s12: BTreeSet<SelectionPredicate> =
                    v1.predicates().intersection(v2.predicates()).cloned().collect();
                let mut g12: BTreeSet<Attribute> =
                    v1.grouping().union(v2.grouping()).cloned().collect();
                let all: BTreeSet<SelectionPredicate> =
                    v1.predicates().union(v2.predicates()).cloned().collect();
                for p in all.difference(&s12) {
                    g12.insert(p.attribute.clone());
                }
                let s12: BTreeSet<SelectionPredicate> =
                    s12.into_iter().filter(|p| !g12.contains(&p.attribute)).collect();

                assert_eq!(merged.grouping(), &g12);
                assert_eq!(merged.predicates(), &s12);
            }
        }
    }
}
