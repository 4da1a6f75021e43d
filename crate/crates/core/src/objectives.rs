//! Workload execution cost under a view set, and the profit, profit/space
//! ratio, and hybrid objective functions that drive greedy selection.
//!
//! Query cost is the number of tuples read: the fact table's row count when
//! no selected view answers the query, otherwise the row estimate of the
//! smallest answering view.

use crate::catalog::CatalogStats;
use crate::error::{AdvisorError, Result};
use crate::views::{can_answer, CandidateView};
use crate::workload::ParsedQuery;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Profit,
    Ratio,
    Hybrid,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Profit => "profit",
            ObjectiveKind::Ratio => "ratio",
            ObjectiveKind::Hybrid => "hybrid",
        }
    }
}

/// Knobs shared by the objective functions and the surrounding pipeline.
#[derive(Debug, Clone)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    /// Hybrid threshold on remaining/storage; in (0, 1].
    pub alpha: f64,
    /// %update / %query: how often the warehouse is refreshed relative to
    /// how often it is queried.
    pub update_query_ratio: f64,
    /// Size of the candidate set; fixes the update probability denominator
    /// so scores are comparable across greedy iterations.
    pub candidate_count: usize,
    /// Storage budget in bytes; required for ratio and hybrid.
    pub storage_budget: Option<f64>,
    /// Merge-effectiveness factor consumed by candidate generation.
    pub merge_x: f64,
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(AdvisorError::Config(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.update_query_ratio < 0.0 {
            return Err(AdvisorError::Config("update/query ratio must be >= 0".into()));
        }
        if self.kind != ObjectiveKind::Profit {
            match self.storage_budget {
                Some(b) if b > 0.0 => {}
                _ => {
                    return Err(AdvisorError::Config(format!(
                        "objective '{}' requires a positive storage budget",
                        self.kind.name()
                    )))
                }
            }
        }
        Ok(())
    }

    /// Update probability p(v): update/query ratio spread over the
    /// candidate set.
    fn update_probability(&self) -> f64 {
        if self.candidate_count == 0 {
            0.0
        } else {
            self.update_query_ratio / self.candidate_count as f64
        }
    }
}

fn rows_of(view: &CandidateView) -> f64 {
    view.est_rows().expect("view must be costed before scoring")
}

fn bytes_of(view: &CandidateView) -> f64 {
    view.est_bytes().expect("view must be costed before scoring")
}

fn query_cost_with(
    query: &ParsedQuery,
    selected: &[CandidateView],
    extra: Option<&CandidateView>,
    stats: &CatalogStats,
) -> f64 {
    let mut best = stats.fact_rows as f64;
    for view in selected.iter().chain(extra) {
        if can_answer(view, query) {
            best = best.min(rows_of(view));
        }
    }
    best
}

/// Cost of one query under a view set: min(|F|, best answering view).
pub fn query_cost(query: &ParsedQuery, selected: &[CandidateView], stats: &CatalogStats) -> f64 {
    query_cost_with(query, selected, None, stats)
}

/// Total workload cost: the sum of per-query costs. With no views this is
/// exactly |Q| * |F|.
pub fn workload_cost(
    queries: &[ParsedQuery],
    selected: &[CandidateView],
    stats: &CatalogStats,
) -> f64 {
    queries.iter().map(|q| query_cost(q, selected, stats)).sum()
}

fn workload_cost_with(
    queries: &[ParsedQuery],
    selected: &[CandidateView],
    extra: Option<&CandidateView>,
    stats: &CatalogStats,
) -> f64 {
    queries.iter().map(|q| query_cost_with(q, selected, extra, stats)).sum()
}

/// Refresh cost of a view, proportional to its size in tuples.
pub fn maintenance_cost(view: &CandidateView) -> f64 {
    rows_of(view)
}

/// Profit of adding `view` to the selected set: workload cost saved, minus
/// the expected maintenance charge beta * C_maintenance.
pub fn profit(
    view: &CandidateView,
    selected: &[CandidateView],
    queries: &[ParsedQuery],
    stats: &CatalogStats,
    cfg: &ObjectiveConfig,
) -> f64 {
    let before = workload_cost(queries, selected, stats);
    let after = workload_cost_with(queries, selected, Some(view), stats);
    let beta = queries.len() as f64 * cfg.update_probability();
    before - after - beta * maintenance_cost(view)
}

/// Profit per byte of storage.
pub fn ratio(
    view: &CandidateView,
    selected: &[CandidateView],
    queries: &[ParsedQuery],
    stats: &CatalogStats,
    cfg: &ObjectiveConfig,
) -> Result<f64> {
    let size = bytes_of(view);
    if size <= 0.0 {
        return Err(AdvisorError::ZeroViewSize { view: view.id() });
    }
    Ok(profit(view, selected, queries, stats, cfg) / size)
}

/// Hybrid objective: plain profit while storage is plentiful
/// (remaining/storage above alpha), profit per byte once it is scarce.
/// `remaining_space` is the space left after adding the view under
/// consideration.
#[allow(clippy::too_many_arguments)]
pub fn hybrid(
    view: &CandidateView,
    selected: &[CandidateView],
    queries: &[ParsedQuery],
    stats: &CatalogStats,
    cfg: &ObjectiveConfig,
    remaining_space: f64,
    storage_space: f64,
) -> Result<f64> {
    if remaining_space / storage_space > cfg.alpha {
        Ok(profit(view, selected, queries, stats, cfg))
    } else {
        ratio(view, selected, queries, stats, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_stats;
    use crate::test_fixtures::parse_queries;
    use crate::views::view_from_query;
    use crate::workload::parse_workload;

    fn tiny_stats(fact_rows: u64) -> CatalogStats {
        load_stats(&format!(
            r#"{{
                "fact_table": "sales",
                "fact_rows": {fact_rows},
                "dimensions": [{{"table": "times", "key": "time_id", "key_cardinality": 10}}],
                "attributes": {{
                    "sales.time_id": {{"cardinality": 10, "bytes": 4}},
                    "times.time_id": {{"cardinality": 10, "bytes": 4}},
                    "times.fiscal_day": {{"cardinality": 5, "bytes": 4}}
                }},
                "measures": {{"sales.quantity_sold": {{"bytes": 8}}}}
            }}"#
        ))
        .unwrap()
    }

    fn costed_view(query_sql: &str, rows: f64, bytes: f64) -> CandidateView {
        let q = crate::workload::parse_query(query_sql, "sales").unwrap();
        let mut v = view_from_query(&q);
        v.set_estimates(rows, bytes);
        v
    }

    const GROUPED: &str = "select sales.time_id, sum(quantity_sold) from sales group by sales.time_id";

    fn cfg(kind: ObjectiveKind, candidate_count: usize, update_ratio: f64) -> ObjectiveConfig {
        ObjectiveConfig {
            kind,
            alpha: 0.1,
            update_query_ratio: update_ratio,
            candidate_count,
            storage_budget: Some(1000.0),
            merge_x: 0.33,
        }
    }

    #[test]
    fn empty_set_costs_the_fact_table() {
        let stats = tiny_stats(100);
        let queries = parse_queries(&[GROUPED, GROUPED, GROUPED]);
        assert_eq!(workload_cost(&queries, &[], &stats), 300.0);
    }

    #[test]
    fn answering_view_caps_query_cost() {
        let stats = tiny_stats(1000);
        let queries = parse_queries(&[GROUPED]);
        let v = costed_view(GROUPED, 10.0, 90.0);
        assert_eq!(query_cost(&queries[0], std::slice::from_ref(&v), &stats), 10.0);
    }

    #[test]
    fn minimum_rule_prefers_smallest_view() {
        let stats = tiny_stats(1000);
        let queries = parse_queries(&[GROUPED]);
        let v1 = costed_view(GROUPED, 20.0, 90.0);
        let v2 = costed_view(GROUPED, 5.0, 50.0);
        assert_eq!(query_cost(&queries[0], &[v1, v2], &stats), 5.0);
    }

    #[test]
    fn unanswered_query_reads_the_fact_table() {
        let stats = tiny_stats(1000);
        let workload = parse_workload(
            "select times.fiscal_day, sum(quantity_sold) from sales, times \
             where sales.time_id = times.time_id group by times.fiscal_day;",
            "sales",
        )
        .unwrap();
        let v = costed_view(GROUPED, 10.0, 90.0);
        assert_eq!(query_cost(&workload[0], std::slice::from_ref(&v), &stats), 1000.0);
    }

    #[test]
    fn maintenance_cost_is_row_count() {
        let v = costed_view(GROUPED, 42.0, 99.0);
        assert_eq!(maintenance_cost(&v), 42.0);
        let zero = costed_view(GROUPED, 0.0, 0.0);
        assert_eq!(maintenance_cost(&zero), 0.0);
    }

    #[test]
    fn profit_formula_hand_values() {
        // |Q| = 2, |F| = 100, S empty, v answers both with 10 rows
        let stats = tiny_stats(100);
        let queries = parse_queries(&[GROUPED, GROUPED]);
        let v = costed_view(GROUPED, 10.0, 90.0);
        let p = profit(&v, &[], &queries, &stats, &cfg(ObjectiveKind::Profit, 1, 0.0));
        assert_eq!(p, 180.0);

        // same but with beta * C_maint = 200: ratio 10, candidates 1 ->
        // beta = 2 * 10 = 20, times maintenance 10 = 200
        let p = profit(&v, &[], &queries, &stats, &cfg(ObjectiveKind::Profit, 1, 10.0));
        assert_eq!(p, -20.0);
    }

    #[test]
    fn profit_is_zero_for_useless_free_view() {
        let stats = tiny_stats(100);
        let queries = parse_workload(
            "select times.fiscal_day, sum(quantity_sold) from sales, times \
             where sales.time_id = times.time_id group by times.fiscal_day;",
            "sales",
        )
        .unwrap();
        let v = costed_view(GROUPED, 0.0, 0.0); // answers nothing in Q, maintains for free
        assert_eq!(profit(&v, &[], &queries, &stats, &cfg(ObjectiveKind::Profit, 1, 0.0)), 0.0);
    }

    #[test]
    fn profit_with_zero_update_ratio_is_pure_cost_delta() {
        let stats = tiny_stats(500);
        let queries = parse_queries(&[GROUPED, GROUPED, GROUPED]);
        let v = costed_view(GROUPED, 7.0, 70.0);
        let p = profit(&v, &[], &queries, &stats, &cfg(ObjectiveKind::Profit, 5, 0.0));
        let delta = workload_cost(&queries, &[], &stats)
            - workload_cost(&queries, std::slice::from_ref(&v), &stats);
        assert_eq!(p, delta);
    }

    #[test]
    fn ratio_divides_by_bytes() {
        let stats = tiny_stats(100);
        let queries = parse_queries(&[GROUPED, GROUPED]);
        let v = costed_view(GROUPED, 10.0, 90.0);
        let config = cfg(ObjectiveKind::Ratio, 1, 0.0);
        let r = ratio(&v, &[], &queries, &stats, &config).unwrap();
        assert_eq!(r, 2.0); // profit 180 / 90 bytes

        let mut zero = costed_view(GROUPED, 10.0, 90.0);
        zero.set_estimates(0.0, 0.0);
        assert!(matches!(
            ratio(&zero, &[], &queries, &stats, &config),
            Err(AdvisorError::ZeroViewSize { .. })
        ));
    }

    #[test]
    fn ratio_preserves_sign() {
        let stats = tiny_stats(100);
        let queries = parse_queries(&[GROUPED]);
        let v = costed_view(GROUPED, 10.0, 45.0);
        let config = cfg(ObjectiveKind::Ratio, 1, 20.0);
        let p = profit(&v, &[], &queries, &stats, &config);
        assert!(p < 0.0);
        let r = ratio(&v, &[], &queries, &stats, &config).unwrap();
        assert_eq!(r, p / 45.0);
    }

    #[test]
    fn hybrid_switches_branches_exactly() {
        let stats = tiny_stats(100);
        let queries = parse_queries(&[GROUPED, GROUPED]);
        let v = costed_view(GROUPED, 10.0, 90.0);
        let config = cfg(ObjectiveKind::Hybrid, 1, 0.3);

        let p = profit(&v, &[], &queries, &stats, &config);
        let r = ratio(&v, &[], &queries, &stats, &config).unwrap();

        // plentiful space: remaining/storage = 0.9 > alpha -> profit branch
        let h = hybrid(&v, &[], &queries, &stats, &config, 900.0, 1000.0).unwrap();
        assert_eq!(h.to_bits(), p.to_bits());

        // scarce space: 0.05 <= alpha -> ratio branch
        let h = hybrid(&v, &[], &queries, &stats, &config, 50.0, 1000.0).unwrap();
        assert_eq!(h.to_bits(), r.to_bits());

        // boundary: exactly alpha goes to the ratio branch
        let h = hybrid(&v, &[], &queries, &stats, &config, 100.0, 1000.0).unwrap();
        assert_eq!(h.to_bits(), r.to_bits());
    }

    #[test]
    fn adding_views_never_increases_cost() {
        let stats = tiny_stats(800);
        let queries = parse_queries(&[
            GROUPED,
            "select times.fiscal_day, sum(quantity_sold) from sales, times \
             where sales.time_id = times.time_id group by times.fiscal_day",
        ]);
        let views = [
            costed_view(GROUPED, 10.0, 40.0),
            costed_view(
                "select times.fiscal_day, sum(quantity_sold) from sales, times \
                 where sales.time_id = times.time_id group by times.fiscal_day",
                5.0,
                20.0,
            ),
        ];
        let mut selected: Vec<CandidateView> = Vec::new();
        let mut prev = workload_cost(&queries, &selected, &stats);
        for v in views {
            selected.push(v);
            let next = workload_cost(&queries, &selected, &stats);
            assert!(next <= prev);
            prev = next;
        }
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(ObjectiveKind::Ratio, 3, 0.0);
        c.validate().unwrap();
        c.storage_budget = None;
        assert!(c.validate().is_err());
        let mut c = cfg(ObjectiveKind::Profit, 3, 0.0);
        c.storage_budget = None;
        c.validate().unwrap();
        c.alpha = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg(ObjectiveKind::Hybrid, 3, 0.0);
        c.alpha = 1.5;
        assert!(c.validate().is_err());
    }
}
