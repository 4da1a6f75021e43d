//! Greedy construction of the final view configuration.
//!
//! Each iteration scores every remaining candidate against the current
//! selection (scores change as views are added, capturing view interaction),
//! picks the best strictly-positive score, and stops when none remains, when
//! the candidate pool is exhausted, or when the storage budget is spent.

use serde::Serialize;

use crate::catalog::CatalogStats;
use crate::error::Result;
use crate::objectives::{hybrid, profit, ratio, workload_cost, ObjectiveConfig, ObjectiveKind};
use crate::views::CandidateView;
use crate::workload::ParsedQuery;

/// What to do when the best-scoring view does not fit the remaining budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BudgetOverflow {
    /// Pass over unaffordable views and keep scanning the rest.
    #[default]
    Skip,
    /// Stop the selection loop at the first unaffordable best view.
    Stop,
}

/// One iteration of the greedy loop.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionStep {
    /// Accepted view, or None when the iteration ended the loop.
    pub view_id: Option<usize>,
    pub score: Option<f64>,
    /// Remaining budget after acceptance; absent for the profit objective.
    pub remaining_budget: Option<f64>,
    /// Views that did not fit the remaining budget this iteration.
    pub skipped_for_budget: Vec<usize>,
}

/// The selected configuration, in selection order.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub selected: Vec<CandidateView>,
    pub trace: Vec<SelectionStep>,
    pub total_bytes: f64,
    pub final_workload_cost: f64,
}

/// Greedy selection over costed candidates.
pub fn select_views(
    candidates: &[CandidateView],
    queries: &[ParsedQuery],
    stats: &CatalogStats,
    cfg: &ObjectiveConfig,
    overflow: BudgetOverflow,
) -> Result<Configuration> {
    cfg.validate()?;
    let budgeted = cfg.kind != ObjectiveKind::Profit;
    let budget = cfg.storage_budget.unwrap_or(f64::INFINITY);

    let mut pool: Vec<&CandidateView> = candidates.iter().collect();
    pool.sort_by_key(|v| v.id());

    let mut selected: Vec<CandidateView> = Vec::new();
    let mut trace: Vec<SelectionStep> = Vec::new();
    let mut remaining = budget;

    loop {
        if pool.is_empty() {
            break;
        }
        let mut skipped: Vec<usize> = Vec::new();
        let mut best: Option<(usize, f64, f64)> = None; // (pool index, score, bytes)

        for (i, view) in pool.iter().enumerate() {
            let bytes = view.est_bytes().expect("candidates must be costed");
            if budgeted && overflow == BudgetOverflow::Skip && bytes > remaining {
                skipped.push(view.id());
                continue;
            }
            let score = match cfg.kind {
                ObjectiveKind::Profit => profit(view, &selected, queries, stats, cfg),
                ObjectiveKind::Ratio => ratio(view, &selected, queries, stats, cfg)?,
                ObjectiveKind::Hybrid => {
                    hybrid(view, &selected, queries, stats, cfg, remaining - bytes, budget)?
                }
            };
            // ties prefer the smaller view, then the lower id (scan order)
            let better = match best {
                None => true,
                Some((_, s, b)) => score > s || (score == s && bytes < b),
            };
            if better {
                best = Some((i, score, bytes));
            }
        }

        if let Some((i, score, bytes)) = best {
            let unaffordable_best =
                budgeted && overflow == BudgetOverflow::Stop && bytes > remaining;
            if score > 0.0 && !unaffordable_best {
                let view = pool.remove(i);
                selected.push(view.clone());
                remaining -= bytes;
                trace.push(SelectionStep {
                    view_id: Some(view.id()),
                    score: Some(score),
                    remaining_budget: budgeted.then_some(remaining),
                    skipped_for_budget: skipped,
                });
                if budgeted && remaining <= 0.0 {
                    break; // storage space is full
                }
                continue;
            }
        }

        // terminal iteration: no acceptable view, or stop-on-overflow
        trace.push(SelectionStep {
            view_id: None,
            score: best.map(|(_, s, _)| s),
            remaining_budget: budgeted.then_some(remaining),
            skipped_for_budget: skipped,
        });
        break;
    }

    let total_bytes = selected.iter().map(|v| v.est_bytes().unwrap_or(0.0)).sum();
    let final_workload_cost = workload_cost(queries, &selected, stats);
    Ok(Configuration { selected, trace, total_bytes, final_workload_cost })
}
