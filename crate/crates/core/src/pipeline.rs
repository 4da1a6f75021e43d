//! End-to-end advisor pipeline: parse the workload, build the clustering
//! context, cluster, merge candidate views per cluster, estimate costs,
//! select greedily, and render the report plus the CREATE MATERIALIZED VIEW
//! statements.

use serde::Serialize;

use crate::catalog::{load_stats, validate_against_workload, CatalogStats};
use crate::clustering::{cluster_queries, ClusteringOutcome};
use crate::cost::estimate;
use crate::error::{AdvisorError, Result};
use crate::objectives::{workload_cost, ObjectiveConfig, ObjectiveKind};
use crate::selection::{select_views, BudgetOverflow, Configuration};
use crate::similarity::Partition;
use crate::views::{can_answer, merged_view_generation, view_from_query, CandidateView, MergeGate};
use crate::workload::{build_context, parse_workload, ClusteringContext, ParsedQuery};

/// User-facing knobs of one advisor run.
#[derive(Debug, Clone)]
pub struct AdvisorOptions {
    pub objective: ObjectiveKind,
    pub budget_bytes: Option<f64>,
    pub alpha: f64,
    pub merge_x: f64,
    pub merge_gate: MergeGate,
    pub update_query_ratio: f64,
    pub cardenas_threshold: f64,
    pub seed: u64,
    pub budget_overflow: BudgetOverflow,
}

impl Default for AdvisorOptions {
    fn default() -> Self {
        AdvisorOptions {
            objective: ObjectiveKind::Profit,
            budget_bytes: None,
            alpha: 0.1,
            merge_x: 0.33,
            merge_gate: MergeGate::Paper,
            update_query_ratio: 0.0,
            cardenas_threshold: 100.0,
            seed: 0,
            budget_overflow: BudgetOverflow::Skip,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WorkloadSummary {
    pub queries: usize,
    pub attributes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusteringSummary {
    pub clusters: usize,
    pub quality_singletons: u64,
    pub quality_final: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateSummary {
    pub total: usize,
    /// Views generated per lattice level, leaves first, summed over clusters.
    pub per_level: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectedViewReport {
    pub name: String,
    pub view_id: usize,
    pub rows: f64,
    pub bytes: f64,
    pub score: f64,
    pub source_queries: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionSummary {
    pub objective: String,
    pub budget_bytes: Option<f64>,
    pub views: Vec<SelectedViewReport>,
    pub total_bytes: f64,
    pub workload_cost_before: f64,
    pub workload_cost_after: f64,
    pub covering_rate: f64,
}

/// The advisor's JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub workload: WorkloadSummary,
    pub clustering: ClusteringSummary,
    pub candidates: CandidateSummary,
    pub selection: SelectionSummary,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct AdvisorOutcome {
    pub report: RunReport,
    pub ddl: String,
    pub clustering_trace: String,
    pub configuration: Configuration,
}

/// Intermediate pipeline state exposed for tests and tooling that want to
/// drive the stages separately.
#[derive(Debug, Clone)]
pub struct PreparedWorkload {
    pub stats: CatalogStats,
    pub queries: Vec<ParsedQuery>,
    pub context: ClusteringContext,
}

/// Parse and validate both input documents.
pub fn prepare(workload_text: &str, stats_text: &str) -> Result<PreparedWorkload> {
    let stats = load_stats(stats_text).map_err(|e| e.at_stage("catalog"))?;
    let queries =
        parse_workload(workload_text, &stats.fact_table).map_err(|e| e.at_stage("workload"))?;
    for query in &queries {
        for table in query.tables() {
            if table != &stats.fact_table && stats.dimension(table).is_none() {
                return Err(AdvisorError::Stats(format!(
                    "query {} reads table '{table}' which is neither the fact table nor a \
                     dimension in the statistics",
                    query.id()
                ))
                .at_stage("catalog"));
            }
        }
    }
    let missing = validate_against_workload(&stats, &queries);
    if !missing.is_empty() {
        let listed: Vec<String> = missing.iter().map(|m| m.to_string()).collect();
        return Err(AdvisorError::Stats(format!(
            "statistics do not cover the workload: {}",
            listed.join("; ")
        ))
        .at_stage("catalog"));
    }
    let context = build_context(&queries).map_err(|e| e.at_stage("workload"))?;
    Ok(PreparedWorkload { stats, queries, context })
}

/// Derive costed candidate views: one leaf per query, merged per cluster.
pub fn derive_candidates(
    prepared: &PreparedWorkload,
    partition: &Partition,
    opts: &AdvisorOptions,
) -> Result<(Vec<CandidateView>, Vec<usize>)> {
    let stats = &prepared.stats;
    let cost_of = |view: &CandidateView| -> f64 {
        estimate(view, stats, opts.cardenas_threshold)
            .expect("workload coverage was validated before candidate generation")
            .rows
    };
    let mut next_id = prepared.queries.len();
    let mut candidates: Vec<CandidateView> = Vec::new();
    let mut per_level: Vec<usize> = Vec::new();
    for cluster in partition.clusters() {
        let leaves: Vec<CandidateView> = cluster
            .iter()
            .map(|&row| view_from_query(&prepared.queries[row]))
            .collect();
        let outcome =
            merged_view_generation(leaves, opts.merge_x, opts.merge_gate, &cost_of, &mut next_id);
        for (level, count) in outcome.per_level.iter().enumerate() {
            if per_level.len() <= level {
                per_level.resize(level + 1, 0);
            }
            per_level[level] += count;
        }
        candidates.extend(outcome.views);
    }
    candidates.sort_by_key(|v| v.id());
    for view in &mut candidates {
        let est = estimate(view, stats, opts.cardenas_threshold)
            .map_err(|e| e.at_stage("cost_model"))?;
        view.set_estimates(est.rows, est.bytes);
    }
    Ok((candidates, per_level))
}

/// Fraction of workload queries answerable from the selected views.
pub fn covering_rate(queries: &[ParsedQuery], selected: &[CandidateView]) -> f64 {
    if queries.is_empty() {
        return 0.0;
    }
    let covered = queries
        .iter()
        .filter(|q| selected.iter().any(|v| can_answer(v, q)))
        .count();
    covered as f64 / queries.len() as f64
}

/// Run the whole pipeline on in-memory documents.
pub fn run_advisor(
    workload_text: &str,
    stats_text: &str,
    opts: &AdvisorOptions,
) -> Result<AdvisorOutcome> {
    let prepared = prepare(workload_text, stats_text)?;
    let clustering: ClusteringOutcome =
        cluster_queries(&prepared.context, opts.seed).map_err(|e| e.at_stage("clustering"))?;
    let (candidates, per_level) = derive_candidates(&prepared, &clustering.partition, opts)
        .map_err(|e| e.at_stage("candidate_views"))?;

    let cfg = ObjectiveConfig {
        kind: opts.objective,
        alpha: opts.alpha,
        update_query_ratio: opts.update_query_ratio,
        candidate_count: candidates.len(),
        storage_budget: opts.budget_bytes,
        merge_x: opts.merge_x,
    };
    let configuration =
        select_views(&candidates, &prepared.queries, &prepared.stats, &cfg, opts.budget_overflow)
            .map_err(|e| e.at_stage("selection"))?;

    let report = build_report(&prepared, &clustering, &candidates, &per_level, &configuration, opts);
    let ddl = render_ddl(&configuration, &prepared.stats);
    let clustering_trace = clustering.trace.iter().map(|s| s.render() + "\n").collect();
    Ok(AdvisorOutcome { report, ddl, clustering_trace, configuration })
}

fn build_report(
    prepared: &PreparedWorkload,
    clustering: &ClusteringOutcome,
    candidates: &[CandidateView],
    per_level: &[usize],
    configuration: &Configuration,
    opts: &AdvisorOptions,
) -> RunReport {
    let queries = &prepared.queries;
    let score_of = |view_id: usize| -> f64 {
        configuration
            .trace
            .iter()
            .find(|s| s.view_id == Some(view_id))
            .and_then(|s| s.score)
            .unwrap_or(0.0)
    };
    let views = configuration
        .selected
        .iter()
        .enumerate()
        .map(|(k, v)| SelectedViewReport {
            name: format!("mv_{}", k + 1),
            view_id: v.id(),
            rows: v.est_rows().unwrap_or(0.0),
            bytes: v.est_bytes().unwrap_or(0.0),
            score: score_of(v.id()),
            source_queries: v.source_queries().iter().copied().collect(),
        })
        .collect();
    RunReport {
        workload: WorkloadSummary {
            queries: prepared.context.num_queries(),
            attributes: prepared.context.num_attributes(),
        },
        clustering: ClusteringSummary {
            clusters: clustering.partition.num_clusters(),
            quality_singletons: clustering.q_singletons,
            quality_final: clustering.q_final,
        },
        candidates: CandidateSummary { total: candidates.len(), per_level: per_level.to_vec() },
        selection: SelectionSummary {
            objective: opts.objective.name().to_string(),
            budget_bytes: opts.budget_bytes,
            views,
            total_bytes: configuration.total_bytes,
            workload_cost_before: workload_cost(queries, &[], &prepared.stats),
            workload_cost_after: configuration.final_workload_cost,
            covering_rate: covering_rate(queries, &configuration.selected),
        },
    }
}

/// Render one CREATE MATERIALIZED VIEW statement per selected view, in
/// selection order. Join conditions come from the catalog's dimension keys.
pub fn render_ddl(configuration: &Configuration, stats: &CatalogStats) -> String {
    let mut out = String::new();
    for (k, view) in configuration.selected.iter().enumerate() {
        let mut select: Vec<String> = view.grouping().iter().map(|g| g.to_string()).collect();
        select.extend(view.aggregations().iter().map(|a| a.to_string()));

        let mut tables: Vec<&str> = Vec::new();
        if view.tables().contains(&stats.fact_table) {
            tables.push(&stats.fact_table);
        }
        tables.extend(
            view.tables().iter().map(|t| t.as_str()).filter(|t| *t != stats.fact_table),
        );

        let mut conjuncts: Vec<String> = Vec::new();
        for table in view.tables() {
            if table == &stats.fact_table {
                continue;
            }
            if let Some(dim) = stats.dimension(table) {
                conjuncts
                    .push(format!("{}.{} = {}.{}", stats.fact_table, dim.key, dim.table, dim.key));
            }
        }
        conjuncts.extend(view.predicates().iter().map(|p| p.to_string()));

        out.push_str(&format!("create materialized view mv_{} as\n", k + 1));
        out.push_str(&format!("select {}\nfrom {}", select.join(", "), tables.join(", ")));
        if !conjuncts.is_empty() {
            out.push_str(&format!("\nwhere {}", conjuncts.join(" and ")));
        }
        if !view.grouping().is_empty() {
            let cols: Vec<String> = view.grouping().iter().map(|g| g.to_string()).collect();
            out.push_str(&format!("\ngroup by {}", cols.join(", ")));
        }
        out.push_str(";\n\n");
    }
    out
}
