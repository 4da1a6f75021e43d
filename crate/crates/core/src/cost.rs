//! View size estimation from catalog statistics.
//!
//! Row counts come from Yao's formula (sampling without replacement) or
//! Cardenas' approximation (with replacement), both under the uniformity
//! assumption; byte sizes multiply the row estimate by the summed column
//! widths. Estimates deliberately ignore selection predicates: with no
//! distribution information, grouping cardinalities are the only handle.

use crate::catalog::CatalogStats;
use crate::error::{AdvisorError, Result};
use crate::views::CandidateView;
use crate::workload::AggregateOp;

/// Which formula produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMethod {
    Yao,
    Cardenas,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub rows: f64,
    pub bytes: f64,
    pub method: EstimationMethod,
}

/// ms(F): the maximum size of the fact table, the product of all dimension
/// key cardinalities. Computed in floating point; it overflows u64 quickly.
pub fn max_fact_size(stats: &CatalogStats) -> f64 {
    stats.dimensions.iter().map(|d| d.key_cardinality as f64).product()
}

/// ms(v): the maximum size of a view, the product of its grouping-attribute
/// cardinalities. An empty grouping gives 1 (a single-row view).
pub fn max_view_size(view: &CandidateView, stats: &CatalogStats) -> Result<f64> {
    let mut product = 1.0;
    for attr in view.grouping() {
        let card = stats
            .attribute_cardinality(attr)
            .ok_or_else(|| AdvisorError::MissingCardinality { attribute: attr.to_string() })?;
        product *= card as f64;
    }
    Ok(product)
}

/// Cardenas: expected occupied cells placing `fact_rows` tuples uniformly
/// and independently into `msv` cells.
pub fn view_rows_cardenas(msv: f64, fact_rows: u64) -> f64 {
    debug_assert!(msv >= 1.0);
    if fact_rows == 0 {
        return 0.0;
    }
    // (1 - 1/msv)^|F| via ln_1p for precision at large msv
    let log_empty = fact_rows as f64 * (-1.0 / msv).ln_1p();
    msv * (1.0 - log_empty.exp())
}

/// Yao: expected occupied groups drawing `fact_rows` tuples without
/// replacement from `ms_fact` possible tuples that map uniformly onto `msv`
/// groups. The interior product telescopes into log-gamma terms, which keeps
/// the evaluation stable for large inputs.
pub fn view_rows_yao(msv: f64, ms_fact: f64, fact_rows: u64) -> Result<f64> {
    debug_assert!(msv >= 1.0);
    let f = fact_rows as f64;
    if f > ms_fact {
        return Err(AdvisorError::YaoPrecondition { fact_rows, max_fact_size: ms_fact });
    }
    if fact_rows == 0 {
        return Ok(0.0);
    }
    let d = 1.0 - 1.0 / msv;
    let a = ms_fact * d;
    // prod_{i=1..F} (a - i + 1) / (ms_fact - i + 1); once a factor hits
    // zero or below, some tuple must land in every group
    if a - f + 1.0 <= 0.0 {
        return Ok(msv);
    }
    let log_prod = libm::lgamma(a + 1.0) - libm::lgamma(a - f + 1.0) - libm::lgamma(ms_fact + 1.0)
        + libm::lgamma(ms_fact - f + 1.0);
    Ok(msv * (1.0 - log_prod.exp()))
}

/// Byte width of one materialized row: grouping columns plus one output
/// column per aggregation.
fn row_width(view: &CandidateView, stats: &CatalogStats) -> Result<f64> {
    let mut width = 0.0;
    for attr in view.grouping() {
        let bytes = stats
            .column_bytes(attr)
            .ok_or_else(|| AdvisorError::MissingColumnSize { column: attr.to_string() })?;
        width += bytes as f64;
    }
    for agg in view.aggregations() {
        width += match agg.op {
            AggregateOp::Count => 8.0,
            AggregateOp::Avg => {
                // stored as a sum/count pair so it stays re-aggregable
                let bytes = stats.column_bytes(&agg.measure).ok_or_else(|| {
                    AdvisorError::MissingColumnSize { column: agg.measure.to_string() }
                })?;
                bytes as f64 + 8.0
            }
            _ => {
                let bytes = stats.column_bytes(&agg.measure).ok_or_else(|| {
                    AdvisorError::MissingColumnSize { column: agg.measure.to_string() }
                })?;
                bytes as f64
            }
        };
    }
    Ok(width)
}

/// Estimate a view's rows and bytes. Cardenas is used when ms(F)/ms(v) is at
/// least `cardenas_threshold` (the regime where it approximates Yao well) and
/// whenever Yao's without-replacement precondition |F| <= ms(F) fails.
pub fn estimate(
    view: &CandidateView,
    stats: &CatalogStats,
    cardenas_threshold: f64,
) -> Result<CostEstimate> {
    let msv = max_view_size(view, stats)?;
    let ms_fact = max_fact_size(stats);
    let fact_rows = stats.fact_rows;
    let (rows, method) = if ms_fact / msv >= cardenas_threshold || fact_rows as f64 > ms_fact {
        (view_rows_cardenas(msv, fact_rows), EstimationMethod::Cardenas)
    } else {
        (view_rows_yao(msv, ms_fact, fact_rows)?, EstimationMethod::Yao)
    };
    let bytes = rows * row_width(view, stats)?;
    Ok(CostEstimate { rows, bytes, method })
}
