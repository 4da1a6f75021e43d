//! Desk-scale synthetic warehouses and the brute-force evaluators used as
//! oracles by the test suites.
//!
//! A [`MicroWarehouse`] instantiates a statistics document as actual rows:
//! dimension tables enumerate their keys, attribute values are drawn
//! uniformly over their declared cardinalities, and the fact table holds
//! uniform foreign keys plus integer measures. Everything is deterministic
//! given the seed. The evaluators implement exactly the GPSJ fragment the
//! advisor reasons about; they are not a SQL engine.
//!
//! Star joins are implied: the fact table's foreign-key column for a
//! dimension carries the dimension's key column name, as in the workload
//! grammar's `fact.k = dim.k` join terms.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::CatalogStats;
use crate::error::{AdvisorError, Result};
use crate::views::{can_answer, CandidateView};
use crate::workload::{
    AggregateOp, Aggregation, Attribute, JoinPair, Literal, ParsedQuery, PredicateOp,
    SelectionPredicate,
};

const MAX_FACT_ROWS: u64 = 100_000;
const MEASURE_RANGE: i64 = 1_000;

#[derive(Debug, Clone)]
pub struct DimensionTable {
    pub table: String,
    pub key_column: String,
    /// Row per key value 1..=cardinality; each row maps attribute column
    /// name to its value.
    pub rows: Vec<BTreeMap<String, i64>>,
}

#[derive(Debug, Clone)]
pub struct FactRow {
    /// Foreign keys by column name (the dimension's key column name).
    pub keys: BTreeMap<String, i64>,
    /// Measure values by column name.
    pub measures: BTreeMap<String, i64>,
    /// Non-key fact attributes declared in the statistics.
    pub extra: BTreeMap<String, i64>,
}

/// A fully enumerated star schema instance.
#[derive(Debug, Clone)]
pub struct MicroWarehouse {
    pub seed: u64,
    pub fact_table: String,
    pub dimensions: Vec<DimensionTable>,
    pub fact: Vec<FactRow>,
}

/// Generate a warehouse realizing `stats` with `fact_rows` fact tuples.
pub fn generate(stats: &CatalogStats, fact_rows: u64, seed: u64) -> Result<MicroWarehouse> {
    if fact_rows > MAX_FACT_ROWS {
        return Err(AdvisorError::Harness(format!(
            "fact_rows {fact_rows} exceeds the micro-warehouse limit {MAX_FACT_ROWS}"
        )));
    }
    let mut key_columns = BTreeSet::new();
    for d in &stats.dimensions {
        if !key_columns.insert(d.key.clone()) {
            return Err(AdvisorError::Harness(format!(
                "dimension key column '{}' is not unique across dimensions",
                d.key
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dimensions = Vec::with_capacity(stats.dimensions.len());
    for dim in &stats.dimensions {
        // attribute columns of this dimension, key column excluded
        let columns: Vec<(String, u64)> = stats
            .attributes
            .iter()
            .filter_map(|(name, a)| {
                let (table, column) = name.split_once('.')?;
                (table == dim.table && column != dim.key)
                    .then(|| (column.to_string(), a.cardinality))
            })
            .collect();
        let mut rows = Vec::with_capacity(dim.key_cardinality as usize);
        for _key in 1..=dim.key_cardinality {
            let mut attrs = BTreeMap::new();
            for (column, cardinality) in &columns {
                attrs.insert(column.clone(), rng.gen_range(1..=*cardinality) as i64);
            }
            rows.push(attrs);
        }
        dimensions.push(DimensionTable {
            table: dim.table.clone(),
            key_column: dim.key.clone(),
            rows,
        });
    }

    // fact attributes that are neither foreign keys nor measures
    let fact_extra: Vec<(String, u64)> = stats
        .attributes
        .iter()
        .filter_map(|(name, a)| {
            let (table, column) = name.split_once('.')?;
            (table == stats.fact_table && !key_columns.contains(column))
                .then(|| (column.to_string(), a.cardinality))
        })
        .collect();
    let measure_columns: Vec<String> = stats
        .measures
        .keys()
        .filter_map(|name| {
            let (table, column) = name.split_once('.')?;
            (table == stats.fact_table).then(|| column.to_string())
        })
        .collect();

    let mut fact = Vec::with_capacity(fact_rows as usize);
    for _ in 0..fact_rows {
        let mut keys = BTreeMap::new();
        for dim in &stats.dimensions {
            keys.insert(dim.key.clone(), rng.gen_range(1..=dim.key_cardinality) as i64);
        }
        let mut measures = BTreeMap::new();
        for column in &measure_columns {
            measures.insert(column.clone(), rng.gen_range(0..MEASURE_RANGE));
        }
        let mut extra = BTreeMap::new();
        for (column, cardinality) in &fact_extra {
            extra.insert(column.clone(), rng.gen_range(1..=*cardinality) as i64);
        }
        fact.push(FactRow { keys, measures, extra });
    }

    Ok(MicroWarehouse { seed, fact_table: stats.fact_table.clone(), dimensions, fact })
}

impl MicroWarehouse {
    fn dimension(&self, table: &str) -> Option<&DimensionTable> {
        self.dimensions.iter().find(|d| d.table == table)
    }

    pub fn has_table(&self, table: &str) -> bool {
        table == self.fact_table || self.dimension(table).is_some()
    }

    /// Value of `attr` on the wide row formed by star-joining `fact_row`
    /// with its dimension rows.
    fn value_of(&self, fact_row: &FactRow, attr: &Attribute) -> Result<i64> {
        if attr.table() == self.fact_table {
            return fact_row
                .keys
                .get(attr.column())
                .or_else(|| fact_row.measures.get(attr.column()))
                .or_else(|| fact_row.extra.get(attr.column()))
                .copied()
                .ok_or_else(|| {
                    AdvisorError::Harness(format!("unknown fact column {attr}"))
                });
        }
        let dim = self
            .dimension(attr.table())
            .ok_or_else(|| AdvisorError::Harness(format!("unknown table {}", attr.table())))?;
        let key = *fact_row.keys.get(&dim.key_column).ok_or_else(|| {
            AdvisorError::Harness(format!("fact has no foreign key for {}", dim.table))
        })?;
        if attr.column() == dim.key_column {
            return Ok(key);
        }
        let row = dim
            .rows
            .get((key - 1) as usize)
            .ok_or_else(|| AdvisorError::Harness(format!("dangling key {key} in {}", dim.table)))?;
        row.get(attr.column())
            .copied()
            .ok_or_else(|| AdvisorError::Harness(format!("unknown column {attr}")))
    }

    fn predicate_holds(&self, fact_row: &FactRow, pred: &SelectionPredicate) -> Result<bool> {
        let value = self.value_of(fact_row, &pred.attribute)? as f64;
        Ok(eval_predicate(value, &pred.op))
    }

    /// Line-delimited structured dump for debugging failed oracle runs:
    /// `table <name>` headers followed by one `row k=v ...` line per tuple.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for dim in &self.dimensions {
            out.push_str(&format!("table {}\n", dim.table));
            for (i, row) in dim.rows.iter().enumerate() {
                out.push_str(&format!("row {}={}", dim.key_column, i + 1));
                for (column, value) in row {
                    out.push_str(&format!(" {column}={value}"));
                }
                out.push('\n');
            }
        }
        out.push_str(&format!("table {}\n", self.fact_table));
        for row in &self.fact {
            out.push_str("row");
            for (column, value) in row.keys.iter().chain(&row.measures).chain(&row.extra) {
                out.push_str(&format!(" {column}={value}"));
            }
            out.push('\n');
        }
        out
    }
}

fn eval_predicate(value: f64, op: &PredicateOp) -> bool {
    let num = |lit: &Literal| match lit {
        Literal::Number(n) => Some(n.into_inner()),
        Literal::Text(_) => None,
    };
    match op {
        PredicateOp::Eq(l) => num(l).is_some_and(|x| value == x),
        PredicateOp::Lt(l) => num(l).is_some_and(|x| value < x),
        PredicateOp::Gt(l) => num(l).is_some_and(|x| value > x),
        PredicateOp::Le(l) => num(l).is_some_and(|x| value <= x),
        PredicateOp::Ge(l) => num(l).is_some_and(|x| value >= x),
        PredicateOp::Between(lo, hi) => match (num(lo), num(hi)) {
            (Some(lo), Some(hi)) => value >= lo && value <= hi,
            _ => false,
        },
    }
}

/// Exact number of rows the view materializes: distinct grouping tuples over
/// the star join after applying the view's predicates.
pub fn true_view_rows(warehouse: &MicroWarehouse, view: &CandidateView) -> Result<u64> {
    for table in view.tables() {
        if !warehouse.has_table(table) {
            return Err(AdvisorError::Harness(format!("unknown table {table}")));
        }
    }
    let grouping: Vec<&Attribute> = view.grouping().iter().collect();
    let mut groups: BTreeSet<Vec<i64>> = BTreeSet::new();
    'rows: for fact_row in &warehouse.fact {
        for pred in view.predicates() {
            if !warehouse.predicate_holds(fact_row, pred)? {
                continue 'rows;
            }
        }
        let key: Vec<i64> = grouping
            .iter()
            .map(|a| warehouse.value_of(fact_row, a))
            .collect::<Result<_>>()?;
        groups.insert(key);
    }
    Ok(groups.len() as u64)
}

/// One aggregate output value.
#[derive(Debug, Clone, PartialEq)]
pub enum AggValue {
    Int(i128),
    Float(f64),
}

/// A grouped query result: grouping-key tuple to aggregate values, both in
/// canonical (sorted) column order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub group_columns: Vec<Attribute>,
    pub agg_columns: Vec<Aggregation>,
    pub rows: BTreeMap<Vec<i64>, Vec<AggValue>>,
}

impl ResultTable {
    /// Equality with a relative tolerance on float (avg) values.
    pub fn approx_eq(&self, other: &ResultTable, avg_rel_tol: f64) -> bool {
        if self.group_columns != other.group_columns
            || self.agg_columns != other.agg_columns
            || self.rows.len() != other.rows.len()
        {
            return false;
        }
        for (key, values) in &self.rows {
            let Some(theirs) = other.rows.get(key) else {
                return false;
            };
            for (a, b) in values.iter().zip(theirs) {
                let ok = match (a, b) {
                    (AggValue::Int(x), AggValue::Int(y)) => x == y,
                    (AggValue::Float(x), AggValue::Float(y)) => {
                        let scale = x.abs().max(y.abs()).max(1e-300);
                        (x - y).abs() <= avg_rel_tol * scale
                    }
                    _ => false,
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    sum: i128,
    count: i128,
    min: Option<i64>,
    max: Option<i64>,
}

impl Accumulator {
    fn add(&mut self, value: i64) {
        self.sum += value as i128;
        self.count += 1;
        self.min = Some(self.min.map_or(value, |m| m.min(value)));
        self.max = Some(self.max.map_or(value, |m| m.max(value)));
    }

    fn get(&self, op: AggregateOp) -> AggValue {
        match op {
            AggregateOp::Sum => AggValue::Int(self.sum),
            AggregateOp::Count => AggValue::Int(self.count),
            AggregateOp::Min => AggValue::Int(self.min.unwrap_or(0) as i128),
            AggregateOp::Max => AggValue::Int(self.max.unwrap_or(0) as i128),
            AggregateOp::Avg => AggValue::Float(self.sum as f64 / self.count as f64),
        }
    }
}

/// Evaluate a query directly against base tables.
pub fn true_query_answer(warehouse: &MicroWarehouse, query: &ParsedQuery) -> Result<ResultTable> {
    for table in query.tables() {
        if !warehouse.has_table(table) {
            return Err(AdvisorError::Harness(format!("unknown table {table}")));
        }
    }
    let group_columns: Vec<Attribute> = query.grouping().iter().cloned().collect();
    let agg_columns: Vec<Aggregation> = query.aggregations().iter().cloned().collect();
    let mut accs: BTreeMap<Vec<i64>, Vec<Accumulator>> = BTreeMap::new();
    'rows: for fact_row in &warehouse.fact {
        for pred in query.predicates() {
            if !warehouse.predicate_holds(fact_row, pred)? {
                continue 'rows;
            }
        }
        let key: Vec<i64> = group_columns
            .iter()
            .map(|a| warehouse.value_of(fact_row, a))
            .collect::<Result<_>>()?;
        let entry =
            accs.entry(key).or_insert_with(|| vec![Accumulator::default(); agg_columns.len()]);
        for (acc, agg) in entry.iter_mut().zip(&agg_columns) {
            acc.add(warehouse.value_of(fact_row, &agg.measure)?);
        }
    }
    let rows = accs
        .into_iter()
        .map(|(key, accs)| {
            let values = accs.iter().zip(&agg_columns).map(|(a, c)| a.get(c.op)).collect();
            (key, values)
        })
        .collect();
    Ok(ResultTable { group_columns, agg_columns, rows })
}

/// Materialized form of a candidate view: one row per grouping tuple with
/// accumulators for each aggregation measure.
struct MaterializedView {
    grouping: Vec<Attribute>,
    rows: BTreeMap<Vec<i64>, BTreeMap<Attribute, Accumulator>>,
}

fn materialize(warehouse: &MicroWarehouse, view: &CandidateView) -> Result<MaterializedView> {
    let grouping: Vec<Attribute> = view.grouping().iter().cloned().collect();
    let measures: BTreeSet<Attribute> =
        view.aggregations().iter().map(|a| a.measure.clone()).collect();
    let mut rows: BTreeMap<Vec<i64>, BTreeMap<Attribute, Accumulator>> = BTreeMap::new();
    'rows: for fact_row in &warehouse.fact {
        for pred in view.predicates() {
            if !warehouse.predicate_holds(fact_row, pred)? {
                continue 'rows;
            }
        }
        let key: Vec<i64> = grouping
            .iter()
            .map(|a| warehouse.value_of(fact_row, a))
            .collect::<Result<_>>()?;
        let entry = rows.entry(key).or_default();
        for measure in &measures {
            let value = warehouse.value_of(fact_row, measure)?;
            entry.entry(measure.clone()).or_default().add(value);
        }
    }
    Ok(MaterializedView { grouping, rows })
}

/// Answer `query` from the materialized contents of `view` alone: apply the
/// query's remaining predicates on top, re-group to the query's grouping,
/// and re-aggregate. Refuses when `can_answer` says the rewrite is invalid.
pub fn rewrite_against(
    warehouse: &MicroWarehouse,
    query: &ParsedQuery,
    view: &CandidateView,
) -> Result<ResultTable> {
    if !can_answer(view, query) {
        return Err(AdvisorError::RewriteNotAnswerable { view: view.id(), query: query.id() });
    }
    let mat = materialize(warehouse, view)?;
    let group_columns: Vec<Attribute> = query.grouping().iter().cloned().collect();
    let agg_columns: Vec<Aggregation> = query.aggregations().iter().cloned().collect();
    // positions of query grouping attrs within the view's grouping tuple
    let positions: Vec<usize> = group_columns
        .iter()
        .map(|g| mat.grouping.iter().position(|v| v == g).expect("can_answer ensures presence"))
        .collect();
    // predicates still to apply on top of the view
    let residual: Vec<&SelectionPredicate> = query
        .predicates()
        .iter()
        .filter(|p| !view.predicates().contains(*p))
        .collect();
    let residual_pos: Vec<(usize, &PredicateOp)> = residual
        .iter()
        .map(|p| {
            let pos = mat
                .grouping
                .iter()
                .position(|g| *g == p.attribute)
                .expect("can_answer ensures predicate attribute is grouped");
            (pos, &p.op)
        })
        .collect();

    #[derive(Default, Clone)]
    struct ReAgg {
        sum: i128,
        count: i128,
        min: Option<i128>,
        max: Option<i128>,
    }

    let mut regrouped: BTreeMap<Vec<i64>, Vec<ReAgg>> = BTreeMap::new();
    'view_rows: for (key, accs) in &mat.rows {
        for (pos, op) in &residual_pos {
            if !eval_predicate(key[*pos] as f64, op) {
                continue 'view_rows;
            }
        }
        let out_key: Vec<i64> = positions.iter().map(|&p| key[p]).collect();
        let entry =
            regrouped.entry(out_key).or_insert_with(|| vec![ReAgg::default(); agg_columns.len()]);
        for (slot, agg) in entry.iter_mut().zip(&agg_columns) {
            let acc = accs.get(&agg.measure).expect("measure accumulated");
            match agg.op {
                AggregateOp::Sum | AggregateOp::Avg => {
                    slot.sum += acc.sum;
                    slot.count += acc.count;
                }
                AggregateOp::Count => {
                    slot.count += acc.count;
                }
                AggregateOp::Min => {
                    let v = acc.min.unwrap_or(0) as i128;
                    slot.min = Some(slot.min.map_or(v, |m| m.min(v)));
                }
                AggregateOp::Max => {
                    let v = acc.max.unwrap_or(0) as i128;
                    slot.max = Some(slot.max.map_or(v, |m| m.max(v)));
                }
            }
        }
    }

    let rows = regrouped
        .into_iter()
        .map(|(key, slots)| {
            let values = slots
                .iter()
                .zip(&agg_columns)
                .map(|(slot, agg)| match agg.op {
                    AggregateOp::Sum => AggValue::Int(slot.sum),
                    AggregateOp::Count => AggValue::Int(slot.count),
                    AggregateOp::Min => AggValue::Int(slot.min.unwrap_or(0)),
                    AggregateOp::Max => AggValue::Int(slot.max.unwrap_or(0)),
                    AggregateOp::Avg => AggValue::Float(slot.sum as f64 / slot.count as f64),
                })
                .collect();
            (key, values)
        })
        .collect();
    Ok(ResultTable { group_columns, agg_columns, rows })
}

/// Deterministic random GPSJ workload over the schema described by `stats`.
/// Every query has at least one grouping attribute, so the whole workload is
/// accepted by the clustering context.
pub fn random_workload(stats: &CatalogStats, count: usize, seed: u64) -> Vec<ParsedQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries = Vec::with_capacity(count);

    let measures: Vec<Attribute> = stats
        .measures
        .keys()
        .filter_map(|name| {
            let (table, column) = name.split_once('.')?;
            (table == stats.fact_table).then(|| Attribute::new(table, column))
        })
        .collect();
    assert!(!measures.is_empty(), "random workload needs at least one measure");

    while queries.len() < count {
        let id = queries.len();
        // choose 1..=min(3, N) dimensions
        let n_dims = rng.gen_range(1..=stats.dimensions.len().min(3));
        let mut dim_indices: BTreeSet<usize> = BTreeSet::new();
        while dim_indices.len() < n_dims {
            dim_indices.insert(rng.gen_range(0..stats.dimensions.len()));
        }
        let dims: Vec<_> = dim_indices.iter().map(|&i| &stats.dimensions[i]).collect();

        let mut tables: BTreeSet<String> = BTreeSet::from([stats.fact_table.clone()]);
        let mut joins = BTreeSet::new();
        for dim in &dims {
            tables.insert(dim.table.clone());
            joins.insert(JoinPair::new(
                Attribute::new(&stats.fact_table, &dim.key),
                Attribute::new(&dim.table, &dim.key),
            ));
        }

        // candidate non-key attributes of the chosen dimensions
        let pool: Vec<(Attribute, u64)> = stats
            .attributes
            .iter()
            .filter_map(|(name, a)| {
                let (table, column) = name.split_once('.')?;
                let dim = dims.iter().find(|d| d.table == table)?;
                (column != dim.key).then(|| (Attribute::new(table, column), a.cardinality))
            })
            .collect();
        if pool.is_empty() {
            continue;
        }

        let mut grouping: BTreeSet<Attribute> = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=2.min(pool.len())) {
            grouping.insert(pool[rng.gen_range(0..pool.len())].0.clone());
        }

        let mut predicates: BTreeSet<SelectionPredicate> = BTreeSet::new();
        for _ in 0..rng.gen_range(0..=2) {
            let (attr, card) = &pool[rng.gen_range(0..pool.len())];
            if grouping.contains(attr) {
                continue;
            }
            let v = rng.gen_range(1..=*card) as f64;
            let op = match rng.gen_range(0..4) {
                0 => PredicateOp::Eq(Literal::number(v)),
                1 => PredicateOp::Le(Literal::number(v)),
                2 => PredicateOp::Ge(Literal::number(v)),
                _ => {
                    let hi = rng.gen_range(1..=*card) as f64;
                    PredicateOp::Between(Literal::number(v.min(hi)), Literal::number(v.max(hi)))
                }
            };
            predicates.insert(SelectionPredicate { attribute: attr.clone(), op });
        }

        let mut aggregations: BTreeSet<Aggregation> = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=2) {
            let measure = measures[rng.gen_range(0..measures.len())].clone();
            let op = [
                AggregateOp::Sum,
                AggregateOp::Count,
                AggregateOp::Min,
                AggregateOp::Max,
                AggregateOp::Avg,
            ][rng.gen_range(0..5)];
            aggregations.insert(Aggregation { op, measure });
        }

        let query = ParsedQuery::new(
            id,
            &stats.fact_table,
            tables,
            joins,
            predicates,
            grouping,
            aggregations,
        )
        .expect("generated query is structurally valid");
        queries.push(query);
    }
    queries
}
