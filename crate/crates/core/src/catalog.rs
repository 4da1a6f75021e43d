//! Star-schema statistics: loading, validation, and workload coverage checks.
//!
//! All cost estimation reads from [`CatalogStats`]. The statistics are
//! supplied as a JSON document (see the repository README for the format)
//! rather than harvested from a live DBMS, which keeps the advisor fully
//! offline.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AdvisorError, Result};
use crate::workload::{AggregateOp, Attribute, ParsedQuery};

/// One dimension table of the star schema.
///
/// Composite primary keys are collapsed into a single entry whose
/// `key_cardinality` is the pre-multiplied count of distinct key tuples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub table: String,
    pub key: String,
    pub key_cardinality: u64,
}

/// Statistics for one dimension or fact attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeStats {
    pub cardinality: u64,
    pub bytes: u32,
}

/// Statistics for one fact-table measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureStats {
    pub bytes: u32,
}

/// Validated star-schema statistics.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogStats {
    pub fact_table: String,
    pub fact_rows: u64,
    pub dimensions: Vec<Dimension>,
    /// Keyed by canonical `"table.column"`.
    pub attributes: BTreeMap<String, AttributeStats>,
    /// Keyed by canonical `"table.column"`.
    pub measures: BTreeMap<String, MeasureStats>,
}

// Raw mirror of the on-disk document. Counts are read as i64 so that
// non-positive values surface as named validation errors instead of serde
// integer-range noise.
#[derive(Deserialize)]
struct RawStats {
    fact_table: String,
    fact_rows: i64,
    dimensions: Vec<RawDimension>,
    #[serde(default)]
    attributes: BTreeMap<String, RawAttribute>,
    #[serde(default)]
    measures: BTreeMap<String, RawMeasure>,
}

#[derive(Deserialize)]
struct RawDimension {
    table: String,
    key: String,
    key_cardinality: i64,
}

#[derive(Deserialize)]
struct RawAttribute {
    cardinality: i64,
    bytes: i64,
}

#[derive(Deserialize)]
struct RawMeasure {
    bytes: i64,
}

/// Parse and validate a statistics document.
pub fn load_stats(document: &str) -> Result<CatalogStats> {
    let raw: RawStats = serde_json::from_str(document)
        .map_err(|e| AdvisorError::Stats(format!("malformed document: {e}")))?;

    if raw.fact_rows < 0 {
        return Err(AdvisorError::Stats(format!(
            "fact_rows must be >= 0 (got {})",
            raw.fact_rows
        )));
    }

    let mut dimensions = Vec::with_capacity(raw.dimensions.len());
    for d in &raw.dimensions {
        if d.key_cardinality < 1 {
            return Err(AdvisorError::Stats(format!(
                "dimension {}: key_cardinality must be >= 1 (got {})",
                d.table, d.key_cardinality
            )));
        }
        dimensions.push(Dimension {
            table: d.table.to_ascii_lowercase(),
            key: d.key.to_ascii_lowercase(),
            key_cardinality: d.key_cardinality as u64,
        });
    }

    let mut attributes = BTreeMap::new();
    for (name, a) in &raw.attributes {
        if a.cardinality < 1 {
            return Err(AdvisorError::Stats(format!(
                "attribute {name}: cardinality must be >= 1 (got {})",
                a.cardinality
            )));
        }
        if a.bytes < 1 {
            return Err(AdvisorError::Stats(format!(
                "attribute {name}: bytes must be >= 1 (got {})",
                a.bytes
            )));
        }
        attributes.insert(
            name.to_ascii_lowercase(),
            AttributeStats {
                cardinality: a.cardinality as u64,
                bytes: a.bytes as u32,
            },
        );
    }

    let mut measures = BTreeMap::new();
    for (name, m) in &raw.measures {
        if m.bytes < 1 {
            return Err(AdvisorError::Stats(format!(
                "measure {name}: bytes must be >= 1 (got {})",
                m.bytes
            )));
        }
        measures.insert(name.to_ascii_lowercase(), MeasureStats { bytes: m.bytes as u32 });
    }

    Ok(CatalogStats {
        fact_table: raw.fact_table.to_ascii_lowercase(),
        fact_rows: raw.fact_rows as u64,
        dimensions,
        attributes,
        measures,
    })
}

impl CatalogStats {
    /// Number of dimension tables (N in the ms(F) product).
    pub fn num_dimensions(&self) -> usize {
        self.dimensions.len()
    }

    pub fn dimension(&self, table: &str) -> Option<&Dimension> {
        self.dimensions.iter().find(|d| d.table == table)
    }

    pub fn attribute_cardinality(&self, attr: &Attribute) -> Option<u64> {
        self.attributes.get(&attr.to_string()).map(|a| a.cardinality)
    }

    /// Byte width of a column, whether recorded as an attribute or a measure.
    pub fn column_bytes(&self, attr: &Attribute) -> Option<u32> {
        let key = attr.to_string();
        self.attributes
            .get(&key)
            .map(|a| a.bytes)
            .or_else(|| self.measures.get(&key).map(|m| m.bytes))
    }

    pub fn serialize_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

/// What a [`MissingStat`] diagnostic is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MissingKind {
    Cardinality,
    ColumnSize,
}

/// Diagnostic naming a workload column absent from the statistics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MissingStat {
    pub attribute: String,
    pub kind: MissingKind,
}

impl fmt::Display for MissingStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            MissingKind::Cardinality => write!(f, "{}: missing cardinality", self.attribute),
            MissingKind::ColumnSize => write!(f, "{}: missing column byte width", self.attribute),
        }
    }
}

/// Check that the statistics cover every attribute and measure the workload
/// touches. Returns diagnostics rather than failing: callers decide whether
/// missing entries are fatal.
pub fn validate_against_workload(
    stats: &CatalogStats,
    workload: &[ParsedQuery],
) -> Vec<MissingStat> {
    let mut missing = std::collections::BTreeSet::new();
    for query in workload {
        for attr in query.extract_attributes() {
            if !stats.attributes.contains_key(&attr.to_string()) {
                missing.insert(MissingStat {
                    attribute: attr.to_string(),
                    kind: MissingKind::Cardinality,
                });
            }
        }
        for agg in query.aggregations() {
            // count produces a fixed-width output; the measure's own width
            // is only needed when the measure value is carried through.
            if agg.op == AggregateOp::Count {
                continue;
            }
            if stats.column_bytes(&agg.measure).is_none() {
                missing.insert(MissingStat {
                    attribute: agg.measure.to_string(),
                    kind: MissingKind::ColumnSize,
                });
            }
        }
    }
    missing.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_fixtures::{fig2_stats_json, parse_fig2_workload};

    #[test]
    fn loads_fig2_style_schema() {
        let stats = load_stats(&fig2_stats_json()).unwrap();
        assert_eq!(stats.fact_table, "sales");
        assert_eq!(stats.num_dimensions(), 4);
        assert!(stats.dimension("times").is_some());
        assert_eq!(
            stats.attribute_cardinality(&Attribute::new("times", "fiscal_day")),
            Some(365)
        );
    }

    #[test]
    fn empty_warehouse_is_legal() {
        let doc = r#"{
            "fact_table": "f",
            "fact_rows": 0,
            "dimensions": [{"table": "d", "key": "id", "key_cardinality": 1}],
            "attributes": {},
            "measures": {}
        }"#;
        let stats = load_stats(doc).unwrap();
        assert_eq!(stats.fact_rows, 0);
        assert_eq!(stats.dimensions[0].key_cardinality, 1);
    }

    #[test]
    fn negative_cardinality_is_a_validation_error() {
        let doc = r#"{
            "fact_table": "f",
            "fact_rows": 10,
            "dimensions": [{"table": "d", "key": "id", "key_cardinality": -3}],
            "attributes": {},
            "measures": {}
        }"#;
        let err = load_stats(doc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("key_cardinality"), "unexpected message: {msg}");
        assert!(msg.contains("-3"), "unexpected message: {msg}");
    }

    #[test]
    fn zero_attribute_cardinality_rejected() {
        let doc = r#"{
            "fact_table": "f",
            "fact_rows": 10,
            "dimensions": [],
            "attributes": {"d.a": {"cardinality": 0, "bytes": 4}},
            "measures": {}
        }"#;
        assert!(load_stats(doc).is_err());
    }

    #[test]
    fn malformed_document_names_the_problem() {
        let err = load_stats("{\"fact_table\": 3}").unwrap_err();
        assert!(matches!(err, AdvisorError::Stats(_)));
    }

    #[test]
    fn case_is_canonicalized_to_lowercase() {
        let doc = r#"{
            "fact_table": "Sales",
            "fact_rows": 5,
            "dimensions": [{"table": "Times", "key": "Time_ID", "key_cardinality": 7}],
            "attributes": {"Times.Fiscal_Day": {"cardinality": 3, "bytes": 4}},
            "measures": {"Sales.Amount_Sold": {"bytes": 8}}
        }"#;
        let stats = load_stats(doc).unwrap();
        assert_eq!(stats.fact_table, "sales");
        assert_eq!(stats.dimensions[0].key, "time_id");
        assert!(stats.attributes.contains_key("times.fiscal_day"));
        assert!(stats.measures.contains_key("sales.amount_sold"));
    }

    #[test]
    fn round_trip_serialization() {
        let stats = load_stats(&fig2_stats_json()).unwrap();
        let reloaded = load_stats(&stats.serialize_json()).unwrap();
        assert_eq!(stats, reloaded);
    }

    #[test]
    fn determinism_identical_documents() {
        let a = load_stats(&fig2_stats_json()).unwrap();
        let b = load_stats(&fig2_stats_json()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_workload_has_no_diagnostics() {
        let stats = load_stats(&fig2_stats_json()).unwrap();
        assert!(validate_against_workload(&stats, &[]).is_empty());
    }

    #[test]
    fn covered_workload_has_no_diagnostics() {
        let stats = load_stats(&fig2_stats_json()).unwrap();
        let workload = parse_fig2_workload();
        assert!(validate_against_workload(&stats, &workload).is_empty());
    }

    #[test]
    fn missing_attribute_is_named() {
        let mut stats = load_stats(&fig2_stats_json()).unwrap();
        stats.attributes.remove("times.fiscal_day");
        let workload = parse_fig2_workload();
        let diags = validate_against_workload(&stats, &workload);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].attribute, "times.fiscal_day");
        assert_eq!(diags[0].kind, MissingKind::Cardinality);
    }

    #[test]
    fn missing_measure_width_is_named() {
        let mut stats = load_stats(&fig2_stats_json()).unwrap();
        stats.measures.remove("sales.quantity_sold");
        let workload = parse_fig2_workload();
        let diags = validate_against_workload(&stats, &workload);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].attribute, "sales.quantity_sold");
        assert_eq!(diags[0].kind, MissingKind::ColumnSize);
    }
}
