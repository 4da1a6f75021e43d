//! Shared fixtures for unit tests: the example workload and a synthetic
//! statistics document for its star schema.

use crate::catalog::{load_stats, CatalogStats};
use crate::workload::ParsedQuery;

pub const FIG2_Q1: &str = "select sales.time_id, sum(quantity_sold) from sales, times \
     where sales.time_id = times.time_id and times.fiscal_day = 2 \
     group by sales.time_id";

pub const FIG2_Q2: &str = "select sales.prod_id, sum(amount_sold) from sales, products, promotions \
     where sales.prod_id = products.prod_id and sales.promo_id = promotions.promo_id \
     and promotions.promo_category = 'newspaper' \
     group by sales.prod_id";

pub const FIG2_Q3: &str = "select sales.cust_id, sum(amount_sold) from sales, customers, products, times \
     where sales.cust_id = customers.cust_id and sales.prod_id = products.prod_id \
     and sales.time_id = times.time_id and times.fiscal_day = 3 \
     and customers.cust_marital_status = 'single' and products.prod_category = 'Women' \
     group by sales.cust_id";

pub fn fig2_workload_sql() -> String {
    format!("{FIG2_Q1};\n{FIG2_Q2};\n{FIG2_Q3};\n")
}

/// Synthetic statistics for the example schema: fact table `sales` with
/// dimensions `times`, `products`, `promotions`, `customers`.
pub fn fig2_stats_json() -> String {
    r#"{
  "fact_table": "sales",
  "fact_rows": 100000,
  "dimensions": [
    {"table": "times", "key": "time_id", "key_cardinality": 1460},
    {"table": "products", "key": "prod_id", "key_cardinality": 200},
    {"table": "promotions", "key": "promo_id", "key_cardinality": 30},
    {"table": "customers", "key": "cust_id", "key_cardinality": 5000}
  ],
  "attributes": {
    "times.time_id": {"cardinality": 1460, "bytes": 4},
    "times.fiscal_day": {"cardinality": 365, "bytes": 4},
    "sales.time_id": {"cardinality": 1460, "bytes": 4},
    "products.prod_id": {"cardinality": 200, "bytes": 4},
    "products.prod_category": {"cardinality": 20, "bytes": 16},
    "sales.prod_id": {"cardinality": 200, "bytes": 4},
    "promotions.promo_id": {"cardinality": 30, "bytes": 4},
    "promotions.promo_category": {"cardinality": 8, "bytes": 16},
    "sales.promo_id": {"cardinality": 30, "bytes": 4},
    "customers.cust_id": {"cardinality": 5000, "bytes": 4},
    "customers.cust_marital_status": {"cardinality": 4, "bytes": 12},
    "sales.cust_id": {"cardinality": 5000, "bytes": 4}
  },
  "measures": {
    "sales.quantity_sold": {"bytes": 8},
    "sales.amount_sold": {"bytes": 8}
  }
}"#
    .to_string()
}

pub fn fig2_stats() -> CatalogStats {
    load_stats(&fig2_stats_json()).unwrap()
}

pub fn parse_queries(sqls: &[&str]) -> Vec<ParsedQuery> {
    crate::workload::parse_workload(
        &sqls.iter().map(|s| format!("{s};")).collect::<String>(),
        "sales",
    )
    .unwrap()
}

pub fn parse_fig2_workload() -> Vec<ParsedQuery> {
    parse_queries(&[FIG2_Q1, FIG2_Q2, FIG2_Q3])
}

/// A context whose query-attribute matrix equals `rows`, realized as
/// grouping-only queries over fact-table columns. Rows must be non-zero.
pub fn context_from_matrix(rows: &[Vec<bool>]) -> crate::workload::ClusteringContext {
    let p = rows[0].len();
    let mut sql = String::new();
    for row in rows {
        assert!(row.iter().any(|&b| b), "matrix rows must be non-zero");
        let cols: Vec<String> = (0..p).filter(|&j| row[j]).map(|j| format!("f.c{j}")).collect();
        sql.push_str(&format!(
            "select {}, sum(f.m) from f group by {};\n",
            cols.join(", "),
            cols.join(", ")
        ));
    }
    let workload = crate::workload::parse_workload(&sql, "f").unwrap();
    crate::workload::build_context(&workload).unwrap()
}
