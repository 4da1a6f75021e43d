//! GPSJ query parsing, representative-attribute extraction, and the
//! clustering context (query-attribute matrix plus join-attribute appendix).
//!
//! The supported grammar is deliberately small: a single SELECT list mixing
//! aggregates and plain columns, a comma-separated FROM list, a WHERE clause
//! that is a conjunction of equi-joins and simple range predicates, and an
//! optional GROUP BY. OR, subqueries, HAVING, and explicit JOIN syntax are
//! rejected with a position. See the README for the full grammar.

use std::collections::BTreeSet;
use std::fmt;

use ordered_float::NotNan;

use crate::bits::BitRow;
use crate::error::{AdvisorError, Result};

/// A table-qualified column, canonically lowercase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Attribute {
    table: String,
    column: String,
}

impl Attribute {
    pub fn new(table: &str, column: &str) -> Self {
        Attribute {
            table: table.to_ascii_lowercase(),
            column: column.to_ascii_lowercase(),
        }
    }

    pub fn table(&self) -> &str {
        &self.table
    }

    pub fn column(&self) -> &str {
        &self.column
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

/// A literal constant in a selection predicate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Number(NotNan<f64>),
    Text(String),
}

impl Literal {
    pub fn number(value: f64) -> Self {
        Literal::Number(NotNan::new(value).expect("literal must not be NaN"))
    }

    pub fn text(value: &str) -> Self {
        Literal::Text(value.to_string())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => write!(f, "{}", n.into_inner()),
            Literal::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

/// Comparison applied by a selection predicate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredicateOp {
    Eq(Literal),
    Lt(Literal),
    Gt(Literal),
    Le(Literal),
    Ge(Literal),
    Between(Literal, Literal),
}

/// A simple range predicate comparing one column to literals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SelectionPredicate {
    pub attribute: Attribute,
    pub op: PredicateOp,
}

impl fmt::Display for SelectionPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.op {
            PredicateOp::Eq(v) => write!(f, "{} = {v}", self.attribute),
            PredicateOp::Lt(v) => write!(f, "{} < {v}", self.attribute),
            PredicateOp::Gt(v) => write!(f, "{} > {v}", self.attribute),
            PredicateOp::Le(v) => write!(f, "{} <= {v}", self.attribute),
            PredicateOp::Ge(v) => write!(f, "{} >= {v}", self.attribute),
            PredicateOp::Between(lo, hi) => {
                write!(f, "{} between {lo} and {hi}", self.attribute)
            }
        }
    }
}

/// Aggregation operators of the GPSJ fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AggregateOp {
    Sum,
    Count,
    Min,
    Max,
    Avg,
}

impl AggregateOp {
    pub fn name(self) -> &'static str {
        match self {
            AggregateOp::Sum => "sum",
            AggregateOp::Count => "count",
            AggregateOp::Min => "min",
            AggregateOp::Max => "max",
            AggregateOp::Avg => "avg",
        }
    }
}

/// One aggregated measure of a query or view.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Aggregation {
    pub op: AggregateOp,
    pub measure: Attribute,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.op.name(), self.measure)
    }
}

/// An equi-join between two columns, stored with its sides ordered so that
/// equal joins compare equal regardless of the order they were written in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JoinPair {
    left: Attribute,
    right: Attribute,
}

impl JoinPair {
    pub fn new(a: Attribute, b: Attribute) -> Self {
        if a <= b {
            JoinPair { left: a, right: b }
        } else {
            JoinPair { left: b, right: a }
        }
    }

    pub fn left(&self) -> &Attribute {
        &self.left
    }

    pub fn right(&self) -> &Attribute {
        &self.right
    }
}

impl fmt::Display for JoinPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.left, self.right)
    }
}

/// A parsed GPSJ query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedQuery {
    id: usize,
    tables: BTreeSet<String>,
    joins: BTreeSet<JoinPair>,
    predicates: BTreeSet<SelectionPredicate>,
    grouping: BTreeSet<Attribute>,
    aggregations: BTreeSet<Aggregation>,
}

impl ParsedQuery {
    /// Build a query from parts, enforcing the structural invariants:
    /// every referenced attribute's table must be in `tables`, aggregation
    /// measures must belong to the fact table, and a query with
    /// aggregations must read the fact table.
    pub fn new(
        id: usize,
        fact_table: &str,
        tables: BTreeSet<String>,
        joins: BTreeSet<JoinPair>,
        predicates: BTreeSet<SelectionPredicate>,
        grouping: BTreeSet<Attribute>,
        aggregations: BTreeSet<Aggregation>,
    ) -> Result<Self> {
        let fact = fact_table.to_ascii_lowercase();
        let check_table = |attr: &Attribute| -> Result<()> {
            if tables.contains(attr.table()) {
                Ok(())
            } else {
                Err(AdvisorError::Parse {
                    line: 0,
                    column: 0,
                    message: format!("column {attr} references a table not in FROM"),
                })
            }
        };
        for j in &joins {
            check_table(j.left())?;
            check_table(j.right())?;
        }
        for p in &predicates {
            check_table(&p.attribute)?;
        }
        for g in &grouping {
            check_table(g)?;
        }
        for a in &aggregations {
            if a.measure.table() != fact {
                return Err(AdvisorError::Parse {
                    line: 0,
                    column: 0,
                    message: format!(
                        "aggregation measure {} must be a column of fact table {fact}",
                        a.measure
                    ),
                });
            }
        }
        if !aggregations.is_empty() && !tables.contains(&fact) {
            return Err(AdvisorError::Parse {
                line: 0,
                column: 0,
                message: format!("query aggregates measures but does not read fact table {fact}"),
            });
        }
        Ok(ParsedQuery {
            id,
            tables,
            joins,
            predicates,
            grouping,
            aggregations,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub(crate) fn set_id(&mut self, id: usize) {
        self.id = id;
    }

    pub fn tables(&self) -> &BTreeSet<String> {
        &self.tables
    }

    pub fn joins(&self) -> &BTreeSet<JoinPair> {
        &self.joins
    }

    pub fn predicates(&self) -> &BTreeSet<SelectionPredicate> {
        &self.predicates
    }

    pub fn grouping(&self) -> &BTreeSet<Attribute> {
        &self.grouping
    }

    pub fn aggregations(&self) -> &BTreeSet<Aggregation> {
        &self.aggregations
    }

    /// Both sides of every equi-join.
    pub fn join_attributes(&self) -> BTreeSet<Attribute> {
        self.joins
            .iter()
            .flat_map(|j| [j.left().clone(), j.right().clone()])
            .collect()
    }

    /// Representative attributes: everything in WHERE (joins + selections)
    /// and GROUP BY.
    pub fn extract_attributes(&self) -> BTreeSet<Attribute> {
        let mut attrs = self.join_attributes();
        attrs.extend(self.predicates.iter().map(|p| p.attribute.clone()));
        attrs.extend(self.grouping.iter().cloned());
        attrs
    }

    /// Render back to SQL in the supported grammar. Parsing the result
    /// yields a query equal to `self` (up to the id).
    pub fn render_sql(&self) -> String {
        let mut select: Vec<String> = self.grouping.iter().map(|g| g.to_string()).collect();
        select.extend(self.aggregations.iter().map(|a| a.to_string()));
        if select.is_empty() {
            // A query with neither grouping nor aggregations cannot occur:
            // the grammar requires a non-empty select list.
            select.push("*".to_string());
        }
        let mut sql = format!("select {} from {}", select.join(", "), {
            let tables: Vec<&str> = self.tables.iter().map(|t| t.as_str()).collect();
            tables.join(", ")
        });
        let mut conjuncts: Vec<String> = self.joins.iter().map(|j| j.to_string()).collect();
        conjuncts.extend(self.predicates.iter().map(|p| p.to_string()));
        if !conjuncts.is_empty() {
            sql.push_str(" where ");
            sql.push_str(&conjuncts.join(" and "));
        }
        if !self.grouping.is_empty() {
            let cols: Vec<String> = self.grouping.iter().map(|g| g.to_string()).collect();
            sql.push_str(" group by ");
            sql.push_str(&cols.join(", "));
        }
        sql
    }
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Ident,
    Number,
    Str,
    Symbol,
    Eof,
}

#[derive(Debug, Clone)]
struct Tok {
    kind: TokKind,
    text: String,
    line: usize,
    column: usize,
}

fn tokenize(sql: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let mut chars = sql.chars().peekable();
    let mut line = 1usize;
    let mut column = 1usize;

    macro_rules! err {
        ($l:expr, $c:expr, $($arg:tt)*) => {
            return Err(AdvisorError::Parse { line: $l, column: $c, message: format!($($arg)*) })
        };
    }

    while let Some(&ch) = chars.peek() {
        let (tl, tc) = (line, column);
        let bump = |c: char, line: &mut usize, column: &mut usize| {
            if c == '\n' {
                *line += 1;
                *column = 1;
            } else {
                *column += 1;
            }
        };
        match ch {
            c if c.is_whitespace() => {
                chars.next();
                bump(c, &mut line, &mut column);
            }
            '-' => {
                chars.next();
                bump('-', &mut line, &mut column);
                if chars.peek() == Some(&'-') {
                    // line comment
                    for c in chars.by_ref() {
                        bump(c, &mut line, &mut column);
                        if c == '\n' {
                            break;
                        }
                    }
                } else if chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                    let mut text = String::from("-");
                    while let Some(&c) = chars.peek() {
                        if c.is_ascii_digit() || c == '.' {
                            text.push(c);
                            chars.next();
                            bump(c, &mut line, &mut column);
                        } else {
                            break;
                        }
                    }
                    toks.push(Tok { kind: TokKind::Number, text, line: tl, column: tc });
                } else {
                    err!(tl, tc, "unexpected '-'");
                }
            }
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        text.push(c);
                        chars.next();
                        bump(c, &mut line, &mut column);
                    } else {
                        break;
                    }
                }
                toks.push(Tok { kind: TokKind::Number, text, line: tl, column: tc });
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut text = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        text.push(c);
                        chars.next();
                        bump(c, &mut line, &mut column);
                    } else {
                        break;
                    }
                }
                toks.push(Tok { kind: TokKind::Ident, text, line: tl, column: tc });
            }
            '\'' => {
                chars.next();
                bump('\'', &mut line, &mut column);
                let mut text = String::new();
                let mut closed = false;
                while let Some(c) = chars.next() {
                    bump(c, &mut line, &mut column);
                    if c == '\'' {
                        if chars.peek() == Some(&'\'') {
                            text.push('\'');
                            chars.next();
                            bump('\'', &mut line, &mut column);
                        } else {
                            closed = true;
                            break;
                        }
                    } else {
                        text.push(c);
                    }
                }
                if !closed {
                    err!(tl, tc, "unterminated string literal");
                }
                toks.push(Tok { kind: TokKind::Str, text, line: tl, column: tc });
            }
            '<' | '>' => {
                chars.next();
                bump(ch, &mut line, &mut column);
                let mut text = ch.to_string();
                if chars.peek() == Some(&'=') {
                    text.push('=');
                    chars.next();
                    bump('=', &mut line, &mut column);
                } else if chars.peek() == Some(&'>') {
                    err!(tl, tc, "operator <> is not supported");
                }
                toks.push(Tok { kind: TokKind::Symbol, text, line: tl, column: tc });
            }
            ',' | '.' | '(' | ')' | ';' | '=' | '*' => {
                chars.next();
                bump(ch, &mut line, &mut column);
                toks.push(Tok {
                    kind: TokKind::Symbol,
                    text: ch.to_string(),
                    line: tl,
                    column: tc,
                });
            }
            '!' => err!(tl, tc, "operator != is not supported"),
            other => err!(tl, tc, "unexpected character '{other}'"),
        }
    }
    toks.push(Tok { kind: TokKind::Eof, text: String::new(), line, column });
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    fact_table: &'a str,
}

#[derive(Debug)]
enum SelectItem {
    Column(Attribute),
    Aggregate(Aggregation),
}

impl<'a> Parser<'a> {
    fn new(sql: &str, fact_table: &'a str) -> Result<Self> {
        Ok(Parser { toks: tokenize(sql)?, pos: 0, fact_table })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos]
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, tok: &Tok, message: impl Into<String>) -> Result<T> {
        Err(AdvisorError::Parse {
            line: tok.line,
            column: tok.column,
            message: message.into(),
        })
    }

    fn is_kw(&self, tok: &Tok, kw: &str) -> bool {
        tok.kind == TokKind::Ident && tok.text.eq_ignore_ascii_case(kw)
    }

    fn peek_kw(&self, kw: &str) -> bool {
        self.is_kw(self.peek(), kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        let tok = self.next();
        if self.is_kw(&tok, kw) {
            Ok(())
        } else {
            self.error(&tok, format!("expected '{}', found '{}'", kw, tok.text))
        }
    }

    fn expect_symbol(&mut self, sym: &str) -> Result<()> {
        let tok = self.next();
        if tok.kind == TokKind::Symbol && tok.text == sym {
            Ok(())
        } else {
            self.error(&tok, format!("expected '{}', found '{}'", sym, tok.text))
        }
    }

    fn peek_symbol(&self, sym: &str) -> bool {
        let t = self.peek();
        t.kind == TokKind::Symbol && t.text == sym
    }

    fn reject_unsupported(&self, tok: &Tok) -> Result<()> {
        for kw in ["or", "having", "union", "join", "left", "right", "outer", "inner", "on"] {
            if self.is_kw(tok, kw) {
                return self.error(tok, format!("'{}' is not supported", tok.text.to_lowercase()));
            }
        }
        Ok(())
    }

    /// `table.column`, or a bare column resolved to the fact table.
    fn parse_column(&mut self) -> Result<Attribute> {
        let tok = self.next();
        if tok.kind != TokKind::Ident {
            return self.error(&tok, format!("expected a column, found '{}'", tok.text));
        }
        self.reject_unsupported(&tok)?;
        if self.peek_symbol(".") {
            self.next();
            let col = self.next();
            if col.kind != TokKind::Ident {
                return self.error(&col, format!("expected a column name after '{}.'", tok.text));
            }
            Ok(Attribute::new(&tok.text, &col.text))
        } else {
            Ok(Attribute::new(self.fact_table, &tok.text))
        }
    }

    fn parse_literal(&mut self) -> Result<Literal> {
        let tok = self.next();
        match tok.kind {
            TokKind::Number => match tok.text.parse::<f64>() {
                Ok(n) => Ok(Literal::number(n)),
                Err(_) => self.error(&tok, format!("invalid number '{}'", tok.text)),
            },
            TokKind::Str => Ok(Literal::Text(tok.text)),
            _ => self.error(&tok, format!("expected a literal, found '{}'", tok.text)),
        }
    }

    fn aggregate_op(name: &str) -> Option<AggregateOp> {
        match name.to_ascii_lowercase().as_str() {
            "sum" => Some(AggregateOp::Sum),
            "count" => Some(AggregateOp::Count),
            "min" => Some(AggregateOp::Min),
            "max" => Some(AggregateOp::Max),
            "avg" => Some(AggregateOp::Avg),
            _ => None,
        }
    }

    fn parse_select_item(&mut self) -> Result<SelectItem> {
        let tok = self.peek().clone();
        self.reject_unsupported(&tok)?;
        if tok.kind == TokKind::Ident && self.peek2().kind == TokKind::Symbol && self.peek2().text == "(" {
            let fn_tok = self.next();
            let Some(op) = Self::aggregate_op(&fn_tok.text) else {
                return self.error(&fn_tok, format!("unsupported function '{}'", fn_tok.text));
            };
            self.expect_symbol("(")?;
            if self.peek_symbol("*") {
                let star = self.next();
                return self.error(&star, "count(*) is not supported; aggregate a named measure");
            }
            let measure = self.parse_column()?;
            self.expect_symbol(")")?;
            return Ok(SelectItem::Aggregate(Aggregation { op, measure }));
        }
        if tok.kind == TokKind::Symbol && tok.text == "(" {
            return self.error(&tok, "subqueries are not supported");
        }
        Ok(SelectItem::Column(self.parse_column()?))
    }

    fn parse_table_list(&mut self) -> Result<BTreeSet<String>> {
        let mut tables = BTreeSet::new();
        loop {
            let tok = self.next();
            if tok.kind == TokKind::Symbol && tok.text == "(" {
                return self.error(&tok, "subqueries are not supported");
            }
            if tok.kind != TokKind::Ident {
                return self.error(&tok, format!("expected a table name, found '{}'", tok.text));
            }
            self.reject_unsupported(&tok)?;
            tables.insert(tok.text.to_ascii_lowercase());
            if self.peek_symbol(",") {
                self.next();
            } else {
                break;
            }
        }
        Ok(tables)
    }

    /// One WHERE conjunct: an equi-join or a simple range predicate.
    fn parse_where_term(
        &mut self,
        joins: &mut BTreeSet<JoinPair>,
        predicates: &mut BTreeSet<SelectionPredicate>,
    ) -> Result<()> {
        let start = self.peek().clone();
        if start.kind == TokKind::Symbol && start.text == "(" {
            return self.error(&start, "parenthesized conditions are not supported");
        }
        self.reject_unsupported(&start)?;
        let attribute = self.parse_column()?;
        let op_tok = self.next();
        if self.is_kw(&op_tok, "between") {
            let lo = self.parse_literal()?;
            self.expect_kw("and")?;
            let hi = self.parse_literal()?;
            predicates.insert(SelectionPredicate {
                attribute,
                op: PredicateOp::Between(lo, hi),
            });
            return Ok(());
        }
        if op_tok.kind != TokKind::Symbol {
            return self.error(&op_tok, format!("expected a comparison, found '{}'", op_tok.text));
        }
        // Literals are numbers or strings, so an identifier on the right of
        // a comparison is always a column reference.
        let rhs_is_column = self.peek().kind == TokKind::Ident;
        match op_tok.text.as_str() {
            "=" if rhs_is_column => {
                let other = self.parse_column()?;
                if attribute == other {
                    return self.error(&op_tok, "join must relate two distinct columns");
                }
                joins.insert(JoinPair::new(attribute, other));
            }
            "=" => {
                let lit = self.parse_literal()?;
                predicates.insert(SelectionPredicate { attribute, op: PredicateOp::Eq(lit) });
            }
            "<" | ">" | "<=" | ">=" => {
                if rhs_is_column {
                    return self.error(
                        &op_tok,
                        "column-to-column comparison is only supported with '='",
                    );
                }
                let lit = self.parse_literal()?;
                let op = match op_tok.text.as_str() {
                    "<" => PredicateOp::Lt(lit),
                    ">" => PredicateOp::Gt(lit),
                    "<=" => PredicateOp::Le(lit),
                    _ => PredicateOp::Ge(lit),
                };
                predicates.insert(SelectionPredicate { attribute, op });
            }
            other => {
                return self.error(&op_tok, format!("unsupported operator '{other}'"));
            }
        }
        Ok(())
    }

    fn parse_statement(&mut self, id: usize) -> Result<ParsedQuery> {
        self.expect_kw("select")?;
        let mut items = vec![self.parse_select_item()?];
        while self.peek_symbol(",") {
            self.next();
            items.push(self.parse_select_item()?);
        }
        self.expect_kw("from")?;
        let tables = self.parse_table_list()?;

        let mut joins = BTreeSet::new();
        let mut predicates = BTreeSet::new();
        if self.peek_kw("where") {
            self.next();
            self.parse_where_term(&mut joins, &mut predicates)?;
            while self.peek_kw("and") {
                self.next();
                self.parse_where_term(&mut joins, &mut predicates)?;
            }
        }

        let mut grouping = BTreeSet::new();
        if self.peek_kw("group") {
            self.next();
            self.expect_kw("by")?;
            grouping.insert(self.parse_column()?);
            while self.peek_symbol(",") {
                self.next();
                grouping.insert(self.parse_column()?);
            }
        }

        let end = self.peek().clone();
        if end.kind == TokKind::Symbol && end.text == ";" {
            self.next();
        }
        let end = self.peek().clone();
        if end.kind != TokKind::Eof {
            self.reject_unsupported(&end)?;
            return self.error(&end, format!("unexpected '{}' after statement", end.text));
        }

        // Plain select columns must be part of the grouping set.
        let mut aggregations = BTreeSet::new();
        for item in items {
            match item {
                SelectItem::Aggregate(a) => {
                    aggregations.insert(a);
                }
                SelectItem::Column(c) => {
                    if !grouping.contains(&c) {
                        return Err(AdvisorError::Parse {
                            line: 1,
                            column: 1,
                            message: format!(
                                "non-aggregated column {c} must appear in GROUP BY"
                            ),
                        });
                    }
                }
            }
        }

        ParsedQuery::new(id, self.fact_table, tables, joins, predicates, grouping, aggregations)
    }
}

/// Parse a single GPSJ statement. Unqualified columns resolve to
/// `fact_table`.
pub fn parse_query(sql: &str, fact_table: &str) -> Result<ParsedQuery> {
    let fact = fact_table.to_ascii_lowercase();
    Parser::new(sql, &fact)?.parse_statement(0)
}

/// Split a workload file into semicolon-terminated statements and parse each
/// one. `--` line comments are ignored. Query ids are 0-based ordinals.
pub fn parse_workload(text: &str, fact_table: &str) -> Result<Vec<ParsedQuery>> {
    let fact = fact_table.to_ascii_lowercase();
    let mut queries = Vec::new();
    for stmt in split_statements(text) {
        let mut q = parse_query(&stmt, &fact)?;
        q.set_id(queries.len());
        queries.push(q);
    }
    if queries.is_empty() {
        return Err(AdvisorError::EmptyWorkload);
    }
    Ok(queries)
}

/// Statement splitter aware of string literals and `--` comments.
fn split_statements(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut in_string = false;
    let mut in_comment = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if in_comment {
            if c == '\n' {
                in_comment = false;
                current.push('\n');
            }
            continue;
        }
        match c {
            '\'' => {
                in_string = !in_string;
                current.push(c);
            }
            '-' if !in_string && chars.peek() == Some(&'-') => {
                chars.next();
                in_comment = true;
            }
            ';' if !in_string => {
                if !current.trim().is_empty() {
                    out.push(current.clone());
                }
                current.clear();
            }
            _ => current.push(c),
        }
    }
    if !current.trim().is_empty() {
        out.push(current);
    }
    out
}

// ---------------------------------------------------------------------------
// Clustering context
// ---------------------------------------------------------------------------

/// The binary query-attribute matrix plus the join-attribute appendix.
///
/// Rows are queries in workload order; columns are attributes in order of
/// first appearance (queries scanned in order, each query's attribute set in
/// canonical order). Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusteringContext {
    attributes: Vec<Attribute>,
    rows: Vec<BitRow>,
    query_ids: Vec<usize>,
    join_columns: Vec<usize>,
}

impl ClusteringContext {
    /// Number of queries (rows).
    pub fn num_queries(&self) -> usize {
        self.rows.len()
    }

    /// Number of attributes (columns).
    pub fn num_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn query_ids(&self) -> &[usize] {
        &self.query_ids
    }

    pub fn cell(&self, row: usize, col: usize) -> bool {
        self.rows[row].get(col)
    }

    pub(crate) fn row(&self, row: usize) -> &BitRow {
        &self.rows[row]
    }

    pub(crate) fn check_row(&self, id: usize) -> Result<()> {
        if id < self.rows.len() {
            Ok(())
        } else {
            Err(AdvisorError::QueryOutOfRange { id, rows: self.rows.len() })
        }
    }

    /// Column indices of attributes used as join attributes by at least one
    /// query.
    pub fn join_columns(&self) -> &[usize] {
        &self.join_columns
    }

    /// The appendix matrix: the column subset of the main matrix restricted
    /// to join attributes.
    pub fn join_appendix(&self) -> (Vec<Attribute>, Vec<Vec<bool>>) {
        let attrs: Vec<Attribute> = self
            .join_columns
            .iter()
            .map(|&j| self.attributes[j].clone())
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|r| self.join_columns.iter().map(|&j| r.get(j)).collect())
            .collect();
        (attrs, rows)
    }
}

/// Build the clustering context from a parsed workload.
pub fn build_context(workload: &[ParsedQuery]) -> Result<ClusteringContext> {
    if workload.is_empty() {
        return Err(AdvisorError::EmptyWorkload);
    }
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut index: std::collections::BTreeMap<Attribute, usize> = std::collections::BTreeMap::new();
    let mut per_query: Vec<BTreeSet<Attribute>> = Vec::with_capacity(workload.len());
    for q in workload {
        let attrs = q.extract_attributes();
        if attrs.is_empty() {
            return Err(AdvisorError::NoRepresentativeAttributes { query_id: q.id() });
        }
        for a in &attrs {
            if !index.contains_key(a) {
                index.insert(a.clone(), attributes.len());
                attributes.push(a.clone());
            }
        }
        per_query.push(attrs);
    }
    let p = attributes.len();
    let mut rows = Vec::with_capacity(workload.len());
    for attrs in &per_query {
        let mut row = BitRow::zeros(p);
        for a in attrs {
            row.set(index[a]);
        }
        rows.push(row);
    }
    let mut join_cols: BTreeSet<usize> = BTreeSet::new();
    for q in workload {
        for a in q.join_attributes() {
            join_cols.insert(index[&a]);
        }
    }
    Ok(ClusteringContext {
        attributes,
        rows,
        query_ids: workload.iter().map(|q| q.id()).collect(),
        join_columns: join_cols.into_iter().collect(),
    })
}
