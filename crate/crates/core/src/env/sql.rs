//! SQL subset used by MiniDB.
//!
//! ```text
//! SELECT (* | col, ... | COUNT(*) | MAX|MIN|SUM|AVG(col)) FROM table
//!     [WHERE col op literal [AND ...]] [ORDER BY col [ASC|DESC]] [LIMIT n]
//! INSERT INTO table VALUES (literal, ...)
//! UPDATE table SET col = literal [, ...] [WHERE ...]
//! DELETE FROM table [WHERE ...]
//! ```
//! `op` is one of `= != <> < > <= >= LIKE`. Identifiers that contain spaces
//! or collide with a reserved word must be backtick-quoted.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

pub const RESERVED: [&str; 21] = [
    "select", "from", "where", "and", "order", "by", "asc", "desc", "limit", "insert", "into",
    "values", "update", "set", "delete", "like", "null", "group", "key", "rank", "count",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word.to_ascii_lowercase().as_str())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Integer,
    Real,
    Text,
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnType::Integer => "INTEGER",
            ColumnType::Real => "REAL",
            ColumnType::Text => "TEXT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Real(f64),
    Text(String),
    Null,
}

impl Value {
    fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    /// Total order used by ORDER BY: NULL < numbers < text.
    pub fn sort_cmp(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Null => 0,
                Value::Int(_) | Value::Real(_) => 1,
                Value::Text(_) => 2,
            }
        }
        match (self, other) {
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (a, b) if rank(a) == 1 && rank(b) == 1 => {
                a.as_f64().unwrap().total_cmp(&b.as_f64().unwrap())
            }
            (a, b) => rank(a).cmp(&rank(b)),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Text(s) => f.write_str(s),
            Value::Null => f.write_str("NULL"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub ty: ColumnType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Like,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub column: String,
    pub op: CmpOp,
    pub literal: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Max,
    Min,
    Sum,
    Avg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Star,
    Columns(Vec<String>),
    CountStar,
    Aggregate(Aggregate, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Select {
    pub projection: Projection,
    pub table: String,
    pub filter: Vec<Condition>,
    pub order_by: Option<(String, bool)>,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Select(Select),
    Insert { table: String, values: Vec<Value> },
    Update { table: String, assignments: Vec<(String, Value)>, filter: Vec<Condition> },
    Delete { table: String, filter: Vec<Condition> },
}

impl Statement {
    pub fn is_mutation(&self) -> bool {
        !matches!(self, Statement::Select(_))
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Quoted(String),
    Str(String),
    Int(i64),
    Real(f64),
    Sym(&'static str),
}

fn lex(src: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Word(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            if text.contains('.') {
                out.push(Token::Real(text.parse().map_err(|_| format!("bad number '{text}'"))?));
            } else {
                out.push(Token::Int(text.parse().map_err(|_| format!("bad number '{text}'"))?));
            }
        } else if c == '\'' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string literal".into()),
                    Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                        s.push('\'');
                        i += 2;
                    }
                    Some('\'') => {
                        i += 1;
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push(Token::Str(s));
        } else if c == '`' {
            let end = chars[i + 1..].iter().position(|&ch| ch == '`').ok_or("unterminated identifier")?;
            out.push(Token::Quoted(chars[i + 1..i + 1 + end].iter().collect()));
            i += end + 2;
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let sym = match two.as_str() {
                "!=" => Some("!="),
                "<>" => Some("!="),
                "<=" => Some("<="),
                ">=" => Some(">="),
                _ => None,
            };
            if let Some(s) = sym {
                out.push(Token::Sym(s));
                i += 2;
                continue;
            }
            let s = match c {
                '*' => "*",
                '(' => "(",
                ')' => ")",
                ',' => ",",
                '=' => "=",
                '<' => "<",
                '>' => ">",
                ';' => ";",
                other => return Err(format!("unexpected character '{other}'")),
            };
            out.push(Token::Sym(s));
            i += 1;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn near(&self) -> String {
        match self.peek() {
            None => "end of query".into(),
            Some(Token::Word(w)) | Some(Token::Quoted(w)) => format!("'{w}'"),
            Some(Token::Str(s)) => format!("'{s}'"),
            Some(Token::Int(i)) => format!("'{i}'"),
            Some(Token::Real(r)) => format!("'{r}'"),
            Some(Token::Sym(s)) => format!("'{s}'"),
        }
    }

    fn err<T>(&self) -> Result<T, String> {
        Err(format!("syntax error near {}", self.near()))
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), String> {
        if self.is_kw(kw) {
            self.pos += 1;
            Ok(())
        } else {
            self.err()
        }
    }

    fn sym(&mut self, s: &str) -> Result<(), String> {
        if matches!(self.peek(), Some(Token::Sym(x)) if *x == s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err()
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token::Sym(x)) if *x == s)
    }

    fn ident(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Token::Word(w)) if !is_reserved(w) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            Some(Token::Quoted(q)) => {
                let q = q.clone();
                self.pos += 1;
                Ok(q)
            }
            _ => self.err(),
        }
    }

    fn literal(&mut self) -> Result<Value, String> {
        match self.peek() {
            Some(Token::Int(i)) => {
                let v = Value::Int(*i);
                self.pos += 1;
                Ok(v)
            }
            Some(Token::Real(r)) => {
                let v = Value::Real(*r);
                self.pos += 1;
                Ok(v)
            }
            Some(Token::Str(s)) => {
                let v = Value::Text(s.clone());
                self.pos += 1;
                Ok(v)
            }
            Some(Token::Word(w)) if w.eq_ignore_ascii_case("null") => {
                self.pos += 1;
                Ok(Value::Null)
            }
            _ => self.err(),
        }
    }

    fn conditions(&mut self) -> Result<Vec<Condition>, String> {
        let mut out = Vec::new();
        if !self.is_kw("where") {
            return Ok(out);
        }
        self.pos += 1;
        loop {
            let column = self.ident()?;
            let op = match self.next() {
                Some(Token::Sym("=")) => CmpOp::Eq,
                Some(Token::Sym("!=")) => CmpOp::Ne,
                Some(Token::Sym("<")) => CmpOp::Lt,
                Some(Token::Sym(">")) => CmpOp::Gt,
                Some(Token::Sym("<=")) => CmpOp::Le,
                Some(Token::Sym(">=")) => CmpOp::Ge,
                Some(Token::Word(w)) if w.eq_ignore_ascii_case("like") => CmpOp::Like,
                _ => {
                    self.pos -= 1;
                    return self.err();
                }
            };
            let literal = self.literal()?;
            out.push(Condition { column, op, literal });
            if self.is_kw("and") {
                self.pos += 1;
            } else {
                return Ok(out);
            }
        }
    }

    fn projection(&mut self) -> Result<Projection, String> {
        if self.is_sym("*") {
            self.pos += 1;
            return Ok(Projection::Star);
        }
        if self.is_kw("count") {
            self.pos += 1;
            self.sym("(")?;
            self.sym("*")?;
            self.sym(")")?;
            return Ok(Projection::CountStar);
        }
        for (kw, agg) in [("max", Aggregate::Max), ("min", Aggregate::Min), ("sum", Aggregate::Sum), ("avg", Aggregate::Avg)] {
            let is_call = self.is_kw(kw) && matches!(self.tokens.get(self.pos + 1), Some(Token::Sym("(")));
            if is_call {
                self.pos += 2;
                let col = self.ident()?;
                self.sym(")")?;
                return Ok(Projection::Aggregate(agg, col));
            }
        }
        let mut cols = vec![self.ident()?];
        while self.is_sym(",") {
            self.pos += 1;
            cols.push(self.ident()?);
        }
        Ok(Projection::Columns(cols))
    }

    fn statement(&mut self) -> Result<Statement, String> {
        let stmt = if self.is_kw("select") {
            self.pos += 1;
            let projection = self.projection()?;
            self.keyword("from")?;
            let table = self.ident()?;
            let filter = self.conditions()?;
            let mut order_by = None;
            if self.is_kw("order") {
                self.pos += 1;
                self.keyword("by")?;
                let col = self.ident()?;
                let mut asc = true;
                if self.is_kw("asc") {
                    self.pos += 1;
                } else if self.is_kw("desc") {
                    self.pos += 1;
                    asc = false;
                }
                order_by = Some((col, asc));
            }
            let mut limit = None;
            if self.is_kw("limit") {
                self.pos += 1;
                match self.next() {
                    Some(Token::Int(n)) if n >= 0 => limit = Some(n as u64),
                    _ => {
                        self.pos -= 1;
                        return self.err();
                    }
                }
            }
            Statement::Select(Select { projection, table, filter, order_by, limit })
        } else if self.is_kw("insert") {
            self.pos += 1;
            self.keyword("into")?;
            let table = self.ident()?;
            self.keyword("values")?;
            self.sym("(")?;
            let mut values = vec![self.literal()?];
            while self.is_sym(",") {
                self.pos += 1;
                values.push(self.literal()?);
            }
            self.sym(")")?;
            Statement::Insert { table, values }
        } else if self.is_kw("update") {
            self.pos += 1;
            let table = self.ident()?;
            self.keyword("set")?;
            let mut assignments = Vec::new();
            loop {
                let col = self.ident()?;
                self.sym("=")?;
                assignments.push((col, self.literal()?));
                if self.is_sym(",") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let filter = self.conditions()?;
            Statement::Update { table, assignments, filter }
        } else if self.is_kw("delete") {
            self.pos += 1;
            self.keyword("from")?;
            let table = self.ident()?;
            let filter = self.conditions()?;
            Statement::Delete { table, filter }
        } else {
            return self.err();
        };
        if self.is_sym(";") {
            self.pos += 1;
        }
        if self.pos < self.tokens.len() {
            return self.err();
        }
        Ok(stmt)
    }
}

pub fn parse(sql: &str) -> Result<Statement, String> {
    let tokens = lex(sql)?;
    Parser { tokens, pos: 0 }.statement()
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum QueryOutput {
    Rows { columns: Vec<String>, rows: Vec<Vec<Value>> },
    Scalar(Value),
    Affected(usize),
}

impl QueryOutput {
    /// Rendering shown to the model; also the committed-answer format.
    pub fn render(&self) -> String {
        match self {
            QueryOutput::Scalar(v) => v.to_string(),
            QueryOutput::Affected(n) => {
                format!("Query OK, {n} row{} affected.", if *n == 1 { "" } else { "s" })
            }
            QueryOutput::Rows { rows, .. } if rows.is_empty() => "Empty set".into(),
            QueryOutput::Rows { columns, rows } if columns.len() == 1 => {
                rows.iter().map(|r| r[0].to_string()).collect::<Vec<_>>().join(", ")
            }
            QueryOutput::Rows { rows, .. } => rows
                .iter()
                .map(|r| format!("({})", r.iter().map(Value::to_string).collect::<Vec<_>>().join(", ")))
                .collect::<Vec<_>>()
                .join(", "),
        }
    }
}

/// `%` matches any run, `_` one char; ASCII case-insensitive.
pub fn like_match(text: &str, pattern: &str) -> bool {
    let t: Vec<char> = text.to_ascii_lowercase().chars().collect();
    let p: Vec<char> = pattern.to_ascii_lowercase().chars().collect();
    let mut dp = vec![vec![false; t.len() + 1]; p.len() + 1];
    dp[0][0] = true;
    for i in 1..=p.len() {
        if p[i - 1] == '%' {
            dp[i][0] = dp[i - 1][0];
        }
        for j in 1..=t.len() {
            dp[i][j] = match p[i - 1] {
                '%' => dp[i - 1][j] || dp[i][j - 1],
                '_' => dp[i - 1][j - 1],
                c => dp[i - 1][j - 1] && c == t[j - 1],
            };
        }
    }
    dp[p.len()][t.len()]
}

fn compare(value: &Value, op: CmpOp, literal: &Value) -> bool {
    if op == CmpOp::Like {
        return match (value, literal) {
            (Value::Text(t), Value::Text(p)) => like_match(t, p),
            _ => false,
        };
    }
    let ord = match (value, literal) {
        (Value::Text(a), Value::Text(b)) => a.cmp(b),
        (a, b) => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => match x.partial_cmp(&y) {
                Some(o) => o,
                None => return false,
            },
            _ => return false,
        },
    };
    match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
        CmpOp::Like => unreachable!(),
    }
}

fn find_table<'a>(tables: &'a [Table], name: &str) -> Result<usize, String> {
    tables
        .iter()
        .position(|t| t.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| format!("unknown table '{name}'"))
}

fn column(table: &Table, name: &str) -> Result<usize, String> {
    table
        .column_index(name)
        .ok_or_else(|| format!("unknown column '{name}' in table '{}'", table.name))
}

fn matcher(table: &Table, filter: &[Condition]) -> Result<Vec<(usize, CmpOp, Value)>, String> {
    filter.iter().map(|c| Ok((column(table, &c.column)?, c.op, c.literal.clone()))).collect()
}

fn row_matches(row: &[Value], conds: &[(usize, CmpOp, Value)]) -> bool {
    conds.iter().all(|(i, op, lit)| compare(&row[*i], *op, lit))
}

fn coerce(value: Value, ty: ColumnType, col: &str) -> Result<Value, String> {
    match (value, ty) {
        (Value::Null, _) => Ok(Value::Null),
        (Value::Int(i), ColumnType::Integer) => Ok(Value::Int(i)),
        (Value::Int(i), ColumnType::Real) => Ok(Value::Real(i as f64)),
        (Value::Real(r), ColumnType::Real) => Ok(Value::Real(r)),
        (Value::Text(s), ColumnType::Text) => Ok(Value::Text(s)),
        (v, ty) => Err(format!("type mismatch: cannot store {v} in {ty} column '{col}'")),
    }
}

pub fn execute(tables: &mut [Table], stmt: &Statement) -> Result<QueryOutput, String> {
    match stmt {
        Statement::Select(sel) => select(&tables[find_table(tables, &sel.table)?], sel),
        Statement::Insert { table, values } => {
            let t = &mut tables[find_table(tables, table)?];
            if values.len() != t.columns.len() {
                return Err(format!(
                    "column count mismatch: table '{}' has {} columns, got {} values",
                    t.name,
                    t.columns.len(),
                    values.len()
                ));
            }
            let row = values
                .iter()
                .zip(&t.columns)
                .map(|(v, c)| coerce(v.clone(), c.ty, &c.name))
                .collect::<Result<Vec<_>, _>>()?;
            t.rows.push(row);
            Ok(QueryOutput::Affected(1))
        }
        Statement::Update { table, assignments, filter } => {
            let t = &mut tables[find_table(tables, table)?];
            let conds = matcher(t, filter)?;
            let sets = assignments
                .iter()
                .map(|(c, v)| {
                    let i = column(t, c)?;
                    Ok((i, coerce(v.clone(), t.columns[i].ty, &t.columns[i].name)?))
                })
                .collect::<Result<Vec<_>, String>>()?;
            let mut n = 0;
            for row in t.rows.iter_mut().filter(|r| row_matches(r, &conds)) {
                for (i, v) in &sets {
                    row[*i] = v.clone();
                }
                n += 1;
            }
            Ok(QueryOutput::Affected(n))
        }
        Statement::Delete { table, filter } => {
            let t = &mut tables[find_table(tables, table)?];
            let conds = matcher(t, filter)?;
            let before = t.rows.len();
            t.rows.retain(|r| !row_matches(r, &conds));
            Ok(QueryOutput::Affected(before - t.rows.len()))
        }
    }
}

fn select(t: &Table, sel: &Select) -> Result<QueryOutput, String> {
    let conds = matcher(t, &sel.filter)?;
    let mut rows: Vec<&Vec<Value>> = t.rows.iter().filter(|r| row_matches(r, &conds)).collect();
    if let Some((col, asc)) = &sel.order_by {
        let i = column(t, col)?;
        rows.sort_by(|a, b| {
            let o = a[i].sort_cmp(&b[i]);
            if *asc { o } else { o.reverse() }
        });
    }
    if let Some(n) = sel.limit {
        rows.truncate(n as usize);
    }
    match &sel.projection {
        Projection::Star => Ok(QueryOutput::Rows {
            columns: t.columns.iter().map(|c| c.name.clone()).collect(),
            rows: rows.into_iter().cloned().collect(),
        }),
        Projection::Columns(cols) => {
            let idx = cols.iter().map(|c| column(t, c)).collect::<Result<Vec<_>, _>>()?;
            Ok(QueryOutput::Rows {
                columns: idx.iter().map(|&i| t.columns[i].name.clone()).collect(),
                rows: rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect(),
            })
        }
        Projection::CountStar => Ok(QueryOutput::Scalar(Value::Int(rows.len() as i64))),
        Projection::Aggregate(agg, col) => {
            let i = column(t, col)?;
            let values: Vec<&Value> = rows.iter().map(|r| &r[i]).filter(|v| **v != Value::Null).collect();
            aggregate(*agg, &t.columns[i], &values).map(QueryOutput::Scalar)
        }
    }
}

fn aggregate(agg: Aggregate, col: &Column, values: &[&Value]) -> Result<Value, String> {
    if matches!(agg, Aggregate::Sum | Aggregate::Avg) && col.ty == ColumnType::Text {
        return Err(format!("{} requires a numeric column, '{}' is TEXT", agg_name(agg), col.name));
    }
    if values.is_empty() {
        return Ok(Value::Null);
    }
    Ok(match agg {
        Aggregate::Max => (*values.iter().max_by(|a, b| a.sort_cmp(b)).unwrap()).clone(),
        Aggregate::Min => (*values.iter().min_by(|a, b| a.sort_cmp(b)).unwrap()).clone(),
        Aggregate::Sum => {
            if values.iter().all(|v| matches!(v, Value::Int(_))) {
                let mut total: i64 = 0;
                for v in values {
                    if let Value::Int(i) = v {
                        total = total.checked_add(*i).ok_or("integer overflow in SUM")?;
                    }
                }
                Value::Int(total)
            } else {
                Value::Real(values.iter().map(|v| v.as_f64().unwrap()).sum())
            }
        }
        Aggregate::Avg => {
            let sum: f64 = values.iter().map(|v| v.as_f64().unwrap()).sum();
            Value::Real(sum / values.len() as f64)
        }
    })
}

fn agg_name(a: Aggregate) -> &'static str {
    match a {
        Aggregate::Max => "MAX",
        Aggregate::Min => "MIN",
        Aggregate::Sum => "SUM",
        Aggregate::Avg => "AVG",
    }
}

/// Parse and execute; errors carry the `Error: ` prefix used in observations.
pub fn run(tables: &mut [Table], sql: &str) -> Result<QueryOutput, String> {
    let stmt = parse(sql).map_err(|e| format!("Error: {e}"))?;
    execute(tables, &stmt).map_err(|e| format!("Error: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orders() -> Vec<Table> {
        vec![Table {
            name: "orders".into(),
            columns: vec![
                Column { name: "order id".into(), ty: ColumnType::Integer },
                Column { name: "customer".into(), ty: ColumnType::Text },
                Column { name: "amount".into(), ty: ColumnType::Real },
            ],
            rows: vec![
                vec![Value::Int(1), Value::Text("alice".into()), Value::Real(10.5)],
                vec![Value::Int(2), Value::Text("bob".into()), Value::Real(4.0)],
                vec![Value::Int(3), Value::Text("alice".into()), Value::Real(7.25)],
            ],
        }]
    }

    fn q(sql: &str) -> String {
        match run(&mut orders(), sql) {
            Ok(o) => o.render(),
            Err(e) => e,
        }
    }

    #[test]
    fn count_star() {
        assert_eq!(q("SELECT COUNT(*) FROM orders"), "3");
        assert_eq!(q("select count(*) from orders where customer = 'alice'"), "2");
    }

    #[test]
    fn aggregates() {
        assert_eq!(q("SELECT SUM(amount) FROM orders"), "21.75");
        assert_eq!(q("SELECT MAX(amount) FROM orders WHERE customer = 'bob'"), "4");
        assert_eq!(q("SELECT MIN(customer) FROM orders"), "alice");
        assert_eq!(q("SELECT SUM(amount) FROM orders WHERE customer = 'zed'"), "NULL");
        assert_eq!(q("SELECT AVG(`order id`) FROM orders"), "2");
        assert!(q("SELECT SUM(customer) FROM orders").starts_with("Error: SUM requires"));
    }

    #[test]
    fn projection_order_limit() {
        assert_eq!(q("SELECT customer FROM orders ORDER BY amount DESC LIMIT 2"), "alice, alice");
        assert_eq!(q("SELECT `order id`, customer FROM orders WHERE amount < 8"), "(2, bob), (3, alice)");
        assert_eq!(q("SELECT * FROM orders WHERE customer LIKE 'B%'"), "(2, bob, 4)");
        assert_eq!(q("SELECT customer FROM orders WHERE amount > 100"), "Empty set");
    }

    #[test]
    fn identifier_rules() {
        assert!(q("SELECT order id FROM orders").starts_with("Error: syntax error near 'order'"));
        assert_eq!(q("SELECT `order id` FROM orders WHERE customer = 'bob';"), "2");
        assert_eq!(q("SELECT nope FROM orders"), "Error: unknown column 'nope' in table 'orders'");
        assert_eq!(q("SELECT * FROM nope"), "Error: unknown table 'nope'");
    }

    #[test]
    fn mutations() {
        let mut t = orders();
        assert_eq!(run(&mut t, "INSERT INTO orders VALUES (4, 'cy', 1)").unwrap(), QueryOutput::Affected(1));
        assert_eq!(t[0].rows[3][2], Value::Real(1.0));
        assert_eq!(run(&mut t, "UPDATE orders SET amount = 0 WHERE customer = 'alice'").unwrap(), QueryOutput::Affected(2));
        assert_eq!(run(&mut t, "DELETE FROM orders WHERE amount = 0").unwrap().render(), "Query OK, 2 rows affected.");
        assert_eq!(t[0].rows.len(), 2);
        assert!(run(&mut t, "INSERT INTO orders VALUES ('x', 'y', 1)").unwrap_err().contains("type mismatch"));
        assert!(run(&mut t, "INSERT INTO orders VALUES (1)").unwrap_err().contains("column count"));
    }

    #[test]
    fn string_escape_and_like() {
        assert!(like_match("Alice", "a%"));
        assert!(like_match("bob", "b_b"));
        assert!(!like_match("bob", "b_"));
        assert_eq!(parse("SELECT * FROM t WHERE c = 'it''s'").unwrap(), Statement::Select(Select {
            projection: Projection::Star,
            table: "t".into(),
            filter: vec![Condition { column: "c".into(), op: CmpOp::Eq, literal: Value::Text("it's".into()) }],
            order_by: None,
            limit: None,
        }));
    }
}
