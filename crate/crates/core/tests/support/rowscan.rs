//! Random queries over fixture tables and a row-by-row reference evaluator.

use std::cmp::Ordering;

use harness_core::env::minidb::SchemaMap;
use harness_core::env::sql::{ColumnType, QueryOutput, Table, Value};
use harness_core::task::TaskFixture;
use rand::seq::SliceRandom;
use rand::Rng;

/// Every distinct fixture table.
pub fn fixture_tables() -> Vec<Table> {
    let mut out: Vec<Table> = Vec::new();
    for t in super::all_tasks() {
        if let Some(TaskFixture::MiniDb(d)) = &t.fixture {
            for table in &d.tables {
                if !out.iter().any(|o| o.name == table.name) {
                    out.push(table.clone());
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Like,
}

#[derive(Debug, Clone)]
pub enum Proj {
    Star,
    Cols(Vec<usize>),
    Count,
    Agg(&'static str, usize),
}

#[derive(Debug, Clone)]
pub struct Query {
    pub proj: Proj,
    pub filter: Vec<(usize, Op, Value)>,
    pub order: Option<(usize, bool)>,
    pub limit: Option<usize>,
}

fn lit_sql(v: &Value) -> String {
    match v {
        Value::Text(s) => format!("'{s}'"),
        Value::Null => "NULL".into(),
        other => other.to_string(),
    }
}

fn op_sql(op: Op) -> &'static str {
    match op {
        Op::Eq => "=",
        Op::Ne => "!=",
        Op::Lt => "<",
        Op::Gt => ">",
        Op::Le => "<=",
        Op::Ge => ">=",
        Op::Like => "LIKE",
    }
}

pub fn render(t: &Table, q: &Query) -> String {
    let col = |i: usize| SchemaMap::display_ident(&t.columns[i].name);
    let proj = match &q.proj {
        Proj::Star => "*".to_string(),
        Proj::Cols(c) => c.iter().map(|&i| col(i)).collect::<Vec<_>>().join(", "),
        Proj::Count => "COUNT(*)".into(),
        Proj::Agg(f, i) => format!("{f}({})", col(*i)),
    };
    let mut s = format!("SELECT {proj} FROM {}", SchemaMap::display_ident(&t.name));
    if !q.filter.is_empty() {
        let conds: Vec<String> =
            q.filter.iter().map(|(i, op, v)| format!("{} {} {}", col(*i), op_sql(*op), lit_sql(v))).collect();
        s.push_str(&format!(" WHERE {}", conds.join(" AND ")));
    }
    if let Some((i, asc)) = q.order {
        s.push_str(&format!(" ORDER BY {} {}", col(i), if asc { "ASC" } else { "DESC" }));
    }
    if let Some(n) = q.limit {
        s.push_str(&format!(" LIMIT {n}"));
    }
    s
}

fn literal_for(t: &Table, col: usize, rng: &mut impl Rng) -> Value {
    let present: Vec<&Value> = t.rows.iter().map(|r| &r[col]).filter(|v| **v != Value::Null).collect();
    if !present.is_empty() && rng.gen_bool(0.8) {
        return present.choose(rng).map(|v| (*v).clone()).unwrap();
    }
    match t.columns[col].ty {
        ColumnType::Integer => Value::Int(rng.gen_range(-5..3000)),
        ColumnType::Real => Value::Real(f64::from(rng.gen_range(0..400)) / 4.0),
        ColumnType::Text => Value::Text(["a", "zz", "north", "x-1"].choose(rng).unwrap().to_string()),
    }
}

pub fn random_query(t: &Table, rng: &mut impl Rng) -> Query {
    let ncol = t.columns.len();
    let numeric: Vec<usize> = (0..ncol).filter(|&i| t.columns[i].ty != ColumnType::Text).collect();
    let proj = match rng.gen_range(0..4) {
        0 => Proj::Star,
        1 => {
            let mut cols: Vec<usize> = (0..ncol).collect();
            cols.shuffle(rng);
            cols.truncate(rng.gen_range(1..=ncol.min(3)));
            Proj::Cols(cols)
        }
        2 => Proj::Count,
        _ => {
            let f = *["MAX", "MIN", "SUM", "AVG"].choose(rng).unwrap();
            let col = if matches!(f, "SUM" | "AVG") && !numeric.is_empty() {
                *numeric.choose(rng).unwrap()
            } else {
                rng.gen_range(0..ncol)
            };
            Proj::Agg(f, col)
        }
    };
    let mut filter = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let c = rng.gen_range(0..ncol);
        let lit = literal_for(t, c, rng);
        let op = if let (Value::Text(s), true) = (&lit, rng.gen_bool(0.3)) {
            let cut: String = s.chars().take(2).collect();
            filter.push((c, Op::Like, Value::Text(format!("{cut}%"))));
            continue;
        } else {
            *[Op::Eq, Op::Ne, Op::Lt, Op::Gt, Op::Le, Op::Ge].choose(rng).unwrap()
        };
        filter.push((c, op, lit));
    }
    let order = rng.gen_bool(0.5).then(|| (rng.gen_range(0..ncol), rng.gen_bool(0.5)));
    let limit = rng.gen_bool(0.3).then(|| rng.gen_range(0..5));
    Query { proj, filter, order, limit }
}

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Real(r) => Some(*r),
        _ => None,
    }
}

fn like(text: &str, pattern: &str) -> bool {
    // Only prefix patterns are generated.
    let p = pattern.trim_end_matches('%').to_lowercase();
    text.to_lowercase().starts_with(&p)
}

fn holds(v: &Value, op: Op, lit: &Value) -> bool {
    let ord = match (v, lit) {
        (Value::Text(a), Value::Text(b)) if op == Op::Like => return like(a, b),
        (_, _) if op == Op::Like => return false,
        (Value::Text(a), Value::Text(b)) => a.cmp(b),
        (a, b) => match (num(a), num(b)) {
            (Some(x), Some(y)) => x.partial_cmp(&y).unwrap(),
            _ => return false,
        },
    };
    match op {
        Op::Eq => ord.is_eq(),
        Op::Ne => ord.is_ne(),
        Op::Lt => ord.is_lt(),
        Op::Gt => ord.is_gt(),
        Op::Le => ord.is_le(),
        Op::Ge => ord.is_ge(),
        Op::Like => unreachable!(),
    }
}

fn rank(v: &Value) -> u8 {
    match v {
        Value::Null => 0,
        Value::Text(_) => 2,
        _ => 1,
    }
}

fn order(a: &Value, b: &Value) -> Ordering {
    match (a, b) {
        (Value::Text(x), Value::Text(y)) => x.cmp(y),
        _ if rank(a) == 1 && rank(b) == 1 => num(a).unwrap().total_cmp(&num(b).unwrap()),
        _ => rank(a).cmp(&rank(b)),
    }
}

/// Expected output, computed by scanning rows one at a time.
pub fn evaluate(t: &Table, q: &Query) -> Result<QueryOutput, ()> {
    let mut rows: Vec<Vec<Value>> = Vec::new();
    for r in &t.rows {
        if q.filter.iter().all(|(c, op, lit)| holds(&r[*c], *op, lit)) {
            rows.push(r.clone());
        }
    }
    if let Some((c, asc)) = q.order {
        // Insertion sort keeps equal keys in table order.
        let mut sorted: Vec<Vec<Value>> = Vec::new();
        for r in rows {
            let pos = sorted
                .iter()
                .position(|s| {
                    let o = order(&r[c], &s[c]);
                    if asc { o.is_lt() } else { o.is_gt() }
                })
                .unwrap_or(sorted.len());
            sorted.insert(pos, r);
        }
        rows = sorted;
    }
    if let Some(n) = q.limit {
        rows.truncate(n);
    }
    let names = |idx: &[usize]| idx.iter().map(|&i| t.columns[i].name.clone()).collect::<Vec<_>>();
    Ok(match &q.proj {
        Proj::Star => QueryOutput::Rows { columns: names(&(0..t.columns.len()).collect::<Vec<_>>()), rows },
        Proj::Cols(c) => QueryOutput::Rows {
            columns: names(c),
            rows: rows.iter().map(|r| c.iter().map(|&i| r[i].clone()).collect()).collect(),
        },
        Proj::Count => QueryOutput::Scalar(Value::Int(rows.len() as i64)),
        Proj::Agg(f, c) => {
            let vals: Vec<&Value> = rows.iter().map(|r| &r[*c]).filter(|v| **v != Value::Null).collect();
            let text = t.columns[*c].ty == ColumnType::Text;
            if text && matches!(*f, "SUM" | "AVG") {
                return Err(());
            }
            if vals.is_empty() {
                return Ok(QueryOutput::Scalar(Value::Null));
            }
            let mut best = vals[0];
            for v in &vals[1..] {
                let o = order(v, best);
                if (*f == "MAX" && o.is_gt()) || (*f == "MIN" && o.is_lt()) {
                    best = v;
                }
            }
            QueryOutput::Scalar(match *f {
                "MAX" | "MIN" => best.clone(),
                "SUM" if vals.iter().all(|v| matches!(v, Value::Int(_))) => {
                    Value::Int(vals.iter().map(|v| if let Value::Int(i) = v { *i } else { 0 }).sum())
                }
                "SUM" => Value::Real(vals.iter().map(|v| num(v).unwrap()).sum()),
                _ => Value::Real(vals.iter().map(|v| num(v).unwrap()).sum::<f64>() / vals.len() as f64),
            })
        }
    })
}
