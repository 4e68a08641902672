//! Tabular rows and their CSV and JSON renderings.
//!
//! Every table has the columns
//! `system,n,eps,x_or_theta,quantity,value,ci_lo,ci_hi,conditions_met`.
//! Missing or non-finite numbers are written as `na`; an upper bound that
//! is at least one is written as `vacuous`.

use std::io::Write;

use anyhow::Result;
use clap::ValueEnum;
use queuetail_core::{SimEstimate, TailBound};
use serde::Deserialize;
use serde_json::{json, Map, Value};

pub const COLUMNS: [&str; 9] = [
    "system",
    "n",
    "eps",
    "x_or_theta",
    "quantity",
    "value",
    "ci_lo",
    "ci_hi",
    "conditions_met",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Vacuous,
    Na,
}

impl Cell {
    fn text(self) -> String {
        match self {
            Cell::Num(v) => format_number(v),
            Cell::Vacuous => "vacuous".into(),
            Cell::Na => "na".into(),
        }
    }

    fn json(self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Vacuous => json!("vacuous"),
            _ => json!("na"),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Na, Cell::Num)
    }
}

/// Plain decimal for moderate magnitudes, exponent notation otherwise.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return "na".into();
    }
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub system: &'static str,
    pub n: Option<u32>,
    pub eps: f64,
    pub x_or_theta: Option<f64>,
    pub quantity: String,
    pub value: Cell,
    pub ci: Option<(f64, f64)>,
    pub conditions_met: Option<bool>,
}

impl Row {
    pub fn new(system: &'static str, n: Option<u32>, eps: f64, quantity: impl Into<String>, value: impl Into<Cell>) -> Self {
        Self {
            system,
            n,
            eps,
            x_or_theta: None,
            quantity: quantity.into(),
            value: value.into(),
            ci: None,
            conditions_met: None,
        }
    }

    pub fn at(mut self, x: f64) -> Self {
        self.x_or_theta = Some(x);
        self
    }

    pub fn conditions(mut self, met: bool) -> Self {
        self.conditions_met = Some(met);
        self
    }

    pub fn estimate(system: &'static str, n: Option<u32>, eps: f64, quantity: impl Into<String>, est: &SimEstimate) -> Self {
        Self {
            ci: Some(est.ci95),
            ..Self::new(system, n, eps, quantity, est.point)
        }
    }

    /// A bound evaluated at `x`; upper bounds at or above one are vacuous.
    pub fn bound(system: &'static str, n: Option<u32>, eps: f64, quantity: impl Into<String>, b: &TailBound, x: f64) -> Self {
        let value = if b.is_vacuous_at(x) { Cell::Vacuous } else { Cell::Num(b.eval(x)) };
        Self::new(system, n, eps, quantity, value).at(x).conditions(b.holds_at(x))
    }

    fn cells(&self) -> [Cell; 5] {
        let (lo, hi) = self.ci.map_or((Cell::Na, Cell::Na), |(l, h)| (Cell::Num(l), Cell::Num(h)));
        [
            Cell::Num(self.eps),
            self.x_or_theta.into(),
            self.value,
            lo,
            hi,
        ]
    }

    fn record(&self) -> Vec<String> {
        let [eps, x, value, lo, hi] = self.cells();
        vec![
            self.system.to_string(),
            self.n.map_or("na".into(), |n| n.to_string()),
            eps.text(),
            x.text(),
            self.quantity.clone(),
            value.text(),
            lo.text(),
            hi.text(),
            self.conditions_met.map_or("na".into(), |b| b.to_string()),
        ]
    }

    fn json(&self) -> Value {
        let [eps, x, value, lo, hi] = self.cells();
        let mut m = Map::new();
        m.insert("system".into(), json!(self.system));
        m.insert("n".into(), self.n.map_or(json!("na"), |n| json!(n)));
        m.insert("eps".into(), eps.json());
        m.insert("x_or_theta".into(), x.json());
        m.insert("quantity".into(), json!(self.quantity));
        m.insert("value".into(), value.json());
        m.insert("ci_lo".into(), lo.json());
        m.insert("ci_hi".into(), hi.json());
        m.insert(
            "conditions_met".into(),
            self.conditions_met.map_or(json!("na"), |b| json!(b)),
        );
        Value::Object(m)
    }
}

pub fn render(rows: &[Row], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(COLUMNS)?;
            for r in rows {
                w.write_record(r.record())?;
            }
            Ok(w.into_inner()?)
        }
        Format::Json => {
            let values: Vec<Value> = rows.iter().map(Row::json).collect();
            let mut out = serde_json::to_vec_pretty(&values)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn emit(bytes: &[u8], path: Option<&std::path::Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
