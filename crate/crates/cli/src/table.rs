use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 17 significant digits, which round-trips every f64.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub experiment: String,
    pub version: String,
    pub seed: Option<u64>,
    pub params: Value,
}

impl Provenance {
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "experiment": self.experiment,
            "version": self.version,
            "seed": self.seed,
            "params": self.params,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> CliResult<()> {
        if row.len() != self.columns.len() {
            return Err(CliError::Contract(format!("row has {} cells, table has {} columns", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn to_csv(&self, provenance: &Provenance) -> CliResult<String> {
        let mut out = String::new();
        out.push_str(&format!("# experiment: {}\n", provenance.experiment));
        out.push_str(&format!("# version: {}\n", provenance.version));
        match provenance.seed {
            Some(s) => out.push_str(&format!("# seed: {s}\n")),
            None => out.push_str("# seed: none\n"),
        }
        out.push_str(&format!("# params: {}\n", provenance.params));
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Table(ResultTable),
    Json(Value),
}

impl Output {
    pub fn extension(&self) -> &'static str {
        match self {
            Output::Table(_) => "csv",
            Output::Json(_) => "json",
        }
    }

    pub fn render(&self, provenance: &Provenance) -> CliResult<String> {
        match self {
            Output::Table(t) => t.to_csv(provenance),
            Output::Json(v) => {
                let mut v = v.clone();
                if let Value::Object(map) = &mut v {
                    map.insert("provenance".into(), provenance.to_json());
                }
                Ok(serde_json::to_string_pretty(&v)? + "\n")
            }
        }
    }
}
