//! Tabular output: CSV with a `#` metadata block, a JSON mirror, and gnuplot
//! scripts for sweep maps.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            // Shortest round-trip representation: deterministic and lossless.
            Cell::Num(v) if v.is_finite() => format!("{v:?}"),
            Cell::Num(v) => format!("{v}").to_lowercase(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => u8::from(*b).to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        use serde_json::Value;
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) if s.is_empty() => Value::Null,
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Ordered `key: value` lines for the header block.
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Cell>>) -> Self {
        Self { metadata: Vec::new(), columns, rows }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.push((key.into(), value.into()));
        self
    }

    /// Two-column `quantity,value` table.
    pub fn key_value(pairs: Vec<(&str, Cell)>) -> Self {
        let rows = pairs.into_iter().map(|(k, v)| vec![Cell::from(k), v]).collect();
        Self::new(vec!["quantity".into(), "value".into()], rows)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Number of lines before the first data row in the CSV form.
    pub fn header_lines(&self) -> usize {
        1 + self.metadata.len() + 1
    }

    pub fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "# qswitch {}", crate::VERSION)?;
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn write_json(&self, w: &mut dyn Write) -> io::Result<()> {
        #[derive(Serialize)]
        struct Doc<'a> {
            tool: String,
            metadata: serde_json::Map<String, serde_json::Value>,
            columns: &'a [String],
            rows: Vec<Vec<serde_json::Value>>,
        }
        let doc = Doc {
            tool: format!("qswitch {}", crate::VERSION),
            metadata: self.metadata.iter().map(|(k, v)| (k.clone(), v.clone().into())).collect(),
            columns: &self.columns,
            rows: self.rows.iter().map(|r| r.iter().map(Cell::json).collect()).collect(),
        };
        serde_json::to_writer_pretty(&mut *w, &doc)?;
        writeln!(w)
    }

    pub fn write(&self, format: Format, w: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to memory");
        String::from_utf8(buf).expect("utf-8")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Gnuplot script for a sweep table written as CSV to `data`: a heatmap of
/// `value` for two axes (argmax marks overlaid), a line plot for one.
/// The first `n_axes` columns are the sweep coordinates.
pub fn gnuplot_script(table: &Table, n_axes: usize, data: &Path, value: &str, image: &Path) -> Option<String> {
    let axes = table.columns.get(..n_axes)?;
    let col = table.column_index(value)? + 1;
    let mut s = String::new();
    let data = data.display();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 900,700");
    let _ = writeln!(s, "set output '{}'", image.display());
    let _ = writeln!(s, "set xlabel '{}' noenhanced", axes.first()?);
    let skip = table.header_lines();
    match axes.len() {
        1 => {
            let _ = writeln!(s, "set ylabel '{value}' noenhanced");
            let _ = writeln!(s, "plot '{data}' skip {skip} using 1:{col} with linespoints notitle");
        }
        2 => {
            let mark = table.column_index("row_argmax")? + 1;
            let _ = writeln!(s, "set ylabel '{}' noenhanced", axes[1]);
            let _ = writeln!(s, "set cblabel '{value}' noenhanced");
            let _ = writeln!(s, "set view map");
            let _ = writeln!(s, "set size ratio -1");
            let _ = writeln!(s, "plot '{data}' skip {skip} using 1:2:{col} with image notitle, \\");
            let _ = writeln!(
                s,
                "     '' skip {skip} using (${mark} == 1 ? $1 : 1/0):2 with linespoints dt 2 lc rgb 'white' title 'row max'"
            );
        }
        _ => return None,
    }
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        Table::new(
            vec!["a".into(), "b".into(), "note".into()],
            vec![
                vec![Cell::Num(0.1), Cell::Empty, "x, y".into()],
                vec![Cell::Int(3), Cell::Bool(true), "".into()],
            ],
        )
        .with_meta("config_sha256", "abc")
    }

    #[test]
    fn csv_layout() {
        let s = table().to_csv_string();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# qswitch "));
        assert_eq!(lines[1], "# config_sha256: abc");
        assert_eq!(lines[2], "a,b,note");
        assert_eq!(lines[3], "0.1,,\"x, y\"");
        assert_eq!(lines[4], "3,1,");
        assert_eq!(table().header_lines(), 3);
    }

    #[test]
    fn json_mirror() {
        let mut buf = Vec::new();
        table().write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["columns"][2], "note");
        assert_eq!(v["rows"][0][0], 0.1);
        assert!(v["rows"][0][1].is_null());
        assert_eq!(v["metadata"]["config_sha256"], "abc");
    }
}
