//! Report tables and their CSV and JSON encodings.
//!
//! A CSV report starts with `# key = value` lines carrying the resolved
//! config, then `# warning: ...` lines, then the header and rows. A run cut
//! short by a resource limit ends with a `# incomplete: ...` line. JSON
//! mirrors this as `{"command", "config", "warnings", "columns", "rows",
//! "incomplete"}` with one object per row.
//!
//! Floats are written with 17 significant digits; non-finite values become
//! empty CSV fields and JSON `null`.

use std::io::{self, Write};

use crate::config::OutputFormat;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt_float(v: Option<f64>) -> Self {
        v.map_or(Self::Empty, Self::Float)
    }

    fn csv_text(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) if v.is_finite() => format_float(*v),
            Self::Float(_) | Self::Empty => String::new(),
            Self::Text(s) => s.clone(),
        }
    }

    fn json_text(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) if v.is_finite() => format_float(*v),
            Self::Float(_) | Self::Empty => "null".into(),
            Self::Text(s) => json_string(s),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Self::Int(v) => Some(v as f64),
            Self::Float(v) => Some(v),
            _ => None,
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Self::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Self::Text(v)
    }
}

/// 17 significant digits in scientific notation; valid in CSV and JSON.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub config: Vec<(&'static str, String)>,
    pub warnings: Vec<String>,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
    pub incomplete: Option<String>,
}

impl Report {
    pub fn new(command: &'static str, columns: &'static [&'static str], config: Vec<(&'static str, String)>) -> Self {
        Self { command, config, warnings: Vec::new(), columns, rows: Vec::new(), incomplete: None }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        if !self.warnings.contains(&message) {
            self.warnings.push(message);
        }
    }

    /// Cell of `row` under `column`.
    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        let i = self.columns.iter().position(|c| *c == column)?;
        self.rows.get(row).map(|r| &r[i])
    }

    pub fn write(&self, format: OutputFormat, out: impl Write) -> io::Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(out),
            OutputFormat::Json => self.write_json(out),
        }
    }

    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "# command = {}", self.command)?;
        for (k, v) in &self.config {
            writeln!(out, "# {k} = {v}")?;
        }
        for w in &self.warnings {
            writeln!(out, "# warning: {}", single_line(w))?;
        }
        {
            let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
            csv.write_record(self.columns)?;
            for row in &self.rows {
                csv.write_record(row.iter().map(Cell::csv_text))?;
            }
            csv.flush()?;
        }
        if let Some(why) = &self.incomplete {
            writeln!(out, "# incomplete: {}", single_line(why))?;
        }
        Ok(())
    }

    pub fn write_json(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "{{")?;
        writeln!(out, "  \"command\": {},", json_string(self.command))?;
        writeln!(out, "  \"config\": {{")?;
        for (i, (k, v)) in self.config.iter().enumerate() {
            let sep = if i + 1 < self.config.len() { "," } else { "" };
            writeln!(out, "    {}: {}{sep}", json_string(k), json_string(v))?;
        }
        writeln!(out, "  }},")?;
        let warnings: Vec<String> = self.warnings.iter().map(|w| json_string(w)).collect();
        writeln!(out, "  \"warnings\": [{}],", warnings.join(", "))?;
        let columns: Vec<String> = self.columns.iter().map(|c| json_string(c)).collect();
        writeln!(out, "  \"columns\": [{}],", columns.join(", "))?;
        writeln!(out, "  \"rows\": [")?;
        for (i, row) in self.rows.iter().enumerate() {
            let fields: Vec<String> =
                self.columns.iter().zip(row).map(|(c, v)| format!("{}: {}", json_string(c), v.json_text())).collect();
            let sep = if i + 1 < self.rows.len() { "," } else { "" };
            writeln!(out, "    {{{}}}{sep}", fields.join(", "))?;
        }
        writeln!(out, "  ],")?;
        let incomplete = self.incomplete.as_deref().map_or("null".to_string(), json_string);
        writeln!(out, "  \"incomplete\": {incomplete}")?;
        writeln!(out, "}}")
    }
}

fn single_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("demo", &["x", "label", "value"], vec![("seed", "7".into())]);
        r.push(vec![Cell::Int(1), "plain".into(), 0.1.into()]);
        r.push(vec![Cell::Int(2), "has, comma \"quoted\"".into(), Cell::Float(f64::NAN)]);
        r.warn("Q outside range");
        r.warn("Q outside range");
        r
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let expected = "# command = demo\n# seed = 7\n# warning: Q outside range\nx,label,value\n\
                        1,plain,1.0000000000000001e-1\n2,\"has, comma \"\"quoted\"\"\",\n";
        assert_eq!(text, expected);
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(&rows[1][1], "has, comma \"quoted\"");
        assert_eq!(rows[0][2].parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn json_is_valid_and_mirrors_rows() {
        let mut r = sample();
        r.incomplete = Some("budget".into());
        let mut buf = Vec::new();
        r.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["command"], "demo");
        assert_eq!(v["config"]["seed"], "7");
        assert_eq!(v["rows"][0]["value"].as_f64().unwrap(), 0.1);
        assert!(v["rows"][1]["value"].is_null());
        assert_eq!(v["rows"][1]["label"], "has, comma \"quoted\"");
        assert_eq!(v["incomplete"], "budget");
        assert_eq!(v["warnings"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 123456789.0] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17);
        }
    }
}
