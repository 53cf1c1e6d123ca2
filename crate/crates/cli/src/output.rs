use heatnoise::experiments::CSV_COLUMNS;
use heatnoise::BoundReport;
use serde::Serialize;
use serde_json::{Map, Value};

pub const TOOL: &str = "heatnoise";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Enough to replay a run: identical headers give identical bodies.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub params: Map<String, Value>,
}

/// A tidy table: every row has one value per column.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub enum Body {
    Reports(Vec<BoundReport>),
    Rows(Table),
}

#[derive(Debug, Clone)]
pub struct Output {
    pub header: Header,
    pub body: Body,
}

impl Output {
    pub fn pass(&self) -> bool {
        match &self.body {
            Body::Reports(reports) => reports.iter().all(|r| r.pass),
            Body::Rows(_) => true,
        }
    }

    pub fn to_json(&self) -> String {
        let mut doc = Map::new();
        doc.insert("header".into(), serde_json::to_value(&self.header).expect("header serializes"));
        let (reports, rows) = match &self.body {
            Body::Reports(reports) => (serde_json::to_value(reports).expect("reports serialize"), Vec::new()),
            Body::Rows(table) => (Value::Array(Vec::new()), object_rows(table)),
        };
        doc.insert("reports".into(), reports);
        doc.insert("rows".into(), Value::Array(rows));
        doc.insert("pass".into(), Value::Bool(self.pass()));
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("output serializes");
        text.push('\n');
        text
    }

    /// `#`-prefixed header lines, then a column row and one line per record.
    pub fn to_csv(&self) -> String {
        let mut text = String::new();
        text.push_str(&format!("# tool={}\n", self.header.tool));
        text.push_str(&format!("# version={}\n", self.header.version));
        text.push_str(&format!("# command={}\n", self.header.command));
        text.push_str(&format!("# seed={}\n", self.header.seed));
        text.push_str(&format!(
            "# params={}\n",
            serde_json::to_string(&self.header.params).expect("params serialize")
        ));
        let mut writer = csv::Writer::from_writer(Vec::new());
        match &self.body {
            Body::Reports(reports) => {
                writer.write_record(CSV_COLUMNS).expect("in-memory write");
                for report in reports {
                    writer.write_record(report.csv_fields()).expect("in-memory write");
                }
            }
            Body::Rows(table) => {
                writer.write_record(&table.columns).expect("in-memory write");
                for row in &table.rows {
                    writer.write_record(row.iter().map(csv_cell)).expect("in-memory write");
                }
            }
        }
        let bytes = writer.into_inner().expect("in-memory flush");
        text.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        text
    }
}

fn object_rows(table: &Table) -> Vec<Value> {
    table
        .rows
        .iter()
        .map(|row| {
            let map: Map<String, Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| (c.to_string(), v.clone()))
                .collect();
            Value::Object(map)
        })
        .collect()
}

// Arrays become space-separated lists so exponent vectors stay in one cell.
fn csv_cell(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(csv_cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Output {
        let mut table = Table::new(&["exponents", "coeff"]);
        table.push(vec![json!([1, 0]), json!(0.5)]);
        table.push(vec![json!([0, 2]), json!(-1.0)]);
        Output {
            header: Header {
                tool: TOOL,
                version: VERSION,
                command: "rotate",
                seed: 3,
                params: Map::new(),
            },
            body: Body::Rows(table),
        }
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# tool=heatnoise");
        assert_eq!(lines[3], "# seed=3");
        assert_eq!(lines[5], "exponents,coeff");
        assert_eq!(lines[6], "1 0,0.5");
        assert_eq!(lines[7], "0 2,-1.0");
    }

    #[test]
    fn json_rows_are_objects() {
        let doc: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(doc["rows"][1]["coeff"], json!(-1.0));
        assert_eq!(doc["reports"], json!([]));
        assert_eq!(doc["pass"], json!(true));
        assert_eq!(doc["header"]["command"], json!("rotate"));
    }
}
