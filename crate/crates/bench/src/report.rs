use std::fs::File;
use std::io::Write;
use std::path::Path;

use bandsim_core::fmt::sig9;
use bandsim_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::BenchConfig;

pub const REPORT_HEADER: [&str; 7] = [
    "method",
    "env_count",
    "mean_runtime_s",
    "max_runtime_s",
    "peak_bytes",
    "mean_bytes",
    "correct",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Oracle,
    Vectorized,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::Vectorized => "vectorized",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Method::Oracle),
            "vectorized" => Ok(Method::Vectorized),
            other => Err(Error::invalid("method", format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub env_count: usize,
    pub mean_runtime_s: f64,
    pub max_runtime_s: f64,
    pub peak_bytes: u64,
    pub mean_bytes: u64,
    pub correct: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    /// Rows are kept sorted by (method, env_count).
    pub fn new(mut rows: Vec<BenchRow>) -> Self {
        rows.sort_by_key(|r| (r.method, r.env_count));
        Self { rows }
    }

    pub fn row(&self, method: Method, env_count: usize) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.env_count == env_count)
    }

    pub fn to_csv(&self) -> String {
        let mut out = REPORT_HEADER.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.method.as_str(),
                r.env_count,
                sig9(r.mean_runtime_s),
                sig9(r.max_runtime_s),
                r.peak_bytes,
                r.mean_bytes,
                r.correct
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let csv_err = |source| Error::Csv {
            context: "bench report".into(),
            source,
        };
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().map_err(csv_err)?;
        if header.iter().ne(REPORT_HEADER) {
            return Err(Error::invalid(
                "bench report header",
                format!("expected {}, got {}", REPORT_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let field = |i: usize| &record[i];
            let parse_err = |i: usize| Error::invalid(REPORT_HEADER[i], format!("cannot parse {:?}", &record[i]));
            rows.push(BenchRow {
                method: field(0).parse()?,
                env_count: field(1).parse().map_err(|_| parse_err(1))?,
                mean_runtime_s: field(2).parse().map_err(|_| parse_err(2))?,
                max_runtime_s: field(3).parse().map_err(|_| parse_err(3))?,
                peak_bytes: field(4).parse().map_err(|_| parse_err(4))?,
                mean_bytes: field(5).parse().map_err(|_| parse_err(5))?,
                correct: field(6).parse().map_err(|_| parse_err(6))?,
            });
        }
        Ok(Self::new(rows))
    }
}

pub fn write_report(report: &BenchReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<BenchReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    BenchReport::from_csv(&text).map_err(|e| e.in_file(path))
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a BenchConfig,
    rows: &'a [BenchRow],
}

/// JSON echo of the configuration alongside the rows.
pub fn write_report_json(report: &BenchReport, cfg: &BenchConfig, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Sidecar {
        config: cfg,
        rows: &report.rows,
    })
    .map_err(|source| Error::Json {
        context: "bench sidecar".into(),
        source,
    })?;
    text.push('\n');
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
