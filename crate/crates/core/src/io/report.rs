use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::number::{format_g17, parse_number};
use crate::error::{Error, Result};
use crate::estimators::EstimatorId;
use crate::metrics::Metric;
use crate::simulation::SimModel;

pub const REPORT_HEADER: [&str; 9] = [
    "estimator",
    "model",
    "sigma",
    "n",
    "p",
    "metric",
    "mean",
    "sd",
    "runs",
];

/// One `(estimator, metric)` cell of a benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub estimator: EstimatorId,
    pub model: SimModel,
    pub sigma: f64,
    pub n: usize,
    pub p: usize,
    pub metric: Metric,
    pub mean: f64,
    pub sd: Option<f64>,
    pub runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Pretty,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "pretty" | "table" => Ok(ReportFormat::Pretty),
            _ => Err(Error::InvalidArgument(format!(
                "unknown report format '{s}'"
            ))),
        }
    }
}

/// Writes rows in the requested format.
pub fn write_report<W: Write>(rows: &[ReportRow], format: ReportFormat, mut out: W) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => report_csv(rows),
        ReportFormat::Pretty => report_table(rows),
    };
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<report>", e))
}

pub fn emit_report(rows: &[ReportRow], path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_report(rows, format, f)
}

fn report_csv(rows: &[ReportRow]) -> String {
    let mut s = REPORT_HEADER.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.estimator.number(),
            r.model.number(),
            format_g17(r.sigma),
            r.n,
            r.p,
            r.metric.name(),
            format_g17(r.mean),
            r.sd.map(format_g17).unwrap_or_default(),
            r.runs
        );
    }
    s
}

/// Blocks per `(n, p, model)`, one line per estimator, and for each σ the four
/// measures as `mean (sd)`.
fn report_table(rows: &[ReportRow]) -> String {
    type Block = BTreeMap<EstimatorId, BTreeMap<(u64, Metric), (f64, Option<f64>)>>;
    let mut blocks: BTreeMap<(usize, usize, u8), (Vec<f64>, Block)> = BTreeMap::new();
    for r in rows {
        let (sigmas, block) = blocks.entry((r.n, r.p, r.model.number())).or_default();
        if !sigmas.contains(&r.sigma) {
            sigmas.push(r.sigma);
        }
        block
            .entry(r.estimator)
            .or_default()
            .insert((r.sigma.to_bits(), r.metric), (r.mean, r.sd));
    }
    let cell_w = 14;
    let mut s = String::new();
    for ((n, p, model), (mut sigmas, block)) in blocks {
        sigmas.sort_by(f64::total_cmp);
        let _ = writeln!(s, "n = {n}, p = {p}, Model {model}");
        let mut line = format!("{:<4}", "");
        for sigma in &sigmas {
            let title = format!("sigma = {sigma}");
            let _ = write!(line, " | {title:<w$}", w = 4 * (cell_w + 1) - 1);
        }
        let _ = writeln!(s, "{}", line.trim_end());
        let mut line = format!("{:<4}", "");
        for _ in &sigmas {
            line.push_str(" |");
            for m in Metric::ALL {
                let _ = write!(line, " {:<cell_w$}", m.name());
            }
        }
        let _ = writeln!(s, "{}", line.trim_end());
        for (id, cells) in &block {
            let mut line = format!("{:<4}", format!("{}.", id.number()));
            for sigma in &sigmas {
                line.push_str(" |");
                for m in Metric::ALL {
                    let cell = match cells.get(&(sigma.to_bits(), m)) {
                        Some((mean, Some(sd))) => format!("{mean:.2} ({sd:.2})"),
                        Some((mean, None)) => format!("{mean:.2}"),
                        None => "-".to_string(),
                    };
                    let _ = write!(line, " {cell:<cell_w$}");
                }
            }
            let _ = writeln!(s, "{}", line.trim_end());
        }
        s.push('\n');
    }
    s
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_report(BufReader::new(f))
}

/// Parses the CSV produced by [`write_report`].
pub fn parse_report<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if !header.iter().eq(REPORT_HEADER) {
        return Err(parse_err(
            1,
            format!("header must be {}", REPORT_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec =
            rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| {
            parse_number(&rec[i])
                .ok_or_else(|| parse_err(line, format!("bad number '{}'", &rec[i])))
        };
        let int = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|_| parse_err(line, format!("bad integer '{}'", &rec[i])))
        };
        let small = |i: usize| {
            rec[i]
                .parse::<u8>()
                .map_err(|_| parse_err(line, format!("bad id '{}'", &rec[i])))
        };
        rows.push(ReportRow {
            estimator: EstimatorId::from_number(small(0)?)
                .map_err(|e| parse_err(line, e.to_string()))?,
            model: SimModel::try_from(small(1)?).map_err(|e| parse_err(line, e.to_string()))?,
            sigma: num(2)?,
            n: int(3)?,
            p: int(4)?,
            metric: Metric::from_name(&rec[5])
                .ok_or_else(|| parse_err(line, format!("unknown metric '{}'", &rec[5])))?,
            mean: num(6)?,
            sd: if rec[7].is_empty() {
                None
            } else {
                Some(num(7)?)
            },
            runs: int(8)?,
        });
    }
    Ok(rows)
}

fn parse_err(line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}
