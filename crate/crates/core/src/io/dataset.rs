use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::number::{format_g17, parse_number};
use crate::error::{Error, Result};
use crate::simulation::TimeCourseDataset;

pub const DATASET_HEADER_PREFIX: [&str; 3] = ["kind", "index", "time"];

/// Writes the dataset CSV:
///
/// ```text
/// kind,index,time,c0,c1,...
/// x,0,,<p values>          one line per observation
/// y,0,<t_0>,<n values>     one line per time-point
/// beta,0,<t_0>,<p values>  optional truth, one line per time-point
/// ```
///
/// Rows are padded with empty cells to the header width.
pub fn write_dataset<W: Write>(data: &TimeCourseDataset, out: W) -> Result<()> {
    data.validate()?;
    let (n, p) = (data.n(), data.p());
    let width = n.max(p);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<String> = DATASET_HEADER_PREFIX
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..width).map(|c| format!("c{c}")));
    w.write_record(&header).map_err(csv_err)?;

    let mut row =
        |kind: &str, idx: usize, time: Option<f64>, vals: &mut dyn Iterator<Item = f64>| {
            let mut rec = vec![
                kind.to_string(),
                idx.to_string(),
                time.map(format_g17).unwrap_or_default(),
            ];
            rec.extend(vals.map(format_g17));
            rec.resize(3 + width, String::new());
            w.write_record(&rec).map_err(csv_err)
        };
    for (i, r) in data.x.rows().into_iter().enumerate() {
        row("x", i, None, &mut r.iter().copied())?;
    }
    for (r, c) in data.y.columns().into_iter().enumerate() {
        row("y", r, Some(data.times[r]), &mut c.iter().copied())?;
    }
    if let Some(truth) = &data.truth {
        for (r, c) in truth.columns().into_iter().enumerate() {
            row("beta", r, Some(data.times[r]), &mut c.iter().copied())?;
        }
    }
    w.flush().map_err(|e| Error::io("<dataset>", e))
}

pub fn save_dataset(data: &TimeCourseDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_dataset(data, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<TimeCourseDataset> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(f))
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv>", io),
        other => Error::Parse {
            line,
            reason: format!("{other:?}"),
        },
    }
}

fn parse_err(line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

/// Parses the dataset CSV written by [`write_dataset`]. Truth intercepts are
/// set to zero when `beta` rows are present.
pub fn read_dataset<R: Read>(input: R) -> Result<TimeCourseDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let width = header.len().saturating_sub(3);
    let header_ok = header.len() >= 3
        && header.iter().take(3).eq(DATASET_HEADER_PREFIX)
        && header
            .iter()
            .skip(3)
            .enumerate()
            .all(|(c, h)| h == format!("c{c}"));
    if !header_ok {
        return Err(parse_err(1, "header must be kind,index,time,c0,c1,..."));
    }

    let mut x_rows: Vec<Vec<f64>> = Vec::new();
    let mut y_rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut beta_rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut p: Option<usize> = None;

    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() > 3 + width {
            return Err(parse_err(
                line,
                format!("{} cells, header has {}", rec.len(), 3 + width),
            ));
        }
        if rec.len() < 3 {
            return Err(parse_err(line, "missing kind/index/time cells"));
        }
        let kind = &rec[0];
        let index: usize = rec[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("bad index '{}'", &rec[1])))?;
        let cells: Vec<&str> = rec.iter().skip(3).collect();
        let filled = cells
            .iter()
            .rposition(|c| !c.trim().is_empty())
            .map_or(0, |i| i + 1);
        let values = |count: usize| -> Result<Vec<f64>> {
            if filled > count {
                return Err(parse_err(
                    line,
                    format!("expected {count} values, found {filled}"),
                ));
            }
            (0..count)
                .map(|c| {
                    let cell = cells.get(c).copied().unwrap_or("");
                    if cell.trim().is_empty() {
                        return Err(parse_err(line, format!("missing value in column c{c}")));
                    }
                    let v = parse_number(cell).ok_or_else(|| {
                        parse_err(line, format!("bad number '{cell}' in column c{c}"))
                    })?;
                    if !v.is_finite() {
                        return Err(Error::NonFinite("dataset values"));
                    }
                    Ok(v)
                })
                .collect()
        };
        let time = || -> Result<f64> {
            let t = parse_number(&rec[2])
                .ok_or_else(|| parse_err(line, format!("bad time '{}'", &rec[2])))?;
            if !t.is_finite() {
                return Err(Error::NonFinite("times"));
            }
            Ok(t)
        };
        let expect_index = |have: usize| -> Result<()> {
            if index != have {
                return Err(parse_err(
                    line,
                    format!("expected index {have}, found {index}"),
                ));
            }
            Ok(())
        };
        match kind {
            "x" => {
                if !y_rows.is_empty() || !beta_rows.is_empty() {
                    return Err(parse_err(line, "x rows must precede y and beta rows"));
                }
                if !rec[2].trim().is_empty() {
                    return Err(parse_err(line, "x rows carry no time"));
                }
                expect_index(x_rows.len())?;
                let count = *p.get_or_insert(filled);
                x_rows.push(values(count)?);
            }
            "y" => {
                if !beta_rows.is_empty() {
                    return Err(parse_err(line, "y rows must precede beta rows"));
                }
                expect_index(y_rows.len())?;
                y_rows.push((time()?, values(x_rows.len())?));
            }
            "beta" => {
                expect_index(beta_rows.len())?;
                let t = time()?;
                match y_rows.get(beta_rows.len()) {
                    Some((ty, _)) if *ty == t => {}
                    _ => return Err(parse_err(line, "beta row does not match a y time-point")),
                }
                beta_rows.push((t, values(p.unwrap_or(0))?));
            }
            other => return Err(parse_err(line, format!("unknown row kind '{other}'"))),
        }
    }

    let n = x_rows.len();
    let p = p.unwrap_or(0);
    if n == 0 || p == 0 {
        return Err(Error::DimensionMismatch(
            "dataset has no design rows".into(),
        ));
    }
    if y_rows.is_empty() {
        return Err(Error::DimensionMismatch(
            "dataset has no response rows".into(),
        ));
    }
    if !beta_rows.is_empty() && beta_rows.len() != y_rows.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} beta rows for {} time-points",
            beta_rows.len(),
            y_rows.len()
        )));
    }
    let big_n = y_rows.len();
    let x = Array2::from_shape_fn((n, p), |(i, j)| x_rows[i][j]);
    let y = Array2::from_shape_fn((n, big_n), |(i, r)| y_rows[r].1[i]);
    let times: Vec<f64> = y_rows.iter().map(|(t, _)| *t).collect();
    let mut data = TimeCourseDataset::new(x, y, times)?;
    if !beta_rows.is_empty() {
        data.truth = Some(Array2::from_shape_fn((p, big_n), |(j, r)| {
            beta_rows[r].1[j]
        }));
        data.truth_intercepts = Some(vec![0.0; big_n]);
    }
    data.validate()?;
    Ok(data)
}
