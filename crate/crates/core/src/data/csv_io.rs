//! Comma-separated ingestion and export.
//!
//! Format: UTF-8, `,` separator, `.` decimal point, optional header line,
//! `#` comment lines ignored. The first record is treated as a header when
//! none of its cells parses as a number. Row numbers in errors are 1-based
//! physical line numbers.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::{Dataset, Label, LabeledDataset};
use crate::error::{Error, Result};

/// Selects the label column by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// Parses `"3"` as an index and anything else as a name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Name(n) => f.write_str(n),
            LabelColumn::Index(i) => write!(f, "#{i}"),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&LabelColumn>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_csv<R: Read>(reader: R, label_column: Option<&LabelColumn>) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let mut records = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(|e| {
            let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io("<csv>", io),
                other => Error::Csv {
                    row,
                    message: format!("{other:?}"),
                },
            }
        })?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        records.push((row, record));
    }
    if records.is_empty() {
        return Err(Error::EmptyInput("CSV contains no rows".into()));
    }

    let header_row = records[0].1.iter().all(|c| c.parse::<f64>().is_err());
    let header: Option<Vec<String>> = if header_row {
        Some(records[0].1.iter().map(str::to_string).collect())
    } else {
        None
    };
    let body = if header_row { &records[1..] } else { &records[..] };
    if body.is_empty() {
        return Err(Error::EmptyInput("CSV contains a header but no data rows".into()));
    }

    let width = header
        .as_ref()
        .map(Vec::len)
        .unwrap_or_else(|| body[0].1.len());
    let label_idx = match label_column {
        None => None,
        Some(LabelColumn::Index(i)) if *i < width => Some(*i),
        Some(LabelColumn::Name(name)) => match &header {
            Some(h) => Some(
                h.iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::MissingLabelColumn(name.clone()))?,
            ),
            None => return Err(Error::MissingLabelColumn(name.clone())),
        },
        Some(col) => return Err(Error::MissingLabelColumn(col.to_string())),
    };
    let d = width - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(Error::InvalidDataset("no feature columns".into()));
    }

    let mut points = Vec::with_capacity(body.len() * d);
    let mut labels = Vec::with_capacity(body.len());
    for (row, record) in body {
        if record.len() != width {
            return Err(Error::Csv {
                row: *row,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::Csv {
                row: *row,
                message: format!("column {}: cannot parse '{cell}' as a number", col + 1),
            })?;
            if !value.is_finite() {
                return Err(Error::Csv {
                    row: *row,
                    message: format!("column {}: non-finite value '{cell}'", col + 1),
                });
            }
            if Some(col) == label_idx {
                labels.push(match value {
                    0.0 => Label::Normal,
                    1.0 => Label::Anomaly,
                    _ => {
                        return Err(Error::Csv {
                            row: *row,
                            message: format!("label '{cell}' is not 0 or 1"),
                        })
                    }
                });
            } else {
                points.push(value);
            }
        }
    }

    let dataset = Dataset::new(points, d)?;
    if label_idx.is_some() {
        LabeledDataset::new(dataset, labels)
    } else {
        Ok(LabeledDataset::unlabeled(dataset))
    }
}

/// Writes `x0..x{d-1}` columns followed by a trailing `label` column.
///
/// Values use the shortest representation that round-trips exactly.
pub fn write_csv<W: Write>(data: &LabeledDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let d = data.dataset().d();
    let mut header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    let csv_err = |e: csv::Error| Error::Internal(format!("CSV write failed: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for (row, label) in data.dataset().rows().zip(data.labels()) {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        rec.push(label.as_u8().to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
