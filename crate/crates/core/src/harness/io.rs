//! CSV traces: a header row `time,<channel>,...` followed by one row per sample.
//!
//! Values are written in shortest round-trip form, so reading a written trace
//! back reproduces every sample bit for bit.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::signals::{ControlPoints, Signal, TimeGrid};
use crate::stl::Trace;

pub fn write_trace_csv(trace: &Trace, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_owned()];
    header.extend(trace.names().iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    let columns: Vec<&[f64]> = trace.channels().map(|(_, c)| c).collect();
    let grid = trace.grid();
    for i in 0..grid.len() {
        let mut row = Vec::with_capacity(columns.len() + 1);
        row.push(format_time(grid.time(i)));
        row.extend(columns.iter().map(|c| c[i].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip form, padded to at least nine significant digits.
fn format_time(t: f64) -> String {
    let short = t.to_string();
    let digits = short.chars().filter(char::is_ascii_digit).collect::<String>();
    let significant = digits.trim_start_matches('0').len();
    if significant >= 9 {
        short
    } else {
        format!("{t:.9}")
    }
}

/// Raw columns of a CSV table with a `time` first column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub times: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

pub fn read_table(input: impl Read) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if header.first().map(String::as_str) != Some("time") {
        return Err(Error::invalid("CSV header must start with 'time'"));
    }
    let mut times = Vec::new();
    let mut columns: Vec<(String, Vec<f64>)> = header[1..].iter().map(|h| (h.clone(), Vec::new())).collect();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != header.len() {
            return Err(Error::invalid(format!("CSV row {} has {} fields", line + 2, record.len())));
        }
        let parse =
            |s: &str| s.parse::<f64>().map_err(|_| Error::invalid(format!("CSV row {}: bad number '{s}'", line + 2)));
        times.push(parse(&record[0])?);
        for (k, col) in columns.iter_mut().enumerate() {
            col.1.push(parse(&record[k + 1])?);
        }
    }
    Ok(Table { times, columns })
}

impl Table {
    /// Infers the uniform grid from the time column.
    pub fn grid(&self) -> Result<TimeGrid> {
        let n = self.times.len();
        if n < 2 || self.times[0] != 0.0 {
            return Err(Error::invalid("trace CSV needs at least two rows starting at time 0"));
        }
        let step = self.times[1] - self.times[0];
        let end = self.times[n - 1];
        let grid = TimeGrid::new(end, step)?;
        if grid.len() != n {
            return Err(Error::invalid("trace CSV times are not uniformly spaced"));
        }
        for (i, &t) in self.times.iter().enumerate() {
            if (t - grid.time(i)).abs() > 1e-6 * step {
                return Err(Error::invalid(format!("trace CSV time {t} at row {} is off the grid", i + 2)));
            }
        }
        Ok(grid)
    }

    /// Linearly interpolates every column onto `grid`. The table must start at 0
    /// and reach the grid end; rows past the end are ignored and a single row
    /// is held constant.
    pub fn resample(&self, grid: &TimeGrid) -> Result<BTreeMap<String, Signal>> {
        let times = &self.times;
        let last = *times.last().ok_or_else(|| Error::invalid("input CSV has no rows"))?;
        if times.len() > 1 && last < grid.end() * (1.0 - 1e-9) {
            return Err(Error::Horizon { needed: grid.end(), available: last });
        }
        // Validates the time column (starts at 0, strictly increasing).
        ControlPoints::new(times.clone(), times.clone())?;
        self.columns
            .iter()
            .map(|(name, v)| {
                if v.len() == 1 {
                    return Ok((name.clone(), Signal::constant(*grid, v[0])?));
                }
                let values = grid
                    .times()
                    .map(|t| {
                        let j = times.partition_point(|&x| x <= t).saturating_sub(1).min(times.len() - 2);
                        let s = ((t - times[j]) / (times[j + 1] - times[j])).min(1.0);
                        v[j] * (1.0 - s) + v[j + 1] * s
                    })
                    .collect();
                Ok((name.clone(), Signal::new(*grid, values)?))
            })
            .collect()
    }

    pub fn into_trace(self) -> Result<Trace> {
        let mut trace = Trace::new(self.grid()?);
        for (name, values) in self.columns {
            trace.insert(name, values)?;
        }
        Ok(trace)
    }
}

pub fn read_trace_csv(input: impl Read) -> Result<Trace> {
    read_table(input)?.into_trace()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
