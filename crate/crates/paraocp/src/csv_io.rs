//! CSV files for the experiment tables.
//!
//! Floats are written in scientific notation with 16 significant digits;
//! absent values are empty fields.

use std::io::{Read, Write};

use crate::study::{BenchRow, BoxRow, ConvergenceRow, HistoryRow};
use crate::Error;

/// A table row with a fixed CSV schema.
pub trait CsvRow: Sized {
    const HEADER: &'static [&'static str];

    fn fields(&self) -> Vec<String>;

    fn parse(fields: &Fields<'_>) -> Result<Self, Error>;
}

pub fn format_float(v: f64) -> String {
    format!("{v:.15e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// One parsed record with its line number for diagnostics.
pub struct Fields<'a> {
    record: &'a csv::StringRecord,
    line: u64,
}

impl Fields<'_> {
    fn raw(&self, i: usize, column: &'static str) -> Result<&str, Error> {
        self.record.get(i).ok_or_else(|| Error::Parse {
            line: self.line,
            column,
            value: String::new(),
        })
    }

    fn parse<T: std::str::FromStr>(&self, i: usize, column: &'static str) -> Result<T, Error> {
        let raw = self.raw(i, column)?;
        raw.trim().parse().map_err(|_| Error::Parse {
            line: self.line,
            column,
            value: raw.to_string(),
        })
    }

    pub fn float(&self, i: usize, column: &'static str) -> Result<f64, Error> {
        self.parse(i, column)
    }

    pub fn usize(&self, i: usize, column: &'static str) -> Result<usize, Error> {
        self.parse(i, column)
    }

    pub fn opt_float(&self, i: usize, column: &'static str) -> Result<Option<f64>, Error> {
        if self.raw(i, column)?.trim().is_empty() {
            Ok(None)
        } else {
            self.float(i, column).map(Some)
        }
    }
}

pub fn write_table<R: CsvRow, W: Write>(out: W, rows: &[R]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_table<R: CsvRow, I: Read>(input: I) -> Result<Vec<R>, Error> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(R::HEADER.iter().copied()) {
        return Err(Error::Header {
            expected: R::HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(R::parse(&Fields {
            record: &record,
            line,
        })?);
    }
    Ok(rows)
}

pub fn write_file<R: CsvRow>(path: &std::path::Path, rows: &[R]) -> Result<(), Error> {
    let file = std::fs::File::create(path).map_err(csv::Error::from)?;
    write_table(std::io::BufWriter::new(file), rows)
}

pub fn read_file<R: CsvRow>(path: &std::path::Path) -> Result<Vec<R>, Error> {
    let file = std::fs::File::open(path).map_err(csv::Error::from)?;
    read_table(std::io::BufReader::new(file))
}

impl CsvRow for ConvergenceRow {
    const HEADER: &'static [&'static str] = &[
        "level",
        "h",
        "tau",
        "dof",
        "err_y_final",
        "err_u_spacetime",
        "order_y",
        "order_u",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.level.to_string(),
            format_float(self.h),
            format_float(self.tau),
            self.dof.to_string(),
            format_float(self.err_y_final),
            format_float(self.err_u_spacetime),
            format_opt(self.order_y),
            format_opt(self.order_u),
        ]
    }

    fn parse(f: &Fields<'_>) -> Result<Self, Error> {
        Ok(Self {
            level: f.usize(0, "level")?,
            h: f.float(1, "h")?,
            tau: f.float(2, "tau")?,
            dof: f.usize(3, "dof")?,
            err_y_final: f.float(4, "err_y_final")?,
            err_u_spacetime: f.float(5, "err_u_spacetime")?,
            order_y: f.opt_float(6, "order_y")?,
            order_u: f.opt_float(7, "order_u")?,
        })
    }
}

impl CsvRow for HistoryRow {
    const HEADER: &'static [&'static str] = &["k", "hnorm_to_star", "hnorm_increment_sq"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            format_opt(self.hnorm_to_star),
            format_float(self.hnorm_increment_sq),
        ]
    }

    fn parse(f: &Fields<'_>) -> Result<Self, Error> {
        Ok(Self {
            k: f.usize(0, "k")?,
            hnorm_to_star: f.opt_float(1, "hnorm_to_star")?,
            hnorm_increment_sq: f.float(2, "hnorm_increment_sq")?,
        })
    }
}

impl CsvRow for BenchRow {
    const HEADER: &'static [&'static str] = &[
        "threads",
        "seconds_total",
        "seconds_predict",
        "seconds_correct",
        "psf",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.threads.to_string(),
            format_float(self.seconds_total),
            format_float(self.seconds_predict),
            format_float(self.seconds_correct),
            format_float(self.psf),
        ]
    }

    fn parse(f: &Fields<'_>) -> Result<Self, Error> {
        Ok(Self {
            threads: f.usize(0, "threads")?,
            seconds_total: f.float(1, "seconds_total")?,
            seconds_predict: f.float(2, "seconds_predict")?,
            seconds_correct: f.float(3, "seconds_correct")?,
            psf: f.float(4, "psf")?,
        })
    }
}

impl CsvRow for BoxRow {
    const HEADER: &'static [&'static str] = &[
        "k",
        "hnorm_increment_sq",
        "box_gap",
        "state_norm",
        "p_min",
        "p_max",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            format_float(self.hnorm_increment_sq),
            format_float(self.box_gap),
            format_float(self.state_norm),
            format_float(self.p_min),
            format_float(self.p_max),
        ]
    }

    fn parse(f: &Fields<'_>) -> Result<Self, Error> {
        Ok(Self {
            k: f.usize(0, "k")?,
            hnorm_increment_sq: f.float(1, "hnorm_increment_sq")?,
            box_gap: f.float(2, "box_gap")?,
            state_norm: f.float(3, "state_norm")?,
            p_min: f.float(4, "p_min")?,
            p_max: f.float(5, "p_max")?,
        })
    }
}
