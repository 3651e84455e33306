use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Diffusion, ObservationSet, PathLattice};

/// A numeric CSV table with an optional header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub width: usize,
    /// Row-major cells.
    pub cells: Vec<f64>,
    /// 1-based line of the first data row, for error messages.
    pub first_line: usize,
}

impl Table {
    pub fn rows(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.cells.len() / self.width
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.cells[r * self.width..(r + 1) * self.width]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows()).map(|r| self.cells[r * self.width + c]).collect()
    }
}

/// Reads a CSV of floats. The first row is a header when any of its cells
/// fails to parse as a number.
pub fn read_table<R: Read>(reader: R, name: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let data_err = |row: usize, message: String| Error::Data {
        path: name.to_string(),
        row,
        message,
    };
    let mut header = None;
    let mut width = 0;
    let mut cells = Vec::new();
    let mut first_line = 1;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 1;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let parsed: Vec<Option<f64>> = rec.iter().map(|c| c.parse::<f64>().ok()).collect();
        if i == 0 && parsed.iter().any(Option::is_none) {
            header = Some(rec.iter().map(str::to_string).collect::<Vec<_>>());
            width = rec.len();
            first_line = 2;
            continue;
        }
        if width == 0 {
            width = rec.len();
        } else if rec.len() != width {
            return Err(data_err(line, format!("expected {width} columns, found {}", rec.len())));
        }
        for (j, v) in parsed.into_iter().enumerate() {
            match v {
                Some(x) if x.is_finite() => cells.push(x),
                _ => {
                    return Err(data_err(line, format!("column {}: `{}` is not a finite number", j + 1, &rec[j])))
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(data_err(0, "no data rows".into()));
    }
    Ok(Table {
        header,
        width,
        cells,
        first_line,
    })
}

pub fn read_table_file(path: &Path) -> Result<Table> {
    read_table(File::open(path)?, &path.display().to_string())
}

/// Interprets a table as observations with `d_obs` components. A leading
/// time column is recognised by the width `d_obs + 1`; without it the times
/// are `0, 1, 2, ...`.
pub fn observations_from_table(table: &Table, d_obs: usize, name: &str) -> Result<ObservationSet> {
    let has_time = if table.width == d_obs + 1 {
        true
    } else if table.width == d_obs {
        false
    } else {
        return Err(Error::Data {
            path: name.to_string(),
            row: table.first_line,
            message: format!("expected {d_obs} value columns (plus optional time), found {}", table.width),
        });
    };
    let n = table.rows();
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * d_obs);
    for r in 0..n {
        let row = table.row(r);
        let (t, v) = if has_time { (row[0], &row[1..]) } else { (r as f64, row) };
        if let Some(&prev) = times.last() {
            if !(t > prev) {
                return Err(Error::Data {
                    path: name.to_string(),
                    row: table.first_line + r,
                    message: format!("time {t} does not increase (previous {prev})"),
                });
            }
        }
        times.push(t);
        values.extend_from_slice(v);
    }
    ObservationSet::new(times, values, d_obs).map_err(|e| Error::Data {
        path: name.to_string(),
        row: table.first_line,
        message: e.to_string(),
    })
}

/// Loads observations with `d_obs` components from a CSV file.
pub fn load_observations(path: &Path, d_obs: usize) -> Result<ObservationSet> {
    let table = read_table_file(path)?;
    observations_from_table(&table, d_obs, &path.display().to_string())
}

/// Column names of a model's state: `v1, v2, x1, x2` for the Heston model,
/// `x1..xd` otherwise.
pub fn component_names<M: Diffusion + ?Sized>(model: &M) -> Vec<String> {
    let k = model.transformed_dim();
    let d = model.dim();
    if k < d {
        (1..=k)
            .map(|i| format!("v{i}"))
            .chain((1..=d - k).map(|i| format!("x{i}")))
            .collect()
    } else {
        (1..=d).map(|i| format!("x{i}")).collect()
    }
}

fn write_rows<W: Write>(
    out: W,
    names: &[String],
    times: &[f64],
    values: &[f64],
    dim: usize,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    let mut rec: Vec<String> = Vec::with_capacity(dim + 1);
    for (r, t) in times.iter().enumerate() {
        rec.clear();
        rec.push(format!("{t}"));
        rec.extend(values[r * dim..(r + 1) * dim].iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes observations with a header and a time column. Floats use the
/// shortest representation that reads back exactly.
pub fn write_observations<W: Write>(out: W, obs: &ObservationSet, names: &[String]) -> Result<()> {
    if names.len() != obs.dim() {
        return Err(Error::arg("one name per component expected"));
    }
    write_rows(out, names, obs.times(), obs.values(), obs.dim())
}

pub fn write_observations_file(path: &Path, obs: &ObservationSet, names: &[String]) -> Result<()> {
    write_observations(std::io::BufWriter::new(File::create(path)?), obs, names)
}

/// Writes a full lattice in the observation format.
pub fn write_lattice_file(path: &Path, lattice: &PathLattice, names: &[String]) -> Result<()> {
    if names.len() != lattice.dim() {
        return Err(Error::arg("one name per component expected"));
    }
    let out = std::io::BufWriter::new(File::create(path)?);
    write_rows(out, names, lattice.times(), lattice.states(), lattice.dim())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headerless_without_time_gets_unit_spacing() {
        let text: String = (0..501).map(|i| format!("{},{},{}\n", i, 2 * i, 3 * i)).collect();
        let t = read_table(text.as_bytes(), "mem").unwrap();
        assert!(t.header.is_none());
        let obs = observations_from_table(&t, 3, "mem").unwrap();
        assert_eq!(obs.len(), 501);
        assert_eq!(obs.times()[500], 500.0);
        assert_eq!(obs.row(7), &[7.0, 14.0, 21.0]);
    }

    #[test]
    fn header_and_time_column() {
        let text = "t,x1\n0,1.5\n0.5,1.25\n";
        let t = read_table(text.as_bytes(), "mem").unwrap();
        assert_eq!(t.header.as_deref(), Some(&["t".to_string(), "x1".to_string()][..]));
        let obs = observations_from_table(&t, 1, "mem").unwrap();
        assert_eq!(obs.times(), &[0.0, 0.5]);
    }

    #[test]
    fn non_monotone_time_reports_row() {
        let text = "t,x\n0,1\n1,1\n0.5,1\n";
        let t = read_table(text.as_bytes(), "mem").unwrap();
        match observations_from_table(&t, 1, "mem").unwrap_err() {
            Error::Data { row, .. } => assert_eq!(row, 4),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn ragged_and_non_numeric_rows() {
        let e = read_table("1,2\n3\n".as_bytes(), "mem").unwrap_err();
        assert!(matches!(e, Error::Data { row: 2, .. }), "{e}");
        let e = read_table("1,2\n3,abc\n".as_bytes(), "mem").unwrap_err();
        assert!(matches!(e, Error::Data { row: 2, .. }), "{e}");
        assert!(e.is_validation());
    }

    #[test]
    fn round_trip_is_exact() {
        let vals = vec![0.1, 1.0 / 3.0, 2.5e-300, 7.0, -1e10, std::f64::consts::PI];
        let obs = ObservationSet::new(vec![0.0, 0.1 + 0.2, 1.0], vals, 2).unwrap();
        let mut buf = Vec::new();
        write_observations(&mut buf, &obs, &["a".into(), "b".into()]).unwrap();
        let t = read_table(buf.as_slice(), "mem").unwrap();
        let back = observations_from_table(&t, 2, "mem").unwrap();
        assert_eq!(back, obs);
    }
}
