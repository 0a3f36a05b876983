//! Column-oriented numeric datasets and their CSV form.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    index: HashMap<String, usize>,
    columns: Vec<Vec<f64>>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Data(format!("{} names for {} columns", names.len(), columns.len())));
        }
        if names.is_empty() {
            return Err(Error::Data("no columns".into()));
        }
        let n = columns[0].len();
        if n < 2 {
            return Err(Error::Data(format!("need at least 2 rows, got {n}")));
        }
        let mut index = HashMap::new();
        for (k, (name, col)) in names.iter().zip(&columns).enumerate() {
            if !valid_name(name) {
                return Err(Error::Data(format!("invalid column name `{name}`")));
            }
            if index.insert(name.clone(), k).is_some() {
                return Err(Error::Data(format!("duplicate column `{name}`")));
            }
            if col.len() != n {
                return Err(Error::Data(format!("column `{name}` has {} rows, expected {n}", col.len())));
            }
            if let Some(r) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!("missing or non-finite value in `{name}`, row {}", r + 1)));
            }
        }
        Ok(Dataset { names, index, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::Data(format!("unknown column `{name}`")))
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn column_by_name(&self, name: &str) -> Result<&[f64]> {
        Ok(self.column(self.index_of(name)?))
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Copy with column `k` multiplied by `c`.
    pub fn scaled(&self, k: usize, c: f64) -> Dataset {
        let mut out = self.clone();
        out.columns[k].iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut columns = vec![Vec::new(); names.len()];
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (k, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Data(format!("row {}, column `{}`: cannot parse `{field}`", r + 1, names[k]))
                })?;
                columns[k].push(v);
            }
        }
        Dataset::new(names, columns)
    }

    /// Writes a header row then one row per observation, each value rounded to
    /// `precision` significant digits.
    pub fn write_csv<W: Write>(&self, writer: W, precision: usize) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.names)?;
        let mut row = Vec::with_capacity(self.n_cols());
        for r in 0..self.n_rows() {
            row.clear();
            row.extend(self.columns.iter().map(|c| format_sig(c[r], precision)));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Shortest decimal form of `x` rounded to `digits` significant digits.
pub fn format_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.clamp(1, 17);
    let rounded: f64 = format!("{:.*e}", digits - 1, x).parse().expect("valid float");
    if rounded == 0.0 {
        return "0".into();
    }
    let mag = rounded.abs();
    if !(1e-4..1e15).contains(&mag) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_and_validation() {
        let text = "a,b\n1,2.5\n3,-4\n";
        let d = Dataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(d.n_rows(), 2);
        assert_eq!(d.column_by_name("b").unwrap(), &[2.5, -4.0]);
        let mut out = Vec::new();
        d.write_csv(&mut out, 6).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a,b\n1,2.5\n3,-4\n");
        assert!(Dataset::read_csv("a,b\n1,\n2,3\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("a,a\n1,2\n2,3\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("a\n1\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("a b\n1\n2\n".as_bytes()).is_err());
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(1.23456789, 6), "1.23457");
        assert_eq!(format_sig(0.000123456789, 3), "0.000123");
        assert_eq!(format_sig(2.0, 6), "2");
        assert_eq!(format_sig(-1e-300, 2), "-1e-300");
        assert_eq!(format_sig(0.1 + 0.2, 17), "0.30000000000000004");
    }
}
