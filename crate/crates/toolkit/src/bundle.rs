//! Report bundles: named output files held in memory until the run ends,
//! then written together.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Formats a float the same way on every platform and locale.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:e}")
    }
}

/// Builds a CSV table in memory.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        self.writer.write_record(values.iter().map(|v| fmt_f64(*v)))?;
        Ok(())
    }

    /// A row whose leading columns are text.
    pub fn labelled_row(&mut self, labels: &[&str], values: &[f64]) -> Result<()> {
        let fields: Vec<String> =
            labels.iter().map(|s| s.to_string()).chain(values.iter().map(|v| fmt_f64(*v))).collect();
        self.writer.write_record(&fields)?;
        Ok(())
    }

    /// `(x, label, value)`, the long format of sweep tables.
    pub fn row_mixed(&mut self, x: f64, label: &str, value: f64) -> Result<()> {
        self.writer.write_record([fmt_f64(x), label.to_string(), fmt_f64(value)])?;
        Ok(())
    }

    pub fn finish(self) -> Result<Vec<u8>> {
        self.writer.into_inner().map_err(|e| anyhow::anyhow!("csv flush failed: {e}"))
    }
}

/// Long-format plot data `(series, x, y)`.
#[derive(Default)]
pub struct PlotData {
    rows: Vec<(String, f64, f64)>,
}

impl PlotData {
    pub fn push_series(&mut self, name: &str, x: &[f64], y: &[f64]) {
        for (a, b) in x.iter().zip(y) {
            self.rows.push((name.to_string(), *a, *b));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut t = Table::new(&["series", "x", "y"])?;
        for (s, x, y) in &self.rows {
            t.labelled_row(&[s], &[*x, *y])?;
        }
        t.finish()
    }
}

#[derive(Default)]
pub struct Bundle {
    files: BTreeMap<String, Vec<u8>>,
}

impl Bundle {
    pub fn insert(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }

    pub fn insert_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.insert(name, bytes);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(|v| v.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(|s| s.as_str())
    }

    /// Moves every file of `other` in under `prefix/`.
    pub fn absorb(&mut self, prefix: &str, other: Bundle) {
        for (k, v) in other.files {
            self.files.insert(format!("{prefix}/{k}"), v);
        }
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.0, 1.0, -2.5e-13, 0.1 + 0.2, f64::MIN_POSITIVE, 123456.789] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn empty_plot_has_header() {
        assert_eq!(PlotData::default().to_csv().unwrap(), b"series,x,y\n");
    }
}
