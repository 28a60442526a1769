use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// `%.12g`: 12 significant digits, trailing zeros dropped, scientific
/// notation outside `1e-5 <= |x| < 1e12`.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Column-major numeric table, optionally led by a text column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub labels: Option<(String, Vec<String>)>,
}

impl Table {
    pub fn new(first: &str, values: Vec<f64>) -> Self {
        Self {
            header: vec![first.to_string()],
            columns: vec![values],
            labels: None,
        }
    }

    pub fn with_labels(mut self, name: &str, labels: Vec<String>) -> Self {
        debug_assert_eq!(labels.len(), self.n_rows());
        self.labels = Some((name.to_string(), labels));
        self
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns[0].len());
        self.header.push(name.into());
        self.columns.push(values);
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        let label_name = self.labels.as_ref().map(|(n, _)| n.clone());
        w.write_record(label_name.iter().chain(&self.header)).map_err(io)?;
        for row in 0..self.n_rows() {
            let label = self.labels.as_ref().map(|(_, l)| l[row].clone());
            w.write_record(label.into_iter().chain(self.columns.iter().map(|c| fmt_g12(c[row])))).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}
