//! Text file formats.
//!
//! Floats are written with 17 significant digits so every value reads back
//! bit for bit.

use std::fs;
use std::path::Path;

use dualrail_core::fock::{Cutoff, DensityMatrix, C64};
use dualrail_core::homodyne::{HomodyneBasis, QuadratureBatch};
use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-comment lines with their 1-based numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_fields<T: std::str::FromStr>(path: &Path, line: usize, text: &str, count: usize) -> Result<Vec<T>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != count {
        return Err(format_err(path, line, format!("expected {count} columns, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| f.parse().map_err(|_| format_err(path, line, format!("cannot parse `{f}`"))))
        .collect()
}

pub fn matrix_to_text(rho: &DensityMatrix) -> String {
    let cutoff = rho.cutoff();
    let mut out = format!(
        "# two-mode density matrix\ncutoff = {}\nbasis = n1 n2, index n1*{}+n2\n# k l m n re im  (<k,l|rho|m,n>)\n",
        cutoff.n_max(),
        cutoff.mode_dim()
    );
    for (k, l) in cutoff.basis() {
        for (m, n) in cutoff.basis() {
            let z = rho.element(k, l, m, n);
            out.push_str(&format!("{k} {l} {m} {n} {} {}\n", float(z.re), float(z.im)));
        }
    }
    out
}

pub fn matrix_from_text(path: &Path, text: &str) -> Result<DensityMatrix> {
    let mut lines = data_lines(text);
    let (line, header) = lines.next().ok_or_else(|| format_err(path, 1, "empty matrix file"))?;
    let n_max: usize = header
        .strip_prefix("cutoff")
        .and_then(|r| r.trim_start().strip_prefix('='))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| format_err(path, line, "expected `cutoff = N`"))?;
    let cutoff = Cutoff::new(n_max).map_err(|e| format_err(path, line, e.to_string()))?;
    match lines.next() {
        Some((_, l)) if l.starts_with("basis") => {}
        Some((line, _)) => return Err(format_err(path, line, "expected basis line")),
        None => return Err(format_err(path, line, "missing basis line")),
    }
    let d = cutoff.dim();
    let mut data = DMatrix::<C64>::zeros(d, d);
    let mut seen = vec![false; d * d];
    let mut last_line = line;
    for (line, l) in lines {
        last_line = line;
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(format_err(path, line, format!("expected 6 columns, found {}", fields.len())));
        }
        let idx: Vec<usize> = parse_fields(path, line, &fields[..4].join(" "), 4)?;
        let val: Vec<f64> = parse_fields(path, line, &fields[4..].join(" "), 2)?;
        if idx.iter().any(|&i| i > n_max) {
            return Err(format_err(path, line, "photon number exceeds cutoff"));
        }
        let (i, j) = (cutoff.index(idx[0], idx[1]), cutoff.index(idx[2], idx[3]));
        if std::mem::replace(&mut seen[i * d + j], true) {
            return Err(format_err(path, line, "duplicate element"));
        }
        data[(i, j)] = C64::new(val[0], val[1]);
    }
    if seen.iter().any(|s| !s) {
        return Err(format_err(path, last_line, format!("expected {} elements", d * d)));
    }
    DensityMatrix::new(cutoff, data).map_err(|e| format_err(path, last_line, e.to_string()))
}

pub fn samples_to_text(batches: &[QuadratureBatch]) -> String {
    let mut out = String::from("# phi1 phi2 x1 x2\n");
    for b in batches {
        let (p1, p2) = (float(b.basis().phi1()), float(b.basis().phi2()));
        for &(x1, x2) in b.samples() {
            out.push_str(&format!("{p1} {p2} {} {}\n", float(x1), float(x2)));
        }
    }
    out
}

/// Consecutive rows with the same phases form one batch.
pub fn samples_from_text(path: &Path, text: &str) -> Result<Vec<QuadratureBatch>> {
    let mut groups: Vec<(HomodyneBasis, Vec<(f64, f64)>)> = Vec::new();
    let mut phases = (f64::NAN, f64::NAN);
    for (line, l) in data_lines(text) {
        let v: Vec<f64> = parse_fields(path, line, l, 4)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(format_err(path, line, "non-finite value"));
        }
        match groups.last_mut() {
            Some((_, s)) if phases == (v[0], v[1]) => s.push((v[2], v[3])),
            _ => groups.push((HomodyneBasis::new(v[0], v[1]), vec![(v[2], v[3])])),
        }
        phases = (v[0], v[1]);
    }
    if groups.is_empty() {
        return Err(format_err(path, 1, "no samples"));
    }
    groups
        .into_iter()
        .map(|(b, s)| QuadratureBatch::new(b, s).map_err(CliError::from))
        .collect()
}

/// Ordered `key = value` report.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, float(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let entries = data_lines(text)
            .map(|(line, l)| {
                l.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .ok_or_else(|| format_err(path, line, "expected `key = value`"))
            })
            .collect::<Result<_>>()?;
        Ok(Report { entries })
    }
}

/// Whitespace-separated columns under a `#` header.
pub fn table_to_text(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = format!("# {}\n", columns.join(" "));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&x| float(x)).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn table_from_text(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    data_lines(text)
        .map(|(line, l)| {
            l.split_whitespace()
                .map(|f| f.parse().map_err(|_| format_err(path, line, format!("cannot parse `{f}`"))))
                .collect()
        })
        .collect()
}
