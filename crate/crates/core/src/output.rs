//! File emission: CSV tables at 12 significant digits, binary PGM images and
//! the run manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`-style formatting: shortest of fixed or exponent notation, trailing zeros trimmed.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let p = SIGNIFICANT_DIGITS as i32;
    let sci = format!("{:.*e}", (p - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= p {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Num(x) => f.write_str(&format_number(*x)),
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Config(format!(
                "row of {} cells for {} columns in {}",
                row.len(),
                header.len(),
                path.display()
            )));
        }
        let line: Vec<String> = row.iter().map(Cell::to_string).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Binary 8-bit PGM of `values[(ix, iy)]`, `x` across and `y` increasing upward,
/// scaled so the maximum maps to 255.
pub fn write_pgm(path: &Path, values: &Array2<f64>) -> Result<()> {
    let (nx, ny) = values.dim();
    let max = values.iter().copied().fold(0.0f64, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let mut bytes = Vec::with_capacity(nx * ny + 32);
    bytes.extend_from_slice(format!("P5\n{nx} {ny}\n255\n").as_bytes());
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let v = (values[(ix, iy)].max(0.0) * scale).round();
            bytes.push(v.min(255.0) as u8);
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Files written by a run, relative to the output directory.
#[derive(Clone, Debug, Default)]
pub struct Manifest {
    root: PathBuf,
    entries: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        }
    }

    /// Absolute path for `relative`, creating parent directories and recording it.
    pub fn claim(&mut self, relative: impl AsRef<Path>) -> Result<PathBuf> {
        let rel = relative.as_ref().to_path_buf();
        let full = self.root.join(&rel);
        if let Some(parent) = full.parent() {
            fs::create_dir_all(parent)?;
        }
        self.entries.push(rel);
        Ok(full)
    }

    pub fn entries(&self) -> &[PathBuf] {
        &self.entries
    }

    /// Checks every entry exists and is non-empty, then writes `manifest.txt`.
    pub fn finish(self) -> Result<PathBuf> {
        for rel in &self.entries {
            let meta = fs::metadata(self.root.join(rel))?;
            if meta.len() == 0 {
                return Err(Error::Io(std::io::Error::other(format!(
                    "output {} is empty",
                    rel.display()
                ))));
            }
        }
        let path = self.root.join("manifest.txt");
        let mut text = String::new();
        for rel in &self.entries {
            text.push_str(&rel.to_string_lossy());
            text.push('\n');
        }
        fs::write(&path, text)?;
        Ok(path)
    }
}
