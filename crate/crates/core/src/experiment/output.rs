//! Artifact files: CSV tables, histograms and atomic writes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::oracle::GridDensity;

/// Writes `contents` to `path` through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Numbers in output tables: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A comma-separated table with a one-line header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Samples stored row-major with `dim` coordinates per point.
pub fn samples_csv(dim: usize, points: &[f64]) -> String {
    let mut s = if dim == 1 {
        "x\n".to_string()
    } else {
        let names: Vec<String> = (1..=dim).map(|k| format!("x_{k}")).collect();
        names.join(",") + "\n"
    };
    for p in points.chunks(dim) {
        let cells: Vec<String> = p.iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

pub fn density_csv(g: &GridDensity) -> String {
    let mut s = "x,density\n".to_string();
    for (i, &r) in g.values().iter().enumerate() {
        let _ = writeln!(s, "{},{}", fmt_f64(g.node(i)), fmt_f64(r));
    }
    s
}

/// Uniform histogram on `[lo, hi]`; heights are normalized over the mass
/// that falls inside the range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    /// Particle counts, or bin probabilities for a grid density.
    pub counts: Vec<f64>,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], bins: usize, lo: f64, hi: f64) -> Self {
        let mut counts = vec![0.0; bins];
        let w = (hi - lo) / bins as f64;
        for &x in samples {
            if x >= lo && x <= hi {
                let k = (((x - lo) / w) as usize).min(bins - 1);
                counts[k] += 1.0;
            }
        }
        Self { lo, hi, counts }
    }

    pub fn from_density(g: &GridDensity, bins: usize, lo: f64, hi: f64) -> Self {
        let w = (hi - lo) / bins as f64;
        let counts = (0..bins)
            .map(|k| g.mass_between(lo + k as f64 * w, lo + (k + 1) as f64 * w))
            .collect();
        Self { lo, hi, counts }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        let w = self.width();
        let right = if k + 1 == self.bins() { self.hi } else { self.lo + (k + 1) as f64 * w };
        (self.lo + k as f64 * w, right)
    }

    pub fn heights(&self) -> Vec<f64> {
        let total: f64 = self.counts.iter().sum();
        let w = self.width();
        self.counts
            .iter()
            .map(|&c| if total > 0.0 { c / (total * w) } else { 0.0 })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = "bin_left,bin_right,count,normalized_height\n".to_string();
        for (k, h) in self.heights().into_iter().enumerate() {
            let (l, r) = self.edges(k);
            let _ = writeln!(s, "{},{},{},{}", fmt_f64(l), fmt_f64(r), fmt_f64(self.counts[k]), fmt_f64(h));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_heights_integrate_to_one() {
        let xs: Vec<f64> = (0..1000).map(|i| -4.0 + 8.0 * i as f64 / 999.0).collect();
        let h = Histogram::from_samples(&xs, 80, -3.0, 3.0);
        let total: f64 = h.heights().iter().map(|v| v * h.width()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(h.counts.iter().sum::<f64>(), 750.0);
        assert_eq!(h.edges(79).1, 3.0);
    }

    #[test]
    fn right_edge_lands_in_last_bin() {
        let h = Histogram::from_samples(&[3.0, -3.0], 4, -3.0, 3.0);
        assert_eq!(h.counts, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn density_histogram() {
        let g = GridDensity::gaussian(6.0, 1201, 0.0, 1.0).unwrap();
        let h = Histogram::from_density(&g, 80, -3.0, 3.0);
        let total: f64 = h.heights().iter().map(|v| v * h.width()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_round_trips_floats() {
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.push(vec![0.1 + 0.2, -1.0 / 3.0]);
        let csv = t.to_csv();
        let line = csv.lines().nth(1).unwrap();
        let back: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(back, t.rows[0]);
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/file.csv");
        write_atomic(&p, b"x\n").unwrap();
        write_atomic(&p, b"y\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "y\n");
        let names: Vec<_> = fs::read_dir(dir.path().join("sub")).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
