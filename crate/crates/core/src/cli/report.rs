//! Tabular artifacts: CSV, gnuplot-compatible `.dat`, and optional SVG plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::io::write_atomic;

/// One cell; numbers keep full round-trip precision.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "pass" } else { "fail" }.into())
    }
}
impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or_else(|| Cell::Text("n/a".into()), Cell::Num)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Quotes a CSV field when it contains a delimiter.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header of {}", self.name);
        self.rows.push(row);
    }

    pub fn csv(&self) -> String {
        let mut s = self.columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.iter().map(|c| csv_field(&c.render())).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }

    /// Whitespace-separated columns with a commented header; text cells have
    /// their blanks replaced so column counts stay fixed.
    pub fn dat(&self) -> String {
        let mut s = format!("# {}\n", self.columns.join(" "));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.render().replace(char::is_whitespace, "_")).collect();
            let _ = writeln!(s, "{}", cells.join(" "));
        }
        s
    }

    fn numeric_column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_f64()).collect())
    }

    /// Log-log line plot of `ys` against `x`, skipping non-positive values.
    pub fn svg(&self, x: &str, ys: &[&str]) -> Option<String> {
        let xs = self.numeric_column(x)?;
        let series: Vec<(&str, Vec<(f64, f64)>)> = ys
            .iter()
            .filter_map(|name| {
                let col = self.numeric_column(name)?;
                let pts: Vec<(f64, f64)> = xs
                    .iter()
                    .zip(col)
                    .filter_map(|(a, b)| match (a, b) {
                        (Some(a), Some(b)) if *a > 0.0 && b > 0.0 => Some((a.log10(), b.log10())),
                        _ => None,
                    })
                    .collect();
                (pts.len() >= 2).then_some((*name, pts))
            })
            .collect();
        if series.is_empty() {
            return None;
        }
        let all = series.iter().flat_map(|s| s.1.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (a, b) in all {
            x0 = x0.min(*a);
            x1 = x1.max(*a);
            y0 = y0.min(*b);
            y1 = y1.max(*b);
        }
        if x1 - x0 <= 0.0 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 <= 0.0 {
            y1 = y0 + 1.0;
        }
        let (w, h, m) = (640.0, 420.0, 50.0);
        let px = |a: f64| m + (a - x0) / (x1 - x0) * (w - 2.0 * m);
        let py = |b: f64| h - m - (b - y0) / (y1 - y0) * (h - 2.0 * m);
        let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * m, h - 2.0 * m);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">log10 {x}</text>"#, w / 2.0, h - 12.0);
        let _ = writeln!(s, r#"<text x="{m}" y="{}">{x0:.2}</text><text x="{}" y="{}" text-anchor="end">{x1:.2}</text>"#, h - m + 16.0, w - m, h - m + 16.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.2}</text><text x="{}" y="{}" text-anchor="end">{y1:.2}</text>"#, m - 4.0, h - m, m - 4.0, m + 10.0);
        for (k, (name, pts)) in series.iter().enumerate() {
            let color = colors[k % colors.len()];
            let path: Vec<String> = pts.iter().map(|(a, b)| format!("{:.2},{:.2}", px(*a), py(*b))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            for (a, b) in pts {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(*a), py(*b));
            }
            let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{color}">log10 {name}</text>"#, m + 8.0, m + 16.0 + 14.0 * k as f64);
        }
        s.push_str("</svg>\n");
        Some(s)
    }

    /// Writes `<dir>/<name>.csv` and `<dir>/<name>.dat`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let csv = dir.join(format!("{}.csv", self.name));
        let dat = dir.join(format!("{}.dat", self.name));
        write_atomic(&csv, &self.csv())?;
        write_atomic(&dat, &self.dat())?;
        Ok(vec![csv, dat])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_dat_layout() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![0.1.into(), "x y".into()]);
        assert_eq!(t.csv(), "a,b\n0.1,x y\n");
        assert_eq!(t.dat(), "# a b\n0.1 x_y\n");
    }

    #[test]
    fn svg_needs_two_points() {
        let mut t = Table::new("t", &["e", "d"]);
        t.push(vec![1.0.into(), 2.0.into()]);
        assert!(t.svg("e", &["d"]).is_none());
        t.push(vec![10.0.into(), 20.0.into()]);
        assert!(t.svg("e", &["d"]).unwrap().starts_with("<svg"));
    }
}
