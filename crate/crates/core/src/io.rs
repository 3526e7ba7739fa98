//! Plain-text artifacts: the shared mesh format, per-node field CSVs, and
//! atomic file writes.
//!
//! Mesh format:
//! ```text
//! # wulffstab mesh
//! level 5
//! integrand <hash>
//! v x y z nx ny nz
//! f i j k
//! ```
//! Face indices are zero-based. Floats use Rust's shortest round-trip
//! formatting, so a write-read cycle is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::integrand::WulffMesh;
use crate::surface::SurfaceGeometry;

/// Vertices, normals and faces as stored in the text format.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshText {
    pub level: usize,
    pub integrand_hash: String,
    pub vertices: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl MeshText {
    pub fn from_wulff(w: &WulffMesh) -> Self {
        Self {
            level: w.level,
            integrand_hash: w.integrand_hash.clone(),
            vertices: w.vertices.clone(),
            normals: w.normals.clone(),
            faces: w.sphere.triangles.clone(),
        }
    }

    /// Surface positions and normals on the triangulation of its parameter mesh.
    pub fn from_surface(geo: &SurfaceGeometry, level: usize, integrand_hash: &str, faces: &[[usize; 3]]) -> Self {
        Self {
            level,
            integrand_hash: integrand_hash.to_string(),
            vertices: geo.positions.clone(),
            normals: geo.normals.clone(),
            faces: faces.to_vec(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# wulffstab mesh");
        let _ = writeln!(s, "level {}", self.level);
        let _ = writeln!(s, "integrand {}", self.integrand_hash);
        for (v, n) in self.vertices.iter().zip(&self.normals) {
            let _ = writeln!(s, "v {:?} {:?} {:?} {:?} {:?} {:?}", v[0], v[1], v[2], n[0], n[1], n[2]);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0], f[1], f[2]);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Config { line, message };
        let mut level = None;
        let mut hash = None;
        let mut vertices = Vec::new();
        let mut normals = Vec::new();
        let mut faces = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let mut parts = raw.split_whitespace();
            let tag = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            match tag {
                "level" => {
                    let v = rest.first().and_then(|s| s.parse().ok()).ok_or_else(|| err(line, "bad level".into()))?;
                    level = Some(v);
                }
                "integrand" => hash = Some(rest.first().copied().unwrap_or_default().to_string()),
                "v" => {
                    if rest.len() != 6 {
                        return Err(err(line, format!("vertex line needs 6 numbers, got {}", rest.len())));
                    }
                    let mut x = [0.0; 6];
                    for (k, tok) in rest.iter().enumerate() {
                        x[k] = tok.parse().map_err(|_| err(line, format!("not a number: {tok}")))?;
                    }
                    vertices.push([x[0], x[1], x[2]]);
                    normals.push([x[3], x[4], x[5]]);
                }
                "f" => {
                    if rest.len() != 3 {
                        return Err(err(line, format!("face line needs 3 indices, got {}", rest.len())));
                    }
                    let mut f = [0usize; 3];
                    for (k, tok) in rest.iter().enumerate() {
                        f[k] = tok.parse().map_err(|_| err(line, format!("not an index: {tok}")))?;
                    }
                    faces.push(f);
                }
                other => return Err(err(line, format!("unknown record `{other}`"))),
            }
        }
        let level = level.ok_or_else(|| err(0, "missing level header".into()))?;
        let integrand_hash = hash.ok_or_else(|| err(0, "missing integrand header".into()))?;
        let n = vertices.len();
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return Err(err(0, format!("face {f:?} references a vertex beyond {n}")));
        }
        Ok(Self { level, integrand_hash, vertices, normals, faces })
    }
}

/// CSV with a `vertex` column followed by named value columns.
pub fn field_csv(columns: &[(&str, &[f64])]) -> Result<String> {
    let n = columns.first().map_or(0, |c| c.1.len());
    if columns.iter().any(|c| c.1.len() != n) {
        return Err(Error::Domain("field columns differ in length".into()));
    }
    let mut s = String::from("vertex");
    for (name, _) in columns {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for i in 0..n {
        let _ = write!(s, "{i}");
        for (_, values) in columns {
            let _ = write!(s, ",{:?}", values[i]);
        }
        s.push('\n');
    }
    Ok(s)
}

/// Parses a CSV written by [`field_csv`] into column names and columns.
pub fn parse_field_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Config { line: 1, message: "empty field file".into() })?;
    let names: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let mut cols = vec![Vec::new(); names.len()];
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != names.len() + 1 {
            return Err(Error::Config { line: i + 2, message: "wrong column count".into() });
        }
        for (k, tok) in parts[1..].iter().enumerate() {
            cols[k].push(tok.parse().map_err(|_| Error::Config { line: i + 2, message: format!("not a number: {tok}") })?);
        }
    }
    Ok((names, cols))
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed run never leaves a truncated artifact behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_vertex_line() {
        let e = MeshText::parse("level 2\nintegrand x\nv 1 2 3\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }));
    }

    #[test]
    fn field_csv_round_trip() {
        let a = [0.1, 1.0 / 3.0];
        let b = [-2.5, 1e-300];
        let text = field_csv(&[("a", &a), ("b", &b)]).unwrap();
        let (names, cols) = parse_field_csv(&text).unwrap();
        assert_eq!(names, ["a", "b"]);
        assert_eq!(cols, vec![a.to_vec(), b.to_vec()]);
    }
}
