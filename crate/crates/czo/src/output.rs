//! CSV reports with `#` header comments, grid-function files and the run
//! manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use czo_core::{Aabb, GridFunction, GridGeometry};

/// Shortest round-trip representation, so equal values print identically.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Debug, Clone, Default)]
pub struct CsvReport {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvReport {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        CsvReport {
            comments: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, text: impl Into<String>) -> &mut Self {
        self.comments.push(text.into());
        self
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) -> &mut Self {
        self.rows.push(cells.into_iter().map(Into::into).collect());
        self
    }

    pub fn to_bytes(&self) -> io::Result<Vec<u8>> {
        let mut out = Vec::new();
        for c in &self.comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        drop(w);
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_bytes()?)
    }
}

/// `# box=<lo..hi per axis> n=<N>` followed by one value per line in
/// row-major order.
pub fn write_grid<const D: usize>(path: &Path, f: &GridFunction<D>) -> io::Result<()> {
    let mut out = String::new();
    let axes: Vec<String> = (0..D)
        .map(|k| format!("{}..{}", num(f.geometry.bounds.lo[k]), num(f.geometry.bounds.hi[k])))
        .collect();
    out.push_str(&format!("# box={} n={}\n", axes.join(","), f.geometry.cells_per_axis));
    for v in &f.values {
        out.push_str(&num(*v));
        out.push('\n');
    }
    fs::write(path, out)
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn read_grid<const D: usize>(path: &Path) -> io::Result<GridFunction<D>> {
    let file = fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().ok_or_else(|| invalid("empty grid file"))??;
    let rest = header
        .strip_prefix('#')
        .ok_or_else(|| invalid("grid file must start with a `# box=... n=...` line"))?;
    let mut bounds: Option<Aabb<D>> = None;
    let mut n: Option<usize> = None;
    for field in rest.split_whitespace() {
        if let Some(b) = field.strip_prefix("box=") {
            let axes: Vec<&str> = b.split(',').collect();
            if axes.len() != D {
                return Err(invalid(format!("expected {D} axes in box, found {}", axes.len())));
            }
            let mut lo = [0.0; D];
            let mut hi = [0.0; D];
            for (k, a) in axes.iter().enumerate() {
                let (l, h) = crate::config::parse_range(a).map_err(invalid)?;
                lo[k] = l;
                hi[k] = h;
            }
            bounds = Some(Aabb::new(lo, hi));
        } else if let Some(v) = field.strip_prefix("n=") {
            n = Some(v.parse().map_err(|e| invalid(format!("bad n: {e}")))?);
        }
    }
    let geometry = GridGeometry::new(
        bounds.ok_or_else(|| invalid("missing box="))?,
        n.ok_or_else(|| invalid("missing n="))?,
    )
    .map_err(|e| invalid(e.to_string()))?;
    let mut values = Vec::with_capacity(geometry.len());
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        values.push(t.parse::<f64>().map_err(|e| invalid(format!("bad value `{t}`: {e}")))?);
    }
    GridFunction::new(geometry, values).map_err(|e| invalid(e.to_string()))
}

/// `(x, value)` rows for a one-dimensional grid function.
pub fn grid_table(f: &GridFunction<1>, name: &str) -> CsvReport {
    let mut r = CsvReport::new(["x", name]);
    for (k, v) in f.values.iter().enumerate() {
        r.row([num(f.geometry.midpoint(k)[0]), num(*v)]);
    }
    r
}

pub struct Manifest<'a> {
    pub subcommand: &'a str,
    pub config: &'a BTreeMap<String, String>,
    pub threads: usize,
    pub wall_seconds: f64,
    pub files: &'a [String],
    pub status: &'a str,
}

impl Manifest<'_> {
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let started = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut s = String::new();
        s.push_str(&format!("subcommand = {}\n", self.subcommand));
        s.push_str(&format!("czo_version = {}\n", env!("CARGO_PKG_VERSION")));
        s.push_str(&format!("threads = {}\n", self.threads));
        s.push_str(&format!("finished_unix = {started}\n"));
        s.push_str(&format!("wall_seconds = {:.3}\n", self.wall_seconds));
        s.push_str(&format!("status = {}\n", self.status));
        s.push_str(&format!("files = {}\n", self.files.join(",")));
        s.push_str("# effective configuration\n");
        for (k, v) in self.config {
            s.push_str(&format!("{k} = {v}\n"));
        }
        fs::write(dir.join("manifest.txt"), s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_comments_then_records() {
        let mut r = CsvReport::new(["a", "b"]);
        r.comment("kind=test").row(["1", "x,y"]);
        let s = String::from_utf8(r.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "# kind=test\na,b\n1,\"x,y\"\n");
    }

    #[test]
    fn grid_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let geo = GridGeometry::new(Aabb::new([-8.0], [8.0]), 16).unwrap();
        let f = GridFunction::from_fn(geo, |p| p[0].sin() / 3.0).unwrap();
        let path = dir.path().join("f.grid");
        write_grid(&path, &f).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# box=-8.0..8.0 n=16\n"));
        assert_eq!(read_grid::<1>(&path).unwrap(), f);
        fs::write(&path, "1.0\n").unwrap();
        assert!(read_grid::<1>(&path).is_err());
    }
}
