//! Plain-text `wgmesh 1` format:
//!
//! ```text
//! wgmesh 1
//! vertices N
//! x y            (N lines)
//! cells M
//! v0 v1 v2       (M lines)
//! boundary K
//! va vb          (K lines)
//! ```
//!
//! Indices are 0-based and coordinates are written with 17 significant digits.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{edge_key, Mesh, RawCell, Vertex};
use crate::error::{Error, Result};

pub fn format_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    s.push_str("wgmesh 1\n");
    let _ = writeln!(s, "vertices {}", mesh.num_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.16e} {:.16e}", v.x, v.y);
    }
    let _ = writeln!(s, "cells {}", mesh.num_cells());
    for c in &mesh.cells {
        let [a, b, d] = c.vertex_ids;
        let _ = writeln!(s, "{a} {b} {d}");
    }
    let _ = writeln!(s, "boundary {}", mesh.boundary_edge_ids.len());
    for &e in &mesh.boundary_edge_ids {
        let [a, b] = mesh.edges[e].vertex_ids;
        let _ = writeln!(s, "{a} {b}");
    }
    s
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    path: PathBuf,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    /// Next non-blank line with its 1-based number; `what` names the expected content.
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let l = l.trim();
            if !l.is_empty() {
                self.last_line = i + 1;
                return Ok((i + 1, l));
            }
        }
        Err(self.err(self.last_line + 1, format!("unexpected end of file: missing {what}")))
    }

    fn header(&mut self, section: &str) -> Result<usize> {
        let (ln, l) = self.next(&format!("section `{section}`"))?;
        let mut it = l.split_whitespace();
        if it.next() != Some(section) {
            return Err(self.err(ln, format!("expected section `{section}`, found `{l}`")));
        }
        let count = it
            .next()
            .and_then(|t| t.parse::<usize>().ok())
            .ok_or_else(|| self.err(ln, format!("section `{section}` needs an entry count")))?;
        Ok(count)
    }

    fn numbers<T: std::str::FromStr>(&mut self, section: &str, n: usize) -> Result<(usize, Vec<T>)> {
        let (ln, l) = self.next(&format!("entries of section `{section}`"))?;
        let vals: Vec<T> = l
            .split_whitespace()
            .map(|t| t.parse::<T>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| self.err(ln, format!("malformed `{section}` entry `{l}`")))?;
        if vals.len() != n {
            return Err(self.err(ln, format!("`{section}` entry needs {n} values, found {}", vals.len())));
        }
        Ok((ln, vals))
    }
}

pub fn parse_mesh(text: &str, path: impl AsRef<Path>) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate().peekable(),
        path: path.as_ref().to_path_buf(),
        last_line: 0,
    };
    let (ln, head) = lines.next("header `wgmesh 1`")?;
    if head.split_whitespace().collect::<Vec<_>>() != ["wgmesh", "1"] {
        return Err(lines.err(ln, format!("expected header `wgmesh 1`, found `{head}`")));
    }

    let nv = lines.header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, xy) = lines.numbers::<f64>("vertices", 2)?;
        if !xy[0].is_finite() || !xy[1].is_finite() {
            return Err(lines.err(ln, "non-finite vertex coordinate"));
        }
        vertices.push(Vertex { x: xy[0], y: xy[1] });
    }

    let nc = lines.header("cells")?;
    let mut raw = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, v) = lines.numbers::<usize>("cells", 3)?;
        if let Some(bad) = v.iter().find(|&&i| i >= nv) {
            return Err(lines.err(ln, format!("vertex index {bad} out of range 0..{nv}")));
        }
        if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
            return Err(lines.err(ln, "cell repeats a vertex"));
        }
        raw.push(RawCell::new([v[0], v[1], v[2]]));
    }

    let nb = lines.header("boundary")?;
    let mut listed = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, v) = lines.numbers::<usize>("boundary", 2)?;
        listed.push((ln, edge_key(v[0], v[1])));
    }

    let mesh = Mesh::from_cells(vertices, raw)?;
    let actual: HashSet<(usize, usize)> = mesh
        .boundary_edge_ids
        .iter()
        .map(|&e| edge_key(mesh.edges[e].vertex_ids[0], mesh.edges[e].vertex_ids[1]))
        .collect();
    for &(ln, key) in &listed {
        if !actual.contains(&key) {
            return Err(lines.err(ln, format!("({}, {}) is not a boundary edge of the mesh", key.0, key.1)));
        }
    }
    if listed.iter().map(|&(_, k)| k).collect::<HashSet<_>>().len() != actual.len() {
        return Err(lines.err(
            lines.last_line,
            format!("boundary section lists {nb} edges, mesh has {}", actual.len()),
        ));
    }
    Ok(mesh)
}
