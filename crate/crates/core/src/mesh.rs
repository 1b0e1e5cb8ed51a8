//! Conforming triangular meshes with newest-vertex bisection.
//!
//! Local edge `i` of a cell is the edge opposite local vertex `i`. Every cell
//! carries the local index of its refinement edge; bisection inserts the edge
//! midpoint as the newest vertex of both children, whose refinement edges are
//! then the edges opposite that vertex.

mod io;

pub use io::{read_mesh, write_mesh, parse_mesh, format_mesh};

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
}

impl Vertex {
    pub fn point(&self) -> Point {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Counterclockwise vertex indices.
    pub vertex_ids: [usize; 3],
    /// `edge_ids[i]` is the edge opposite `vertex_ids[i]`.
    pub edge_ids: [usize; 3],
    pub refinement_edge: u8,
    /// Diameter (longest edge).
    pub h: f64,
    pub area: f64,
    /// Index of the cell in the previous mesh this cell was derived from.
    pub parent: Option<usize>,
    /// Number of bisections separating this cell from the initial mesh.
    pub generation: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Sorted vertex indices; the edge parameter runs from `vertex_ids[0]` to `vertex_ids[1]`.
    pub vertex_ids: [usize; 2],
    pub cell_plus: usize,
    pub cell_minus: Option<usize>,
    /// Unit normal from `cell_plus` toward `cell_minus` (outward on the boundary).
    pub normal: Point,
    /// Unit tangent from `vertex_ids[0]` to `vertex_ids[1]`.
    pub tangent: Point,
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cell_minus.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vertex>,
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
    pub boundary_edge_ids: Vec<usize>,
    pub interior_edge_ids: Vec<usize>,
    /// Global mesh size `max h_T`.
    pub h: f64,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn signed_area(p: [Point; 3]) -> f64 {
    let u = sub(p[1], p[0]);
    let v = sub(p[2], p[0]);
    0.5 * (u[0] * v[1] - u[1] * v[0])
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Raw cell description used to (re)build a mesh.
#[derive(Debug, Clone, Copy)]
pub struct RawCell {
    pub vertex_ids: [usize; 3],
    pub refinement_edge: Option<u8>,
    pub parent: Option<usize>,
    pub generation: u32,
}

impl RawCell {
    pub fn new(vertex_ids: [usize; 3]) -> Self {
        RawCell {
            vertex_ids,
            refinement_edge: None,
            parent: None,
            generation: 0,
        }
    }
}

impl Mesh {
    /// Builds topology from vertices and cells. Clockwise cells are reordered;
    /// cells without a refinement edge get their longest edge.
    pub fn from_cells(vertices: Vec<Vertex>, raw: Vec<RawCell>) -> Result<Mesh> {
        if let Some((i, _)) = vertices
            .iter()
            .enumerate()
            .find(|(_, v)| !v.x.is_finite() || !v.y.is_finite())
        {
            return Err(Error::Geometry(format!("vertex {i} has non-finite coordinates")));
        }
        let nv = vertices.len();
        let mut cells = Vec::with_capacity(raw.len());
        for (c, rc) in raw.iter().enumerate() {
            let mut vid = rc.vertex_ids;
            if vid.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidArgument(format!(
                    "cell {c} references a vertex outside 0..{nv}"
                )));
            }
            let mut refine = rc.refinement_edge;
            let pts = vid.map(|v| vertices[v].point());
            let mut area = signed_area(pts);
            if area < 0.0 {
                vid.swap(1, 2);
                area = -area;
                refine = refine.map(|r| match r {
                    1 => 2,
                    2 => 1,
                    r => r,
                });
            }
            if area <= 0.0 || !area.is_finite() {
                return Err(Error::Geometry(format!("cell {c} has zero area")));
            }
            let pts = vid.map(|v| vertices[v].point());
            let lens = [0, 1, 2].map(|i| norm(sub(pts[(i + 2) % 3], pts[(i + 1) % 3])));
            let refinement_edge = refine.unwrap_or_else(|| {
                let mut best = 0;
                for i in 1..3 {
                    if lens[i] > lens[best] {
                        best = i;
                    }
                }
                best as u8
            });
            if refinement_edge > 2 {
                return Err(Error::InvalidArgument(format!(
                    "cell {c} has refinement edge {refinement_edge}"
                )));
            }
            cells.push(Cell {
                vertex_ids: vid,
                edge_ids: [usize::MAX; 3],
                refinement_edge,
                h: lens.iter().cloned().fold(0.0, f64::max),
                area,
                parent: rc.parent,
                generation: rc.generation,
            });
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(cells.len() * 2);
        let mut edge_cells: Vec<(usize, Option<usize>)> = Vec::new();
        let mut edge_verts: Vec<[usize; 2]> = Vec::new();
        for c in 0..cells.len() {
            for i in 0..3 {
                let a = cells[c].vertex_ids[(i + 1) % 3];
                let b = cells[c].vertex_ids[(i + 2) % 3];
                let key = edge_key(a, b);
                let e = match lookup.get(&key) {
                    Some(&e) => {
                        let slot = &mut edge_cells[e];
                        if slot.1.is_some() {
                            return Err(Error::Geometry(format!(
                                "edge ({}, {}) is shared by more than two cells",
                                key.0, key.1
                            )));
                        }
                        slot.1 = Some(c);
                        e
                    }
                    None => {
                        let e = edge_verts.len();
                        lookup.insert(key, e);
                        edge_verts.push([key.0, key.1]);
                        edge_cells.push((c, None));
                        e
                    }
                };
                cells[c].edge_ids[i] = e;
            }
        }

        let centroid = |c: &Cell| {
            let p = c.vertex_ids.map(|v| vertices[v].point());
            [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
        };
        let mut edges = Vec::with_capacity(edge_verts.len());
        let mut boundary_edge_ids = Vec::new();
        let mut interior_edge_ids = Vec::new();
        for (e, (verts, (cp, cm))) in edge_verts.iter().zip(&edge_cells).enumerate() {
            let p0 = vertices[verts[0]].point();
            let p1 = vertices[verts[1]].point();
            let d = sub(p1, p0);
            let length = norm(d);
            let tangent = [d[0] / length, d[1] / length];
            let mut normal = [tangent[1], -tangent[0]];
            let mid = [0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1])];
            let out = sub(mid, centroid(&cells[*cp]));
            if normal[0] * out[0] + normal[1] * out[1] < 0.0 {
                normal = [-normal[0], -normal[1]];
            }
            if cm.is_some() {
                interior_edge_ids.push(e);
            } else {
                boundary_edge_ids.push(e);
            }
            edges.push(Edge {
                vertex_ids: *verts,
                cell_plus: *cp,
                cell_minus: *cm,
                normal,
                tangent,
                length,
            });
        }
        let h = cells.iter().map(|c| c.h).fold(0.0, f64::max);
        Ok(Mesh {
            vertices,
            cells,
            edges,
            boundary_edge_ids,
            interior_edge_ids,
            h,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_points(&self, c: usize) -> [Point; 3] {
        self.cells[c].vertex_ids.map(|v| self.vertices[v].point())
    }

    pub fn centroid(&self, c: usize) -> Point {
        let p = self.cell_points(c);
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }

    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        self.edges[e].vertex_ids.map(|v| self.vertices[v].point())
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edge_points(e);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    /// Outward unit normal of local edge `i` of cell `c`.
    pub fn outward_normal(&self, c: usize, i: usize) -> Point {
        let edge = &self.edges[self.cells[c].edge_ids[i]];
        if edge.cell_plus == c {
            edge.normal
        } else {
            [-edge.normal[0], -edge.normal[1]]
        }
    }

    pub fn h_min(&self) -> f64 {
        self.cells.iter().map(|c| c.h).fold(f64::INFINITY, f64::min)
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    /// Smallest interior angle over all cells, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| {
                let p = self.cell_points(c);
                (0..3)
                    .map(|i| {
                        let u = sub(p[(i + 1) % 3], p[i]);
                        let v = sub(p[(i + 2) % 3], p[i]);
                        let cos = (u[0] * v[0] + u[1] * v[1]) / (norm(u) * norm(v));
                        cos.clamp(-1.0, 1.0).acos()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Euler characteristic `V - E + F` (1 for a simply connected domain).
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_cells() as i64
    }

    /// Vertices lying strictly inside some edge. Empty for a conforming mesh.
    /// Quadratic in the mesh size; intended for checks on small meshes.
    pub fn hanging_vertices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (v, vert) in self.vertices.iter().enumerate() {
            let p = vert.point();
            for (e, edge) in self.edges.iter().enumerate() {
                if edge.vertex_ids.contains(&v) {
                    continue;
                }
                let [a, _] = self.edge_points(e);
                let d = sub(p, a);
                let along = d[0] * edge.tangent[0] + d[1] * edge.tangent[1];
                let across = d[0] * edge.normal[0] + d[1] * edge.normal[1];
                let tol = 1e-12 * edge.length;
                if across.abs() <= tol && along > tol && along < edge.length - tol {
                    out.push(v);
                    break;
                }
            }
        }
        out
    }

    /// Newest-vertex bisection of every marked cell, followed by the closure
    /// bisections that restore conformity.
    pub fn refine(&self, marked: &[usize]) -> Result<Mesh> {
        let mut edge_marked = vec![false; self.num_edges()];
        for &c in marked {
            let cell = self.cells.get(c).ok_or_else(|| {
                Error::InvalidArgument(format!("marked cell {c} outside 0..{}", self.num_cells()))
            })?;
            edge_marked[cell.edge_ids[cell.refinement_edge as usize]] = true;
        }
        // Closure: a cell with any marked edge must bisect its refinement edge.
        loop {
            let mut changed = false;
            for cell in &self.cells {
                let r = cell.edge_ids[cell.refinement_edge as usize];
                if !edge_marked[r] && cell.edge_ids.iter().any(|&e| edge_marked[e]) {
                    edge_marked[r] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, edge) in self.edges.iter().enumerate() {
            if edge_marked[e] {
                let [a, b] = self.edge_points(e);
                midpoint.insert(
                    edge_key(edge.vertex_ids[0], edge.vertex_ids[1]),
                    vertices.len(),
                );
                vertices.push(Vertex {
                    x: 0.5 * (a[0] + b[0]),
                    y: 0.5 * (a[1] + b[1]),
                });
            }
        }

        let mut raw = Vec::with_capacity(self.num_cells() + 2 * midpoint.len());
        for (c, cell) in self.cells.iter().enumerate() {
            bisect_recursive(
                cell.vertex_ids,
                cell.refinement_edge,
                cell.generation,
                c,
                &midpoint,
                &mut raw,
            );
        }
        Mesh::from_cells(vertices, raw)
    }

    /// Bisects every cell once.
    pub fn refine_all(&self) -> Result<Mesh> {
        let all: Vec<usize> = (0..self.num_cells()).collect();
        self.refine(&all)
    }
}

fn bisect_recursive(
    vid: [usize; 3],
    refinement_edge: u8,
    generation: u32,
    parent: usize,
    midpoint: &HashMap<(usize, usize), usize>,
    out: &mut Vec<RawCell>,
) {
    let r = refinement_edge as usize;
    let a = vid[r];
    let b = vid[(r + 1) % 3];
    let c = vid[(r + 2) % 3];
    match midpoint.get(&edge_key(b, c)) {
        None => out.push(RawCell {
            vertex_ids: vid,
            refinement_edge: Some(refinement_edge),
            parent: Some(parent),
            generation,
        }),
        Some(&m) => {
            bisect_recursive([a, b, m], 2, generation + 1, parent, midpoint, out);
            bisect_recursive([a, m, c], 1, generation + 1, parent, midpoint, out);
        }
    }
}

/// Triangulation of `(0,1)^2` into `2 n^2` congruent right triangles, each
/// square split along its `(i,j)-(i+1,j+1)` diagonal.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("unit_square_mesh needs n >= 1".into()));
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vertex {
                x: i as f64 / n as f64,
                y: j as f64 / n as f64,
            });
        }
    }
    let mut raw = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            raw.push(RawCell {
                refinement_edge: Some(1),
                ..RawCell::new([v00, v10, v11])
            });
            raw.push(RawCell {
                refinement_edge: Some(2),
                ..RawCell::new([v00, v11, v01])
            });
        }
    }
    Mesh::from_cells(vertices, raw)
}
