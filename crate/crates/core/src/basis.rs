//! Polynomial bases on cells and edges.
//!
//! A cell basis built by [`CellBasis::for_cell`] is orthonormal with respect
//! to the mean `|T|^-1 (u, v)_T`; it is stored as a lower-triangular
//! combination of monomials scaled about the centroid, so the first function
//! is the constant 1. The edge basis is the Legendre family in the edge
//! parameter.

use nalgebra::{Cholesky, DMatrix};

use crate::mesh::{Mesh, Point};
use crate::quadrature::{cell_quadrature, QuadRule};

/// Exponents `(a, b)` of the monomials `x^a y^b` with `a + b <= k`, ordered by
/// total degree.
pub fn monomial_exponents(k: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity((k + 1) * (k + 2) / 2);
    for d in 0..=k as u32 {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

pub fn cell_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Position of `x^a y^b` in [`monomial_exponents`].
pub fn monomial_index(a: u32, b: u32) -> usize {
    let d = (a + b) as usize;
    d * (d + 1) / 2 + b as usize
}

/// Values and derivatives of all basis functions at one point.
#[derive(Debug, Clone, Default)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    pub hessians: Vec<[[f64; 2]; 2]>,
}

/// Monomials `xi^a eta^b`, `a + b <= k`, in affine coordinates
/// `(xi, eta) = M (p - center)`, optionally orthonormalised.
#[derive(Debug, Clone)]
pub struct CellBasis {
    pub degree: usize,
    pub center: Point,
    /// Rows give `d xi / dp` and `d eta / dp`.
    pub map: [[f64; 2]; 2],
    exps: Vec<(u32, u32)>,
    /// `(T, T^-1)` with `psi_i = sum_j T_ij m_j`, both lower triangular;
    /// `None` for the plain monomials.
    combo: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

fn pow(x: f64, n: u32) -> f64 {
    x.powi(n as i32)
}

/// Distance from the centroid to the vertices of the reference triangle.
const REFERENCE_RADIUS: f64 = 2.0;

impl CellBasis {
    /// Scaled monomials `((x - x_c) / h)^a ((y - y_c) / h)^b`.
    pub fn new(degree: usize, center: Point, h: f64) -> Self {
        Self::with_map(degree, center, [[1.0 / h, 0.0], [0.0, 1.0 / h]])
    }

    pub fn with_map(degree: usize, center: Point, map: [[f64; 2]; 2]) -> Self {
        CellBasis {
            degree,
            center,
            map,
            exps: monomial_exponents(degree),
            combo: None,
        }
    }

    /// Basis of cell `c`, orthonormal for the mean inner product. The affine
    /// coordinates take the cell to an equilateral triangle, so the
    /// conditioning does not depend on the cell's size or shape. Falls back
    /// to plain monomials on a degenerate cell.
    pub fn for_cell(mesh: &Mesh, c: usize, degree: usize) -> Self {
        let center = mesh.centroid(c);
        let p = mesh.cell_points(c);
        let area = mesh.cells[c].area;
        let r = REFERENCE_RADIUS;
        let q1 = [-r * 0.75f64.sqrt(), -0.5 * r];
        let q2 = [r * 0.75f64.sqrt(), -0.5 * r];
        let (d1, d2) = ([p[1][0] - center[0], p[1][1] - center[1]], [p[2][0] - center[0], p[2][1] - center[1]]);
        let det = d1[0] * d2[1] - d2[0] * d1[1];
        if !(area > 0.0) || det == 0.0 {
            return Self::new(degree, center, mesh.cells[c].h.max(f64::MIN_POSITIVE));
        }
        // M [d1 d2] = [q1 q2]
        let inv = [[d2[1] / det, -d2[0] / det], [-d1[1] / det, d1[0] / det]];
        let map = [
            [q1[0] * inv[0][0] + q2[0] * inv[1][0], q1[0] * inv[0][1] + q2[0] * inv[1][1]],
            [q1[1] * inv[0][0] + q2[1] * inv[1][0], q1[1] * inv[0][1] + q2[1] * inv[1][1]],
        ];
        let mut basis = Self::with_map(degree, center, map);
        let rule = cell_quadrature(2 * degree).expect("valid exactness");
        let gram = cell_gram(&basis, &map_cell_rule(mesh, c, &rule)) / area;
        if let Some(chol) = Cholesky::new(gram) {
            let l = chol.l();
            let n = basis.dim();
            if let Some(t) = l.solve_lower_triangular(&DMatrix::identity(n, n)) {
                basis.combo = Some((t, l));
            }
        }
        basis
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exps
    }

    fn local(&self, p: Point) -> (f64, f64) {
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        (
            self.map[0][0] * dx + self.map[0][1] * dy,
            self.map[1][0] * dx + self.map[1][1] * dy,
        )
    }

    pub fn eval(&self, p: Point) -> BasisEval {
        let mut out = BasisEval::default();
        self.eval_into(p, &mut out);
        out
    }

    pub fn eval_into(&self, p: Point, out: &mut BasisEval) {
        let n = self.dim();
        out.values.resize(n, 0.0);
        out.grads.resize(n, [0.0; 2]);
        out.hessians.resize(n, [[0.0; 2]; 2]);
        let (xi, eta) = self.local(p);
        let m = &self.map;
        for (i, &(a, b)) in self.exps.iter().enumerate() {
            let (af, bf) = (a as f64, b as f64);
            let xa = pow(xi, a);
            let yb = pow(eta, b);
            let xa1 = if a >= 1 { af * pow(xi, a - 1) } else { 0.0 };
            let yb1 = if b >= 1 { bf * pow(eta, b - 1) } else { 0.0 };
            let xa2 = if a >= 2 { af * (af - 1.0) * pow(xi, a - 2) } else { 0.0 };
            let yb2 = if b >= 2 { bf * (bf - 1.0) * pow(eta, b - 2) } else { 0.0 };
            // derivatives in (xi, eta)
            let g = [xa1 * yb, xa * yb1];
            let h = [[xa2 * yb, xa1 * yb1], [xa1 * yb1, xa * yb2]];
            out.values[i] = xa * yb;
            out.grads[i] = [g[0] * m[0][0] + g[1] * m[1][0], g[0] * m[0][1] + g[1] * m[1][1]];
            for d1 in 0..2 {
                for d2 in 0..2 {
                    let mut v = 0.0;
                    for r in 0..2 {
                        for s in 0..2 {
                            v += h[r][s] * m[r][d1] * m[s][d2];
                        }
                    }
                    out.hessians[i][d1][d2] = v;
                }
            }
        }
        if let Some((t, _)) = &self.combo {
            // Descending order: row i only reads entries j <= i.
            for i in (0..n).rev() {
                let mut v = 0.0;
                let mut g = [0.0; 2];
                let mut hs = [[0.0; 2]; 2];
                for j in 0..=i {
                    let w = t[(i, j)];
                    v += w * out.values[j];
                    for a in 0..2 {
                        g[a] += w * out.grads[j][a];
                        for b in 0..2 {
                            hs[a][b] += w * out.hessians[j][a][b];
                        }
                    }
                }
                out.values[i] = v;
                out.grads[i] = g;
                out.hessians[i] = hs;
            }
        }
    }

    /// Coefficients of `d/dx_dir` of the polynomial with coefficients `coeffs`,
    /// in the same basis (the top-degree entries come out zero).
    pub fn derivative(&self, coeffs: &[f64], dir: usize) -> Vec<f64> {
        let n = self.dim();
        let mono: Vec<f64> = match &self.combo {
            Some((t, _)) => (0..n).map(|j| (j..n).map(|i| t[(i, j)] * coeffs[i]).sum()).collect(),
            None => coeffs.to_vec(),
        };
        let (sx, sy) = (self.map[0][dir], self.map[1][dir]);
        let mut out = vec![0.0; n];
        for (&c, &(a, b)) in mono.iter().zip(&self.exps) {
            if a > 0 {
                out[monomial_index(a - 1, b)] += c * a as f64 * sx;
            }
            if b > 0 {
                out[monomial_index(a, b - 1)] += c * b as f64 * sy;
            }
        }
        match &self.combo {
            // psi = T m, so monomial coefficients d map back through T^-T.
            Some((_, l)) => (0..n).map(|i| (i..n).map(|j| l[(j, i)] * out[j]).sum()).collect(),
            None => out,
        }
    }

    /// Values only.
    pub fn values(&self, p: Point, out: &mut Vec<f64>) {
        out.resize(self.dim(), 0.0);
        let (xi, eta) = self.local(p);
        for (o, &(a, b)) in out.iter_mut().zip(&self.exps) {
            *o = pow(xi, a) * pow(eta, b);
        }
        if let Some((t, _)) = &self.combo {
            for i in (0..out.len()).rev() {
                out[i] = (0..=i).map(|j| t[(i, j)] * out[j]).sum();
            }
        }
    }
}

/// Legendre polynomials `P_j(2t - 1)`, `j <= k`, in the edge parameter `t`.
#[derive(Debug, Clone)]
pub struct EdgeBasis {
    pub degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Self {
        EdgeBasis { degree }
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    /// Values at edge parameter `t` in `[0, 1]` (0 at `vertex_ids[0]`).
    pub fn values_at(&self, t: f64, out: &mut Vec<f64>) {
        out.resize(self.dim(), 0.0);
        let s = 2.0 * t - 1.0;
        out[0] = 1.0;
        if self.degree >= 1 {
            out[1] = s;
        }
        for j in 1..self.degree {
            let jf = j as f64;
            out[j + 1] = ((2.0 * jf + 1.0) * s * out[j] - jf * out[j - 1]) / (jf + 1.0);
        }
    }

    /// Parameter of point `p` on edge `e` of `mesh`.
    pub fn parameter(mesh: &Mesh, e: usize, p: Point) -> f64 {
        let [a, _] = mesh.edge_points(e);
        let edge = &mesh.edges[e];
        ((p[0] - a[0]) * edge.tangent[0] + (p[1] - a[1]) * edge.tangent[1]) / edge.length
    }
}

/// Cell quadrature mapped to physical coordinates.
#[derive(Debug, Clone)]
pub struct PhysicalQuad {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

pub fn map_cell_rule(mesh: &Mesh, c: usize, rule: &QuadRule) -> PhysicalQuad {
    let p = mesh.cell_points(c);
    let scale = 2.0 * mesh.cells[c].area;
    let points = rule
        .points
        .iter()
        .map(|l| {
            [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ]
        })
        .collect();
    PhysicalQuad {
        points,
        weights: rule.weights.iter().map(|w| w * scale).collect(),
    }
}

/// Edge quadrature mapped onto edge `e`; also returns the edge parameters.
pub fn map_edge_rule(mesh: &Mesh, e: usize, rule: &QuadRule) -> (PhysicalQuad, Vec<f64>) {
    let [a, b] = mesh.edge_points(e);
    let len = mesh.edges[e].length;
    let params: Vec<f64> = rule.points.iter().map(|p| p[0]).collect();
    let points = params
        .iter()
        .map(|&t| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
        .collect();
    (
        PhysicalQuad {
            points,
            weights: rule.weights.iter().map(|w| w * len).collect(),
        },
        params,
    )
}

/// Cell mass (Gram) matrix of the scaled monomials.
pub fn cell_gram(basis: &CellBasis, quad: &PhysicalQuad) -> DMatrix<f64> {
    let n = basis.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut v = Vec::new();
    for (p, w) in quad.points.iter().zip(&quad.weights) {
        basis.values(*p, &mut v);
        for i in 0..n {
            let wi = w * v[i];
            for j in 0..=i {
                m[(i, j)] += wi * v[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m[(j, i)] = m[(i, j)];
        }
    }
    m
}

/// Edge Gram matrix; `length` scales the unit-interval rule.
pub fn edge_gram(basis: &EdgeBasis, rule: &QuadRule, length: f64) -> DMatrix<f64> {
    let n = basis.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut v = Vec::new();
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        basis.values_at(p[0], &mut v);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += w * length * v[i] * v[j];
            }
        }
    }
    m
}
