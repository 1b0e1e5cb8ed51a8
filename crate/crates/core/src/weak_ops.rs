//! Weak functions `{v0, vb, vg}`, local L2 projections and the per-cell
//! discrete weak Hessian and weak gradient.
//!
//! The local degree-of-freedom vector of a cell is laid out as
//! `[v0 | vb(e0) vb(e1) vb(e2) | vg(e0) vg(e1) vg(e2)]`, where `e_i` is the
//! cell's local edge `i` and each `vg` block holds the x-component
//! coefficients followed by the y-component coefficients.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::basis::{cell_dim, cell_gram, edge_gram, map_cell_rule, map_edge_rule, BasisEval, CellBasis, EdgeBasis, PhysicalQuad};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{cell_quadrature, edge_quadrature, QuadRule};

/// Index layout of a cell's local degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalLayout {
    pub k: usize,
}

impl LocalLayout {
    pub fn cell_dim(&self) -> usize {
        cell_dim(self.k)
    }
    pub fn edge_dim(&self) -> usize {
        self.k + 1
    }
    pub fn len(&self) -> usize {
        self.cell_dim() + 9 * self.edge_dim()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn v0(&self, i: usize) -> usize {
        i
    }
    pub fn vb(&self, edge: usize, m: usize) -> usize {
        self.cell_dim() + edge * self.edge_dim() + m
    }
    /// `comp` 0 is the x-component, 1 the y-component.
    pub fn vg(&self, edge: usize, comp: usize, m: usize) -> usize {
        self.cell_dim() + 3 * self.edge_dim() + edge * 2 * self.edge_dim() + comp * self.edge_dim() + m
    }
}

/// Quadrature rules shared by all cells for a given degree.
#[derive(Debug, Clone)]
pub struct Rules {
    pub k: usize,
    /// Exactness `2k + 2`.
    pub cell: QuadRule,
    /// Exactness `2k + 1`.
    pub edge: QuadRule,
}

impl Rules {
    pub fn new(k: usize) -> Result<Rules> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("polynomial degree must be >= 2, got {k}")));
        }
        Ok(Rules {
            k,
            cell: cell_quadrature(2 * k + 2)?,
            edge: edge_quadrature(2 * k + 1)?,
        })
    }
}

/// An element of the weak finite element space on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakFunction {
    pub k: usize,
    /// `cell_dim(k)` coefficients per cell.
    pub v0: Vec<f64>,
    /// `k + 1` coefficients per edge.
    pub vb: Vec<f64>,
    /// `2 (k + 1)` coefficients per edge (x block, then y block).
    pub vg: Vec<f64>,
}

impl WeakFunction {
    pub fn zeros(mesh: &Mesh, k: usize) -> Self {
        WeakFunction {
            k,
            v0: vec![0.0; mesh.num_cells() * cell_dim(k)],
            vb: vec![0.0; mesh.num_edges() * (k + 1)],
            vg: vec![0.0; mesh.num_edges() * 2 * (k + 1)],
        }
    }

    pub fn num_cells(&self) -> usize {
        self.v0.len() / cell_dim(self.k)
    }

    pub fn num_edges(&self) -> usize {
        self.vb.len() / (self.k + 1)
    }

    pub fn matches(&self, mesh: &Mesh) -> bool {
        self.v0.len() == mesh.num_cells() * cell_dim(self.k)
            && self.vb.len() == mesh.num_edges() * (self.k + 1)
            && self.vg.len() == mesh.num_edges() * 2 * (self.k + 1)
    }

    pub fn cell_block(&self, c: usize) -> &[f64] {
        let n = cell_dim(self.k);
        &self.v0[c * n..(c + 1) * n]
    }

    pub fn cell_block_mut(&mut self, c: usize) -> &mut [f64] {
        let n = cell_dim(self.k);
        &mut self.v0[c * n..(c + 1) * n]
    }

    pub fn vb_block(&self, e: usize) -> &[f64] {
        let n = self.k + 1;
        &self.vb[e * n..(e + 1) * n]
    }

    pub fn vg_block(&self, e: usize) -> &[f64] {
        let n = 2 * (self.k + 1);
        &self.vg[e * n..(e + 1) * n]
    }

    /// Local degree-of-freedom vector of cell `c`.
    pub fn local_dofs(&self, mesh: &Mesh, c: usize) -> Vec<f64> {
        let layout = LocalLayout { k: self.k };
        let mut out = Vec::with_capacity(layout.len());
        out.extend_from_slice(self.cell_block(c));
        let edges = mesh.cells[c].edge_ids;
        for &e in &edges {
            out.extend_from_slice(self.vb_block(e));
        }
        for &e in &edges {
            out.extend_from_slice(self.vg_block(e));
        }
        out
    }

    /// `self - other`, component-wise.
    pub fn sub(&self, other: &WeakFunction) -> WeakFunction {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        WeakFunction {
            k: self.k,
            v0: d(&self.v0, &other.v0),
            vb: d(&self.vb, &other.vb),
            vg: d(&self.vg, &other.vg),
        }
    }

    /// Value of the interior component `v0` at `p` in cell `c`.
    pub fn eval_v0(&self, mesh: &Mesh, c: usize, p: Point) -> f64 {
        let basis = CellBasis::for_cell(mesh, c, self.k);
        let mut v = Vec::new();
        basis.values(p, &mut v);
        v.iter().zip(self.cell_block(c)).map(|(a, b)| a * b).sum()
    }
}

/// Cell-local L2 projections onto `P_k(T)`, `[P_k(T)]^2` and `[P_k(T)]^{2x2}`.
#[derive(Debug, Clone)]
pub struct Projector {
    pub basis: CellBasis,
    pub quad: PhysicalQuad,
    gram: Cholesky<f64, Dyn>,
}

impl Projector {
    pub fn new(mesh: &Mesh, c: usize, k: usize, rule: &QuadRule) -> Result<Projector> {
        let basis = CellBasis::for_cell(mesh, c, k);
        let quad = map_cell_rule(mesh, c, rule);
        let gram = Cholesky::new(cell_gram(&basis, &quad))
            .ok_or_else(|| Error::Geometry(format!("cell {c}: mass matrix is not positive definite")))?;
        Ok(Projector { basis, quad, gram })
    }

    /// Coefficients of the projection of `f` onto `P_k(T)`.
    pub fn scalar(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        let mut rhs = DVector::zeros(self.basis.dim());
        let mut v = Vec::new();
        for (p, w) in self.quad.points.iter().zip(&self.quad.weights) {
            let fv = f(*p) * w;
            self.basis.values(*p, &mut v);
            for (r, b) in rhs.iter_mut().zip(&v) {
                *r += fv * b;
            }
        }
        self.gram.solve(&rhs).as_slice().to_vec()
    }

    /// Component-wise projection of a vector field; result is `[x block, y block]`.
    pub fn vector(&self, f: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
        let mut out = self.scalar(|p| f(p)[0]);
        out.extend(self.scalar(|p| f(p)[1]));
        out
    }

    /// Component-wise projection of a matrix field; blocks ordered `xx, xy, yx, yy`.
    pub fn matrix(&self, f: impl Fn(Point) -> [[f64; 2]; 2]) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.basis.dim());
        for a in 0..2 {
            for b in 0..2 {
                out.extend(self.scalar(|p| f(p)[a][b]));
            }
        }
        out
    }
}

/// Projection of `f` onto `P_k(e)` in the edge basis.
pub fn project_edge(mesh: &Mesh, e: usize, k: usize, rule: &QuadRule, f: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
    let basis = EdgeBasis::new(k);
    let len = mesh.edges[e].length;
    let gram = Cholesky::new(edge_gram(&basis, rule, len))
        .ok_or_else(|| Error::Geometry(format!("edge {e}: mass matrix is not positive definite")))?;
    let (quad, params) = map_edge_rule(mesh, e, rule);
    let mut rhs = DVector::zeros(basis.dim());
    let mut v = Vec::new();
    for ((p, w), t) in quad.points.iter().zip(&quad.weights).zip(&params) {
        basis.values_at(*t, &mut v);
        let fv = f(*p) * w;
        for (r, b) in rhs.iter_mut().zip(&v) {
            *r += fv * b;
        }
    }
    Ok(gram.solve(&rhs).as_slice().to_vec())
}

/// `Q_h u = {Q_0 u, Q_b u, Q_g grad u}`, with all moments integrated at
/// exactness `2k + 2`.
pub fn embed_exact(
    mesh: &Mesh,
    k: usize,
    u: impl Fn(Point) -> f64 + Sync,
    grad: impl Fn(Point) -> [f64; 2] + Sync,
) -> Result<WeakFunction> {
    let cell_rule = cell_quadrature(2 * k + 2)?;
    let edge_rule = edge_quadrature(2 * k + 2)?;
    let mut w = WeakFunction::zeros(mesh, k);
    let blocks = crate::par::map_collect(mesh.num_cells(), |c| {
        Projector::new(mesh, c, k, &cell_rule).map(|p| p.scalar(&u))
    });
    for (c, b) in blocks.into_iter().enumerate() {
        w.cell_block_mut(c).copy_from_slice(&b?);
    }
    let ne = k + 1;
    for e in 0..mesh.num_edges() {
        let vb = project_edge(mesh, e, k, &edge_rule, &u)?;
        w.vb[e * ne..(e + 1) * ne].copy_from_slice(&vb);
        let gx = project_edge(mesh, e, k, &edge_rule, |p| grad(p)[0])?;
        let gy = project_edge(mesh, e, k, &edge_rule, |p| grad(p)[1])?;
        w.vg[e * 2 * ne..e * 2 * ne + ne].copy_from_slice(&gx);
        w.vg[e * 2 * ne + ne..(e + 1) * 2 * ne].copy_from_slice(&gy);
    }
    Ok(w)
}

/// Per-cell matrices taking local degrees of freedom to the coefficients of
/// the weak Hessian (`4 * dim` rows, blocks `xx, xy, yx, yy`) and the weak
/// gradient (`2 * dim` rows, blocks `x, y`) in the cell basis.
///
/// `trace` maps `v0` to the edge degrees of freedom of `{v0, v0|e, grad v0|e}`
/// and `hess0`, `grad0` give the strong derivatives of `v0`; the apply
/// methods use them to act on `vb - v0|e` and `vg - grad v0|e`, which keeps
/// round-off small when `v` is close to an embedded polynomial.
#[derive(Debug, Clone)]
pub struct LocalOperators {
    pub cell: usize,
    pub layout: LocalLayout,
    pub basis: CellBasis,
    pub gram: DMatrix<f64>,
    pub dw2: DMatrix<f64>,
    pub gw: DMatrix<f64>,
    pub trace: DMatrix<f64>,
    pub hess0: DMatrix<f64>,
    pub grad0: DMatrix<f64>,
}

/// Trace data on one local edge of a cell: physical quadrature, edge-basis
/// values and cell-basis evaluations at each point.
pub(crate) struct EdgeTrace {
    pub normal: Point,
    pub quad: PhysicalQuad,
    pub edge_values: Vec<Vec<f64>>,
    pub cell_evals: Vec<BasisEval>,
}

pub(crate) fn edge_traces(mesh: &Mesh, c: usize, basis: &CellBasis, rule: &QuadRule) -> [EdgeTrace; 3] {
    let eb = EdgeBasis::new(basis.degree);
    [0, 1, 2].map(|l| {
        let e = mesh.cells[c].edge_ids[l];
        let (quad, params) = map_edge_rule(mesh, e, rule);
        let edge_values = params
            .iter()
            .map(|&t| {
                let mut v = Vec::new();
                eb.values_at(t, &mut v);
                v
            })
            .collect();
        let cell_evals = quad.points.iter().map(|p| basis.eval(*p)).collect();
        EdgeTrace {
            normal: mesh.outward_normal(c, l),
            quad,
            edge_values,
            cell_evals,
        }
    })
}

impl LocalOperators {
    pub fn build(mesh: &Mesh, c: usize, rules: &Rules) -> Result<LocalOperators> {
        let k = rules.k;
        if mesh.cells[c].area <= 0.0 {
            return Err(Error::Geometry(format!("cell {c} has non-positive area")));
        }
        let layout = LocalLayout { k };
        let basis = CellBasis::for_cell(mesh, c, k);
        let quad = map_cell_rule(mesh, c, &rules.cell);
        let nk = basis.dim();
        let ne = layout.edge_dim();
        let nloc = layout.len();
        let gram = cell_gram(&basis, &quad);
        let chol = Cholesky::new(gram.clone())
            .ok_or_else(|| Error::Geometry(format!("cell {c}: mass matrix is not positive definite")))?;

        let mut rh = DMatrix::<f64>::zeros(4 * nk, nloc);
        let mut rg = DMatrix::<f64>::zeros(2 * nk, nloc);

        // (v0, div div phi~) and -(v0, div q)
        let mut ev = BasisEval::default();
        for (p, w) in quad.points.iter().zip(&quad.weights) {
            basis.eval_into(*p, &mut ev);
            for j in 0..nk {
                for i in 0..nk {
                    let wi = w * ev.values[i];
                    for a in 0..2 {
                        for b in 0..2 {
                            rh[((2 * a + b) * nk + j, layout.v0(i))] += wi * ev.hessians[j][a][b];
                        }
                        rg[(a * nk + j, layout.v0(i))] -= wi * ev.grads[j][a];
                    }
                }
            }
        }

        // -<vb, (div phi~).n> + <vg, phi~ n>   and   <vb, q.n>
        let mut trace = DMatrix::<f64>::zeros(9 * ne, nk);
        for (l, tr) in edge_traces(mesh, c, &basis, &rules.edge).iter().enumerate() {
            let mut egram = DMatrix::<f64>::zeros(ne, ne);
            let mut moments = DMatrix::<f64>::zeros(ne, 3 * nk);
            for q in 0..tr.quad.points.len() {
                let (w, psi, ev) = (tr.quad.weights[q], &tr.edge_values[q], &tr.cell_evals[q]);
                for m in 0..ne {
                    for r in 0..ne {
                        egram[(m, r)] += w * psi[m] * psi[r];
                    }
                    for i in 0..nk {
                        moments[(m, i)] += w * psi[m] * ev.values[i];
                        moments[(m, nk + i)] += w * psi[m] * ev.grads[i][0];
                        moments[(m, 2 * nk + i)] += w * psi[m] * ev.grads[i][1];
                    }
                }
            }
            let proj = Cholesky::new(egram)
                .ok_or_else(|| Error::Geometry(format!("cell {c}: edge mass matrix is not positive definite")))?
                .solve(&moments);
            for m in 0..ne {
                for i in 0..nk {
                    trace[(layout.vb(l, m) - nk, i)] = proj[(m, i)];
                    trace[(layout.vg(l, 0, m) - nk, i)] = proj[(m, nk + i)];
                    trace[(layout.vg(l, 1, m) - nk, i)] = proj[(m, 2 * nk + i)];
                }
            }
            let n = tr.normal;
            for q in 0..tr.quad.points.len() {
                let w = tr.quad.weights[q];
                let psi = &tr.edge_values[q];
                let ev = &tr.cell_evals[q];
                for j in 0..nk {
                    for m in 0..ne {
                        let wp = w * psi[m];
                        for a in 0..2 {
                            for b in 0..2 {
                                let row = (2 * a + b) * nk + j;
                                rh[(row, layout.vb(l, m))] -= wp * ev.grads[j][b] * n[a];
                                rh[(row, layout.vg(l, a, m))] += wp * ev.values[j] * n[b];
                            }
                            rg[(a * nk + j, layout.vb(l, m))] += wp * ev.values[j] * n[a];
                        }
                    }
                }
            }
        }

        let solve_blocks = |rhs: &DMatrix<f64>, blocks: usize| {
            let mut out = DMatrix::zeros(blocks * nk, nloc);
            for blk in 0..blocks {
                let sol = chol.solve(&rhs.rows(blk * nk, nk).into_owned());
                out.rows_mut(blk * nk, nk).copy_from(&sol);
            }
            out
        };
        let dw2 = solve_blocks(&rh, 4);
        let gw = solve_blocks(&rg, 2);

        let mut hess0 = DMatrix::<f64>::zeros(4 * nk, nk);
        let mut grad0 = DMatrix::<f64>::zeros(2 * nk, nk);
        for i in 0..nk {
            let mut unit = vec![0.0; nk];
            unit[i] = 1.0;
            for a in 0..2 {
                let da = basis.derivative(&unit, a);
                grad0.view_mut((a * nk, i), (nk, 1)).copy_from_slice(&da);
                for b in 0..2 {
                    let dab = basis.derivative(&da, b);
                    hess0.view_mut(((2 * a + b) * nk, i), (nk, 1)).copy_from_slice(&dab);
                }
            }
        }
        Ok(LocalOperators {
            cell: c,
            layout,
            basis,
            gram,
            dw2,
            gw,
            trace,
            hess0,
            grad0,
        })
    }

    fn check_len(&self, dofs: &[f64]) -> Result<()> {
        if dofs.len() != self.layout.len() {
            return Err(Error::Contract(format!(
                "cell {}: expected {} local dofs, got {}",
                self.cell,
                self.layout.len(),
                dofs.len()
            )));
        }
        Ok(())
    }

    /// Splits `dofs` into `v0` and the edge residual `{vb - v0|e, vg - grad v0|e}`.
    fn split(&self, dofs: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_len(dofs)?;
        let nk = self.layout.cell_dim();
        let v0 = DVector::from_column_slice(&dofs[..nk]);
        let rest = DVector::from_column_slice(&dofs[nk..]) - &self.trace * &v0;
        Ok((v0, rest))
    }

    /// Coefficients of `D2_w v` (blocks `xx, xy, yx, yy`).
    pub fn apply_weak_hessian(&self, dofs: &[f64]) -> Result<Vec<f64>> {
        let (v0, rest) = self.split(dofs)?;
        let nk = v0.len();
        let out = &self.hess0 * v0 + self.dw2.columns(nk, rest.len()) * rest;
        Ok(out.as_slice().to_vec())
    }

    /// Coefficients of `grad_w v` (blocks `x, y`).
    pub fn apply_weak_gradient(&self, dofs: &[f64]) -> Result<Vec<f64>> {
        let (v0, rest) = self.split(dofs)?;
        let nk = v0.len();
        let out = &self.grad0 * v0 + self.gw.columns(nk, rest.len()) * rest;
        Ok(out.as_slice().to_vec())
    }
}

/// Builds local operators for every cell, in cell order.
pub fn build_all(mesh: &Mesh, rules: &Rules) -> Result<Vec<LocalOperators>> {
    crate::par::map_collect(mesh.num_cells(), |c| LocalOperators::build(mesh, c, rules))
        .into_iter()
        .collect()
}

/// Evaluates a polynomial field given as `blocks` consecutive coefficient
/// blocks at a point whose basis evaluation is `ev`.
pub(crate) fn eval_blocks<const N: usize>(coeffs: &[f64], values: &[f64]) -> [f64; N] {
    let nk = values.len();
    std::array::from_fn(|b| coeffs[b * nk..(b + 1) * nk].iter().zip(values).map(|(c, v)| c * v).sum())
}
