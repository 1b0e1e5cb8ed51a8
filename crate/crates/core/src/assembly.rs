//! Global system of the weak Galerkin scheme
//! `B_h(u, v) + A_h(u, v) = (f, v0)` on the homogeneous clamped space.
//!
//! Edge gradient unknowns are stored in each edge's `(normal, tangent)`
//! frame, so the boundary constraint `vg . n = 0` is a plain deletion of the
//! normal block on boundary edges.

use nalgebra::{DMatrix, DVector};

use crate::basis::{cell_dim, map_cell_rule, BasisEval};
use crate::error::{Error, Result};
use crate::linsolve::SparseMatrix;
use crate::mesh::{Mesh, Point};
use crate::weak_ops::{edge_traces, LocalLayout, LocalOperators, Rules, WeakFunction};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Also constrain the tangential component of `vg` on boundary edges.
    pub pin_tangential: bool,
}

/// Raw layout: per-cell `v0` blocks, then per edge `[vb | vg.n | vg.t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub k: usize,
    pub num_cells: usize,
    pub num_edges: usize,
    /// Raw index to free index (`None` if eliminated).
    pub free_of_raw: Vec<Option<usize>>,
    pub raw_of_free: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, k: usize, opts: AssemblyOptions) -> DofMap {
        let nk = cell_dim(k);
        let ne = k + 1;
        let raw = mesh.num_cells() * nk + mesh.num_edges() * 3 * ne;
        let mut fixed = vec![false; raw];
        let base = mesh.num_cells() * nk;
        for &e in &mesh.boundary_edge_ids {
            let off = base + e * 3 * ne;
            let upto = if opts.pin_tangential { 3 * ne } else { 2 * ne };
            fixed[off..off + upto].iter_mut().for_each(|f| *f = true);
        }
        let mut free_of_raw = vec![None; raw];
        let mut raw_of_free = Vec::with_capacity(raw);
        for (i, f) in fixed.iter().enumerate() {
            if !f {
                free_of_raw[i] = Some(raw_of_free.len());
                raw_of_free.push(i);
            }
        }
        DofMap {
            k,
            num_cells: mesh.num_cells(),
            num_edges: mesh.num_edges(),
            free_of_raw,
            raw_of_free,
        }
    }

    pub fn raw_count(&self) -> usize {
        self.free_of_raw.len()
    }

    pub fn free_count(&self) -> usize {
        self.raw_of_free.len()
    }

    pub fn cell_offset(&self, c: usize) -> usize {
        c * cell_dim(self.k)
    }

    pub fn vb_offset(&self, e: usize) -> usize {
        self.num_cells * cell_dim(self.k) + e * 3 * (self.k + 1)
    }

    pub fn normal_offset(&self, e: usize) -> usize {
        self.vb_offset(e) + self.k + 1
    }

    pub fn tangent_offset(&self, e: usize) -> usize {
        self.vb_offset(e) + 2 * (self.k + 1)
    }

    /// Raw indices of a cell's local dofs, with each `vg` x/y pair replaced
    /// by the edge's normal/tangent unknowns.
    pub fn local_raw_indices(&self, mesh: &Mesh, c: usize) -> Vec<usize> {
        let layout = LocalLayout { k: self.k };
        let ne = self.k + 1;
        let mut idx = vec![0; layout.len()];
        for i in 0..cell_dim(self.k) {
            idx[layout.v0(i)] = self.cell_offset(c) + i;
        }
        for (l, &e) in mesh.cells[c].edge_ids.iter().enumerate() {
            for m in 0..ne {
                idx[layout.vb(l, m)] = self.vb_offset(e) + m;
                idx[layout.vg(l, 0, m)] = self.normal_offset(e) + m;
                idx[layout.vg(l, 1, m)] = self.tangent_offset(e) + m;
            }
        }
        idx
    }

    fn check(&self, mesh: &Mesh, w: &WeakFunction) -> Result<()> {
        if w.k != self.k || !w.matches(mesh) || mesh.num_cells() != self.num_cells || mesh.num_edges() != self.num_edges {
            return Err(Error::Contract("weak function does not belong to this mesh/degree".into()));
        }
        Ok(())
    }

    /// Expands a free vector (eliminated entries zero) into a weak function.
    pub fn to_weak(&self, mesh: &Mesh, free: &[f64]) -> Result<WeakFunction> {
        if free.len() != self.free_count() {
            return Err(Error::Contract(format!("expected {} free dofs, got {}", self.free_count(), free.len())));
        }
        let mut raw = vec![0.0; self.raw_count()];
        for (f, &r) in self.raw_of_free.iter().enumerate() {
            raw[r] = free[f];
        }
        Ok(self.raw_to_weak(mesh, &raw))
    }

    /// Like [`DofMap::to_weak`], with eliminated entries taken from `fixed`
    /// (a raw vector).
    pub fn to_weak_lifted(&self, mesh: &Mesh, free: &[f64], fixed: &[f64]) -> Result<WeakFunction> {
        if free.len() != self.free_count() || fixed.len() != self.raw_count() {
            return Err(Error::Contract("free or fixed vector has the wrong length".into()));
        }
        let mut raw = fixed.to_vec();
        for (f, &r) in self.raw_of_free.iter().enumerate() {
            raw[r] = free[f];
        }
        Ok(self.raw_to_weak(mesh, &raw))
    }

    fn raw_to_weak(&self, mesh: &Mesh, raw: &[f64]) -> WeakFunction {
        let nk = cell_dim(self.k);
        let ne = self.k + 1;
        let mut w = WeakFunction::zeros(mesh, self.k);
        w.v0.copy_from_slice(&raw[..self.num_cells * nk]);
        for (e, edge) in mesh.edges.iter().enumerate() {
            let (n, t) = (edge.normal, edge.tangent);
            for m in 0..ne {
                w.vb[e * ne + m] = raw[self.vb_offset(e) + m];
                let gn = raw[self.normal_offset(e) + m];
                let gt = raw[self.tangent_offset(e) + m];
                w.vg[e * 2 * ne + m] = n[0] * gn + t[0] * gt;
                w.vg[e * 2 * ne + ne + m] = n[1] * gn + t[1] * gt;
            }
        }
        w
    }

    /// Free coefficients of `w`; eliminated components are dropped.
    pub fn to_free(&self, mesh: &Mesh, w: &WeakFunction) -> Result<Vec<f64>> {
        let raw = self.to_raw(mesh, w)?;
        Ok(self.raw_of_free.iter().map(|&r| raw[r]).collect())
    }

    /// All coefficients of `w` in the raw layout.
    pub fn to_raw(&self, mesh: &Mesh, w: &WeakFunction) -> Result<Vec<f64>> {
        self.check(mesh, w)?;
        let nk = cell_dim(self.k);
        let ne = self.k + 1;
        let mut raw = vec![0.0; self.raw_count()];
        raw[..self.num_cells * nk].copy_from_slice(&w.v0);
        for (e, edge) in mesh.edges.iter().enumerate() {
            let (n, t) = (edge.normal, edge.tangent);
            for m in 0..ne {
                raw[self.vb_offset(e) + m] = w.vb[e * ne + m];
                let gx = w.vg[e * 2 * ne + m];
                let gy = w.vg[e * 2 * ne + ne + m];
                raw[self.normal_offset(e) + m] = gx * n[0] + gy * n[1];
                raw[self.tangent_offset(e) + m] = gx * t[0] + gy * t[1];
            }
        }
        Ok(raw)
    }
}

/// Stabiliser pieces of one cell: `grad` is `<grad u0 - ug, grad v0 - vg>_dT`
/// and `value` is `<u0 - ub, v0 - vb>_dT`, both as local matrices.
#[derive(Debug, Clone)]
pub struct StabilizerMatrices {
    pub grad: DMatrix<f64>,
    pub value: DMatrix<f64>,
}

pub fn stabilizer_matrices(mesh: &Mesh, ops: &LocalOperators, rules: &Rules) -> StabilizerMatrices {
    let layout = ops.layout;
    let nloc = layout.len();
    let nk = layout.cell_dim();
    let ne = layout.edge_dim();
    let mut grad = DMatrix::zeros(nloc, nloc);
    let mut value = DMatrix::zeros(nloc, nloc);
    let mut row = vec![0.0; nloc];
    let mut rows = [vec![0.0; nloc], vec![0.0; nloc]];
    for (l, tr) in edge_traces(mesh, ops.cell, &ops.basis, &rules.edge).iter().enumerate() {
        for q in 0..tr.quad.points.len() {
            let w = tr.quad.weights[q];
            let ev = &tr.cell_evals[q];
            let psi = &tr.edge_values[q];
            row.iter_mut().for_each(|x| *x = 0.0);
            for r in rows.iter_mut() {
                r.iter_mut().for_each(|x| *x = 0.0);
            }
            for i in 0..nk {
                row[layout.v0(i)] = ev.values[i];
                rows[0][layout.v0(i)] = ev.grads[i][0];
                rows[1][layout.v0(i)] = ev.grads[i][1];
            }
            for m in 0..ne {
                row[layout.vb(l, m)] = -psi[m];
                rows[0][layout.vg(l, 0, m)] = -psi[m];
                rows[1][layout.vg(l, 1, m)] = -psi[m];
            }
            accumulate_outer(&mut value, &row, w);
            accumulate_outer(&mut grad, &rows[0], w);
            accumulate_outer(&mut grad, &rows[1], w);
        }
    }
    StabilizerMatrices { grad, value }
}

fn accumulate_outer(m: &mut DMatrix<f64>, r: &[f64], w: f64) {
    let nz: Vec<usize> = (0..r.len()).filter(|&i| r[i] != 0.0).collect();
    for &i in &nz {
        let wi = w * r[i];
        for &j in &nz {
            m[(i, j)] += wi * r[j];
        }
    }
}

/// Per-cell pieces of the bilinear forms, each a local matrix.
#[derive(Debug, Clone)]
pub struct ElementMatrices {
    /// `(D2_w u, D2_w v)_T`
    pub hessian: DMatrix<f64>,
    /// `(grad_w u, grad_w v)_T`
    pub gradient: DMatrix<f64>,
    pub stab: StabilizerMatrices,
    pub h: f64,
}

impl ElementMatrices {
    pub fn build(mesh: &Mesh, ops: &LocalOperators, rules: &Rules) -> ElementMatrices {
        let nk = ops.layout.cell_dim();
        let gram_blocks = |op: &DMatrix<f64>, blocks: usize| {
            let mut out = DMatrix::zeros(op.ncols(), op.ncols());
            for b in 0..blocks {
                let blk = op.rows(b * nk, nk);
                out += blk.transpose() * &ops.gram * blk;
            }
            out
        };
        ElementMatrices {
            hessian: gram_blocks(&ops.dw2, 4),
            gradient: gram_blocks(&ops.gw, 2),
            stab: stabilizer_matrices(mesh, ops, rules),
            h: mesh.cells[ops.cell].h,
        }
    }

    /// Coefficients `(eps^2 h^-1, eps^2 h^-3)` of `S1` and `(h, h^-1)` of `S2`
    /// applied to the gradient/value stabiliser matrices.
    pub fn s1_weights(&self, eps: f64) -> (f64, f64) {
        (eps * eps / self.h, eps * eps / self.h.powi(3))
    }

    pub fn s2_weights(&self) -> (f64, f64) {
        (self.h, 1.0 / self.h)
    }

    pub fn stiffness(&self, eps: f64) -> DMatrix<f64> {
        let (a1, b1) = self.s1_weights(eps);
        let (a2, b2) = self.s2_weights();
        &self.hessian * (eps * eps) + &self.gradient + &self.stab.grad * (a1 + a2) + &self.stab.value * (b1 + b2)
    }
}

/// Energy contributions of `(u, v)`:
/// `[eps^2 (D2_w u, D2_w v), (grad_w u, grad_w v), S1(u, v), S2(u, v)]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyProducts {
    pub b: f64,
    pub a: f64,
    pub s1: f64,
    pub s2: f64,
}

impl EnergyProducts {
    pub fn total(&self) -> f64 {
        self.b + self.a + self.s1 + self.s2
    }
}

/// Cell-local energy products of two local dof vectors.
pub fn cell_energy(mesh: &Mesh, ops: &LocalOperators, rules: &Rules, u: &[f64], v: &[f64], eps: f64) -> EnergyProducts {
    let nk = ops.layout.cell_dim();
    let du = &ops.dw2 * DVector::from_column_slice(u);
    let dv = &ops.dw2 * DVector::from_column_slice(v);
    let gu = &ops.gw * DVector::from_column_slice(u);
    let gv = &ops.gw * DVector::from_column_slice(v);
    let blocks = |x: &DVector<f64>, y: &DVector<f64>, n: usize| {
        (0..n)
            .map(|b| {
                let xb = x.rows(b * nk, nk);
                let yb = y.rows(b * nk, nk);
                (xb.transpose() * &ops.gram * yb)[(0, 0)]
            })
            .sum::<f64>()
    };
    let h = mesh.cells[ops.cell].h;
    let (sg, sv) = stabilizer_pair(mesh, ops, rules, u, v);
    EnergyProducts {
        b: eps * eps * blocks(&du, &dv, 4),
        a: blocks(&gu, &gv, 2),
        s1: eps * eps * (sg / h + sv / h.powi(3)),
        s2: h * sg + sv / h,
    }
}

/// `(<grad u0 - ug, grad v0 - vg>_dT, <u0 - ub, v0 - vb>_dT)` for local dof vectors.
pub fn stabilizer_pair(mesh: &Mesh, ops: &LocalOperators, rules: &Rules, u: &[f64], v: &[f64]) -> (f64, f64) {
    let layout = ops.layout;
    let nk = layout.cell_dim();
    let ne = layout.edge_dim();
    let mut sg = 0.0;
    let mut sv = 0.0;
    let traces = |x: &[f64], ev: &BasisEval, psi: &[f64], l: usize| {
        let mut val = 0.0;
        let mut g = [0.0; 2];
        for i in 0..nk {
            val += x[i] * ev.values[i];
            g[0] += x[i] * ev.grads[i][0];
            g[1] += x[i] * ev.grads[i][1];
        }
        for m in 0..ne {
            val -= x[layout.vb(l, m)] * psi[m];
            g[0] -= x[layout.vg(l, 0, m)] * psi[m];
            g[1] -= x[layout.vg(l, 1, m)] * psi[m];
        }
        (val, g)
    };
    for (l, tr) in edge_traces(mesh, ops.cell, &ops.basis, &rules.edge).iter().enumerate() {
        for q in 0..tr.quad.points.len() {
            let w = tr.quad.weights[q];
            let (uv, ug) = traces(u, &tr.cell_evals[q], &tr.edge_values[q], l);
            let (vv, vg) = traces(v, &tr.cell_evals[q], &tr.edge_values[q], l);
            sv += w * uv * vv;
            sg += w * (ug[0] * vg[0] + ug[1] * vg[1]);
        }
    }
    (sg, sv)
}

/// Assembled scheme on the free degrees of freedom.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub k: usize,
    pub eps: f64,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub dof_map: DofMap,
    pub rules: Rules,
    pub ops: Vec<LocalOperators>,
    /// Raw values of the eliminated unknowns (all zero without boundary data).
    pub fixed: Vec<f64>,
}

fn rotation(mesh: &Mesh, c: usize, layout: LocalLayout) -> DMatrix<f64> {
    let mut r = DMatrix::identity(layout.len(), layout.len());
    for (l, &e) in mesh.cells[c].edge_ids.iter().enumerate() {
        let (n, t) = (mesh.edges[e].normal, mesh.edges[e].tangent);
        for m in 0..layout.edge_dim() {
            let (gx, gy) = (layout.vg(l, 0, m), layout.vg(l, 1, m));
            r[(gx, gx)] = n[0];
            r[(gx, gy)] = t[0];
            r[(gy, gx)] = n[1];
            r[(gy, gy)] = t[1];
        }
    }
    r
}

pub fn assemble(mesh: &Mesh, k: usize, eps: f64, f: impl Fn(Point) -> f64 + Sync) -> Result<AssembledSystem> {
    assemble_with(mesh, k, eps, f, AssemblyOptions::default())
}

pub fn assemble_with(
    mesh: &Mesh,
    k: usize,
    eps: f64,
    f: impl Fn(Point) -> f64 + Sync,
    opts: AssemblyOptions,
) -> Result<AssembledSystem> {
    assemble_lifted(mesh, k, eps, f, opts, None)
}

/// Assembly with inhomogeneous boundary values: the eliminated unknowns take
/// their values from `boundary` and are moved to the right-hand side.
pub fn assemble_lifted(
    mesh: &Mesh,
    k: usize,
    eps: f64,
    f: impl Fn(Point) -> f64 + Sync,
    opts: AssemblyOptions,
    boundary: Option<&WeakFunction>,
) -> Result<AssembledSystem> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("eps must be positive and finite, got {eps}")));
    }
    let rules = Rules::new(k)?;
    let dof_map = DofMap::new(mesh, k, opts);
    let fixed = match boundary {
        Some(g) => {
            let mut raw = dof_map.to_raw(mesh, g)?;
            for &r in &dof_map.raw_of_free {
                raw[r] = 0.0;
            }
            raw
        }
        None => vec![0.0; dof_map.raw_count()],
    };
    let layout = LocalLayout { k };
    let nk = cell_dim(k);

    let per_cell = crate::par::map_collect(mesh.num_cells(), |c| -> Result<_> {
        let ops = LocalOperators::build(mesh, c, &rules)?;
        let em = ElementMatrices::build(mesh, &ops, &rules);
        let r = rotation(mesh, c, layout);
        let kt = r.transpose() * em.stiffness(eps) * &r;
        let kt = (&kt + kt.transpose()) * 0.5;
        let quad = map_cell_rule(mesh, c, &rules.cell);
        let mut load = vec![0.0; nk];
        let mut v = Vec::new();
        for (p, w) in quad.points.iter().zip(&quad.weights) {
            let fw = f(*p) * w;
            ops.basis.values(*p, &mut v);
            for (l, b) in load.iter_mut().zip(&v) {
                *l += fw * b;
            }
        }
        Ok((ops, kt, load))
    });

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; dof_map.free_count()];
    let mut ops_all = Vec::with_capacity(mesh.num_cells());
    for (c, item) in per_cell.into_iter().enumerate() {
        let (ops, kt, load) = item?;
        let raw_idx = dof_map.local_raw_indices(mesh, c);
        let idx: Vec<Option<usize>> = raw_idx.iter().map(|&r| dof_map.free_of_raw[r]).collect();
        for i in 0..layout.len() {
            let Some(gi) = idx[i] else { continue };
            for j in 0..layout.len() {
                match idx[j] {
                    Some(gj) => triplets.push((gi, gj, kt[(i, j)])),
                    None => rhs[gi] -= kt[(i, j)] * fixed[raw_idx[j]],
                }
            }
        }
        for (i, l) in load.iter().enumerate() {
            if let Some(gi) = idx[layout.v0(i)] {
                rhs[gi] += l;
            }
        }
        ops_all.push(ops);
    }
    Ok(AssembledSystem {
        k,
        eps,
        matrix: SparseMatrix::from_triplets(dof_map.free_count(), triplets),
        rhs,
        dof_map,
        rules,
        ops: ops_all,
        fixed,
    })
}

impl AssembledSystem {
    /// `B_h(u, v) + A_h(u, v)` split into its four contributions. Works on
    /// the full space (no boundary conditions needed).
    pub fn energy_products(&self, mesh: &Mesh, u: &WeakFunction, v: &WeakFunction) -> Result<EnergyProducts> {
        energy_products(mesh, &self.ops, &self.rules, u, v, self.eps)
    }

    /// Weak function from a solution on the free unknowns, boundary values
    /// included.
    pub fn expand(&self, mesh: &Mesh, free: &[f64]) -> Result<WeakFunction> {
        self.dof_map.to_weak_lifted(mesh, free, &self.fixed)
    }

    pub fn cells(&self) -> usize {
        self.ops.len()
    }
}

pub fn energy_products(
    mesh: &Mesh,
    ops: &[LocalOperators],
    rules: &Rules,
    u: &WeakFunction,
    v: &WeakFunction,
    eps: f64,
) -> Result<EnergyProducts> {
    if ops.len() != mesh.num_cells() || !u.matches(mesh) || !v.matches(mesh) || u.k != rules.k || v.k != rules.k {
        return Err(Error::Contract("functions and operators belong to different meshes".into()));
    }
    let parts = crate::par::map_collect(mesh.num_cells(), |c| {
        cell_energy(mesh, &ops[c], rules, &u.local_dofs(mesh, c), &v.local_dofs(mesh, c), eps)
    });
    Ok(parts.iter().fold(EnergyProducts::default(), |acc, p| EnergyProducts {
        b: acc.b + p.b,
        a: acc.a + p.a,
        s1: acc.s1 + p.s1,
        s2: acc.s2 + p.s2,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::solve_spd;
    use crate::mesh::unit_square_mesh;
    use crate::weak_ops::embed_exact;
    use rand::{Rng, SeedableRng};

    #[test]
    fn lifted_boundary_data_reproduces_quadratic() {
        // u = x^2 - xy + y, Δu = 2, Δ²u = 0
        let mesh = unit_square_mesh(3).unwrap();
        let u = |p: Point| p[0] * p[0] - p[0] * p[1] + p[1];
        let g = |p: Point| [2.0 * p[0] - p[1], 1.0 - p[0]];
        let exact = embed_exact(&mesh, 2, u, g).unwrap();
        let opts = AssemblyOptions { pin_tangential: true };
        let sys = assemble_lifted(&mesh, 2, 0.5, |_| -2.0, opts, Some(&exact)).unwrap();
        let sol = solve_spd(&sys.matrix, &sys.rhs).unwrap();
        let w = sys.expand(&mesh, &sol.solution).unwrap();
        let diff = w.sub(&exact);
        let worst = diff.v0.iter().chain(&diff.vb).chain(&diff.vg).fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn dof_counts_on_split_square() {
        let mesh = unit_square_mesh(1).unwrap();
        let sys = assemble(&mesh, 2, 1.0, |_| 1.0).unwrap();
        assert_eq!(sys.dof_map.raw_count(), 57);
        assert_eq!(sys.dof_map.free_count(), 33);
        let pinned = DofMap::new(&mesh, 2, AssemblyOptions { pin_tangential: true });
        assert_eq!(pinned.free_count(), 57 - 36);
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let mesh = unit_square_mesh(2).unwrap();
        let sys = assemble(&mesh, 2, 1.0, |_| 0.0).unwrap();
        assert!(sys.rhs.iter().all(|&v| v == 0.0));
        let sol = solve_spd(&sys.matrix, &sys.rhs).unwrap();
        assert!(sol.solution.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_eps() {
        let mesh = unit_square_mesh(1).unwrap();
        assert!(matches!(assemble(&mesh, 2, 0.0, |_| 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(assemble(&mesh, 2, -1.0, |_| 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(assemble(&mesh, 1, 1.0, |_| 1.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn stabilisers_vanish_on_conforming_embeds() {
        // x(1-x)y(1-y) is quartic, so its projection has matching traces for k = 4
        let mesh = unit_square_mesh(2).unwrap();
        let sys = assemble(&mesh, 4, 1.0, |_| 0.0).unwrap();
        let u = |p: Point| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]);
        let g = |p: Point| [(1.0 - 2.0 * p[0]) * p[1] * (1.0 - p[1]), p[0] * (1.0 - p[0]) * (1.0 - 2.0 * p[1])];
        let w = embed_exact(&mesh, 4, u, g).unwrap();
        let e = sys.energy_products(&mesh, &w, &w).unwrap();
        assert!(e.s1.abs() < 1e-20 && e.s2.abs() < 1e-20, "{e:?}");
        assert!(e.a > 0.0);

        let sys2 = assemble(&mesh, 2, 1.0, |_| 0.0).unwrap();
        let w = embed_exact(&mesh, 2, |p| p[0] * p[0] - 2.0 * p[0] * p[1], |p| [2.0 * p[0] - 2.0 * p[1], -2.0 * p[0]]).unwrap();
        let e = sys2.energy_products(&mesh, &w, &w).unwrap();
        assert!(e.s1.abs() < 1e-20 && e.s2.abs() < 1e-20, "{e:?}");

        let zero = WeakFunction::zeros(&mesh, 2);
        assert_eq!(sys2.energy_products(&mesh, &zero, &zero).unwrap(), EnergyProducts::default());
    }

    #[test]
    fn quadratic_form_matches_energy_products() {
        let mesh = unit_square_mesh(2).unwrap();
        let sys = assemble(&mesh, 2, 0.3, |_| 0.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let x: Vec<f64> = (0..sys.dof_map.free_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..sys.dof_map.free_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (wx, wy) = (sys.dof_map.to_weak(&mesh, &x).unwrap(), sys.dof_map.to_weak(&mesh, &y).unwrap());
            let e = sys.energy_products(&mesh, &wx, &wy).unwrap().total();
            let q = sys.matrix.quadratic_form(&x, &y);
            assert!((e - q).abs() <= 1e-10 * q.abs().max(1.0), "{e} vs {q}");
            assert_eq!(sys.dof_map.to_free(&mesh, &wx).unwrap().len(), x.len());
            let back = sys.dof_map.to_free(&mesh, &wx).unwrap();
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let other = unit_square_mesh(1).unwrap();
        let w = WeakFunction::zeros(&other, 2);
        assert!(matches!(sys.energy_products(&mesh, &w, &w), Err(Error::Contract(_))));
    }

    #[test]
    fn eps_scales_only_fourth_order_terms() {
        let mesh = unit_square_mesh(2).unwrap();
        let s1 = assemble(&mesh, 2, 0.2, |_| 0.0).unwrap();
        let s10 = assemble(&mesh, 2, 2.0, |_| 0.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..s1.dof_map.free_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = s1.dof_map.to_weak(&mesh, &x).unwrap();
        let a = s1.energy_products(&mesh, &w, &w).unwrap();
        let b = s10.energy_products(&mesh, &w, &w).unwrap();
        assert!((b.b / a.b - 100.0).abs() < 1e-10);
        assert!((b.s1 / a.s1 - 100.0).abs() < 1e-10);
        assert_eq!(a.a, b.a);
        assert_eq!(a.s2, b.s2);
    }

    #[test]
    fn symmetric_positive_definite() {
        let mesh = unit_square_mesh(2).unwrap();
        for eps in [1.0, 1e-3, 1e-6] {
            let sys = assemble(&mesh, 2, eps, |_| 1.0).unwrap();
            let k = &sys.matrix;
            assert!(k.max_asymmetry() <= 1e-12 * k.max_abs());
            let eig = k.to_dense().symmetric_eigen();
            assert!(eig.eigenvalues.min() > 0.0);
        }
    }
}
