//! Residual a posteriori error estimator and discrete true errors.

use std::io::Write;
use std::path::Path;

use crate::assembly::{cell_energy, energy_products};
use crate::basis::{map_cell_rule, map_edge_rule, CellBasis};
use crate::cases::ExactSolution;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{cell_quadrature, edge_quadrature};
use crate::weak_ops::{embed_exact, eval_blocks, LocalOperators, Projector, Rules, WeakFunction};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimatorOptions {
    /// Also charge boundary edges, with the one-sided trace as the jump.
    pub boundary_jumps: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub alpha_t: Vec<f64>,
    pub alpha_e1: Vec<f64>,
    pub alpha_e2: Vec<f64>,
}

pub fn compute_weights(mesh: &Mesh, eps: f64) -> Result<Weights> {
    check_eps(eps)?;
    let inv = 1.0 / eps;
    Ok(Weights {
        alpha_t: mesh.cells.iter().map(|c| (inv * c.h * c.h).min(c.h)).collect(),
        alpha_e1: mesh.edges.iter().map(|e| (inv * e.length.powf(1.5)).min(e.length.sqrt())).collect(),
        alpha_e2: mesh.edges.iter().map(|e| (inv * e.length.sqrt()).min(1.0 / e.length.sqrt())).collect(),
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("eps must be positive and finite, got {eps}")));
    }
    Ok(())
}

/// Squared indicator parts of one cell.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellIndicator {
    pub eta_t1_sq: f64,
    pub eta_t2_sq: f64,
    pub eta_e1_sq: f64,
    pub eta_e2_sq: f64,
    pub s1: f64,
    pub s2: f64,
}

impl CellIndicator {
    pub fn eta_sq(&self) -> f64 {
        self.eta_t1_sq + self.eta_t2_sq + self.eta_e1_sq + self.eta_e2_sq + self.s1 + self.s2
    }

    pub fn eta(&self) -> f64 {
        self.eta_sq().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorIndicators {
    pub cells: Vec<CellIndicator>,
    pub eta_h: f64,
}

impl ErrorIndicators {
    /// `eta_T` per cell.
    pub fn eta_t(&self) -> Vec<f64> {
        self.cells.iter().map(CellIndicator::eta).collect()
    }

    pub fn stabilizer_sq(&self) -> f64 {
        self.cells.iter().map(|c| c.s1 + c.s2).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("cell_id,eta_T1,eta_T2,eta_e1,eta_e2,s1,s2,eta_T\n");
        for (i, c) in self.cells.iter().enumerate() {
            s.push_str(&format!(
                "{i},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}\n",
                c.eta_t1_sq.sqrt(),
                c.eta_t2_sq.sqrt(),
                c.eta_e1_sq.sqrt(),
                c.eta_e2_sq.sqrt(),
                c.s1,
                c.s2,
                c.eta()
            ));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Polynomial fields of one cell entering the residual and the jumps, in the
/// cell basis: the moment `eps^2 D2_w u_h` (blocks `xx, xy, yx, yy`) and the
/// shear flux `div(eps^2 D2_w u_h) - grad_w u_h` (blocks `x, y`).
#[derive(Debug, Clone)]
pub struct CellFields {
    pub basis: CellBasis,
    pub moment: Vec<f64>,
    pub shear: Vec<f64>,
}

impl CellFields {
    pub fn new(ops: &LocalOperators, local: &[f64], eps: f64) -> Result<CellFields> {
        let nk = ops.basis.dim();
        let e2 = eps * eps;
        let moment: Vec<f64> = ops.apply_weak_hessian(local)?.iter().map(|v| v * e2).collect();
        let grad = ops.apply_weak_gradient(local)?;
        let mut shear = vec![0.0; 2 * nk];
        for a in 0..2 {
            for b in 0..2 {
                let d = ops.basis.derivative(&moment[(2 * a + b) * nk..(2 * a + b + 1) * nk], b);
                for (s, v) in shear[a * nk..(a + 1) * nk].iter_mut().zip(d) {
                    *s += v;
                }
            }
            for (s, g) in shear[a * nk..(a + 1) * nk].iter_mut().zip(&grad[a * nk..(a + 1) * nk]) {
                *s -= g;
            }
        }
        Ok(CellFields {
            basis: ops.basis.clone(),
            moment,
            shear,
        })
    }

    /// `(q . n, M n)` at `p`.
    fn traces(&self, p: Point, n: Point, scratch: &mut Vec<f64>) -> (f64, [f64; 2]) {
        self.basis.values(p, scratch);
        let q: [f64; 2] = eval_blocks(&self.shear, scratch);
        let m: [f64; 4] = eval_blocks(&self.moment, scratch);
        (q[0] * n[0] + q[1] * n[1], [m[0] * n[0] + m[1] * n[1], m[2] * n[0] + m[3] * n[1]])
    }
}

#[derive(Debug, Clone)]
pub struct ElementResidual {
    /// Coefficients of `R_T` in the cell basis.
    pub residual: Vec<f64>,
    pub residual_norm: f64,
    /// `||f - f_h||_T`.
    pub oscillation: f64,
}

/// `R_T = f_h - div div(eps^2 D2_w u_h) + div grad_w u_h`, `f_h` the `P_k`
/// projection of `f`, all by exact differentiation of coefficients.
pub fn element_residual(
    mesh: &Mesh,
    ops: &LocalOperators,
    fields: &CellFields,
    f: &(impl Fn(Point) -> f64 + ?Sized),
) -> Result<ElementResidual> {
    let k = ops.layout.k;
    let nk = ops.basis.dim();
    let rule = cell_quadrature(2 * k + 4)?;
    let proj = Projector::new(mesh, ops.cell, k, &rule)?;
    let fh = proj.scalar(f);
    // div(shear) = div div(moment) - div grad_w, so R_T = f_h - div(shear)
    let mut residual = fh.clone();
    for a in 0..2 {
        for (r, d) in residual.iter_mut().zip(ops.basis.derivative(&fields.shear[a * nk..(a + 1) * nk], a)) {
            *r -= d;
        }
    }
    let quad = map_cell_rule(mesh, ops.cell, &rule);
    let mut v = Vec::new();
    let (mut rn, mut osc) = (0.0, 0.0);
    for (p, w) in quad.points.iter().zip(&quad.weights) {
        ops.basis.values(*p, &mut v);
        let [r]: [f64; 1] = eval_blocks(&residual, &v);
        let [fhv]: [f64; 1] = eval_blocks(&fh, &v);
        rn += w * r * r;
        osc += w * (f(*p) - fhv).powi(2);
    }
    Ok(ElementResidual {
        residual,
        residual_norm: rn.sqrt(),
        oscillation: osc.sqrt(),
    })
}

/// `(||J_e1||_e, ||J_e2||_e)`: jumps of the normal shear flux and of the
/// moment times the normal, `T+` minus `T-` along the edge normal.
pub fn edge_jumps(mesh: &Mesh, e: usize, fields: &[CellFields], opts: EstimatorOptions) -> Result<(f64, f64)> {
    let edge = &mesh.edges[e];
    if edge.is_boundary() && !opts.boundary_jumps {
        return Err(Error::Contract(format!("edge {e} is on the boundary; jumps are taken on interior edges only")));
    }
    let k = fields[edge.cell_plus].basis.degree;
    let rule = edge_quadrature(2 * k + 2)?;
    let (quad, _) = map_edge_rule(mesh, e, &rule);
    let n = edge.normal;
    let mut scratch = Vec::new();
    let (mut j1, mut j2) = (0.0, 0.0);
    for (p, w) in quad.points.iter().zip(&quad.weights) {
        let (mut q, mut m) = fields[edge.cell_plus].traces(*p, n, &mut scratch);
        if let Some(cm) = edge.cell_minus {
            let (qm, mm) = fields[cm].traces(*p, n, &mut scratch);
            q -= qm;
            m = [m[0] - mm[0], m[1] - mm[1]];
        }
        j1 += w * q * q;
        j2 += w * (m[0] * m[0] + m[1] * m[1]);
    }
    Ok((j1.sqrt(), j2.sqrt()))
}

pub fn estimate(
    mesh: &Mesh,
    ops: &[LocalOperators],
    rules: &Rules,
    u_h: &WeakFunction,
    f: &(dyn Fn(Point) -> f64 + Sync),
    eps: f64,
    opts: EstimatorOptions,
) -> Result<ErrorIndicators> {
    check_eps(eps)?;
    if ops.len() != mesh.num_cells() || !u_h.matches(mesh) || u_h.k != rules.k {
        return Err(Error::Contract("solution and operators belong to different meshes".into()));
    }
    let weights = compute_weights(mesh, eps)?;
    let per_cell = crate::par::map_collect(mesh.num_cells(), |c| -> Result<_> {
        let local = u_h.local_dofs(mesh, c);
        let fields = CellFields::new(&ops[c], &local, eps)?;
        let res = element_residual(mesh, &ops[c], &fields, f)?;
        let en = cell_energy(mesh, &ops[c], rules, &local, &local, eps);
        Ok((fields, res, en))
    });
    let mut fields = Vec::with_capacity(mesh.num_cells());
    let mut cells = Vec::with_capacity(mesh.num_cells());
    for (c, item) in per_cell.into_iter().enumerate() {
        let (fl, res, en) = item?;
        let at2 = weights.alpha_t[c].powi(2);
        cells.push(CellIndicator {
            eta_t1_sq: at2 * res.oscillation.powi(2),
            eta_t2_sq: at2 * res.residual_norm.powi(2),
            eta_e1_sq: 0.0,
            eta_e2_sq: 0.0,
            s1: en.s1.max(0.0),
            s2: en.s2.max(0.0),
        });
        fields.push(fl);
    }
    let charged: Vec<usize> = (0..mesh.num_edges())
        .filter(|&e| opts.boundary_jumps || !mesh.edges[e].is_boundary())
        .collect();
    let jumps = crate::par::map_collect(charged.len(), |i| edge_jumps(mesh, charged[i], &fields, opts));
    for (&e, j) in charged.iter().zip(jumps) {
        let (j1, j2) = j?;
        let c1 = (weights.alpha_e1[e] * j1).powi(2);
        let c2 = (weights.alpha_e2[e] * j2).powi(2);
        let edge = &mesh.edges[e];
        for c in std::iter::once(edge.cell_plus).chain(edge.cell_minus) {
            cells[c].eta_e1_sq += c1;
            cells[c].eta_e2_sq += c2;
        }
    }
    let eta_h = cells.iter().map(CellIndicator::eta_sq).sum::<f64>().sqrt();
    Ok(ErrorIndicators { cells, eta_h })
}

/// Errors against a known solution. All fields are `None` without one.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrueErrorReport {
    /// `|||Q_h u - u_h|||`.
    pub discrete_error: Option<f64>,
    /// `eps^2 ||D2 u - D2_w u_h||^2 + ||grad u - grad_w u_h||^2`.
    pub field_error_sq: Option<f64>,
    /// `eta_h / sqrt(field_error_sq + S1(u_h, u_h) + S2(u_h, u_h))`.
    pub effectivity: Option<f64>,
}

pub fn true_error(
    mesh: &Mesh,
    ops: &[LocalOperators],
    rules: &Rules,
    u_h: &WeakFunction,
    exact: Option<&ExactSolution>,
    eps: f64,
    indicators: &ErrorIndicators,
) -> Result<TrueErrorReport> {
    let Some(ex) = exact else {
        return Ok(TrueErrorReport::default());
    };
    check_eps(eps)?;
    let k = rules.k;
    let qu = embed_exact(mesh, k, &*ex.u, &*ex.grad)?;
    let diff = qu.sub(u_h);
    let discrete = energy_products(mesh, ops, rules, &diff, &diff, eps)?.total().max(0.0).sqrt();

    let rule = cell_quadrature(2 * k + 4)?;
    let e2 = eps * eps;
    let parts = crate::par::map_collect(mesh.num_cells(), |c| -> Result<f64> {
        let op = &ops[c];
        let local = u_h.local_dofs(mesh, c);
        let d = op.apply_weak_hessian(&local)?;
        let g = op.apply_weak_gradient(&local)?;
        let quad = map_cell_rule(mesh, c, &rule);
        let mut v = Vec::new();
        let mut acc = 0.0;
        for (p, w) in quad.points.iter().zip(&quad.weights) {
            op.basis.values(*p, &mut v);
            let dw: [f64; 4] = eval_blocks(&d, &v);
            let gw: [f64; 2] = eval_blocks(&g, &v);
            let h = (ex.hess)(*p);
            let gr = (ex.grad)(*p);
            let dh = (h[0][0] - dw[0]).powi(2) + (h[0][1] - dw[1]).powi(2) + (h[1][0] - dw[2]).powi(2) + (h[1][1] - dw[3]).powi(2);
            let dg = (gr[0] - gw[0]).powi(2) + (gr[1] - gw[1]).powi(2);
            acc += w * (e2 * dh + dg);
        }
        Ok(acc)
    });
    let mut field = 0.0;
    for p in parts {
        field += p?;
    }
    let denom = (field + indicators.stabilizer_sq()).sqrt();
    let effectivity = (denom > 0.0).then(|| indicators.eta_h / denom).filter(|v| v.is_finite());
    Ok(TrueErrorReport {
        discrete_error: Some(discrete),
        field_error_sq: Some(field),
        effectivity,
    })
}

/// `u_0` sampled on an `n x n` lattice of the unit square, as CSV `x,y,u`.
pub fn sample_grid(mesh: &Mesh, u_h: &WeakFunction, n: usize) -> String {
    let mut s = String::from("x,y,u\n");
    let locate = PointLocator::new(mesh);
    for j in 0..n {
        for i in 0..n {
            let p = [i as f64 / (n - 1).max(1) as f64, j as f64 / (n - 1).max(1) as f64];
            let v = locate.find(mesh, p).map(|c| u_h.eval_v0(mesh, c, p)).unwrap_or(f64::NAN);
            s.push_str(&format!("{:.6},{:.6},{:.10e}\n", p[0], p[1], v));
        }
    }
    s
}

/// Bucket grid over the mesh bounding box for point-in-cell queries.
struct PointLocator {
    lo: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl PointLocator {
    fn new(mesh: &Mesh) -> PointLocator {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &mesh.vertices {
            lo = [lo[0].min(v.x), lo[1].min(v.y)];
            hi = [hi[0].max(v.x), hi[1].max(v.y)];
        }
        let side = ((mesh.num_cells().max(1) as f64).sqrt().ceil() as usize).max(1);
        let cell = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE);
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for c in 0..mesh.num_cells() {
            let p = mesh.cell_points(c);
            let bx = |x: f64| (((x - lo[0]) / cell).floor().max(0.0) as usize).min(nx - 1);
            let by = |y: f64| (((y - lo[1]) / cell).floor().max(0.0) as usize).min(ny - 1);
            let (x0, x1) = (p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min), p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max));
            let (y0, y1) = (p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min), p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max));
            for j in by(y0)..=by(y1) {
                for i in bx(x0)..=bx(x1) {
                    buckets[j * nx + i].push(c);
                }
            }
        }
        PointLocator { lo, cell, nx, ny, buckets }
    }

    fn find(&self, mesh: &Mesh, p: Point) -> Option<usize> {
        let i = (((p[0] - self.lo[0]) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let j = (((p[1] - self.lo[1]) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        let mut best = None;
        let mut best_margin = f64::NEG_INFINITY;
        for &c in &self.buckets[j * self.nx + i] {
            let margin = min_barycentric(mesh.cell_points(c), p);
            if margin > best_margin {
                best_margin = margin;
                best = Some(c);
            }
        }
        best.filter(|_| best_margin >= -1e-12)
    }
}

fn min_barycentric(t: [Point; 3], p: Point) -> f64 {
    let det = (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]);
    let l1 = ((p[0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (p[1] - t[0][1])) / det;
    let l2 = ((t[1][0] - t[0][0]) * (p[1] - t[0][1]) - (p[0] - t[0][0]) * (t[1][1] - t[0][1])) / det;
    (1.0 - l1 - l2).min(l1).min(l2)
}
