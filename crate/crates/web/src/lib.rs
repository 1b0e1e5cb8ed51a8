//! Browser bindings: one solve/estimate/refine session on the unit square,
//! exposing flat arrays for drawing the mesh, the cell values of `u_h` and
//! the error indicators.

use wasm_bindgen::prelude::*;
use wg_plate::adaptivity::{dorfler_mark, AdaptHistory, LevelRecord};
use wg_plate::assembly::{assemble_lifted, AssemblyOptions, DofMap};
use wg_plate::cases::{by_name, BoundaryData, ManufacturedCase, CASE_NAMES};
use wg_plate::estimator::{estimate, true_error, EstimatorOptions};
use wg_plate::linsolve::{solve_with, SolverKind};
use wg_plate::mesh::{unit_square_mesh, Mesh};

/// Names accepted by [`Session::new`], comma separated.
#[wasm_bindgen]
pub fn case_names() -> String {
    CASE_NAMES.join(",")
}

#[wasm_bindgen]
pub struct Session {
    case: ManufacturedCase,
    k: usize,
    mesh: Mesh,
    cell_values: Vec<f64>,
    indicators: Vec<f64>,
    marked: Vec<u32>,
    history: AdaptHistory,
}

#[wasm_bindgen]
impl Session {
    /// Solves the named case on a uniform `n x n` mesh. A non-positive `eps`
    /// keeps the case default.
    #[wasm_bindgen(constructor)]
    pub fn new(case: &str, k: u32, eps: f64, n: u32) -> Result<Session, String> {
        let case = by_name(case, (eps > 0.0).then_some(eps)).map_err(|e| e.to_string())?;
        let mesh = unit_square_mesh(n as usize).map_err(|e| e.to_string())?;
        let mut s = Session {
            case,
            k: k as usize,
            mesh,
            cell_values: Vec::new(),
            indicators: Vec::new(),
            marked: Vec::new(),
            history: AdaptHistory::default(),
        };
        s.solve()?;
        Ok(s)
    }

    fn solve(&mut self) -> Result<(), String> {
        let (mesh, case, k) = (&self.mesh, &self.case, self.k);
        let step = || -> wg_plate::Result<_> {
            let lift = match (case.boundary_data, case.exact.as_ref()) {
                (BoundaryData::Exact, Some(ex)) => Some(wg_plate::weak_ops::embed_exact(mesh, k, &*ex.u, &*ex.grad)?),
                _ => None,
            };
            let opts = AssemblyOptions::default();
            let sys = assemble_lifted(mesh, k, case.eps, &*case.f, opts, lift.as_ref())?;
            let sol = solve_with(&sys.matrix, &sys.rhs, SolverKind::Cholesky)?;
            let u = sys.expand(mesh, &sol.solution)?;
            let ind = estimate(mesh, &sys.ops, &sys.rules, &u, &*case.f, case.eps, EstimatorOptions::default())?;
            let err = true_error(mesh, &sys.ops, &sys.rules, &u, case.exact.as_ref(), case.eps, &ind)?;
            let values = (0..mesh.num_cells()).map(|c| u.eval_v0(mesh, c, mesh.centroid(c))).collect();
            Ok((values, ind, err, DofMap::new(mesh, k, opts).free_count()))
        };
        let (values, ind, err, dofs) = step().map_err(|e| e.to_string())?;
        self.history.levels.push(LevelRecord {
            level: self.history.levels.len(),
            dofs,
            h_min: mesh.h_min(),
            h_max: mesh.h,
            eta_h: ind.eta_h,
            error: err.discrete_error,
            effectivity: err.effectivity,
            marked: 0,
            seconds: 0.0,
        });
        self.cell_values = values;
        self.indicators = ind.eta_t();
        Ok(())
    }

    fn refine_cells(&mut self, marked: Vec<usize>, uniform: bool) -> Result<(), String> {
        if let Some(last) = self.history.levels.last_mut() {
            last.marked = marked.len();
        }
        let next = if uniform {
            self.mesh.refine_all().and_then(|m| m.refine_all())
        } else {
            self.mesh.refine(&marked)
        }
        .map_err(|e| e.to_string())?;
        self.marked = marked.into_iter().map(|c| c as u32).collect();
        self.mesh = next;
        self.solve()
    }

    /// Dörfler-marks the current indicators with `theta`, refines and solves.
    pub fn adapt(&mut self, theta: f64) -> Result<(), String> {
        let marked = dorfler_mark(&self.indicators, theta).map_err(|e| e.to_string())?;
        if marked.is_empty() {
            return Ok(());
        }
        self.refine_cells(marked, false)
    }

    /// Bisects every cell twice, halving the mesh size, and solves.
    pub fn refine_uniform(&mut self) -> Result<(), String> {
        self.refine_cells((0..self.mesh.num_cells()).collect(), true)
    }

    /// Triangle corners, six numbers `x0 y0 x1 y1 x2 y2` per cell.
    pub fn triangles(&self) -> Vec<f64> {
        (0..self.mesh.num_cells())
            .flat_map(|c| self.mesh.cell_points(c).into_iter().flatten())
            .collect()
    }

    /// `u_h` at each cell centroid.
    pub fn cell_values(&self) -> Vec<f64> {
        self.cell_values.clone()
    }

    /// Local indicators `eta_T`.
    pub fn indicators(&self) -> Vec<f64> {
        self.indicators.clone()
    }

    /// Ids of the cells refined in the last step, in the previous mesh.
    pub fn marked(&self) -> Vec<u32> {
        self.marked.clone()
    }

    pub fn num_cells(&self) -> usize {
        self.mesh.num_cells()
    }

    pub fn dofs(&self) -> usize {
        self.last().dofs
    }

    pub fn eta(&self) -> f64 {
        self.last().eta_h
    }

    /// Discrete energy error, `NaN` without an exact solution.
    pub fn error(&self) -> f64 {
        self.last().error.unwrap_or(f64::NAN)
    }

    pub fn history_json(&self) -> String {
        self.history.to_json().unwrap_or_default()
    }
}

impl Session {
    fn last(&self) -> &LevelRecord {
        self.history.levels.last().expect("solved on construction")
    }
}
