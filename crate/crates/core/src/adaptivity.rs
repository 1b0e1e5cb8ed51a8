//! Dörfler marking and the solve, estimate, mark, refine loop.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_lifted, AssemblyOptions, DofMap};
use crate::cases::{BoundaryData, ManufacturedCase};
use crate::error::{Error, Result};
use crate::estimator::{estimate, true_error, ErrorIndicators, EstimatorOptions};
use crate::linsolve::{solve_with, SolverKind};
use crate::mesh::{unit_square_mesh, Mesh};
use crate::weak_ops::{embed_exact, WeakFunction};

/// Smallest set of cells, taken greedily by descending indicator (ties by
/// ascending id), whose squared indicators reach `theta` of the total.
/// Returned ids are in selection order.
pub fn dorfler_mark(eta: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, 1], got {theta}")));
    }
    if let Some(i) = eta.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("indicator {i} is {}", eta[i])));
    }
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta[b].total_cmp(&eta[a]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&i| eta[i] * eta[i]).sum();
    if total == 0.0 {
        return Ok(Vec::new());
    }
    let goal = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for i in order {
        if acc >= goal {
            break;
        }
        acc += eta[i] * eta[i];
        marked.push(i);
    }
    Ok(marked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefineMode {
    #[default]
    Adaptive,
    /// Every cell bisected twice per level, so mesh sizes halve.
    Uniform,
}

impl std::str::FromStr for RefineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(RefineMode::Adaptive),
            "uniform" => Ok(RefineMode::Uniform),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}` (adaptive | uniform)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdaptConfig {
    pub k: usize,
    pub theta: f64,
    pub mode: RefineMode,
    /// A level whose free DOF count exceeds this is not solved.
    pub max_dof: usize,
    pub max_levels: usize,
    /// Subdivisions of the initial unit square mesh.
    pub initial_n: usize,
    /// Record zero timings so that histories are byte-identical across runs.
    pub deterministic: bool,
    pub solver: SolverKind,
    pub assembly: AssemblyOptions,
    pub estimator: EstimatorOptions,
    /// Overrides the case's own boundary data when set.
    pub boundary_data: Option<BoundaryData>,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            k: 2,
            theta: 0.3,
            mode: RefineMode::Adaptive,
            max_dof: 20_000,
            max_levels: 30,
            initial_n: 4,
            deterministic: false,
            solver: SolverKind::Cholesky,
            assembly: AssemblyOptions::default(),
            estimator: EstimatorOptions::default(),
            boundary_data: None,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidArgument(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!("polynomial degree must be >= 2, got {}", self.k)));
        }
        if self.max_levels == 0 || self.initial_n == 0 {
            return Err(Error::InvalidArgument("max_levels and initial_n must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the convergence history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub dofs: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub eta_h: f64,
    /// `|||Q_h u - u_h|||`, absent without an exact solution.
    pub error: Option<f64>,
    pub effectivity: Option<f64>,
    pub marked: usize,
    /// Cumulative wall time in seconds.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdaptHistory {
    pub levels: Vec<LevelRecord>,
}

impl AdaptHistory {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_default();
        let mut s = String::from("level,dofs,h_min,h_max,eta_h,error,effectivity,marked,seconds\n");
        for r in &self.levels {
            s.push_str(&format!(
                "{},{},{:.10e},{:.10e},{:.10e},{},{},{},{:.6}\n",
                r.level,
                r.dofs,
                r.h_min,
                r.h_max,
                r.eta_h,
                opt(r.error),
                opt(r.effectivity),
                r.marked,
                r.seconds
            ));
        }
        s
    }

    pub fn write(&self, json: &Path, csv: &Path) -> Result<()> {
        std::fs::write(json, self.to_json()?)?;
        std::fs::write(csv, self.to_csv())?;
        Ok(())
    }
}

/// Everything left after the loop stops.
#[derive(Debug)]
pub struct AdaptOutcome {
    pub history: AdaptHistory,
    /// Mesh of the last solved level.
    pub mesh: Mesh,
    pub solution: WeakFunction,
    pub indicators: ErrorIndicators,
    /// Set when a solve failed; the history holds the levels before it.
    pub failure: Option<Error>,
}

/// Runs the loop from a uniform mesh of the unit square.
pub fn adapt_loop(case: &ManufacturedCase, cfg: &AdaptConfig) -> Result<AdaptOutcome> {
    let mesh = unit_square_mesh(cfg.initial_n)?;
    adapt_from(mesh, case, cfg)
}

pub fn adapt_from(mesh: Mesh, case: &ManufacturedCase, cfg: &AdaptConfig) -> Result<AdaptOutcome> {
    adapt_observed(mesh, case, cfg, |_, _| {})
}

/// As [`adapt_from`], calling `observe` with each recorded level and its mesh.
pub fn adapt_observed(
    mut mesh: Mesh,
    case: &ManufacturedCase,
    cfg: &AdaptConfig,
    mut observe: impl FnMut(&LevelRecord, &Mesh),
) -> Result<AdaptOutcome> {
    cfg.validate()?;
    let lift = match (cfg.boundary_data.unwrap_or(case.boundary_data), case.exact.as_ref()) {
        (BoundaryData::Homogeneous, _) => None,
        (BoundaryData::Exact, Some(ex)) => Some(ex),
        (BoundaryData::Exact, None) => {
            return Err(Error::InvalidArgument(format!("case `{}` has no exact solution to take boundary data from", case.name)))
        }
    };
    let eps = case.eps;
    let start = Instant::now();
    let mut history = AdaptHistory::default();
    let mut last: Option<(Mesh, WeakFunction, ErrorIndicators)> = None;
    let mut failure = None;

    for level in 0..cfg.max_levels {
        let dofs = DofMap::new(&mesh, cfg.k, cfg.assembly).free_count();
        if level > 0 && dofs > cfg.max_dof {
            break;
        }
        let step = (|| -> Result<_> {
            let g = lift.map(|ex| embed_exact(&mesh, cfg.k, &*ex.u, &*ex.grad)).transpose()?;
            let sys = assemble_lifted(&mesh, cfg.k, eps, &*case.f, cfg.assembly, g.as_ref())?;
            let sol = solve_with(&sys.matrix, &sys.rhs, cfg.solver)?;
            let u = sys.expand(&mesh, &sol.solution)?;
            let ind = estimate(&mesh, &sys.ops, &sys.rules, &u, &*case.f, eps, cfg.estimator)?;
            let err = true_error(&mesh, &sys.ops, &sys.rules, &u, case.exact.as_ref(), eps, &ind)?;
            Ok((u, ind, err))
        })();
        let (u, ind, err) = match step {
            Ok(v) => v,
            Err(e @ (Error::NotPositiveDefinite { .. } | Error::Solver(_))) if last.is_some() => {
                failure = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };

        let done = ind.eta_h == 0.0 || level + 1 == cfg.max_levels;
        let marked = if done {
            Vec::new()
        } else {
            match cfg.mode {
                RefineMode::Adaptive => dorfler_mark(&ind.eta_t(), cfg.theta)?,
                RefineMode::Uniform => (0..mesh.num_cells()).collect(),
            }
        };
        history.levels.push(LevelRecord {
            level,
            dofs,
            h_min: mesh.h_min(),
            h_max: mesh.h,
            eta_h: ind.eta_h,
            error: err.discrete_error,
            effectivity: err.effectivity,
            marked: marked.len(),
            seconds: if cfg.deterministic { 0.0 } else { start.elapsed().as_secs_f64() },
        });
        observe(history.levels.last().expect("just pushed"), &mesh);
        if done || marked.is_empty() {
            last = Some((mesh, u, ind));
            break;
        }
        let next = match cfg.mode {
            RefineMode::Adaptive => mesh.refine(&marked)?,
            RefineMode::Uniform => mesh.refine_all()?.refine_all()?,
        };
        last = Some((std::mem::replace(&mut mesh, next), u, ind));
    }
    let (mesh, solution, indicators) = last.expect("level 0 is always solved or returns an error");
    Ok(AdaptOutcome {
        history,
        mesh,
        solution,
        indicators,
        failure,
    })
}
