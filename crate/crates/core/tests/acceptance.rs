//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on failure.

mod support;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::dd::{self, c, Dd};
use wg_plate::adaptivity::{adapt_loop, adapt_observed, dorfler_mark, AdaptConfig, AdaptHistory, RefineMode};
use wg_plate::assembly::{assemble_with, AssemblyOptions};
use wg_plate::basis::{map_cell_rule, map_edge_rule, CellBasis, EdgeBasis};
use wg_plate::cases::{self, ManufacturedCase};
use wg_plate::mesh::{unit_square_mesh, Mesh, Point, RawCell, Vertex};
use wg_plate::quadrature::{cell_quadrature, edge_quadrature};
use wg_plate::weak_ops::{LocalOperators, Rules};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { name: "weak operators reproduce exact derivatives of monomials", budget: secs(10), run: weak_operator_oracle },
        Criterion { name: "weak Hessian and gradient moment identities", budget: secs(10), run: moment_identities },
        Criterion { name: "stiffness matrix symmetric positive definite", budget: secs(60), run: well_posedness },
        Criterion { name: "Dorfler marking has minimal cardinality", budget: secs(10), run: dorfler_oracle },
        Criterion { name: "manufactured sources match finite differences", budget: secs(30), run: pde_consistency },
        Criterion { name: "uniform refinement converges on the internal peak", budget: secs(300), run: uniform_convergence },
        Criterion { name: "effectivity index stable on adaptive runs", budget: secs(600), run: effectivity_stability },
        Criterion { name: "adaptive meshes localise at the layers", budget: secs(600), run: localisation },
        Criterion { name: "adaptive beats uniform at equal budget", budget: secs(300), run: adaptive_beats_uniform },
    ];
    let mut failed = 0;
    for (i, cr) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(cr.run).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if t > cr.budget => Err(format!("{msg}; over time budget of {} s", cr.budget.as_secs())),
            o => o,
        };
        let (tag, msg) = match outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("{tag} {} {}: {msg} ({:.2} s)", i + 1, cr.name, t.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn triangle_mesh(p: [Point; 3]) -> Mesh {
    let vertices = p.iter().map(|q| Vertex { x: q[0], y: q[1] }).collect();
    Mesh::from_cells(vertices, vec![RawCell::new([0, 1, 2])]).expect("valid triangle")
}

/// Random counter-clockwise triangle of diameter 0.1 to 1 with all angles
/// at least 20 degrees.
fn random_triangle(rng: &mut ChaCha8Rng) -> [Point; 3] {
    loop {
        let size = 10f64.powf(rng.random_range(-1.0..0.0));
        let origin = [rng.random::<f64>(), rng.random::<f64>()];
        let mut p: [Point; 3] = std::array::from_fn(|_| {
            [origin[0] + size * rng.random::<f64>(), origin[1] + size * rng.random::<f64>()]
        });
        let cross = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        if cross < 0.0 {
            p.swap(1, 2);
        }
        let min_angle = (0..3)
            .map(|i| {
                let (a, b, o) = (p[(i + 1) % 3], p[(i + 2) % 3], p[i]);
                let u = [a[0] - o[0], a[1] - o[1]];
                let v = [b[0] - o[0], b[1] - o[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                cos.clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min);
        if min_angle >= 20f64.to_radians() {
            let diameter = (0..3)
                .map(|i| {
                    let (a, b) = (p[i], p[(i + 1) % 3]);
                    (a[0] - b[0]).hypot(a[1] - b[1])
                })
                .fold(0.0, f64::max);
            let s = size / diameter;
            return p.map(|q| [origin[0] + s * (q[0] - origin[0]), origin[1] + s * (q[1] - origin[1])]);
        }
    }
}

/// Least-squares coefficients of `f` in a basis sampled at `points`.
fn fit(rows: &[Vec<f64>], values: &[f64]) -> Vec<f64> {
    let a = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let b = DVector::from_column_slice(values);
    let qr = a.qr();
    qr.r()
        .solve_upper_triangular(&(qr.q().transpose() * b))
        .expect("full column rank")
        .as_slice()
        .to_vec()
}

/// Barycentric lattice of order `n` on the triangle.
fn lattice_points(p: &[Point; 3], n: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=n - i {
            let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
            let r = 1.0 - s - t;
            out.push([r * p[0][0] + s * p[1][0] + t * p[2][0], r * p[0][1] + s * p[1][1] + t * p[2][1]]);
        }
    }
    out
}

fn cell_fit(basis: &CellBasis, pts: &[Point], f: impl Fn(Point) -> f64) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| {
            let mut v = Vec::new();
            basis.values(*p, &mut v);
            v
        })
        .collect();
    let vals: Vec<f64> = pts.iter().map(|p| f(*p)).collect();
    fit(&rows, &vals)
}

fn edge_fit(mesh: &Mesh, e: usize, k: usize, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let eb = EdgeBasis::new(k);
    let [a, b] = mesh.edge_points(e);
    let n = 3 * (k + 1);
    let mut rows = Vec::new();
    let mut vals = Vec::new();
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64;
        let mut v = Vec::new();
        eb.values_at(t, &mut v);
        rows.push(v);
        vals.push(f([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]));
    }
    fit(&rows, &vals)
}

fn powi(x: f64, n: i32) -> f64 {
    if n < 0 {
        0.0
    } else {
        x.powi(n)
    }
}

fn weak_operator_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k in 2..=4 {
        let rules = Rules::new(k).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let p = random_triangle(&mut rng);
            let mesh = triangle_mesh(p);
            let ops = LocalOperators::build(&mesh, 0, &rules).map_err(|e| e.to_string())?;
            let basis = CellBasis::for_cell(&mesh, 0, k);
            let pts = lattice_points(&p, 2 * k);
            let layout = ops.layout;
            for d in 0..=k as i32 {
                for b in 0..=d {
                    let a = d - b;
                    let (af, bf) = (a as f64, b as f64);
                    let u = |q: Point| powi(q[0], a) * powi(q[1], b);
                    let ux = |q: Point| af * powi(q[0], a - 1) * powi(q[1], b);
                    let uy = |q: Point| bf * powi(q[0], a) * powi(q[1], b - 1);
                    let uxx = |q: Point| af * (af - 1.0) * powi(q[0], a - 2) * powi(q[1], b);
                    let uxy = |q: Point| af * bf * powi(q[0], a - 1) * powi(q[1], b - 1);
                    let uyy = |q: Point| bf * (bf - 1.0) * powi(q[0], a) * powi(q[1], b - 2);

                    let mut dofs = vec![0.0; layout.len()];
                    for (i, v) in cell_fit(&basis, &pts, u).into_iter().enumerate() {
                        dofs[layout.v0(i)] = v;
                    }
                    for l in 0..3 {
                        let e = mesh.cells[0].edge_ids[l];
                        for (m, v) in edge_fit(&mesh, e, k, u).into_iter().enumerate() {
                            dofs[layout.vb(l, m)] = v;
                        }
                        for (m, v) in edge_fit(&mesh, e, k, ux).into_iter().enumerate() {
                            dofs[layout.vg(l, 0, m)] = v;
                        }
                        for (m, v) in edge_fit(&mesh, e, k, uy).into_iter().enumerate() {
                            dofs[layout.vg(l, 1, m)] = v;
                        }
                    }
                    let hess = ops.apply_weak_hessian(&dofs).map_err(|e| e.to_string())?;
                    let grad = ops.apply_weak_gradient(&dofs).map_err(|e| e.to_string())?;
                    let mut expected = Vec::new();
                    for f in [&uxx as &dyn Fn(Point) -> f64, &uxy, &uxy, &uyy] {
                        expected.extend(cell_fit(&basis, &pts, f));
                    }
                    let mut expected_grad = cell_fit(&basis, &pts, ux);
                    expected_grad.extend(cell_fit(&basis, &pts, uy));
                    let scale = expected.iter().chain(&expected_grad).fold(1f64, |m, v| m.max(v.abs()));
                    for (x, y) in hess.iter().zip(&expected).chain(grad.iter().zip(&expected_grad)) {
                        worst = worst.max((x - y).abs() / scale);
                    }
                    count += 1;
                }
            }
        }
    }
    check(worst <= 1e-9, format!("{count} monomial/triangle pairs, max coefficient error {worst:.2e} (tol 1e-9)"))
}

fn moment_identities() -> Outcome {
    let mesh = unit_square_mesh(4).map_err(|e| e.to_string())?;
    if mesh.num_cells() != 32 {
        return Err(format!("expected 32 cells, got {}", mesh.num_cells()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for k in [2, 3] {
        let rules = Rules::new(k).map_err(|e| e.to_string())?;
        let cell_rule = cell_quadrature(2 * k + 4).map_err(|e| e.to_string())?;
        let edge_rule = edge_quadrature(2 * k + 4).map_err(|e| e.to_string())?;
        let eb = EdgeBasis::new(k);
        for c in 0..mesh.num_cells() {
            let ops = LocalOperators::build(&mesh, c, &rules).map_err(|e| e.to_string())?;
            let layout = ops.layout;
            let basis = &ops.basis;
            let nk = basis.dim();
            let cq = map_cell_rule(&mesh, c, &cell_rule);
            let cell_evals: Vec<_> = cq.points.iter().map(|p| basis.eval(*p)).collect();
            let edges: Vec<_> = (0..3)
                .map(|l| {
                    let e = mesh.cells[c].edge_ids[l];
                    let (q, params) = map_edge_rule(&mesh, e, &edge_rule);
                    let psi: Vec<Vec<f64>> = params
                        .iter()
                        .map(|&t| {
                            let mut v = Vec::new();
                            eb.values_at(t, &mut v);
                            v
                        })
                        .collect();
                    let evals: Vec<_> = q.points.iter().map(|p| basis.eval(*p)).collect();
                    (mesh.outward_normal(c, l), q, psi, evals)
                })
                .collect();
            for _ in 0..100 {
                let dofs: Vec<f64> = (0..layout.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let hess = ops.apply_weak_hessian(&dofs).map_err(|e| e.to_string())?;
                let grad = ops.apply_weak_gradient(&dofs).map_err(|e| e.to_string())?;
                let v0 = |ev: &wg_plate::basis::BasisEval| (0..nk).map(|i| dofs[layout.v0(i)] * ev.values[i]).sum::<f64>();
                let field = |coef: &[f64], blk: usize, ev: &wg_plate::basis::BasisEval| {
                    (0..nk).map(|i| coef[blk * nk + i] * ev.values[i]).sum::<f64>()
                };
                let trace = |l: usize, f: &dyn Fn(usize, usize) -> usize, psi: &[f64]| {
                    (0..=k).map(|m| dofs[f(l, m)] * psi[m]).sum::<f64>()
                };
                let (mut hess_res, mut hess_scale, mut grad_res, mut grad_scale) = (0f64, 0f64, 0f64, 0f64);
                for j in 0..nk {
                    for a in 0..2 {
                        for b in 0..2 {
                            let mut lhs = 0.0;
                            let mut terms = [0.0; 3];
                            for (ev, w) in cell_evals.iter().zip(&cq.weights) {
                                lhs += w * field(&hess, 2 * a + b, ev) * ev.values[j];
                                terms[0] += w * v0(ev) * ev.hessians[j][a][b];
                            }
                            for (l, (n, q, psi, evals)) in edges.iter().enumerate() {
                                for i in 0..q.points.len() {
                                    let w = q.weights[i];
                                    let vb = trace(l, &|l, m| layout.vb(l, m), &psi[i]);
                                    let vg = trace(l, &|l, m| layout.vg(l, a, m), &psi[i]);
                                    terms[1] -= w * vb * evals[i].grads[j][b] * n[a];
                                    terms[2] += w * vg * evals[i].values[j] * n[b];
                                }
                            }
                            hess_res = hess_res.max((lhs - terms.iter().sum::<f64>()).abs());
                            hess_scale = hess_scale.max(lhs.abs()).max(terms.iter().map(|t| t.abs()).sum());
                        }
                        let mut lhs = 0.0;
                        let mut terms = [0.0; 2];
                        for (ev, w) in cell_evals.iter().zip(&cq.weights) {
                            lhs += w * field(&grad, a, ev) * ev.values[j];
                            terms[0] -= w * v0(ev) * ev.grads[j][a];
                        }
                        for (l, (n, q, psi, evals)) in edges.iter().enumerate() {
                            for i in 0..q.points.len() {
                                let vb = trace(l, &|l, m| layout.vb(l, m), &psi[i]);
                                terms[1] += q.weights[i] * vb * evals[i].values[j] * n[a];
                            }
                        }
                        grad_res = grad_res.max((lhs - terms.iter().sum::<f64>()).abs());
                        grad_scale = grad_scale.max(lhs.abs()).max(terms.iter().map(|t| t.abs()).sum());
                    }
                }
                worst = worst.max(hess_res / hess_scale).max(grad_res / grad_scale);
            }
        }
    }
    check(worst <= 1e-10, format!("k = 2, 3 on 32 cells x 100 vectors, max residual relative to the largest moment {worst:.2e} (tol 1e-10)"))
}

fn well_posedness() -> Outcome {
    let n2 = unit_square_mesh(2).map_err(|e| e.to_string())?;
    let graded = n2.refine(&[0, 5]).and_then(|m| m.refine(&[1])).map_err(|e| e.to_string())?;
    let meshes = [
        ("n=1", unit_square_mesh(1).map_err(|e| e.to_string())?),
        ("n=2", n2),
        ("n=3", unit_square_mesh(3).map_err(|e| e.to_string())?),
        ("graded", graded),
    ];
    let mut worst_asym: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    let mut systems = 0;
    let mut largest = 0;
    for (name, mesh) in &meshes {
        for k in [2, 3] {
            for pin in [false, true] {
                for eps in [1.0, 1e-3, 1e-6] {
                    let opts = AssemblyOptions { pin_tangential: pin };
                    let sys = assemble_with(mesh, k, eps, |_| 1.0, opts).map_err(|e| e.to_string())?;
                    let n = sys.rhs.len();
                    if n > 500 {
                        continue;
                    }
                    let a = sys.matrix.to_dense();
                    let max = a.iter().fold(0f64, |m, v| m.max(v.abs()));
                    let asym = (&a - a.transpose()).iter().fold(0f64, |m, v| m.max(v.abs())) / max;
                    worst_asym = worst_asym.max(asym);
                    let sym = (&a + a.transpose()) * 0.5;
                    let eig = SymmetricEigen::new(sym).eigenvalues;
                    let lo = eig.min();
                    if lo <= 0.0 {
                        return Err(format!("{name}, k={k}, pin={pin}, eps={eps:e}: smallest eigenvalue {lo:e}"));
                    }
                    min_ratio = min_ratio.min(lo / eig.max());
                    systems += 1;
                    largest = largest.max(n);
                }
            }
        }
    }
    check(
        worst_asym <= 1e-12,
        format!(
            "{systems} systems up to {largest} DOFs, max asymmetry {worst_asym:.2e} (tol 1e-12), all eigenvalues positive, min lambda_min/lambda_max {min_ratio:.2e}"
        ),
    )
}

fn dorfler_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut runs = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=12);
        let eta: Vec<f64> = (0..n).map(|_| rng.random_range(0..=64) as f64 / 64.0).collect();
        let sq: Vec<f64> = eta.iter().map(|v| v * v).collect();
        let total: f64 = sq.iter().sum();
        for theta in [0.3, 0.5, 1.0] {
            let marked = dorfler_mark(&eta, theta).map_err(|e| e.to_string())?;
            runs += 1;
            if total == 0.0 {
                if !marked.is_empty() {
                    return Err(format!("zero indicators marked {marked:?}"));
                }
                continue;
            }
            let covered: f64 = marked.iter().map(|&i| sq[i]).sum();
            if covered < theta * total {
                return Err(format!("{eta:?}, theta {theta}: marked set does not cover"));
            }
            let minimal = (0u32..1 << n)
                .filter(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| sq[i]).sum::<f64>() >= theta * total)
                .map(|mask| mask.count_ones() as usize)
                .min()
                .expect("the full set covers");
            if marked.len() != minimal {
                return Err(format!("{eta:?}, theta {theta}: greedy {} vs minimal {minimal}", marked.len()));
            }
        }
    }
    Ok(format!("{runs} markings agree with exhaustive search"))
}

fn u_peak(x: Dd, y: Dd) -> Dd {
    let one = c(1.0);
    let r2 = (x - c(0.5)) * (x - c(0.5)) + (y - c(0.117)) * (y - c(0.117));
    x * y * (one - x) * (one - y) * dd::exp(c(-1000.0) * r2)
}

fn u_interior(x: Dd, y: Dd) -> Dd {
    let one = c(1.0);
    c(0.5) * x * (one - x) * (one - y) * (one - dd::tanh((c(0.5) - x) / c(0.05)))
}

fn u_product(eps: f64) -> impl Fn(Dd, Dd) -> Dd {
    move |x, y| {
        let (e, one, two, three) = (c(eps), c(1.0), c(2.0), c(3.0));
        let em = dd::exp(-(one / e));
        let l = one - em;
        let q = two - l;
        let d = one / (q - two * e * l);
        let pi = dd::pi();
        let g = c(0.5) * (dd::sin(pi * x) + pi * e / l * (dd::exp(-x / e) + dd::exp((x - one) / e) - one - em));
        let p = two * y * (one - y * y)
            + e * (l * d * (one - two * y) - three * q / l
                + (three / l - d) * dd::exp(-y / e)
                + (three / l + d) * dd::exp((y - one) / e));
        g * p
    }
}

fn pde_consistency() -> Outcome {
    dd::self_check()?;
    let product_1e2 = u_product(1e-2);
    let product_1e6 = u_product(1e-6);
    let runs: [(&str, &dyn Fn(Dd, Dd) -> Dd, ManufacturedCase, f64, Option<f64>); 4] = [
        ("internal-peak", &u_peak, cases::example_1(), 1e-4, None),
        ("interior-layer", &u_interior, cases::example_2(), 2e-4, None),
        ("boundary-layer-product eps=1e-2", &product_1e2, cases::example_3_with(1e-2), 2e-4, Some(0.05)),
        ("boundary-layer-product eps=1e-6", &product_1e6, cases::example_3(), 2e-8, Some(1e-5)),
    ];
    let mut report = Vec::new();
    let mut ok = true;
    for (name, u, case, h, layer) in runs {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let eps2 = case.eps * case.eps;
        let samples: Vec<(f64, f64, f64, f64)> = (0..1000)
            .map(|i| {
                let x: f64 = rng.random_range(0.001..0.999);
                let mut y: f64 = rng.random_range(0.001..0.999);
                if let Some(w) = layer.filter(|_| i % 5 == 0) {
                    y = rng.random_range(0.0..w);
                }
                let (lap, bilap) = dd::fd_operators(u, x, y, h);
                (eps2 * bilap - lap, eps2 * bilap.abs() + lap.abs(), (case.f)([x, y]), y)
            })
            .collect();
        let floor = 1e-12 * samples.iter().fold(0f64, |m, s| m.max(s.1));
        let worst = samples.iter().fold(0f64, |m, s| m.max((s.0 - s.2).abs() / s.1.max(floor)));
        ok &= worst <= 1e-7;
        report.push(format!("{name} {worst:.1e}"));
    }
    check(ok, format!("1000 points each, worst relative error: {} (tol 1e-7)", report.join(", ")))
}

fn run(case: &ManufacturedCase, mode: RefineMode, max_dof: usize, max_levels: usize) -> Result<AdaptHistory, String> {
    let cfg = AdaptConfig {
        theta: case.theta_default,
        mode,
        max_dof,
        max_levels,
        deterministic: true,
        ..AdaptConfig::default()
    };
    let out = adapt_loop(case, &cfg).map_err(|e| e.to_string())?;
    if let Some(f) = out.failure {
        return Err(format!("{}: solver failure {f}", case.name));
    }
    Ok(out.history)
}

fn uniform_convergence() -> Outcome {
    let h = run(&cases::example_1(), RefineMode::Uniform, usize::MAX, 4)?;
    if h.levels.len() != 4 {
        return Err(format!("ran {} levels", h.levels.len()));
    }
    let err: Vec<f64> = h.levels.iter().map(|r| r.error.unwrap_or(f64::NAN)).collect();
    let eta: Vec<f64> = h.levels.iter().map(|r| r.eta_h).collect();
    let strict = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let (fe, fh) = (err[0] / err[3], eta[0] / eta[3]);
    check(
        strict(&err) && strict(&eta) && fe >= 8.0 && fh >= 8.0,
        format!(
            "DOFs {:?}, error {:.3e} -> {:.3e} (x{fe:.1}), eta {:.3e} -> {:.3e} (x{fh:.1})",
            h.levels.iter().map(|r| r.dofs).collect::<Vec<_>>(),
            err[0],
            err[3],
            eta[0],
            eta[3]
        ),
    )
}

fn effectivity_stability() -> Outcome {
    let mut ok = true;
    let mut report = Vec::new();
    for case in [cases::example_1(), cases::example_2(), cases::example_3()] {
        let h = run(&case, RefineMode::Adaptive, 20_000, 200)?;
        let n = h.levels.len();
        if n < 3 {
            return Err(format!("{}: only {n} levels", case.name));
        }
        let eff: Vec<f64> = h.levels[n - 3..].iter().map(|r| r.effectivity.unwrap_or(f64::NAN)).collect();
        let max = eff.iter().cloned().fold(f64::NAN, f64::max);
        let min = eff.iter().cloned().fold(f64::NAN, f64::min);
        let ratio = max / min;
        ok &= ratio <= 3.0;
        report.push(format!(
            "{} ({} levels, {} DOFs) [{:.2}, {:.2}, {:.2}] ratio {ratio:.2}",
            case.name, n, h.levels[n - 1].dofs, eff[0], eff[1], eff[2]
        ));
    }
    check(ok, format!("{} (tol 3)", report.join("; ")))
}

fn fraction(mesh: &Mesh, near: impl Fn(Point) -> bool) -> f64 {
    let n = (0..mesh.num_cells()).filter(|&c| near(mesh.centroid(c))).count();
    n as f64 / mesh.num_cells() as f64
}

fn localisation() -> Outcome {
    let case = cases::example_1();
    let cfg = AdaptConfig {
        theta: case.theta_default,
        max_dof: 20_000,
        max_levels: 200,
        deterministic: true,
        ..AdaptConfig::default()
    };
    let out = adapt_loop(&case, &cfg).map_err(|e| e.to_string())?;
    let peak = fraction(&out.mesh, |p| (p[0] - 0.5).hypot(p[1] - 0.117) <= 0.2);

    let case = cases::example_4();
    let cfg = AdaptConfig { theta: case.theta_default, ..cfg };
    let mut fractions = Vec::new();
    let mesh = unit_square_mesh(cfg.initial_n).map_err(|e| e.to_string())?;
    adapt_observed(mesh, &case, &cfg, |_, m| {
        fractions.push(fraction(m, |p| p[0].min(p[1]).min(1.0 - p[0]).min(1.0 - p[1]) <= 0.1));
    })
    .map_err(|e| e.to_string())?;
    let n = fractions.len();
    if n < 3 {
        return Err(format!("four-layers ran only {n} levels"));
    }
    let last = &fractions[n - 3..];
    let increasing = last[1] > last[0] && last[2] > last[1];
    check(
        peak >= 0.4 && increasing,
        format!(
            "internal-peak final mesh {:.1}% of cells near the peak (need 40%); four-layers boundary fractions over last three levels {:.3}, {:.3}, {:.3}",
            100.0 * peak,
            last[0],
            last[1],
            last[2]
        ),
    )
}

fn adaptive_beats_uniform() -> Outcome {
    let case = cases::example_1();
    let ad = run(&case, RefineMode::Adaptive, 5000, 200)?;
    let un = run(&case, RefineMode::Uniform, 5000, 200)?;
    let (a, u) = (ad.levels.last().expect("level 0"), un.levels.last().expect("level 0"));
    check(
        a.eta_h < u.eta_h,
        format!("adaptive eta {:.3e} at {} DOFs vs uniform eta {:.3e} at {} DOFs", a.eta_h, a.dofs, u.eta_h, u.dofs),
    )
}
