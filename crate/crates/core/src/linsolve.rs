//! Sparse symmetric storage and SPD solvers.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// input order, so the result is bit-reproducible.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> SparseMatrix {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len() / 4);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 4);
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> SparseMatrix {
        SparseMatrix::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `x^T A y`.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.mul_vec(y)).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// Sparse Cholesky with a fill-reducing ordering.
    #[default]
    Cholesky,
    /// Jacobi-preconditioned conjugate gradients.
    ConjugateGradient,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// `||K x - F|| / ||F||` (0 when `F = 0`).
    pub relative_residual: f64,
    pub kind: SolverKind,
    /// Refinement steps for Cholesky, iterations for CG.
    pub iterations: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(k: &SparseMatrix, x: &[f64], f: &[f64]) -> Vec<f64> {
    k.mul_vec(x).iter().zip(f).map(|(a, b)| b - a).collect()
}

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

pub fn solve_spd(k: &SparseMatrix, f: &[f64]) -> Result<SolveReport> {
    solve_with(k, f, SolverKind::Cholesky)
}

pub fn solve_with(k: &SparseMatrix, f: &[f64], kind: SolverKind) -> Result<SolveReport> {
    if f.len() != k.n {
        return Err(Error::Contract(format!("rhs has length {}, matrix is {}x{}", f.len(), k.n, k.n)));
    }
    let fnorm = norm(f);
    if fnorm == 0.0 {
        return Ok(SolveReport {
            solution: vec![0.0; k.n],
            relative_residual: 0.0,
            kind,
            iterations: 0,
        });
    }
    match kind {
        SolverKind::Cholesky => cholesky(k, f, fnorm),
        SolverKind::ConjugateGradient => conjugate_gradient(k, f, fnorm, 1e-12, 20 * k.n + 100),
    }
}

fn cholesky(k: &SparseMatrix, f: &[f64], fnorm: f64) -> Result<SolveReport> {
    let n = k.n;
    let mut upper = Vec::with_capacity(k.nnz() / 2 + n);
    for i in 0..n {
        for (j, v) in k.row(i) {
            if i <= j {
                upper.push(Triplet::new(i, j, v));
            }
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &upper)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let llt = a.sp_cholesky(Side::Upper).map_err(|e| match e {
        faer::sparse::linalg::LltError::Numeric(
            faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index },
        ) => Error::NotPositiveDefinite { pivot: index },
        other => Error::Solver(format!("{other:?}")),
    })?;
    let solve = |rhs: &[f64]| {
        let mut b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        llt.solve_in_place(b.as_mut());
        (0..n).map(|i| b[(i, 0)]).collect::<Vec<f64>>()
    };
    let mut x = solve(f);
    let mut r = residual(k, &x, f);
    let mut rel = norm(&r) / fnorm;
    let mut steps = 0;
    // iterative refinement for badly scaled systems
    while rel > 0.1 * RESIDUAL_TOLERANCE && steps < 4 {
        let dx = solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let rc = residual(k, &candidate, f);
        let relc = norm(&rc) / fnorm;
        steps += 1;
        if relc >= rel {
            break;
        }
        x = candidate;
        r = rc;
        rel = relc;
    }
    if !rel.is_finite() {
        return Err(Error::Solver("non-finite solution".into()));
    }
    Ok(SolveReport {
        solution: x,
        relative_residual: rel,
        kind: SolverKind::Cholesky,
        iterations: steps,
    })
}

fn conjugate_gradient(k: &SparseMatrix, f: &[f64], fnorm: f64, tol: f64, max_iter: usize) -> Result<SolveReport> {
    let n = k.n;
    let diag = k.diagonal();
    if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
        return Err(Error::NotPositiveDefinite { pivot: i });
    }
    let mut x = vec![0.0; n];
    let mut r = f.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut it = 0;
    while it < max_iter {
        let ap = k.mul_vec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Solver(format!("conjugate gradients broke down at iteration {it}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        if norm(&r) / fnorm <= tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&residual(k, &x, f)) / fnorm;
    if rel > RESIDUAL_TOLERANCE {
        return Err(Error::Solver(format!(
            "conjugate gradients stalled at relative residual {rel:.3e} after {it} iterations"
        )));
    }
    Ok(SolveReport {
        solution: x,
        relative_residual: rel,
        kind: SolverKind::ConjugateGradient,
        iterations: it,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_spd(n: usize, seed: u64) -> SparseMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut s: f64 = (0..n).map(|m| a[m * n + i] * a[m * n + j]).sum();
                if i == j {
                    s += 1.0;
                }
                t.push((i, j, s));
            }
        }
        SparseMatrix::from_triplets(n, t)
    }

    #[test]
    fn identity_and_zero_rhs() {
        let k = SparseMatrix::identity(3);
        let r = solve_spd(&k, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.solution, vec![1.0, 2.0, 3.0]);
        let r = solve_spd(&k, &[0.0; 3]).unwrap();
        assert_eq!(r.solution, vec![0.0; 3]);
        assert!(solve_spd(&k, &[1.0]).is_err());
    }

    #[test]
    fn random_spd_residual() {
        let k = random_spd(50, 1);
        let f: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        for kind in [SolverKind::Cholesky, SolverKind::ConjugateGradient] {
            let r = solve_with(&k, &f, kind).unwrap();
            assert!(r.relative_residual <= 1e-10, "{kind:?}: {}", r.relative_residual);
        }
        let a = solve_spd(&k, &f).unwrap().solution;
        let b = solve_spd(&k, &f).unwrap().solution;
        assert_eq!(a, b);
    }

    #[test]
    fn indefinite_reports_pivot() {
        let k = SparseMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(solve_spd(&k, &[1.0, 1.0]), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn duplicates_are_summed() {
        let k = SparseMatrix::from_triplets(2, vec![(0, 1, 1.0), (1, 0, 2.0), (0, 1, 0.5)]);
        assert_eq!(k.get(0, 1), 1.5);
        assert_eq!(k.get(1, 0), 2.0);
        assert_eq!(k.max_asymmetry(), 0.5);
        assert_eq!(k.nnz(), 2);
    }
}
