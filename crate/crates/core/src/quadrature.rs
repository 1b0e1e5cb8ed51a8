//! Gauss-Legendre rules on the unit interval and collapsed (Duffy) product
//! rules on the reference triangle `{(0,0), (1,0), (0,1)}`.

use crate::error::{Error, Result};

/// Highest polynomial exactness the rule generators accept.
pub const MAX_EXACTNESS: usize = 40;

/// A quadrature rule. Cell rules store barycentric nodes `(l0, l1, l2)` with
/// weights summing to the reference-triangle area 1/2; edge rules store the
/// parameter `s` in `[0, 1]` in `points[i][0]` with weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn check_exactness(exactness: usize) -> Result<()> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::QuadratureUnavailable {
            requested: exactness,
            max: MAX_EXACTNESS,
        });
    }
    Ok(())
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of degree `<= exactness`.
pub fn edge_quadrature(exactness: usize) -> Result<QuadRule> {
    check_exactness(exactness)?;
    let n = (exactness + 2) / 2;
    let (x, w) = gauss_legendre(n.max(1));
    Ok(QuadRule {
        points: x.iter().map(|&t| [0.5 * (t + 1.0), 0.0, 0.0]).collect(),
        weights: w.iter().map(|&w| 0.5 * w).collect(),
        exactness,
    })
}

/// Collapsed product rule on the reference triangle exact for bivariate
/// polynomials of total degree `<= exactness`. All weights are positive.
pub fn cell_quadrature(exactness: usize) -> Result<QuadRule> {
    check_exactness(exactness)?;
    // x = u, y = v (1 - u), dA = (1 - u) du dv.
    let nu = (exactness + 3) / 2;
    let nv = (exactness + 2) / 2;
    let (xu, wu) = gauss_legendre(nu.max(1));
    let (xv, wv) = gauss_legendre(nv.max(1));
    let mut points = Vec::with_capacity(xu.len() * xv.len());
    let mut weights = Vec::with_capacity(xu.len() * xv.len());
    for (tu, wu) in xu.iter().zip(&wu) {
        let u = 0.5 * (tu + 1.0);
        for (tv, wv) in xv.iter().zip(&wv) {
            let v = 0.5 * (tv + 1.0);
            let x = u;
            let y = v * (1.0 - u);
            points.push([1.0 - x - y, x, y]);
            weights.push(0.25 * wu * wv * (1.0 - u));
        }
    }
    Ok(QuadRule {
        points,
        weights,
        exactness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    fn integrate_monomial(rule: &QuadRule, a: i32, b: i32) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[1].powi(a) * p[2].powi(b))
            .sum()
    }

    #[test]
    fn reference_triangle_values() {
        let rule = cell_quadrature(6).unwrap();
        assert!((integrate_monomial(&rule, 0, 0) - 0.5).abs() < 1e-15);
        assert!((integrate_monomial(&rule, 1, 0) - 1.0 / 6.0).abs() < 1e-15);
        let v = integrate_monomial(&rule, 2, 2);
        assert!(((v - 1.0 / 180.0) / (1.0 / 180.0)).abs() < 1e-13);
    }

    #[test]
    fn exactness_sweep_against_beta_integrals() {
        for p in 0..=14usize {
            let rule = cell_quadrature(p).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=p as u32 {
                for b in 0..=(p as u32 - a) {
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let got = integrate_monomial(&rule, a as i32, b as i32);
                    assert!(
                        ((got - exact) / exact).abs() <= 1e-13,
                        "p={p} a={a} b={b}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn edge_rules() {
        let r = edge_quadrature(0).unwrap();
        let one: f64 = r.weights.iter().sum();
        assert!((one - 1.0).abs() < 1e-15);
        let r = edge_quadrature(2).unwrap();
        let s2: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((s2 - 1.0 / 3.0).abs() < 1e-15);
        // three Gauss points integrate s^5 exactly
        let r = edge_quadrature(5).unwrap();
        assert_eq!(r.len(), 3);
        let s5: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[0].powi(5)).sum();
        assert!(((s5 - 1.0 / 6.0) * 6.0).abs() < 1e-13);
        for p in 0..=20 {
            let r = edge_quadrature(p).unwrap();
            for j in 0..=p as i32 {
                let got: f64 = r.points.iter().zip(&r.weights).map(|(q, w)| w * q[0].powi(j)).sum();
                let exact = 1.0 / (j as f64 + 1.0);
                assert!(((got - exact) / exact).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn unsupported_exactness_reports_maximum() {
        match cell_quadrature(MAX_EXACTNESS + 1) {
            Err(Error::QuadratureUnavailable { max, .. }) => assert_eq!(max, MAX_EXACTNESS),
            other => panic!("unexpected {other:?}"),
        }
        assert!(edge_quadrature(MAX_EXACTNESS + 5).is_err());
    }
}
