//! Benchmark problems on the unit square.
//!
//! The three problems with known solutions are separable, `u = a(x) b(y)`,
//! so every derivative up to fourth order follows from univariate jets of
//! the two factors.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Point;

/// Truncated Taylor jet `[f, f', f'', f''', f'''']` of a univariate function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [f64; 5]);

impl Jet {
    pub fn constant(c: f64) -> Jet {
        Jet([c, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn var(x: f64) -> Jet {
        Jet([x, 1.0, 0.0, 0.0, 0.0])
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    pub fn d(&self, n: usize) -> f64 {
        self.0[n]
    }

    pub fn scale(self, s: f64) -> Jet {
        Jet(self.0.map(|v| v * s))
    }

    pub fn add(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }

    pub fn sub(self, o: Jet) -> Jet {
        Jet(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }

    pub fn offset(self, c: f64) -> Jet {
        let mut j = self;
        j.0[0] += c;
        j
    }

    pub fn mul(self, o: Jet) -> Jet {
        const BINOM: [[f64; 5]; 5] = [
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0, 0.0],
            [1.0, 3.0, 3.0, 1.0, 0.0],
            [1.0, 4.0, 6.0, 4.0, 1.0],
        ];
        Jet(std::array::from_fn(|n| (0..=n).map(|j| BINOM[n][j] * self.0[j] * o.0[n - j]).sum()))
    }

    /// `f(self)` given `f` and its first four derivatives at `self.value()`.
    pub fn compose(self, f: [f64; 5]) -> Jet {
        let [_, g1, g2, g3, g4] = self.0;
        Jet([
            f[0],
            f[1] * g1,
            f[2] * g1 * g1 + f[1] * g2,
            f[3] * g1.powi(3) + 3.0 * f[2] * g1 * g2 + f[1] * g3,
            f[4] * g1.powi(4) + 6.0 * f[3] * g1 * g1 * g2 + f[2] * (3.0 * g2 * g2 + 4.0 * g1 * g3) + f[1] * g4,
        ])
    }

    pub fn exp(self) -> Jet {
        let e = self.0[0].exp();
        self.compose([e; 5])
    }

    pub fn tanh(self) -> Jet {
        let t = self.0[0].tanh();
        let s = 1.0 - t * t;
        self.compose([t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0), 8.0 * t * s * (2.0 - 3.0 * t * t)])
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.0[0].sin_cos();
        self.compose([s, c, -s, -c, s])
    }
}

/// Values imposed on the eliminated boundary unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryData {
    /// Zero, as in the clamped problem.
    #[default]
    Homogeneous,
    /// Projected traces of the case's exact solution.
    Exact,
}

impl std::str::FromStr for BoundaryData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(BoundaryData::Homogeneous),
            "exact" => Ok(BoundaryData::Exact),
            other => Err(Error::InvalidArgument(format!("unknown boundary data `{other}` (homogeneous | exact)"))),
        }
    }
}

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>;
pub type Factor = Arc<dyn Fn(f64) -> Jet + Send + Sync>;

/// Exact solution with its gradient and Hessian.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarField,
    pub grad: VectorField,
    pub hess: MatrixField,
}

impl ExactSolution {
    pub fn separable(a: Factor, b: Factor) -> ExactSolution {
        let (a1, b1, a2, b2, a3, b3) = (a.clone(), b.clone(), a.clone(), b.clone(), a, b);
        ExactSolution {
            u: Arc::new(move |p| a1(p[0]).value() * b1(p[1]).value()),
            grad: Arc::new(move |p| {
                let (ja, jb) = (a2(p[0]), b2(p[1]));
                [ja.d(1) * jb.d(0), ja.d(0) * jb.d(1)]
            }),
            hess: Arc::new(move |p| {
                let (ja, jb) = (a3(p[0]), b3(p[1]));
                let m = ja.d(1) * jb.d(1);
                [[ja.d(2) * jb.d(0), m], [m, ja.d(0) * jb.d(2)]]
            }),
        }
    }
}

/// `eps^2 Δ²u - Δu` for `u = a(x) b(y)`.
pub fn separable_source(a: Factor, b: Factor, eps: f64) -> ScalarField {
    Arc::new(move |p| {
        let (ja, jb) = (a(p[0]), b(p[1]));
        let lap = ja.d(2) * jb.d(0) + ja.d(0) * jb.d(2);
        let bilap = ja.d(4) * jb.d(0) + 2.0 * ja.d(2) * jb.d(2) + ja.d(0) * jb.d(4);
        eps * eps * bilap - lap
    })
}

#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    /// Perturbation parameter the source was built for.
    pub eps: f64,
    pub eps_default: f64,
    pub theta_default: f64,
    pub f: ScalarField,
    pub exact: Option<ExactSolution>,
    /// Largest `|u|` sampled on the boundary, when `u` is known.
    pub boundary_value: Option<f64>,
    /// Largest `|grad u . n|` sampled on the boundary, when `u` is known.
    pub boundary_normal_derivative: Option<f64>,
    pub boundary_data: BoundaryData,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .field("eps", &self.eps)
            .field("theta_default", &self.theta_default)
            .field("has_exact", &self.has_exact())
            .field("boundary_value", &self.boundary_value)
            .field("boundary_normal_derivative", &self.boundary_normal_derivative)
            .field("boundary_data", &self.boundary_data)
            .finish()
    }
}

pub const CASE_NAMES: [&str; 4] = ["internal-peak", "interior-layer", "boundary-layer-product", "four-layers"];

impl ManufacturedCase {
    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Case with a known separable solution `a(x) b(y)`.
    pub fn from_separable(name: &str, eps: f64, eps_default: f64, theta_default: f64, a: Factor, b: Factor) -> Self {
        let exact = ExactSolution::separable(a.clone(), b.clone());
        let (value, normal) = boundary_magnitudes(&exact);
        ManufacturedCase {
            name: name.into(),
            eps,
            eps_default,
            theta_default,
            f: separable_source(a, b, eps),
            exact: Some(exact),
            boundary_value: Some(value),
            boundary_normal_derivative: Some(normal),
            boundary_data: BoundaryData::Homogeneous,
        }
    }

    /// Case with only a source term.
    pub fn source_only(name: &str, eps: f64, theta_default: f64, f: ScalarField) -> Self {
        ManufacturedCase {
            name: name.into(),
            eps,
            eps_default: eps,
            theta_default,
            f,
            exact: None,
            boundary_value: None,
            boundary_normal_derivative: None,
            boundary_data: BoundaryData::Homogeneous,
        }
    }
}

/// `(max |u|, max |grad u . n|)` sampled along the boundary.
fn boundary_magnitudes(exact: &ExactSolution) -> (f64, f64) {
    let n = 2000;
    let (mut value, mut worst): (f64, f64) = (0.0, 0.0);
    for i in 0..=n {
        let s = i as f64 / n as f64;
        for (p, normal) in [([s, 0.0], [0.0, -1.0]), ([s, 1.0], [0.0, 1.0]), ([0.0, s], [-1.0, 0.0]), ([1.0, s], [1.0, 0.0])] {
            let g = (exact.grad)(p);
            worst = worst.max((g[0] * normal[0] + g[1] * normal[1]).abs());
            value = value.max((exact.u)(p).abs());
        }
    }
    (value, worst)
}

/// `x(1-x) y(1-y) exp(-1000((x-0.5)^2 + (y-0.117)^2))`.
pub fn example_1_with(eps: f64) -> ManufacturedCase {
    let factor = |c: f64| -> Factor {
        Arc::new(move |t| {
            let x = Jet::var(t);
            let poly = x.mul(Jet::constant(1.0).sub(x));
            let arg = x.offset(-c);
            poly.mul(arg.mul(arg).scale(-1000.0).exp())
        })
    };
    ManufacturedCase::from_separable("internal-peak", eps, 1.0, 0.3, factor(0.5), factor(0.117))
}

pub fn example_1() -> ManufacturedCase {
    example_1_with(1.0)
}

/// `0.5 x(1-x)(1-y)(1 - tanh((beta - x)/gamma))`.
pub fn example_2_with(beta: f64, gamma: f64, eps: f64) -> ManufacturedCase {
    let a: Factor = Arc::new(move |t| {
        let x = Jet::var(t);
        let poly = x.mul(Jet::constant(1.0).sub(x)).scale(0.5);
        let layer = Jet::constant(1.0).sub(x.scale(-1.0).offset(beta).scale(1.0 / gamma).tanh());
        poly.mul(layer)
    });
    let b: Factor = Arc::new(|t| Jet::constant(1.0).sub(Jet::var(t)));
    // u(x, 0) = a(x) does not vanish, so the traces of u are imposed
    let mut case = ManufacturedCase::from_separable("interior-layer", eps, 1.0, 0.3, a, b);
    case.boundary_data = BoundaryData::Exact;
    case
}

pub fn example_2() -> ManufacturedCase {
    example_2_with(0.5, 0.05, 1.0)
}

/// Constants `(l, q, d)` of the boundary-layer product solution.
pub fn example_3_constants(eps: f64) -> (f64, f64, f64) {
    let l = -(-1.0 / eps).exp_m1();
    let q = 2.0 - l;
    let d = 1.0 / (q - 2.0 * eps * l);
    (l, q, d)
}

/// `u = g(x) p(y)` with boundary layers of width `eps`.
pub fn example_3_with(eps: f64) -> ManufacturedCase {
    let (l, q, d) = example_3_constants(eps);
    let tail = (-1.0 / eps).exp();
    let pi = std::f64::consts::PI;
    // exponent arguments are <= 0 on [0, 1], so nothing overflows
    let g: Factor = Arc::new(move |t| {
        let x = Jet::var(t);
        let e1 = x.scale(-1.0 / eps).exp();
        let e2 = x.offset(-1.0).scale(1.0 / eps).exp();
        let layer = e1.add(e2).offset(-1.0 - tail).scale(pi * eps / l);
        x.scale(pi).sin().add(layer).scale(0.5)
    });
    let p: Factor = Arc::new(move |t| {
        let y = Jet::var(t);
        let smooth = y.mul(Jet::constant(1.0).sub(y.mul(y))).scale(2.0);
        let e1 = y.scale(-1.0 / eps).exp();
        let e2 = y.offset(-1.0).scale(1.0 / eps).exp();
        let layer = Jet::constant(1.0)
            .sub(y.scale(2.0))
            .scale(l * d)
            .offset(-3.0 * q / l)
            .add(e1.scale(3.0 / l - d))
            .add(e2.scale(3.0 / l + d));
        smooth.add(layer.scale(eps))
    });
    ManufacturedCase::from_separable("boundary-layer-product", eps, 1e-6, 0.5, g, p)
}

pub fn example_3() -> ManufacturedCase {
    example_3_with(1e-6)
}

/// `f = 2 pi^2 (1 - cos 2 pi x cos 2 pi y)`; no closed-form solution.
pub fn example_4_with(eps: f64) -> ManufacturedCase {
    let tau = 2.0 * std::f64::consts::PI;
    let f: ScalarField = Arc::new(move |p| {
        0.5 * tau * tau * (1.0 - (tau * p[0]).cos() * (tau * p[1]).cos())
    });
    let mut c = ManufacturedCase::source_only("four-layers", eps, 0.3, f);
    c.eps_default = 1e-6;
    c
}

pub fn example_4() -> ManufacturedCase {
    example_4_with(1e-6)
}

/// Looks a case up by registry name; `eps` overrides the case default.
pub fn by_name(name: &str, eps: Option<f64>) -> Result<ManufacturedCase> {
    let case = match name {
        "internal-peak" => example_1_with(eps.unwrap_or(1.0)),
        "interior-layer" => example_2_with(0.5, 0.05, eps.unwrap_or(1.0)),
        "boundary-layer-product" => example_3_with(eps.unwrap_or(1e-6)),
        "four-layers" => example_4_with(eps.unwrap_or(1e-6)),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown case `{other}` (known: {})",
                CASE_NAMES.join(", ")
            )))
        }
    };
    if !(case.eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {}", case.eps)));
    }
    Ok(case)
}
