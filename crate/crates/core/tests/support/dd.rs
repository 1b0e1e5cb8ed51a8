//! Double-double arithmetic and a finite-difference oracle for `Δu` and
//! `Δ²u`, used to check the closed-form sources of the manufactured cases.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    pub fn pair(hi: f64, lo: f64) -> Dd {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = quick_two_sum(s, e + t);
        quick_two_sum(r.hi, r.lo + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * c(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * c(q2);
        let q3 = r.hi / o.hi;
        quick_two_sum(q1, q2) + c(q3)
    }
}

pub fn c(x: f64) -> Dd {
    Dd::from(x)
}

const LN2: (f64, f64) = (0.6931471805599453, 2.3190468138462996e-17);
const PI: (f64, f64) = (3.141592653589793, 1.2246467991473532e-16);

pub fn pi() -> Dd {
    Dd::pair(PI.0, PI.1)
}

/// `x = n ln2 + 256 r`, Taylor series for `e^r`, then eight squarings.
pub fn exp(x: Dd) -> Dd {
    if x.hi < -700.0 {
        return c(0.0);
    }
    let n = (x.hi / LN2.0).round();
    let r = (x - Dd::pair(LN2.0, LN2.1) * c(n)) / c(256.0);
    let mut term = c(1.0);
    let mut sum = c(1.0);
    for i in 1..25 {
        term = term * r / c(i as f64);
        sum = sum + term;
    }
    for _ in 0..8 {
        sum = sum * sum;
    }
    sum * c(2f64.powi(n as i32))
}

/// Taylor series; intended for `|x| <= 4`.
pub fn sin(x: Dd) -> Dd {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for i in 1..40 {
        term = -term * x2 / c(((2 * i) * (2 * i + 1)) as f64);
        sum = sum + term;
    }
    sum
}

pub fn tanh(x: Dd) -> Dd {
    let e = exp(c(2.0) * x);
    (e - c(1.0)) / (e + c(1.0))
}

/// `(Δu, Δ²u)` at `(x, y)` from the 5-point Laplacian and 13-point
/// biharmonic stencils at steps `h, h/2, h/4`, Richardson-extrapolated
/// twice to sixth order.
pub fn fd_operators(u: &dyn Fn(Dd, Dd) -> Dd, x: f64, y: f64, h: f64) -> (f64, f64) {
    let at = |h: f64| {
        let (x, y, h) = (c(x), c(y), c(h));
        let v = |i: i32, j: i32| u(x + c(i as f64) * h, y + c(j as f64) * h);
        let center = v(0, 0);
        let cross = v(1, 0) + v(-1, 0) + v(0, 1) + v(0, -1);
        let lap = (cross - c(4.0) * center) / (h * h);
        let diag = v(1, 1) + v(1, -1) + v(-1, 1) + v(-1, -1);
        let far = v(2, 0) + v(-2, 0) + v(0, 2) + v(0, -2);
        let bilap = (c(20.0) * center - c(8.0) * cross + c(2.0) * diag + far) / (h * h * h * h);
        (lap, bilap)
    };
    let (l0, b0) = at(h);
    let (l1, b1) = at(h / 2.0);
    let (l2, b2) = at(h / 4.0);
    let extrapolate = |f0: Dd, f1: Dd, f2: Dd| {
        let g0 = (c(4.0) * f1 - f0) / c(3.0);
        let g1 = (c(4.0) * f2 - f1) / c(3.0);
        ((c(16.0) * g1 - g0) / c(15.0)).to_f64()
    };
    (extrapolate(l0, l1, l2), extrapolate(b0, b1, b2))
}

#[allow(dead_code)]
pub fn self_check() -> Result<(), String> {
    let third = c(1.0) / c(3.0);
    let r = (third * c(3.0) - c(1.0)).to_f64().abs();
    if r > 1e-31 {
        return Err(format!("1/3 * 3 - 1 = {r:e}"));
    }
    let e = exp(c(1.0)) - Dd::pair(2.718281828459045, 1.4456468917292502e-16);
    if e.to_f64().abs() > 1e-30 {
        return Err(format!("exp(1) off by {:e}", e.to_f64()));
    }
    let s = sin(pi() / c(6.0)) - c(0.5);
    if s.to_f64().abs() > 1e-30 {
        return Err(format!("sin(pi/6) off by {:e}", s.to_f64()));
    }
    Ok(())
}
