//! Dense bivariate polynomials.
//!
//! Used both for finite-element shape functions (in cell-local scaled
//! coordinates) and for the closed-form manufactured solutions, where exact
//! differentiation replaces hand-expanded derivative formulas.

use std::ops::{Add, Mul, Neg, Sub};

/// Polynomial `sum c[i][j] x^i y^j` with `i <= deg_x`, `j <= deg_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2 {
    deg_x: usize,
    deg_y: usize,
    coeffs: Vec<f64>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(value: f64) -> Self {
        Self {
            deg_x: 0,
            deg_y: 0,
            coeffs: vec![value],
        }
    }

    pub fn monomial(i: usize, j: usize, coeff: f64) -> Self {
        let mut p = Self::with_degrees(i, j);
        p.set(i, j, coeff);
        p
    }

    pub fn x() -> Self {
        Self::monomial(1, 0, 1.0)
    }

    pub fn y() -> Self {
        Self::monomial(0, 1, 1.0)
    }

    /// Univariate polynomial in `x` from ascending coefficients.
    pub fn in_x(coeffs: &[f64]) -> Self {
        let mut p = Self::with_degrees(coeffs.len().saturating_sub(1), 0);
        for (i, &c) in coeffs.iter().enumerate() {
            p.set(i, 0, c);
        }
        p
    }

    /// Univariate polynomial in `y` from ascending coefficients.
    pub fn in_y(coeffs: &[f64]) -> Self {
        let mut p = Self::with_degrees(0, coeffs.len().saturating_sub(1));
        for (j, &c) in coeffs.iter().enumerate() {
            p.set(0, j, c);
        }
        p
    }

    fn with_degrees(deg_x: usize, deg_y: usize) -> Self {
        Self {
            deg_x,
            deg_y,
            coeffs: vec![0.0; (deg_x + 1) * (deg_y + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.deg_y + 1) + j
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i > self.deg_x || j > self.deg_y {
            0.0
        } else {
            self.coeffs[self.idx(i, j)]
        }
    }

    fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.idx(i, j);
        self.coeffs[k] = value;
    }

    pub fn deg_x(&self) -> usize {
        self.deg_x
    }

    pub fn deg_y(&self) -> usize {
        self.deg_y
    }

    /// Highest total degree carrying a nonzero coefficient.
    pub fn total_degree(&self) -> usize {
        let mut d = 0;
        for i in 0..=self.deg_x {
            for j in 0..=self.deg_y {
                if self.coeffs[self.idx(i, j)] != 0.0 {
                    d = d.max(i + j);
                }
            }
        }
        d
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for i in (0..=self.deg_x).rev() {
            let row = &self.coeffs[i * (self.deg_y + 1)..(i + 1) * (self.deg_y + 1)];
            let mut inner = 0.0;
            for &c in row.iter().rev() {
                inner = inner * y + c;
            }
            acc = acc * x + inner;
        }
        acc
    }

    pub fn dx(&self) -> Self {
        if self.deg_x == 0 {
            return Self::zero();
        }
        let mut p = Self::with_degrees(self.deg_x - 1, self.deg_y);
        for i in 1..=self.deg_x {
            for j in 0..=self.deg_y {
                p.set(i - 1, j, i as f64 * self.coeff(i, j));
            }
        }
        p
    }

    pub fn dy(&self) -> Self {
        if self.deg_y == 0 {
            return Self::zero();
        }
        let mut p = Self::with_degrees(self.deg_x, self.deg_y - 1);
        for i in 0..=self.deg_x {
            for j in 1..=self.deg_y {
                p.set(i, j - 1, j as f64 * self.coeff(i, j));
            }
        }
        p
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            deg_x: self.deg_x,
            deg_y: self.deg_y,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self += s * other`, growing storage as needed.
    pub fn add_scaled(&mut self, s: f64, other: &Poly2) {
        if other.deg_x > self.deg_x || other.deg_y > self.deg_y {
            let mut grown = Self::with_degrees(self.deg_x.max(other.deg_x), self.deg_y.max(other.deg_y));
            for i in 0..=self.deg_x {
                for j in 0..=self.deg_y {
                    grown.set(i, j, self.coeff(i, j));
                }
            }
            *self = grown;
        }
        for i in 0..=other.deg_x {
            for j in 0..=other.deg_y {
                let k = self.idx(i, j);
                self.coeffs[k] += s * other.coeff(i, j);
            }
        }
    }
}

impl Add for &Poly2 {
    type Output = Poly2;
    fn add(self, rhs: &Poly2) -> Poly2 {
        let mut out = self.clone();
        out.add_scaled(1.0, rhs);
        out
    }
}

impl Sub for &Poly2 {
    type Output = Poly2;
    fn sub(self, rhs: &Poly2) -> Poly2 {
        let mut out = self.clone();
        out.add_scaled(-1.0, rhs);
        out
    }
}

impl Mul for &Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: &Poly2) -> Poly2 {
        let mut out = Poly2::with_degrees(self.deg_x + rhs.deg_x, self.deg_y + rhs.deg_y);
        for i in 0..=self.deg_x {
            for j in 0..=self.deg_y {
                let a = self.coeff(i, j);
                if a == 0.0 {
                    continue;
                }
                for p in 0..=rhs.deg_x {
                    for q in 0..=rhs.deg_y {
                        let k = out.idx(i + p, j + q);
                        out.coeffs[k] += a * rhs.coeff(p, q);
                    }
                }
            }
        }
        out
    }
}

impl Mul<f64> for &Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: f64) -> Poly2 {
        self.scale(rhs)
    }
}

impl Neg for &Poly2 {
    type Output = Poly2;
    fn neg(self) -> Poly2 {
        self.scale(-1.0)
    }
}

/// Value and first/second derivatives of a polynomial at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    /// `[d_xx, d_xy, d_yy]`
    pub hess: [f64; 3],
}

/// A polynomial together with its precomputed partial derivatives.
#[derive(Clone, Debug)]
pub struct PolyJet {
    pub p: Poly2,
    pub px: Poly2,
    pub py: Poly2,
    pub pxx: Poly2,
    pub pxy: Poly2,
    pub pyy: Poly2,
}

impl PolyJet {
    pub fn new(p: Poly2) -> Self {
        let px = p.dx();
        let py = p.dy();
        let pxx = px.dx();
        let pxy = px.dy();
        let pyy = py.dy();
        Self {
            p,
            px,
            py,
            pxx,
            pxy,
            pyy,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Jet {
        Jet {
            value: self.p.eval(x, y),
            grad: [self.px.eval(x, y), self.py.eval(x, y)],
            hess: [self.pxx.eval(x, y), self.pxy.eval(x, y), self.pyy.eval(x, y)],
        }
    }
}

/// Legendre polynomial `P_n` shifted to `[0, 1]`, evaluated by recurrence.
pub fn shifted_legendre(n: usize, s: f64) -> f64 {
    let t = 2.0 * s - 1.0;
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return p0;
    }
    for m in 1..n {
        let m = m as f64;
        let p2 = ((2.0 * m + 1.0) * t * p1 - m * p0) / (m + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}
