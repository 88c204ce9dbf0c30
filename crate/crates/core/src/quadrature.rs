//! Gauss-type quadrature on the reference interval, triangle and square.
//!
//! Reference cells: `[0, 1]`, the unit triangle `{x, y >= 0, x + y <= 1}`
//! and the unit square `[0, 1]^2`. Square rules are tensor Gauss-Legendre;
//! triangle rules are collapsed (Duffy) Gauss-Legendre products, which are
//! exact for every total degree up to the requested one.

use crate::error::{Error, Result};

/// Highest polynomial exactness served by [`quad_rule`].
pub const MAX_EXACTNESS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReferenceCell {
    Interval,
    Triangle,
    Square,
}

impl ReferenceCell {
    pub fn measure(self) -> f64 {
        match self {
            ReferenceCell::Interval | ReferenceCell::Square => 1.0,
            ReferenceCell::Triangle => 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadRule {
    pub cell: ReferenceCell,
    /// Reference coordinates; the second entry is zero on the interval.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Total degree (triangle, interval) or per-variable degree (square)
    /// integrated exactly.
    pub exactness: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for m in 1..n {
        let m = m as f64;
        let p2 = ((2.0 * m + 1.0) * x * p1 - m * p0) / (m + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Number of Gauss points needed for exactness `d` in one variable.
fn points_for(d: usize) -> usize {
    d / 2 + 1
}

/// Quadrature rule on `cell` exact to degree at least `exactness`.
pub fn quad_rule(cell: ReferenceCell, exactness: usize) -> Result<QuadRule> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::UnsupportedQuadrature {
            requested: exactness,
            ceiling: MAX_EXACTNESS,
        });
    }
    let (points, weights) = match cell {
        ReferenceCell::Interval => gauss_legendre(points_for(exactness))
            .into_iter()
            .map(|(s, w)| ([s, 0.0], w))
            .unzip(),
        ReferenceCell::Square => {
            let g = gauss_legendre(points_for(exactness));
            let mut pts = Vec::with_capacity(g.len() * g.len());
            let mut wts = Vec::with_capacity(g.len() * g.len());
            for &(y, wy) in &g {
                for &(x, wx) in &g {
                    pts.push([x, y]);
                    wts.push(wx * wy);
                }
            }
            (pts, wts)
        }
        ReferenceCell::Triangle => {
            // (u, v) in [0,1]^2 -> (u (1 - v), v), Jacobian (1 - v); the
            // v-direction integrand gains one degree from the Jacobian.
            let gu = gauss_legendre(points_for(exactness));
            let gv = gauss_legendre(points_for(exactness + 1));
            let mut pts = Vec::with_capacity(gu.len() * gv.len());
            let mut wts = Vec::with_capacity(gu.len() * gv.len());
            for &(v, wv) in &gv {
                for &(u, wu) in &gu {
                    pts.push([u * (1.0 - v), v]);
                    wts.push(wu * wv * (1.0 - v));
                }
            }
            (pts, wts)
        }
    };
    Ok(QuadRule {
        cell,
        points,
        weights,
        exactness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Closed form of the integral of `x^a y^b` over the unit triangle.
    fn triangle_monomial(a: usize, b: usize) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn square_degree_one_is_the_midpoint_rule() {
        let r = quad_rule(ReferenceCell::Square, 1).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.points[0][0] - 0.5).abs() < 1e-15);
        assert!((r.points[0][1] - 0.5).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_degree_zero_is_single_point() {
        let r = quad_rule(ReferenceCell::Triangle, 0).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.weights[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn triangle_x_squared() {
        let r = quad_rule(ReferenceCell::Triangle, 2).unwrap();
        let v: f64 = r.iter().map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_measure() {
        for cell in [ReferenceCell::Interval, ReferenceCell::Triangle, ReferenceCell::Square] {
            for d in 0..=20 {
                let r = quad_rule(cell, d).unwrap();
                let s: f64 = r.weights.iter().sum();
                assert!((s - cell.measure()).abs() < 1e-14, "{cell:?} {d}");
                assert!(r.weights.iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn monomial_exactness_sweep() {
        for d in 0..=24 {
            let tri = quad_rule(ReferenceCell::Triangle, d).unwrap();
            let sq = quad_rule(ReferenceCell::Square, d).unwrap();
            let line = quad_rule(ReferenceCell::Interval, d).unwrap();
            for a in 0..=d {
                let v: f64 = line.iter().map(|(p, w)| w * p[0].powi(a as i32)).sum();
                let exact = 1.0 / (a + 1) as f64;
                assert!(((v - exact) / exact).abs() < 1e-14, "interval d={d} a={a}");
                for b in 0..=d {
                    let v: f64 = sq
                        .iter()
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = 1.0 / ((a + 1) * (b + 1)) as f64;
                    assert!(((v - exact) / exact).abs() < 1e-14, "square d={d} a={a} b={b}");
                    if a + b <= d {
                        let v: f64 = tri
                            .iter()
                            .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                            .sum();
                        let exact = triangle_monomial(a, b);
                        assert!(((v - exact) / exact).abs() < 1e-14, "triangle d={d} a={a} b={b}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_exactness_above_ceiling() {
        assert!(matches!(
            quad_rule(ReferenceCell::Triangle, MAX_EXACTNESS + 1),
            Err(Error::UnsupportedQuadrature { .. })
        ));
        assert!(quad_rule(ReferenceCell::Triangle, 12).is_ok());
    }
}
