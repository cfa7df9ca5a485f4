//! Quadrature on the reference triangle `(0,0), (1,0), (0,1)` and on segments.
//!
//! Weights are normalized to sum to one, so `∫_T g ≈ |T| Σ w_l g(x_l)`.

use crate::error::{FdlmError, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    /// Nodes in reference coordinates.
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    /// A positive rule exact for polynomials of total degree `degree`.
    ///
    /// Degrees 1, 2, 4 and 5 use the classical 1-, 3-, 6- and 7-point rules;
    /// other degrees use a collapsed (Duffy) tensor product of Gauss–Legendre
    /// rules.
    pub fn triangle(degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(FdlmError::invalid("quadrature degree must be >= 1"));
        }
        let rule = match degree {
            1 => Self {
                points: vec![Point2::new(1.0 / 3.0, 1.0 / 3.0)],
                weights: vec![1.0],
                degree,
            },
            2 => Self {
                points: vec![
                    Point2::new(1.0 / 6.0, 1.0 / 6.0),
                    Point2::new(2.0 / 3.0, 1.0 / 6.0),
                    Point2::new(1.0 / 6.0, 2.0 / 3.0),
                ],
                weights: vec![1.0 / 3.0; 3],
                degree,
            },
            4 => {
                let mut r = Self {
                    points: Vec::new(),
                    weights: Vec::new(),
                    degree,
                };
                r.push_orbit(0.445_948_490_915_965, 0.223_381_589_678_011);
                r.push_orbit(0.091_576_213_509_771, 0.109_951_743_655_322);
                r.normalize();
                r
            }
            5 => {
                let s15 = 15f64.sqrt();
                let mut r = Self {
                    points: vec![Point2::new(1.0 / 3.0, 1.0 / 3.0)],
                    weights: vec![9.0 / 40.0],
                    degree,
                };
                r.push_orbit((6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
                r.push_orbit((6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
                r
            }
            _ => Self::collapsed(degree),
        };
        Ok(rule)
    }

    fn push_orbit(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        self.points.push(Point2::new(a, a));
        self.points.push(Point2::new(b, a));
        self.points.push(Point2::new(a, b));
        self.weights.extend([w; 3]);
    }

    fn normalize(&mut self) {
        let s: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= s;
        }
    }

    fn collapsed(degree: usize) -> Self {
        // x = s (1 - t), y = t with Jacobian (1 - t): degree d in s, d + 1 in t.
        let gs = GaussLegendre::new((degree + 1).div_ceil(2));
        let gt = GaussLegendre::new((degree + 2).div_ceil(2));
        let mut points = Vec::with_capacity(gs.nodes.len() * gt.nodes.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for (t, wt) in gt.unit_nodes() {
            for (s, ws) in gs.unit_nodes() {
                points.push(Point2::new(s * (1.0 - t), t));
                // reference area 1/2 -> normalized weights
                weights.push(2.0 * ws * wt * (1.0 - t));
            }
        }
        Self {
            points,
            weights,
            degree,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Maps the nodes onto a physical triangle.
    pub fn map(&self, t: &[Point2; 3]) -> impl Iterator<Item = (Point2, f64)> + '_ {
        let [a, b, c] = *t;
        self.points.iter().zip(&self.weights).map(move |(p, &w)| {
            (a + p.x * (b - a) + p.y * (c - a), w)
        })
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Chebyshev initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }

    /// Nodes and weights transformed to `[0, 1]`.
    pub fn unit_nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
