use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Highest polynomial degree for which a sphere rule is provided.
pub const MAX_QUADRATURE_ORDER: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureNode {
    /// Unit vector (x, y, z).
    pub direction: [f64; 3],
    /// Polar and azimuthal angles of `direction`.
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule on the unit sphere exact for polynomials of degree ≤ `order`.
///
/// Gauss–Legendre in cos θ with ⌈(order+1)/2⌉ nodes times a uniform
/// azimuthal grid of order+1 nodes. Weights sum to 4π.
pub fn sphere_quadrature(order: usize) -> Result<Vec<QuadratureNode>> {
    if order == 0 || order > MAX_QUADRATURE_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let n_theta = (order + 2) / 2;
    let n_phi = order + 1;
    let (zs, ws) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (&z, &w) in zs.iter().zip(&ws) {
        let theta = z.acos();
        let s = (1.0 - z * z).max(0.0).sqrt();
        for k in 0..n_phi {
            let phi = k as f64 * dphi;
            out.push(QuadratureNode {
                direction: [s * phi.cos(), s * phi.sin(), z],
                theta,
                phi,
                weight: w * dphi,
            });
        }
    }
    Ok(out)
}
