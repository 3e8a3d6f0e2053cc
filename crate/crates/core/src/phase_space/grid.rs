use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use super::{ScalarField, SpherePoint};
use crate::error::{Error, Result};

/// Product quadrature on the sphere: Gauss–Legendre in `cos θ` times the
/// uniform rule in `φ`. Node `(i, j)` is stored at index `i·n_φ + j`.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    n_theta: usize,
    n_phi: usize,
    cos_theta: Vec<f64>,
    ring_weights: Vec<f64>,
    nodes: Vec<SpherePoint>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 1 {
            return Err(Error::InvalidArgument(format!("grid {n_theta}x{n_phi} too small")));
        }
        let gl = GaussLegendre::new(n_theta).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        // North to south.
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let cos_theta: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ring_weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in cos_theta.iter().zip(&ring_weights) {
            let theta = c.clamp(-1.0, 1.0).acos();
            for j in 0..n_phi {
                nodes.push(SpherePoint::from_angles(theta, j as f64 * dphi));
                weights.push(w * dphi);
            }
        }
        Ok(Self { n_theta, n_phi, cos_theta, ring_weights, nodes, weights })
    }

    /// `n_θ = max(64, 2m + 16)`, `n_φ = 2 n_θ`.
    pub fn for_quantum_number(m: usize) -> Self {
        let n_theta = 64.max(2 * m + 16);
        Self::new(n_theta, 2 * n_theta).expect("valid sizes")
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SpherePoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Gauss–Legendre nodes in `cos θ`, north to south.
    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn ring_weights(&self) -> &[f64] {
        &self.ring_weights
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi as f64
    }

    /// Highest total degree of polynomials in `q` integrated exactly.
    pub fn exact_degree(&self) -> usize {
        (2 * self.n_theta - 1).min(self.n_phi - 1)
    }

    /// Mean distance between neighbouring nodes in `θ`.
    pub fn spacing(&self) -> f64 {
        PI / self.n_theta as f64
    }

    pub fn integrate(&self, f: impl Fn(&SpherePoint) -> f64 + Sync) -> f64 {
        let vals: Vec<f64> = self.nodes.par_iter().map(&f).collect();
        vals.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn integrate_field(&self, f: &ScalarField) -> f64 {
        self.integrate(|q| f.value(q))
    }

    /// Sum of weights of nodes satisfying `pred`.
    pub fn area_where(&self, pred: impl Fn(&SpherePoint) -> bool + Sync) -> f64 {
        let hits: Vec<bool> = self.nodes.par_iter().map(&pred).collect();
        hits.iter().zip(&self.weights).filter(|(h, _)| **h).map(|(_, w)| w).sum()
    }
}

/// Grid maximum of `h` followed by 20 steps of projected ascent with
/// tangent central-difference gradients from the best node.
///
/// Steps are normalized, so `h` and `c·h` (`c > 0` a power of two) follow
/// bitwise identical paths.
pub fn refine_max_on_sphere(h: impl Fn(&SpherePoint) -> f64 + Sync, grid: &QuadratureGrid) -> (f64, SpherePoint) {
    let vals: Vec<f64> = grid.nodes().par_iter().map(&h).collect();
    let (mut idx, mut best) = (0, f64::NEG_INFINITY);
    for (i, v) in vals.iter().enumerate() {
        if *v > best {
            best = *v;
            idx = i;
        }
    }
    let mut q = grid.nodes()[idx];
    let mut step = grid.spacing();
    const T: f64 = 1e-6;
    for _ in 0..20 {
        let (e1, e2) = q.tangent_basis();
        let d1 = (h(&q.retract(&(e1 * T))) - h(&q.retract(&(e1 * -T)))) / (2.0 * T);
        let d2 = (h(&q.retract(&(e2 * T))) - h(&q.retract(&(e2 * -T)))) / (2.0 * T);
        let norm = (d1 * d1 + d2 * d2).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        let dir = e1 * (d1 / norm) + e2 * (d2 / norm);
        let trial = q.retract(&(dir * step));
        let v = h(&trial);
        if v > best {
            best = v;
            q = trial;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    (best, q)
}

/// `max |f|` on the sphere, estimated by [`refine_max_on_sphere`].
pub fn sup_norm(f: &ScalarField, grid: &QuadratureGrid) -> f64 {
    refine_max_on_sphere(|q| f.value(q).abs(), grid).0
}
