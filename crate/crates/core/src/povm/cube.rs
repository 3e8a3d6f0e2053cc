//! Maximization over the cube `[-1, 1]^L` for the non-commutativity and
//! noise functionals.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{DiscretePovm, NoiseSup, Observable, StochasticKernel};
use crate::error::{Error, Result};
use crate::operator::{linear_combination, CMatrix, HermitianOperator, C64};

/// How a cube maximum was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// All vertices visited; exact for functionals convex in each argument.
    VertexEnumeration,
    /// Coordinate-wise sign flips from random vertices.
    SignAscent,
    /// Multi-start projected gradient ascent, possibly seeded by vertices.
    HeuristicMax,
    /// The functional vanishes identically.
    Trivial,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::VertexEnumeration => "vertex-enumeration",
            Strategy::SignAscent => "sign-ascent",
            Strategy::HeuristicMax => "heuristic-max",
            Strategy::Trivial => "trivial",
        })
    }
}

/// Knobs of the cube searches.
#[derive(Clone, Debug)]
pub struct CubeSearch {
    /// Enumerate vertex pairs when `L + N` is at most this.
    pub pair_vertex_limit: usize,
    /// Cap on `2^(L+N-2) · dim³`; above it the pair search falls back to sign ascent.
    pub pair_work_limit: f64,
    /// Enumerate vertices of the Δ functional when `L` is at most this.
    pub noise_vertex_limit: usize,
    pub sign_ascent_starts: usize,
    pub gradient_starts: usize,
    pub gradient_iterations: usize,
    pub seed: u64,
}

impl Default for CubeSearch {
    fn default() -> Self {
        Self {
            pair_vertex_limit: 22,
            pair_work_limit: 2e10,
            noise_vertex_limit: 12,
            sign_ascent_starts: 32,
            gradient_starts: 64,
            gradient_iterations: 60,
            seed: 0x5eed,
        }
    }
}

impl CubeSearch {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// Result of a bilinear cube maximization.
#[derive(Clone, Debug)]
pub struct CubeMax {
    pub value: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub strategy: Strategy,
}

fn vertex(bits: u64, len: usize) -> Vec<f64> {
    (0..len).map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()
}

fn commutator_value(a: &[HermitianOperator], b: &[HermitianOperator], x: &[f64], y: &[f64]) -> f64 {
    let ax = linear_combination(x, a).expect("validated shapes");
    let by = linear_combination(y, b).expect("validated shapes");
    let c = ax.matrix() * by.matrix() - by.matrix() * ax.matrix();
    HermitianOperator::from_matrix_unchecked(c * C64::new(0.0, 1.0)).op_norm()
}

fn argmax<T>(items: Vec<(f64, T)>) -> (f64, T) {
    // First maximum in index order keeps the reduction deterministic.
    let mut best: Option<(f64, T)> = None;
    for (v, t) in items {
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, t));
        }
    }
    best.expect("nonempty search")
}

/// `max_{x ∈ K_L, y ∈ K_N} ‖[A(x), B(y)]‖`. The functional is convex in each
/// argument, so vertices suffice.
pub(crate) fn max_commutator(a: &[HermitianOperator], b: &[HermitianOperator], search: &CubeSearch) -> CubeMax {
    let (l, n) = (a.len(), b.len());
    let dim = a[0].dim() as f64;
    if l < 2 || n < 2 {
        // A(x) is then a multiple of the identity.
        return CubeMax { value: 0.0, x: vec![1.0; l], y: vec![1.0; n], strategy: Strategy::Trivial };
    }
    // Global sign flips of x or y leave the norm unchanged: fix x_0 = y_0 = +1.
    let free = l + n - 2;
    let work = 2f64.powi(free as i32) * dim.powi(3);
    if l + n <= search.pair_vertex_limit && work <= search.pair_work_limit {
        let total = 1u64 << free;
        let evals: Vec<(f64, u64)> = (0..total)
            .into_par_iter()
            .map(|bits| {
                let x = vertex((bits & ((1 << (l - 1)) - 1)) << 1, l);
                let y = vertex((bits >> (l - 1)) << 1, n);
                (commutator_value(a, b, &x, &y), bits)
            })
            .collect();
        let (value, bits) = argmax(evals);
        let x = vertex((bits & ((1 << (l - 1)) - 1)) << 1, l);
        let y = vertex((bits >> (l - 1)) << 1, n);
        return CubeMax { value, x, y, strategy: Strategy::VertexEnumeration };
    }
    let starts: Vec<(Vec<f64>, Vec<f64>)> = {
        let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
        (0..search.sign_ascent_starts)
            .map(|_| {
                let x: Vec<f64> = (0..l).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
                let y: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
                (x, y)
            })
            .collect()
    };
    type Run = (f64, (Vec<f64>, Vec<f64>));
    let runs: Vec<Run> = starts
        .into_par_iter()
        .map(|(mut x, mut y)| {
            let mut best = commutator_value(a, b, &x, &y);
            loop {
                let mut improved = false;
                for i in 0..l {
                    x[i] = -x[i];
                    let v = commutator_value(a, b, &x, &y);
                    if v > best * (1.0 + 1e-12) + 1e-15 {
                        best = v;
                        improved = true;
                    } else {
                        x[i] = -x[i];
                    }
                }
                for j in 0..n {
                    y[j] = -y[j];
                    let v = commutator_value(a, b, &x, &y);
                    if v > best * (1.0 + 1e-12) + 1e-15 {
                        best = v;
                        improved = true;
                    } else {
                        y[j] = -y[j];
                    }
                }
                if !improved {
                    break;
                }
            }
            (best, (x, y))
        })
        .collect();
    let (value, (x, y)) = argmax(runs);
    CubeMax { value, x, y, strategy: Strategy::SignAscent }
}

/// The quadratic operator pencil `x ↦ Δ_B(Γx) = Σ_jk x_j x_k Q_jk − A(x)²`
/// with `A_j = Σ_w γ_j(w) B_w` and `Q_jk = Σ_w γ_j(w) γ_k(w) B_w`.
pub struct NoiseQuadratic {
    dim: usize,
    linear: Vec<HermitianOperator>,
    /// `(j, k, Q_jk)` for `j ≤ k` with `Q_jk ≠ 0`.
    quadratic: Vec<(usize, usize, HermitianOperator)>,
}

impl NoiseQuadratic {
    pub fn new(b: &dyn Observable, kernel: &StochasticKernel) -> Result<Self> {
        if kernel.rows() != b.num_outcomes() {
            return Err(Error::InvalidKernel(format!(
                "kernel has {} rows but the parent has {} outcomes",
                kernel.rows(),
                b.num_outcomes()
            )));
        }
        let n = kernel.cols();
        let columns: Vec<Vec<f64>> = (0..n).map(|j| kernel.column(j)).collect();
        let linear = columns.par_iter().map(|c| b.weighted_sum(c)).collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|j| (j..n).map(move |k| (j, k)))
            .filter(|&(j, k)| columns[j].iter().zip(&columns[k]).any(|(p, q)| p * q > 0.0))
            .collect();
        let quadratic = pairs
            .par_iter()
            .map(|&(j, k)| {
                let w: Vec<f64> = columns[j].iter().zip(&columns[k]).map(|(p, q)| p * q).collect();
                b.weighted_sum(&w).map(|q| (j, k, q))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: b.dim(), linear, quadratic })
    }

    /// The identity-kernel pencil of a POVM, `Δ_A(x)`.
    pub fn identity_kernel(a: &DiscretePovm) -> Self {
        let linear = a.effects().to_vec();
        let quadratic = linear.iter().enumerate().map(|(j, e)| (j, j, e.clone())).collect();
        Self { dim: a.dim(), linear, quadratic }
    }

    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty()
    }

    fn expectation_matrix(&self, x: &[f64]) -> CMatrix {
        linear_combination(x, &self.linear).expect("validated").into_matrix()
    }

    fn second_moment(&self, x: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (j, k, q) in &self.quadratic {
            let c = if j == k { x[*j] * x[*k] } else { 2.0 * x[*j] * x[*k] };
            if c != 0.0 {
                m += q.matrix() * C64::new(c, 0.0);
            }
        }
        m
    }

    /// `Δ(x)`.
    pub fn delta(&self, x: &[f64]) -> HermitianOperator {
        let ax = self.expectation_matrix(x);
        HermitianOperator::from_matrix_unchecked(self.second_moment(x) - &ax * &ax)
    }

    /// `‖Δ(x)‖`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.delta(x).op_norm()
    }

    /// `‖Δ(x)‖` and its gradient, from the dominant eigenvector.
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let ax = self.expectation_matrix(x);
        let delta = HermitianOperator::from_matrix_unchecked(self.second_moment(x) - &ax * &ax);
        let (lambda, v) = delta.dominant_eigenpair();
        let sign = lambda.signum();
        let av = &ax * &v;
        let mut grad = vec![0.0; self.len()];
        for (j, k, q) in &self.quadratic {
            let e = q.expectation(&v);
            grad[*j] += 2.0 * x[*k] * e;
            if j != k {
                grad[*k] += 2.0 * x[*j] * e;
            }
        }
        for (j, aj) in self.linear.iter().enumerate() {
            let ajv = aj.matrix() * &v;
            grad[j] -= 2.0 * ajv.dotc(&av).re;
        }
        grad.iter_mut().for_each(|g| *g *= sign);
        (lambda.abs(), grad)
    }

    fn ascend(&self, mut x: Vec<f64>, iterations: usize) -> (f64, Vec<f64>) {
        let (mut val, mut grad) = self.value_and_gradient(&x);
        let mut step = 0.5;
        for _ in 0..iterations {
            let gmax = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
            if gmax < 1e-14 || step < 1e-7 {
                break;
            }
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, g)| (xi + step * g / gmax).clamp(-1.0, 1.0)).collect();
            let (tv, tg) = self.value_and_gradient(&trial);
            if tv > val {
                x = trial;
                val = tv;
                grad = tg;
                step = (step * 1.5).min(2.0);
            } else {
                step *= 0.5;
            }
        }
        (val, x)
    }

    /// Best `‖Δ(x)‖` found by vertex enumeration (small `L`) plus multi-start
    /// projected gradient ascent.
    pub fn maximize(&self, search: &CubeSearch) -> NoiseSup {
        let l = self.len();
        if l < 2 {
            return NoiseSup { value: 0.0, argmax: vec![1.0; l], strategy: Strategy::Trivial };
        }
        let mut starts: Vec<Vec<f64>> = Vec::new();
        let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
        if l <= search.noise_vertex_limit {
            // Δ(−x) = Δ(x): fix the first sign.
            let evals: Vec<(f64, u64)> =
                (0..1u64 << (l - 1)).into_par_iter().map(|bits| (self.value(&vertex(bits << 1, l)), bits)).collect();
            let mut ranked = evals;
            ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for (v, bits) in ranked.iter().take(8) {
                starts.push(vertex(bits << 1, l));
                candidates.push((*v, vertex(bits << 1, l)));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
        while starts.len() < search.gradient_starts {
            starts.push((0..l).map(|_| rng.random_range(-1.0..=1.0)).collect());
        }
        let runs: Vec<(f64, Vec<f64>)> =
            starts.into_par_iter().map(|x| self.ascend(x, search.gradient_iterations)).collect();
        candidates.extend(runs);
        let (_, argmax_x) = argmax(candidates);
        let value = self.value(&argmax_x).max(0.0);
        NoiseSup { value, argmax: argmax_x, strategy: Strategy::HeuristicMax }
    }
}
