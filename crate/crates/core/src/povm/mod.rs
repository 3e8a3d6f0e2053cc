//! Finite-outcome POVMs and the operational noise calculus built on them:
//! expectation and noise operators, smearing through Markov kernels,
//! magnitudes of noise and non-commutativity, inherent-noise brackets and
//! joint observables.

mod cube;
mod json;

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::operator::{commutator_norm, linear_combination, spectral_decompose, CMatrix, HermitianOperator, C64};

pub use cube::{CubeMax, CubeSearch, NoiseQuadratic, Strategy};
pub use json::PovmDocument;

/// Minimum eigenvalue tolerated for an effect.
pub const POSITIVITY_TOL: f64 = 1e-9;
/// Tolerance on `‖Σ A_i − I‖_op`.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Tolerance on row sums of a stochastic kernel.
pub const KERNEL_ROW_TOL: f64 = 1e-12;
/// Tolerance, in operator norm per effect, for accepting `smear(B, γ) = A`.
pub const SMEARING_IDENTITY_TOL: f64 = 1e-7;

/// Anything that behaves like a POVM on a finite outcome set, as far as
/// weighted sums of its effects are concerned.
///
/// Large structured POVMs (the discretized coherent-state POVM) implement
/// this without materializing one dense matrix per outcome.
pub trait Observable: Sync {
    fn dim(&self) -> usize;
    fn num_outcomes(&self) -> usize;
    /// `Σ_w c_w B_w`.
    fn weighted_sum(&self, coeffs: &[f64]) -> Result<HermitianOperator>;
}

/// A POVM on `{0, …, L−1}`.
#[derive(Clone, Debug)]
pub struct DiscretePovm {
    labels: Vec<String>,
    grid: Option<(usize, usize)>,
    effects: Vec<HermitianOperator>,
}

impl DiscretePovm {
    /// Validates positivity and normalization; outcomes are labelled `0..L`.
    pub fn new(effects: Vec<HermitianOperator>) -> Result<Self> {
        let labels = (0..effects.len()).map(|i| i.to_string()).collect();
        Self::with_labels(labels, effects)
    }

    pub fn with_labels(labels: Vec<String>, effects: Vec<HermitianOperator>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidPovm("no effects".into()));
        }
        if labels.len() != effects.len() {
            return Err(Error::LengthMismatch { expected: effects.len(), got: labels.len() });
        }
        let dim = effects[0].dim();
        for (i, e) in effects.iter().enumerate() {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: e.dim() });
            }
            let lo = e.min_eigenvalue();
            if lo < -POSITIVITY_TOL {
                return Err(Error::InvalidPovm(format!("effect {i} has eigenvalue {lo:.3e}")));
            }
        }
        let sum = linear_combination(&vec![1.0; effects.len()], &effects)?;
        let defect = sum.distance(&HermitianOperator::identity(dim))?;
        if defect > NORMALIZATION_TOL {
            return Err(Error::InvalidPovm(format!("effects sum to identity only within {defect:.3e}")));
        }
        Ok(Self { labels, grid: None, effects })
    }

    /// A POVM on the product set `{0..rows} × {0..cols}`; `effects` are row-major.
    pub fn joint(rows: usize, cols: usize, effects: Vec<HermitianOperator>) -> Result<Self> {
        if rows * cols != effects.len() {
            return Err(Error::LengthMismatch { expected: rows * cols, got: effects.len() });
        }
        let labels = (0..rows).flat_map(|i| (0..cols).map(move |j| format!("({i},{j})"))).collect();
        let mut povm = Self::with_labels(labels, effects)?;
        povm.grid = Some((rows, cols));
        Ok(povm)
    }

    /// The one-outcome POVM `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Self { labels: vec!["0".into()], grid: None, effects: vec![HermitianOperator::identity(dim)] }
    }

    /// The projection-valued measure of `h`, one outcome per (clustered) eigenvalue.
    pub fn spectral_measure(h: &HermitianOperator) -> Self {
        let sd = spectral_decompose(h);
        let labels = sd.eigenvalues.iter().map(|l| format!("{l}")).collect();
        Self { labels, grid: None, effects: sd.projectors }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn grid_shape(&self) -> Option<(usize, usize)> {
        self.grid
    }

    pub fn effects(&self) -> &[HermitianOperator] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &HermitianOperator {
        &self.effects[i]
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    /// Largest per-effect operator-norm distance to `other`.
    pub fn distance(&self, other: &DiscretePovm) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: other.len() });
        }
        self.effects.iter().zip(&other.effects).map(|(a, b)| a.distance(b)).try_fold(0.0_f64, |m, d| Ok(m.max(d?)))
    }

    /// `max_i ‖A_i² − A_i‖`; zero exactly for projection-valued measures.
    pub fn sharpness_defect(&self) -> f64 {
        self.effects.iter().map(|e| (&e.square() - e).op_norm()).fold(0.0, f64::max)
    }
}

impl Observable for DiscretePovm {
    fn dim(&self) -> usize {
        DiscretePovm::dim(self)
    }

    fn num_outcomes(&self) -> usize {
        self.len()
    }

    fn weighted_sum(&self, coeffs: &[f64]) -> Result<HermitianOperator> {
        linear_combination(coeffs, &self.effects)
    }
}

/// A random variable on the outcome set with values in `[−1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if let Some((i, x)) = components.iter().enumerate().find(|(_, x)| !(-1.0..=1.0).contains(*x)) {
            return Err(Error::InvalidWeights(format!("component {i} = {x} outside [-1, 1]")));
        }
        Ok(Self(components))
    }

    /// Clamps each component into the cube.
    pub fn clamped(components: Vec<f64>) -> Self {
        Self(components.into_iter().map(|x| x.clamp(-1.0, 1.0)).collect())
    }

    pub fn constant(len: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A Markov kernel from `K` source outcomes to `L` target outcomes, stored
/// row-major: row `w` is the distribution `γ_·(w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticKernel {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl StochasticKernel {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidKernel("empty kernel".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch { expected: rows * cols, got: data.len() });
        }
        for (w, row) in data.chunks(cols).enumerate() {
            if let Some(v) = row.iter().find(|v| **v < 0.0 || !v.is_finite()) {
                return Err(Error::InvalidKernel(format!("row {w} has entry {v}")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > KERNEL_ROW_TOL {
                return Err(Error::InvalidKernel(format!("row {w} sums to {s}")));
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidKernel("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Divides each row by its sum after clipping tiny negative entries.
    /// Used for kernels sampled from a partition of unity whose sums are 1
    /// only up to rounding.
    pub fn normalized(rows: usize, cols: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols || cols == 0 {
            return Err(Error::LengthMismatch { expected: rows * cols, got: data.len() });
        }
        for row in data.chunks_mut(cols) {
            row.iter_mut().for_each(|v| *v = v.max(0.0));
            let s: f64 = row.iter().sum();
            if s <= 0.0 {
                return Err(Error::InvalidKernel("row with zero mass".into()));
            }
            row.iter_mut().for_each(|v| *v /= s);
        }
        Self::new(rows, cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        (0..n).for_each(|i| data[i * n + i] = 1.0);
        Self { rows: n, cols: n, data }
    }

    /// Every row equal to `p`.
    pub fn constant_rows(rows: usize, p: &[f64]) -> Result<Self> {
        Self::new(rows, p.len(), p.repeat(rows))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, w: usize, j: usize) -> f64 {
        self.data[w * self.cols + j]
    }

    pub fn row(&self, w: usize) -> &[f64] {
        &self.data[w * self.cols..(w + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|w| self.get(w, j)).collect()
    }

    /// Kernel composition: `self` maps K→L, `next` maps L→P, result maps K→P.
    /// The smearing operators compose as `Γ_self ∘ Γ_next`.
    pub fn compose(&self, next: &StochasticKernel) -> Result<StochasticKernel> {
        if self.cols != next.rows {
            return Err(Error::InvalidKernel(format!(
                "cannot compose {}x{} with {}x{}",
                self.rows, self.cols, next.rows, next.cols
            )));
        }
        let mut data = vec![0.0; self.rows * next.cols];
        for w in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(w, l);
                if a == 0.0 {
                    continue;
                }
                for p in 0..next.cols {
                    data[w * next.cols + p] += a * next.get(l, p);
                }
            }
        }
        StochasticKernel::normalized(self.rows, next.cols, data)
    }
}

/// Outcome of a Δ-supremum search.
#[derive(Clone, Debug)]
pub struct NoiseSup {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub strategy: Strategy,
}

impl fmt::Display for NoiseSup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e} ({})", self.value, self.strategy)
    }
}

/// Two-sided estimate of the inherent noise.
#[derive(Clone, Debug)]
pub struct NoiseBracket {
    pub lower: f64,
    pub upper: f64,
    pub witness: String,
    pub rejected: Vec<String>,
}

/// A candidate parent `B` with a kernel such that `smear(B, kernel)` should equal the target.
pub struct SmearingCandidate<'a> {
    pub name: String,
    pub parent: &'a dyn Observable,
    pub kernel: &'a StochasticKernel,
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

/// `A(x) = Σ x_i A_i`.
pub fn expectation_operator(a: &dyn Observable, x: &WeightVector) -> Result<HermitianOperator> {
    check_len(a.num_outcomes(), x.len())?;
    a.weighted_sum(x.as_slice())
}

/// `Δ_A(x) = Σ x_i² A_i − A(x)²`.
pub fn noise_operator(a: &dyn Observable, x: &WeightVector) -> Result<HermitianOperator> {
    check_len(a.num_outcomes(), x.len())?;
    let ax = a.weighted_sum(x.as_slice())?;
    let sq: Vec<f64> = x.as_slice().iter().map(|v| v * v).collect();
    let second = a.weighted_sum(&sq)?;
    Ok(&second - &ax.square())
}

/// `N(A) = max_x ‖Δ_A(x)‖`, by the cube search of [`CubeSearch`].
pub fn magnitude_of_noise(a: &DiscretePovm) -> NoiseSup {
    magnitude_of_noise_with(a, &CubeSearch::default())
}

pub fn magnitude_of_noise_with(a: &DiscretePovm, search: &CubeSearch) -> NoiseSup {
    let q = NoiseQuadratic::identity_kernel(a);
    q.maximize(search)
}

/// `ν_q(A) = max_{x,y} ‖[A(x), A(y)]‖`.
pub fn nu_q(a: &DiscretePovm) -> f64 {
    nu_q_detailed(a, &CubeSearch::default()).value
}

pub fn nu_q_detailed(a: &DiscretePovm, search: &CubeSearch) -> CubeMax {
    cube::max_commutator(a.effects(), a.effects(), search)
}

/// `ν_q(A, B) = max_{x,y} ‖[A(x), B(y)]‖`.
pub fn nu_q_pair(a: &DiscretePovm, b: &DiscretePovm) -> Result<f64> {
    Ok(nu_q_pair_detailed(a, b, &CubeSearch::default())?.value)
}

pub fn nu_q_pair_detailed(a: &DiscretePovm, b: &DiscretePovm, search: &CubeSearch) -> Result<CubeMax> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(cube::max_commutator(a.effects(), b.effects(), search))
}

/// `A_j = Σ_w γ_j(w) B_w`.
pub fn smear(b: &dyn Observable, kernel: &StochasticKernel) -> Result<DiscretePovm> {
    if kernel.rows() != b.num_outcomes() {
        return Err(Error::InvalidKernel(format!(
            "kernel has {} rows but the parent has {} outcomes",
            kernel.rows(),
            b.num_outcomes()
        )));
    }
    let effects = (0..kernel.cols()).map(|j| b.weighted_sum(&kernel.column(j))).collect::<Result<Vec<_>>>()?;
    DiscretePovm::new(effects)
}

/// `(Γx)(w) = Σ_j γ_j(w) x_j`.
pub fn smeared_variable(kernel: &StochasticKernel, x: &WeightVector) -> Result<WeightVector> {
    check_len(kernel.cols(), x.len())?;
    let v =
        (0..kernel.rows()).map(|w| kernel.row(w).iter().zip(x.as_slice()).map(|(g, x)| g * x).sum::<f64>()).collect();
    Ok(WeightVector::clamped(v))
}

/// `sup_x ‖Δ_B(Γx)‖` over the cube of the target outcome set.
pub fn smearing_noise_sup(b: &dyn Observable, kernel: &StochasticKernel) -> Result<NoiseSup> {
    smearing_noise_sup_with(b, kernel, &CubeSearch::default())
}

pub fn smearing_noise_sup_with(b: &dyn Observable, kernel: &StochasticKernel, search: &CubeSearch) -> Result<NoiseSup> {
    let q = NoiseQuadratic::new(b, kernel)?;
    Ok(q.maximize(search))
}

/// Brackets the inherent noise: `ν_q(A)/2 ≤ N_in(A) ≤ min over valid candidates`.
pub fn inherent_noise_bracket(a: &DiscretePovm, candidates: &[SmearingCandidate<'_>]) -> NoiseBracket {
    inherent_noise_bracket_with(a, candidates, &CubeSearch::default())
}

pub fn inherent_noise_bracket_with(
    a: &DiscretePovm,
    candidates: &[SmearingCandidate<'_>],
    search: &CubeSearch,
) -> NoiseBracket {
    let lower = nu_q_detailed(a, search).value / 2.0;
    let mut rejected = Vec::new();
    let mut best: Option<(f64, String)> = None;
    for c in candidates {
        let verdict = smear(c.parent, c.kernel).and_then(|s| s.distance(a));
        match verdict {
            Ok(d) if d <= SMEARING_IDENTITY_TOL => match smearing_noise_sup_with(c.parent, c.kernel, search) {
                Ok(sup) => {
                    if best.as_ref().is_none_or(|(v, _)| sup.value < *v) {
                        best = Some((sup.value, format!("{} ({}, smearing defect {d:.2e})", c.name, sup.strategy)));
                    }
                }
                Err(e) => rejected.push(format!("{}: {e}", c.name)),
            },
            Ok(d) => rejected.push(format!("{}: smearing identity violated by {d:.3e}", c.name)),
            Err(e) => rejected.push(format!("{}: {e}", c.name)),
        }
    }
    let (upper, witness) = best.unwrap_or_else(|| {
        let own = magnitude_of_noise_with(a, search);
        (own.value, format!("identity kernel on A itself ({})", own.strategy))
    });
    NoiseBracket { lower, upper, witness, rejected }
}

/// Marginals `A_i = Σ_j C_ij`, `B_j = Σ_i C_ij` of a joint POVM.
pub fn joint_marginals(c: &DiscretePovm) -> Result<(DiscretePovm, DiscretePovm)> {
    let (rows, cols) = c.grid_shape().ok_or(Error::NotAGrid)?;
    let row_sum = |i: usize| {
        let mut coeffs = vec![0.0; rows * cols];
        (0..cols).for_each(|j| coeffs[i * cols + j] = 1.0);
        c.weighted_sum(&coeffs)
    };
    let col_sum = |j: usize| {
        let mut coeffs = vec![0.0; rows * cols];
        (0..rows).for_each(|i| coeffs[i * cols + j] = 1.0);
        c.weighted_sum(&coeffs)
    };
    let a = (0..rows).map(row_sum).collect::<Result<Vec<_>>>()?;
    let b = (0..cols).map(col_sum).collect::<Result<Vec<_>>>()?;
    Ok((DiscretePovm::new(a)?, DiscretePovm::new(b)?))
}

/// `max(ν_q(A), ν_q(B), ν_q(A,B)) / 2`, a lower bound on the inherent noise
/// of any joint observable of `A` and `B`.
pub fn joint_noise_lower(a: &DiscretePovm, b: &DiscretePovm) -> Result<f64> {
    joint_noise_lower_with(a, b, &CubeSearch::default())
}

pub fn joint_noise_lower_with(a: &DiscretePovm, b: &DiscretePovm, search: &CubeSearch) -> Result<f64> {
    let ab = nu_q_pair_detailed(a, b, search)?.value;
    let aa = nu_q_detailed(a, search).value;
    let bb = nu_q_detailed(b, search).value;
    Ok(aa.max(bb).max(ab) / 2.0)
}

/// For a POVM with pairwise commuting effects, the sharp observable it is a
/// smearing of, together with the kernel. Returns `None` when the effects do
/// not commute or the reconstruction misses the smearing tolerance.
pub fn commutative_sharp_parent(a: &DiscretePovm) -> Option<(DiscretePovm, StochasticKernel)> {
    let scale = a.effects().iter().map(|e| e.op_norm()).fold(0.0, f64::max).max(1.0);
    for (i, ei) in a.effects().iter().enumerate() {
        for ej in &a.effects()[i + 1..] {
            if commutator_norm(ei, ej).ok()? > 1e-9 * scale {
                return None;
            }
        }
    }
    // A generic real combination separates the joint eigenspaces.
    let coeffs: Vec<f64> = (0..a.len()).map(|i| ((i + 2) as f64).ln() * std::f64::consts::PI).collect();
    let generic = a.weighted_sum(&coeffs).ok()?;
    let sd = spectral_decompose(&generic);
    let mut data = Vec::with_capacity(sd.len() * a.len());
    for (p, basis) in sd.projectors.iter().zip(&sd.bases) {
        let rank = basis.ncols() as f64;
        for e in a.effects() {
            let tr = (p.matrix() * e.matrix()).trace().re;
            data.push(tr / rank);
        }
    }
    let kernel = StochasticKernel::normalized(sd.len(), a.len(), data).ok()?;
    let parent =
        DiscretePovm::with_labels(sd.eigenvalues.iter().map(|l| format!("{l}")).collect(), sd.projectors).ok()?;
    let check = smear(&parent, &kernel).ok()?.distance(a).ok()?;
    (check <= SMEARING_IDENTITY_TOL).then_some((parent, kernel))
}

/// A random POVM `S^{-1/2} M_i S^{-1/2}` built from random positive `M_i = X_i X_i†`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize) -> DiscretePovm {
    loop {
        let ms: Vec<HermitianOperator> = (0..outcomes)
            .map(|_| {
                let rank = rng.random_range(1..=dim);
                let x = CMatrix::from_fn(dim, rank, |_, _| {
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                HermitianOperator::from_matrix_unchecked(&x * x.adjoint())
            })
            .collect();
        let s = linear_combination(&vec![1.0; outcomes], &ms).expect("nonempty");
        if s.min_eigenvalue() < 1e-6 {
            continue;
        }
        let s_inv_half = s.map_spectrum(|l| 1.0 / l.sqrt());
        let effects: Vec<HermitianOperator> = ms.iter().map(|m| m.sandwich(&s_inv_half).expect("same dim")).collect();
        if let Ok(p) = DiscretePovm::new(effects) {
            return p;
        }
    }
}

/// A random row-stochastic kernel.
pub fn random_kernel<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> StochasticKernel {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.random::<f64>() + 1e-3).collect();
    StochasticKernel::normalized(rows, cols, data).expect("positive rows")
}

/// A random point of the cube.
pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, len: usize) -> WeightVector {
    WeightVector::clamped((0..len).map(|_| rng.random_range(-1.0..=1.0)).collect())
}

#[cfg(test)]
mod tests;
