//! Berezin–Toeplitz quantization of the sphere by spin coherent states.
//!
//! `H_m` has dimension `2m + 1` and `ħ = 1/m`; the basis vector `e_k`
//! has `J₃ = m − k`. The covariant measure is
//! `dG_m = (2m + 1)/(4π) |z⟩⟨z| dA`.

mod line;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{commutator_hermitian, CMatrix, CVector, HermitianOperator, C64};
use crate::phase_space::{poisson_bracket, sup_norm, PartitionOfUnity, QuadratureGrid, ScalarField, SpherePoint};
use crate::povm::{DiscretePovm, Observable, StochasticKernel};

pub use line::{
    error_bar_check, line_povm, spectral_line_povm, step_seven_witness, ErrorBarReport, LinePovm, PointWidth,
    StepSevenWitness,
};

/// Sign `s` in the coherent-state phase `e^{i s k φ}`, fixed so that
/// `i·m·[T(q₁), T(q₂)] → T(q₃)` under `{q₁, q₂} = q₃`.
const PHASE_SIGN: f64 = -1.0;

/// A quantization level with its quadrature grid and the coherent-state
/// amplitudes on every ring.
#[derive(Clone, Debug)]
pub struct ToeplitzScheme {
    m: usize,
    grid: QuadratureGrid,
    /// `amplitudes[i][k] = √C(2m, k) cos^{2m−k}(θᵢ/2) sin^k(θᵢ/2)`.
    amplitudes: Vec<Vec<f64>>,
    /// `twiddles[d][j] = e^{i s d φ_j}`, `d = 0..=2m`.
    twiddles: Vec<Vec<C64>>,
}

fn amplitudes(m: usize, theta: f64) -> Vec<f64> {
    let n = 2 * m;
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut ln_binom = 0.0;
    (0..=n)
        .map(|k| {
            if k > 0 {
                ln_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
            }
            (0.5 * ln_binom).exp() * c.powi((n - k) as i32) * s.powi(k as i32)
        })
        .collect()
}

impl ToeplitzScheme {
    /// Default grid `n_θ = max(64, 2m + 16)`, `n_φ = 2 n_θ`.
    pub fn new(m: usize) -> Result<Self> {
        Self::with_grid(m, QuadratureGrid::for_quantum_number(m))
    }

    pub fn with_grid(m: usize, grid: QuadratureGrid) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("quantum number must be positive".into()));
        }
        if grid.n_phi() <= 4 * m {
            return Err(Error::InvalidArgument(format!(
                "n_phi = {} aliases the coherent-state frequencies up to {}",
                grid.n_phi(),
                4 * m
            )));
        }
        let amplitudes = grid.cos_theta().iter().map(|c| amplitudes(m, c.clamp(-1.0, 1.0).acos())).collect();
        let twiddles = (0..=2 * m)
            .map(|d| {
                (0..grid.n_phi())
                    .map(|j| {
                        let a = PHASE_SIGN * d as f64 * grid.phi(j);
                        C64::new(a.cos(), a.sin())
                    })
                    .collect()
            })
            .collect();
        Ok(Self { m, grid, amplitudes, twiddles })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn hbar(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn dim(&self) -> usize {
        2 * self.m + 1
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    /// `(2m + 1)/(4π)`.
    pub fn prefactor(&self) -> f64 {
        self.dim() as f64 / (4.0 * PI)
    }

    /// Whether the grid integrates `|z⟩⟨z| f` exactly for `f` of degree
    /// `band_limit`.
    pub fn resolves(&self, band_limit: usize) -> bool {
        let need = 2 * self.m + band_limit;
        self.grid.n_phi() > need && 2 * self.grid.n_theta() > need
    }

    /// `|z⟩`, component `k = √C(2m,k) cos^{2m−k}(θ/2) sin^k(θ/2) e^{i s k φ}`.
    pub fn coherent_state(&self, q: &SpherePoint) -> CVector {
        let phi = q.phi();
        let a = amplitudes(self.m, q.theta());
        CVector::from_iterator(
            self.dim(),
            a.iter().enumerate().map(|(k, v)| C64::from_polar(*v, PHASE_SIGN * k as f64 * phi)),
        )
    }

    /// `Σ_w v_w G_w` for values `v_w` at the grid nodes, assembled ring by
    /// ring from azimuthal Fourier sums.
    pub fn toeplitz_values(&self, values: &[f64]) -> Result<HermitianOperator> {
        if values.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), got: values.len() });
        }
        let (n_phi, dim) = (self.grid.n_phi(), self.dim());
        let dphi = 2.0 * PI / n_phi as f64;
        let pref = self.prefactor();
        // fourier[i][d] = w_i Σ_j v_ij e^{i s d φ_j}
        let fourier: Vec<Vec<C64>> = (0..self.grid.n_theta())
            .into_par_iter()
            .map(|i| {
                let ring = &values[i * n_phi..(i + 1) * n_phi];
                let w = pref * self.grid.ring_weights()[i] * dphi;
                self.twiddles.iter().map(|tw| tw.iter().zip(ring).map(|(t, v)| t * *v).sum::<C64>() * w).collect()
            })
            .collect();
        let rows: Vec<Vec<C64>> = (0..dim)
            .into_par_iter()
            .map(|k| {
                (0..=k)
                    .map(|l| {
                        let mut acc = C64::new(0.0, 0.0);
                        for (a, f) in self.amplitudes.iter().zip(&fourier) {
                            acc += f[k - l] * (a[k] * a[l]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let mut mat = CMatrix::zeros(dim, dim);
        for (k, row) in rows.iter().enumerate() {
            for (l, v) in row.iter().enumerate() {
                mat[(k, l)] = *v;
                mat[(l, k)] = v.conj();
            }
            mat[(k, k)].im = 0.0;
        }
        Ok(HermitianOperator::from_matrix_unchecked(mat))
    }

    /// `T_m(f) = ∫ f dG_m` by quadrature.
    pub fn toeplitz(&self, f: &ScalarField) -> HermitianOperator {
        let values: Vec<f64> = self.grid.nodes().par_iter().map(|q| f.value(q)).collect();
        self.toeplitz_values(&values).expect("one value per node")
    }

    /// Rank-one `G_w` before renormalization.
    pub fn node_effect(&self, w: usize) -> HermitianOperator {
        let z = self.coherent_state(&self.grid.nodes()[w]);
        HermitianOperator::rank_one(&z, self.prefactor() * self.grid.weights()[w])
    }

    /// `‖Σ_w G_w − I‖_op`.
    pub fn resolution_defect(&self) -> f64 {
        let s = self.toeplitz_values(&vec![1.0; self.grid.len()]).expect("one value per node");
        (&s - &HermitianOperator::identity(self.dim())).op_norm()
    }
}

/// Defects of the Berezin–Toeplitz axioms at one level.
#[derive(Clone, Debug, Serialize)]
pub struct BtRow {
    pub m: usize,
    /// `‖T(1) − I‖`.
    pub defect1: f64,
    /// `|‖T(f)‖ − sup|f||`.
    pub defect3: f64,
    /// `‖i·m·[T(f), T(g)] − T({f, g})‖`.
    pub defect4: f64,
    /// `‖T(f²) − T(f)²‖`.
    pub defect5: f64,
    /// False when the grid under-resolves the fields' declared band limits.
    pub resolved: bool,
}

pub fn bt_row(scheme: &ToeplitzScheme, f: &ScalarField, g: &ScalarField) -> BtRow {
    let m = scheme.m();
    let tf = scheme.toeplitz(f);
    let tg = scheme.toeplitz(g);
    let one = scheme.toeplitz(&ScalarField::constant(1.0));
    let id = HermitianOperator::identity(scheme.dim());
    let bracket = poisson_bracket(f, g);
    let comm = commutator_hermitian(&tf, &tg).expect("same dimension").scale(m as f64);
    let defect4 = (&comm - &scheme.toeplitz(&bracket)).op_norm();
    let defect5 = (&scheme.toeplitz(&f.mul(f)) - &tf.square()).op_norm();
    let sup_f = sup_norm(f, scheme.grid());
    BtRow {
        m,
        defect1: (&one - &id).op_norm(),
        defect3: (tf.op_norm() - sup_f).abs(),
        defect4,
        defect5,
        resolved: scheme.resolves(2 * f.band_limit().max(g.band_limit())),
    }
}

/// One [`BtRow`] per level.
pub fn bt_axiom_report(f: &ScalarField, g: &ScalarField, ms: &[usize]) -> Result<Vec<BtRow>> {
    ms.iter().map(|&m| Ok(bt_row(&ToeplitzScheme::new(m)?, f, g))).collect()
}

/// The covariant POVM `{G_w}` on the grid nodes, renormalized to
/// `S^{−1/2} G_w S^{−1/2}` with `S = Σ G_w`. Effects are never
/// materialized; weighted sums go through [`ToeplitzScheme::toeplitz_values`].
pub struct DiscretizedGm<'a> {
    scheme: &'a ToeplitzScheme,
    s_inv_sqrt: HermitianOperator,
    defect: f64,
}

impl<'a> DiscretizedGm<'a> {
    pub fn new(scheme: &'a ToeplitzScheme) -> Result<Self> {
        let s = scheme.toeplitz_values(&vec![1.0; scheme.grid().len()])?;
        if s.min_eigenvalue() <= 0.0 {
            return Err(Error::Singular("Σ G_w is not positive definite".into()));
        }
        let defect = (&s - &HermitianOperator::identity(scheme.dim())).op_norm();
        Ok(Self { scheme, s_inv_sqrt: s.map_spectrum(|l| 1.0 / l.sqrt()), defect })
    }

    pub fn scheme(&self) -> &ToeplitzScheme {
        self.scheme
    }

    /// `‖Σ G_w − I‖` before renormalization.
    pub fn renormalization_defect(&self) -> f64 {
        self.defect
    }

    /// The renormalized effect at node `w`.
    pub fn effect(&self, w: usize) -> HermitianOperator {
        self.scheme.node_effect(w).sandwich(&self.s_inv_sqrt).expect("same dimension")
    }
}

impl Observable for DiscretizedGm<'_> {
    fn dim(&self) -> usize {
        self.scheme.dim()
    }

    fn num_outcomes(&self) -> usize {
        self.scheme.grid().len()
    }

    fn weighted_sum(&self, coeffs: &[f64]) -> Result<HermitianOperator> {
        self.scheme.toeplitz_values(coeffs)?.sandwich(&self.s_inv_sqrt)
    }
}

/// `{T_m(f_i)}`.
pub fn registration_povm(scheme: &ToeplitzScheme, partition: &PartitionOfUnity) -> Result<DiscretePovm> {
    let effects = partition.fields.iter().map(|f| scheme.toeplitz(f)).collect();
    DiscretePovm::with_labels(partition.cover.labels.clone(), effects)
}

/// `{T_m(f_i g_j)}` on the `L × N` grid, row-major.
pub fn joint_toeplitz(scheme: &ToeplitzScheme, f: &PartitionOfUnity, g: &PartitionOfUnity) -> Result<DiscretePovm> {
    let effects =
        f.fields.iter().flat_map(|a| g.fields.iter().map(move |b| a.mul(b))).map(|h| scheme.toeplitz(&h)).collect();
    DiscretePovm::joint(f.len(), g.len(), effects)
}

/// `γ_j(w) = f_j(z_w)`, the kernel smearing `G_m` into the registration
/// POVM.
pub fn partition_kernel(scheme: &ToeplitzScheme, partition: &PartitionOfUnity) -> Result<StochasticKernel> {
    let l = partition.len();
    let data: Vec<f64> = scheme.grid().nodes().par_iter().flat_map_iter(|q| partition.values(q)).collect();
    StochasticKernel::normalized(scheme.grid().len(), l, data)
}

/// Real diagonal of an operator, for zonal symbols.
pub fn diagonal(h: &HermitianOperator) -> Vec<f64> {
    h.matrix().diagonal().iter().map(|c| c.re).collect()
}

/// Largest modulus of an off-diagonal entry.
pub fn off_diagonal_norm(h: &HermitianOperator) -> f64 {
    let m = h.matrix();
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

/// `J₃/(m+1)` diagonal, the exact symbol of `q₃` in this realization.
pub fn q3_symbol_diagonal(m: usize) -> Vec<f64> {
    (0..=2 * m).map(|k| (m as f64 - k as f64) / (m as f64 + 1.0)).collect()
}
