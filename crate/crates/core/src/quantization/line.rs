use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{linear_combination, spectral_decompose, CMatrix, HermitianOperator};
use crate::povm::DiscretePovm;

/// A POVM on the real line supported on finitely many points.
#[derive(Clone, Debug)]
pub struct LinePovm {
    points: Vec<f64>,
    effects: Vec<HermitianOperator>,
    /// Eigenspace bases when the effects are the spectral projectors.
    bases: Option<Vec<CMatrix>>,
    /// Notes on outcomes merged because they shared a point.
    pub warnings: Vec<String>,
}

impl LinePovm {
    /// Points must be strictly increasing; effects must form a POVM.
    pub fn new(points: Vec<f64>, effects: Vec<HermitianOperator>) -> Result<Self> {
        if points.len() != effects.len() {
            return Err(Error::LengthMismatch { expected: points.len(), got: effects.len() });
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("support points must be finite and strictly increasing".into()));
        }
        DiscretePovm::new(effects.clone())?;
        Ok(Self { points, effects, bases: None, warnings: Vec::new() })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn effects(&self) -> &[HermitianOperator] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    /// `A(J_{x,w})`, the total effect of points in `[x − w/2, x + w/2]`.
    pub fn mass(&self, x: f64, w: f64) -> HermitianOperator {
        let (coeffs, ops): (Vec<f64>, Vec<HermitianOperator>) = self
            .points
            .iter()
            .zip(&self.effects)
            .filter(|(p, _)| (*p - x).abs() <= w / 2.0)
            .map(|(_, e)| (1.0, e.clone()))
            .unzip();
        if ops.is_empty() {
            return HermitianOperator::zeros(self.dim());
        }
        linear_combination(&coeffs, &ops).expect("same dimension")
    }

    /// Orthonormal basis of the range of the effect at `i`.
    fn range_basis(&self, i: usize) -> CMatrix {
        if let Some(b) = &self.bases {
            return b[i].clone();
        }
        let d = spectral_decompose(&self.effects[i]);
        let cols: Vec<_> = d
            .eigenvalues
            .iter()
            .zip(&d.bases)
            .filter(|(l, _)| **l > 0.5)
            .flat_map(|(_, b)| b.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
            .collect();
        CMatrix::from_columns(&cols)
    }
}

/// `Σ A_k δ_{x_k}`. Points are sorted; outcomes sharing a point are merged
/// and noted in `warnings`.
pub fn line_povm(a: &DiscretePovm, points: &[f64]) -> Result<LinePovm> {
    if points.len() != a.len() {
        return Err(Error::LengthMismatch { expected: a.len(), got: points.len() });
    }
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| points[i].total_cmp(&points[j]));
    let mut pts: Vec<f64> = Vec::new();
    let mut effects: Vec<HermitianOperator> = Vec::new();
    let mut warnings = Vec::new();
    for i in order {
        let p = points[i];
        if pts.last() == Some(&p) {
            let last = effects.last_mut().expect("nonempty");
            *last = &*last + a.effect(i);
            warnings.push(format!("outcome {} shares point {p} with its predecessor; effects merged", i + 1));
        } else {
            pts.push(p);
            effects.push(a.effect(i).clone());
        }
    }
    let mut out = LinePovm::new(pts, effects)?;
    out.warnings = warnings;
    Ok(out)
}

/// `Σ P_j δ_{λ_j}` from the clustered spectral decomposition.
pub fn spectral_line_povm(e: &HermitianOperator) -> LinePovm {
    let d = spectral_decompose(e);
    LinePovm { points: d.eigenvalues, effects: d.projectors, bases: Some(d.bases), warnings: Vec::new() }
}

/// Smallest admissible width at one support point of the sharp observable.
#[derive(Clone, Debug, Serialize)]
pub struct PointWidth {
    pub x: f64,
    pub width: f64,
    /// `min ⟨Â(J_{x,width}) ξ, ξ⟩` over unit `ξ` in the eigenspace.
    pub achieved: f64,
}

/// State exhibiting `θ ≥ w/2`: an eigenvector of `Ê` at `x` with no
/// support point of `Â` in `J_{x, w/2}`.
#[derive(Clone, Debug, Serialize)]
pub struct StepSevenWitness {
    /// Centre and width of a point-free interval `J_{y,w}`.
    pub y: f64,
    pub w: f64,
    /// Eigenvalue in `J_{y, w/2}`.
    pub x: f64,
    /// `ρ_Â(J_{x, w/2})` for the eigenvector state.
    pub probability: f64,
    pub lower_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorBarReport {
    pub epsilon: f64,
    pub theta: f64,
    /// Support point of `Ê` attaining `θ`.
    pub worst: f64,
    pub per_point: Vec<PointWidth>,
    pub witness: Option<StepSevenWitness>,
}

/// Error bar width of `Â` as an `ε`-approximation of the sharp `Ê`.
///
/// `Â(J_{x,w})` only changes when `w/2` crosses a distance `|x_k − x|`,
/// so each support point is scanned over those breakpoints and the
/// smallest width with `λ_min(P Â(J) P|_{ran P}) ≥ 1 − ε` is exact.
pub fn error_bar_check(a: &LinePovm, e: &LinePovm, epsilon: f64) -> Result<ErrorBarReport> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} not in [0, 1]")));
    }
    if a.dim() != e.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: e.dim() });
    }
    let per_point: Vec<PointWidth> = (0..e.len())
        .map(|i| {
            let x = e.points[i];
            let basis = e.range_basis(i);
            let mut breaks: Vec<f64> = a.points.iter().map(|p| 2.0 * (p - x).abs()).collect();
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            for w in breaks {
                let achieved = a.mass(x, w).compress(&basis).min_eigenvalue();
                if achieved >= 1.0 - epsilon - 1e-12 {
                    return PointWidth { x, width: w, achieved };
                }
            }
            PointWidth { x, width: f64::INFINITY, achieved: f64::NAN }
        })
        .collect();
    let (worst, theta) =
        per_point.iter().fold((f64::NAN, 0.0_f64), |(bx, bw), p| if p.width > bw { (p.x, p.width) } else { (bx, bw) });
    let worst = if worst.is_nan() { per_point.first().map_or(0.0, |p| p.x) } else { worst };
    Ok(ErrorBarReport { epsilon, theta, worst, per_point, witness: None })
}

/// The lower-bound construction: a point-free `J_{y,w}` inside
/// `(min F, max F)` with `w = (max F − min F)/(4N)`, `N` the number of
/// points of `Â`, and an eigenvalue `x` of `Ê` in `J_{y,w/2}`.
pub fn step_seven_witness(a: &LinePovm, e: &LinePovm, f_range: (f64, f64)) -> Option<StepSevenWitness> {
    let (lo, hi) = f_range;
    let w = (hi - lo) / (4.0 * a.len() as f64);
    // Gaps between consecutive points, clipped to (lo, hi).
    let mut edges = vec![lo];
    edges.extend(a.points.iter().copied().filter(|p| lo < *p && *p < hi));
    edges.push(hi);
    let mut gaps: Vec<(f64, f64)> = edges.windows(2).map(|g| (g[0], g[1])).filter(|g| g.1 - g.0 >= w).collect();
    gaps.sort_by(|a, b| (b.1 - b.0).total_cmp(&(a.1 - a.0)));
    for (g0, g1) in gaps {
        // Slide J_{y,w} across the gap looking for an eigenvalue within w/4 of y.
        let (ymin, ymax) = (g0 + w / 2.0, g1 - w / 2.0);
        for &x in &e.points {
            let y = x.clamp(ymin, ymax);
            if (x - y).abs() < w / 4.0 {
                let i = e.points.iter().position(|p| *p == x).expect("present");
                let xi = e.range_basis(i).column(0).into_owned();
                let probability = a.mass(x, w / 2.0).expectation(&xi);
                return Some(StepSevenWitness { y, w, x, probability, lower_bound: w / 2.0 });
            }
        }
    }
    None
}
