//! Poisson-bracket invariants of covers and partitions of unity: `ν_c`,
//! upper bounds on `pb` from explicit families, `pb₄` of spherical
//! quadrilaterals and the overlap-layer lower bounds.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phase_space::{
    build_band_cover, build_band_partition, poisson_bracket, refine_max_on_sphere, smoothstep, sup_norm, Cover,
    OverlapLayer, PartitionOfUnity, QuadratureGrid, ScalarField, SpherePoint,
};
use crate::povm::Strategy;

/// Enumerate sign vectors of the shorter side up to this length.
pub const BILINEAR_VERTEX_LIMIT: usize = 12;
/// Restarts of the alternating sign ascent beyond the vertex limit.
pub const BILINEAR_RESTARTS: usize = 64;

/// `b_ij = {f_i, g_j}(q)`.
pub fn bracket_matrix(f: &PartitionOfUnity, g: &PartitionOfUnity, q: &SpherePoint) -> DMatrix<f64> {
    let gf: Vec<_> = f.fields.iter().map(|h| h.gradient(q)).collect();
    let gg: Vec<_> = g.fields.iter().map(|h| h.gradient(q)).collect();
    let v = q.vector();
    DMatrix::from_fn(gf.len(), gg.len(), |i, j| v.dot(&gf[i].cross(&gg[j])))
}

/// `max_{x ∈ K_L, y ∈ K_N} xᵀ b y`, with the strategy used.
///
/// For fixed `y` the maximum over `x` is `‖b y‖₁`, so only one side needs
/// to be searched.
pub fn cube_bilinear_max(b: &DMatrix<f64>) -> (f64, Strategy) {
    let (l, n) = b.shape();
    if l == 0 || n == 0 {
        return (0.0, Strategy::Trivial);
    }
    let bt;
    let b = if n > l {
        bt = b.transpose();
        &bt
    } else {
        b
    };
    let n = b.ncols();
    if n <= BILINEAR_VERTEX_LIMIT {
        // y and −y give the same value.
        let mut best: f64 = 0.0;
        for bits in 0u64..1 << (n - 1) {
            let mut s = 0.0;
            for row in b.row_iter() {
                let mut acc = 0.0;
                for (j, v) in row.iter().enumerate() {
                    if bits >> j & 1 == 1 {
                        acc -= v;
                    } else {
                        acc += v;
                    }
                }
                s += acc.abs();
            }
            best = best.max(s);
        }
        return (best, Strategy::VertexEnumeration);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e75);
    let mut best: f64 = 0.0;
    for _ in 0..BILINEAR_RESTARTS {
        let mut y: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let mut value = f64::NEG_INFINITY;
        loop {
            let by: Vec<f64> = b.row_iter().map(|r| r.iter().zip(&y).map(|(a, s)| a * s).sum()).collect();
            let x: Vec<f64> = by.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let new_y: Vec<f64> = (0..n)
                .map(|j| {
                    let c: f64 = (0..b.nrows()).map(|i| x[i] * b[(i, j)]).sum();
                    if c >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect();
            let v: f64 = (0..b.nrows()).map(|i| x[i] * (0..n).map(|j| b[(i, j)] * new_y[j]).sum::<f64>()).sum();
            if v <= value {
                break;
            }
            value = v;
            y = new_y;
        }
        best = best.max(value);
    }
    (best, Strategy::SignAscent)
}

fn bilinear_strategy(l: usize, n: usize) -> Strategy {
    match l.min(n) {
        0 => Strategy::Trivial,
        s if s <= BILINEAR_VERTEX_LIMIT => Strategy::VertexEnumeration,
        _ => Strategy::SignAscent,
    }
}

/// A classical non-commutativity value with its maximizer.
#[derive(Clone, Debug, Serialize)]
pub struct NuC {
    pub value: f64,
    pub point: [f64; 3],
    pub strategy: Strategy,
}

/// `ν_c(𝔣, 𝔤)`: grid maximum of the pointwise cube maximum, refined from
/// the best node.
pub fn nu_c_pair(f: &PartitionOfUnity, g: &PartitionOfUnity, grid: &QuadratureGrid) -> NuC {
    let strategy = bilinear_strategy(f.len(), g.len());
    let (value, q) = refine_max_on_sphere(|q| cube_bilinear_max(&bracket_matrix(f, g, q)).0, grid);
    let v = q.vector();
    NuC { value, point: [v.x, v.y, v.z], strategy }
}

/// `ν_c(𝔣) = ν_c(𝔣, 𝔣)`.
pub fn nu_c(f: &PartitionOfUnity, grid: &QuadratureGrid) -> NuC {
    nu_c_pair(f, f, grid)
}

/// Best member of a family of partitions.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyMin {
    pub value: f64,
    pub best: usize,
    pub values: Vec<f64>,
}

/// Upper bound on `pb(𝒰)`: the minimum of `ν_c` over a family of
/// subordinated partitions.
pub fn pb_upper(family: &[PartitionOfUnity], grid: &QuadratureGrid) -> Result<FamilyMin> {
    if family.is_empty() {
        return Err(Error::EmptyFamily("no partitions to minimize over".into()));
    }
    let values: Vec<f64> = family.iter().map(|p| nu_c(p, grid).value).collect();
    Ok(family_min(values))
}

fn family_min(values: Vec<f64>) -> FamilyMin {
    let (best, value) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) });
    FamilyMin { value, best, values }
}

/// Band partitions of a band cover for several smoothing widths, given as
/// fractions of the overlap width.
pub fn band_partition_family(cover: &Cover, width_fractions: &[f64]) -> Result<Vec<PartitionOfUnity>> {
    let delta =
        cover.band.as_ref().ok_or_else(|| Error::UnsupportedCover("width family needs a band cover".into()))?.delta;
    width_fractions.iter().map(|fr| build_band_partition(cover, Some(fr * 2.0 * delta))).collect()
}

/// Upper bound on `pb(𝒰, 𝒱)`: the minimum over family pairs of
/// `max(ν_c(𝔣), ν_c(𝔤), ν_c(𝔣, 𝔤))`. Pairs are indexed row-major.
pub fn pb_pair_upper(
    family_f: &[PartitionOfUnity],
    family_g: &[PartitionOfUnity],
    grid: &QuadratureGrid,
) -> Result<FamilyMin> {
    if family_f.is_empty() || family_g.is_empty() {
        return Err(Error::EmptyFamily("no partitions to minimize over".into()));
    }
    let single_f: Vec<f64> = family_f.iter().map(|p| nu_c(p, grid).value).collect();
    let single_g: Vec<f64> = family_g.iter().map(|p| nu_c(p, grid).value).collect();
    let mut values = Vec::with_capacity(family_f.len() * family_g.len());
    for (f, nf) in family_f.iter().zip(&single_f) {
        for (g, ng) in family_g.iter().zip(&single_g) {
            values.push(nf.max(*ng).max(nu_c_pair(f, g, grid).value));
        }
    }
    Ok(family_min(values))
}

/// `max(1/A, 1/(4π − A))`.
pub fn pb4_quadrilateral(area: f64) -> Result<f64> {
    let total = 4.0 * PI;
    if !(area > 0.0 && area < total) {
        return Err(Error::InvalidArgument(format!("quadrilateral area {area} not in (0, 4π)")));
    }
    Ok((1.0 / area).max(1.0 / (total - area)))
}

/// Quadrature area of `{pred}`.
pub fn region_area(pred: impl Fn(&SpherePoint) -> bool + Sync, grid: &QuadratureGrid) -> f64 {
    grid.area_where(pred)
}

/// The quadrilateral `{q_u ∈ (a_u, b_u), q_v ∈ (a_v, b_v), q_w > 0}` cut
/// out by two coordinate bands, `w` the remaining axis. Its edges in cyclic
/// order lie on `q_u = a_u`, `q_v = a_v`, `q_u = b_u`, `q_v = b_v`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadrilateralSpec {
    pub axis_u: usize,
    pub u: (f64, f64),
    pub axis_v: usize,
    pub v: (f64, f64),
    pub area: f64,
}

fn corner_term(x: f64, y: f64) -> f64 {
    let s = (1.0 - x * x - y * y).sqrt();
    x * (y / (1.0 - x * x).sqrt()).asin() + y * (x / (1.0 - y * y).sqrt()).asin() - (x * y / s).atan()
}

impl QuadrilateralSpec {
    /// Requires distinct axes and all four corners strictly inside the unit disk.
    pub fn new(axis_u: usize, u: (f64, f64), axis_v: usize, v: (f64, f64)) -> Result<Self> {
        if axis_u == axis_v || !(1..=3).contains(&axis_u) || !(1..=3).contains(&axis_v) {
            return Err(Error::InvalidArgument(format!("axes {axis_u}, {axis_v} must be distinct in 1..=3")));
        }
        if !(u.0 < u.1 && v.0 < v.1) {
            return Err(Error::InvalidArgument("empty interval".into()));
        }
        for x in [u.0, u.1] {
            for y in [v.0, v.1] {
                if x * x + y * y >= 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "corner ({x}, {y}) is not inside the unit disk; the band intersection is not a quadrilateral"
                    )));
                }
            }
        }
        // Mixed antiderivative of 1/√(1 − x² − y²).
        let area = corner_term(u.1, v.1) - corner_term(u.0, v.1) - corner_term(u.1, v.0) + corner_term(u.0, v.0);
        Ok(Self { axis_u, u, axis_v, v, area })
    }

    pub fn third_axis(&self) -> usize {
        6 - self.axis_u - self.axis_v
    }

    pub fn contains(&self, q: &SpherePoint) -> bool {
        let (x, y) = (q.coord(self.axis_u), q.coord(self.axis_v));
        self.u.0 < x && x < self.u.1 && self.v.0 < y && y < self.v.1 && q.coord(self.third_axis()) > 0.0
    }

    pub fn pb4(&self) -> f64 {
        pb4_quadrilateral(self.area).expect("area of a proper quadrilateral")
    }

    /// The four sets `X₀ = {q_u ≥ b_u}`, `X₁ = {q_u ≤ a_u}`,
    /// `Y₀ = {q_v ≥ b_v}`, `Y₁ = {q_v ≤ a_v}` as predicates.
    pub fn boundary_sets(&self) -> FourSets {
        FourSets::coordinate_halfspaces(self.axis_u, self.u, self.axis_v, self.v)
    }
}

/// Four closed sets with `X₀ ∩ X₁ = Y₀ ∩ Y₁ = ∅`, given as predicates.
pub struct FourSets {
    pub x0: Box<dyn Fn(&SpherePoint) -> bool + Send + Sync>,
    pub x1: Box<dyn Fn(&SpherePoint) -> bool + Send + Sync>,
    pub y0: Box<dyn Fn(&SpherePoint) -> bool + Send + Sync>,
    pub y1: Box<dyn Fn(&SpherePoint) -> bool + Send + Sync>,
}

impl FourSets {
    pub fn coordinate_halfspaces(axis_u: usize, u: (f64, f64), axis_v: usize, v: (f64, f64)) -> Self {
        Self {
            x0: Box::new(move |q| q.coord(axis_u) >= u.1),
            x1: Box::new(move |q| q.coord(axis_u) <= u.0),
            y0: Box::new(move |q| q.coord(axis_v) >= v.1),
            y1: Box::new(move |q| q.coord(axis_v) <= v.0),
        }
    }
}

/// A candidate pair for the `pb₄` infimum.
#[derive(Clone, Debug)]
pub struct RampPair {
    pub label: String,
    pub f: ScalarField,
    pub g: ScalarField,
}

/// Smooth monotone ramp on `[0, 1]` whose slope is a trapezoid: linear
/// rise over `[0, ρ]`, plateau `1/(1 − ρ)`, linear fall over `[1 − ρ, 1]`.
/// C¹, with maximal slope `1/(1 − ρ)`.
pub fn trapezoid_ramp(u: f64, rho: f64) -> (f64, f64) {
    let s = 1.0 / (1.0 - rho);
    if u <= 0.0 {
        (0.0, 0.0)
    } else if u >= 1.0 {
        (1.0, 0.0)
    } else if u < rho {
        (s * u * u / (2.0 * rho), s * u / rho)
    } else if u > 1.0 - rho {
        let r = 1.0 - u;
        (1.0 - s * r * r / (2.0 * rho), s * r / rho)
    } else {
        (s * (u - rho / 2.0), s)
    }
}

/// Quintic ramp of `q_axis` falling from 1 at `lo` to 0 at `hi`.
pub fn coordinate_ramp(axis: usize, lo: f64, hi: f64) -> ScalarField {
    falling_ramp(axis, lo, hi, RampProfile::Quintic)
}

/// `f` falling from 1 at `q_axis ≤ lo` to 0 at `q_axis ≥ hi`.
fn falling_ramp(axis: usize, lo: f64, hi: f64, profile: RampProfile) -> ScalarField {
    let (a, b) = (lo, hi);
    let w = b - a;
    ScalarField::coordinate(axis).compose(
        format!("ramp{profile:?}(q{axis}; {a}, {b})"),
        64,
        move |t| 1.0 - profile.eval((t - a) / w).0,
        move |t| -profile.eval((t - a) / w).1 / w,
    )
}

#[derive(Clone, Copy, Debug)]
enum RampProfile {
    Quintic,
    Trapezoid(f64),
}

impl RampProfile {
    fn eval(self, u: f64) -> (f64, f64) {
        match self {
            RampProfile::Quintic => smoothstep(u),
            RampProfile::Trapezoid(rho) => trapezoid_ramp(u, rho),
        }
    }
}

/// Coordinate-ramp pairs for the four half-space sets of a band
/// quadrilateral: `f` goes from 1 on `X₁` to 0 on `X₀`, `g` from 1 on `Y₁`
/// to 0 on `Y₀`, for several profiles and insets.
pub fn ramp_family(axis_u: usize, u: (f64, f64), axis_v: usize, v: (f64, f64)) -> Vec<RampPair> {
    let profiles = [
        RampProfile::Quintic,
        RampProfile::Trapezoid(0.5),
        RampProfile::Trapezoid(0.2),
        RampProfile::Trapezoid(0.05),
        RampProfile::Trapezoid(0.01),
    ];
    let insets = [1e-3, 0.02];
    let mut out = Vec::new();
    for p in profiles {
        for inset in insets {
            let du = inset * (u.1 - u.0);
            let dv = inset * (v.1 - v.0);
            out.push(RampPair {
                label: format!("{p:?}, inset {inset}"),
                f: falling_ramp(axis_u, u.0 + du, u.1 - du, p),
                g: falling_ramp(axis_v, v.0 + dv, v.1 - dv, p),
            });
        }
    }
    out
}

/// Upper estimate of `pb₄`.
#[derive(Clone, Debug, Serialize)]
pub struct Pb4Estimate {
    pub value: f64,
    pub witness: String,
    pub feasible: usize,
    pub rejected: usize,
}

const BOUNDARY_TOL: f64 = 1e-12;

/// Minimum of `sup |{f, g}|` over the members of `family` that satisfy
/// `0 ≤ f, g ≤ 1`, `f = 0` on `X₀`, `f = 1` on `X₁`, `g = 0` on `Y₀`,
/// `g = 1` on `Y₁` at every grid node.
pub fn pb4_upper_estimate(sets: &FourSets, family: &[RampPair], grid: &QuadratureGrid) -> Result<Pb4Estimate> {
    let mut best: Option<(f64, String)> = None;
    let mut rejected = 0;
    let mut feasible = 0;
    for pair in family {
        let ok = grid.nodes().iter().all(|q| {
            let (f, g) = (pair.f.value(q), pair.g.value(q));
            let in_unit = |v: f64| (-BOUNDARY_TOL..=1.0 + BOUNDARY_TOL).contains(&v);
            in_unit(f)
                && in_unit(g)
                && (!(sets.x0)(q) || f.abs() <= BOUNDARY_TOL)
                && (!(sets.x1)(q) || (f - 1.0).abs() <= BOUNDARY_TOL)
                && (!(sets.y0)(q) || g.abs() <= BOUNDARY_TOL)
                && (!(sets.y1)(q) || (g - 1.0).abs() <= BOUNDARY_TOL)
        });
        if !ok {
            rejected += 1;
            continue;
        }
        feasible += 1;
        let v = sup_norm(&poisson_bracket(&pair.f, &pair.g), grid);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, pair.label.clone()));
        }
    }
    let (value, witness) =
        best.ok_or_else(|| Error::Infeasible("no family member satisfies the boundary conditions".into()))?;
    Ok(Pb4Estimate { value, witness, feasible, rejected })
}

/// Lower bound on `pb(𝒰, 𝒱)` from a pair of overlap layers.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapBound {
    pub quadrilateral: Option<QuadrilateralSpec>,
    pub pb4: f64,
    /// `4·pb₄`, a lower bound on `pb(𝒰, 𝒱)`.
    pub bound: f64,
    pub diagnostic: Option<String>,
}

/// `pb(𝒰, 𝒱) ≥ 4·pb₄(U(I), U(Iᶜ), V(J), V(Jᶜ)) ≥ 4·pb₄(Π)` where `Π` is the
/// quadrilateral cut out by the two layers on the side where the third
/// coordinate is positive. Returns 0 with a diagnostic when the layers do
/// not cut out a quadrilateral.
pub fn overlap_lower_bound(u_cover: &Cover, v_cover: &Cover, i: &[usize], j: &[usize]) -> Result<OverlapBound> {
    let lu = OverlapLayer::new(u_cover, i)?;
    let lv = OverlapLayer::new(v_cover, j)?;
    let fail = |msg: String| OverlapBound { quadrilateral: None, pb4: 0.0, bound: 0.0, diagnostic: Some(msg) };
    let (Some((au, pu)), Some((av, pv))) = (lu.band_overlap(), lv.band_overlap()) else {
        return Ok(fail("overlap layers are not coordinate bands".into()));
    };
    if pu.len() != 1 || pv.len() != 1 {
        return Ok(fail(format!("layers have {} and {} components, need one each", pu.len(), pv.len())));
    }
    match QuadrilateralSpec::new(au, pu[0], av, pv[0]) {
        Ok(quad) => {
            let pb4 = quad.pb4();
            Ok(OverlapBound { quadrilateral: Some(quad), pb4, bound: 4.0 * pb4, diagnostic: None })
        }
        Err(e) => Ok(fail(e.to_string())),
    }
}

/// The spin configuration: bands on `q₁` and `q₂`, `I = J = {1..k}` with
/// `k` minimal such that `0 ∈ W_k`.
#[derive(Clone, Debug, Serialize)]
pub struct SpinOverlap {
    pub n: usize,
    pub c1: f64,
    /// 1-based.
    pub k: usize,
    pub area: f64,
    pub area_times_n2: f64,
    pub pb4: f64,
    /// `4·pb₄`, lower bound on `pb(𝒰, 𝒱)`.
    pub pb_lower: f64,
    /// `2·pb₄`, lower bound on the noise indicator `μ(𝒰, 𝒱)`.
    pub mu_lower: f64,
}

pub fn spin_overlap(n: usize, c1: f64) -> Result<SpinOverlap> {
    let u = build_band_cover(1, n, c1)?;
    let v = build_band_cover(2, n, c1)?;
    let k = (0..n)
        .find(|&i| u.band_interval(i).is_some_and(|(lo, hi)| lo < 0.0 && 0.0 < hi))
        .ok_or_else(|| Error::Infeasible("no band contains 0".into()))?;
    let indices: Vec<usize> = (0..=k).collect();
    let b = overlap_lower_bound(&u, &v, &indices, &indices)?;
    let quad = b.quadrilateral.ok_or_else(|| Error::Infeasible(b.diagnostic.unwrap_or_default()))?;
    Ok(SpinOverlap {
        n,
        c1,
        k: k + 1,
        area: quad.area,
        area_times_n2: quad.area * (n * n) as f64,
        pb4: b.pb4,
        pb_lower: b.bound,
        mu_lower: 2.0 * b.pb4,
    })
}

/// Whether a reported value bounds the invariant from above, from below or
/// equals it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Upper,
    Lower,
    Exact,
}

/// `{invariant, value, kind, witness}`.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantRecord {
    pub invariant: String,
    pub value: f64,
    pub kind: BoundKind,
    pub witness: String,
}

impl InvariantRecord {
    pub fn new(invariant: impl Into<String>, value: f64, kind: BoundKind, witness: impl Into<String>) -> Self {
        Self { invariant: invariant.into(), value, kind, witness: witness.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain record")
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("a fit needs at least two points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
