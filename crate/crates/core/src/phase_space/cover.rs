use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{smoothstep, QuadratureGrid, ScalarField, SpherePoint};
use crate::error::{Error, Result};

/// An open subset of the sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    /// `{q : lo < q_axis < hi}`.
    Band {
        axis: usize,
        lo: f64,
        hi: f64,
    },
    /// Open geodesic ball.
    Ball {
        center: [f64; 3],
        radius: f64,
    },
    Sphere,
    Union {
        parts: Vec<Region>,
    },
    Intersection {
        parts: Vec<Region>,
    },
}

impl Region {
    pub fn contains(&self, q: &SpherePoint) -> bool {
        match self {
            Region::Band { axis, lo, hi } => {
                let t = q.coord(*axis);
                *lo < t && t < *hi
            }
            Region::Ball { center, radius } => q.distance(&center_point(center)) < *radius,
            Region::Sphere => true,
            Region::Union { parts } => parts.iter().any(|r| r.contains(q)),
            Region::Intersection { parts } => parts.iter().all(|r| r.contains(q)),
        }
    }

    /// Whether the closures intersect, for pairs where this is decidable exactly.
    pub fn closures_meet(&self, other: &Region) -> Result<bool> {
        match (self, other) {
            (Region::Band { axis: a, lo: l1, hi: h1 }, Region::Band { axis: b, lo: l2, hi: h2 }) if a == b => {
                Ok(l1.max(*l2) <= h1.min(*h2))
            }
            (Region::Ball { center: c1, radius: r1 }, Region::Ball { center: c2, radius: r2 }) => {
                Ok(center_point(c1).distance(&center_point(c2)) <= r1 + r2)
            }
            (Region::Union { parts }, o) | (o, Region::Union { parts }) => {
                for p in parts {
                    if p.closures_meet(o)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            _ => Err(Error::UnsupportedCover(format!("closure intersection of {} and {}", self.kind(), other.kind()))),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Region::Band { .. } => "band",
            Region::Ball { .. } => "ball",
            Region::Sphere => "sphere",
            Region::Union { .. } => "union",
            Region::Intersection { .. } => "intersection",
        }
    }
}

fn center_point(c: &[f64; 3]) -> SpherePoint {
    SpherePoint::new(Vector3::from(*c)).expect("nonzero center")
}

/// Parameters of a band cover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandCoverParams {
    pub axis: usize,
    pub n: usize,
    pub c1: f64,
    /// Half-width of each overlap `W_i ∩ W_{i+1}`.
    pub delta: f64,
    /// Interior breakpoints `t_1 < … < t_{N−1}`, the overlap centers.
    pub breakpoints: Vec<f64>,
}

/// A finite open cover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub regions: Vec<Region>,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandCoverParams>,
}

impl Cover {
    pub fn new(regions: Vec<Region>) -> Self {
        let labels = (1..=regions.len()).map(|i| i.to_string()).collect();
        Self { regions, labels, band: None }
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// The first grid node not covered, if any.
    pub fn uncovered_node(&self, grid: &QuadratureGrid) -> Option<SpherePoint> {
        grid.nodes().par_iter().find_first(|q| !self.regions.iter().any(|r| r.contains(q))).copied()
    }

    pub fn covers(&self, grid: &QuadratureGrid) -> bool {
        self.uncovered_node(grid).is_none()
    }

    /// Interval `W_i` of a band cover (0-based `i`).
    pub fn band_interval(&self, i: usize) -> Option<(f64, f64)> {
        match self.regions.get(i)? {
            Region::Band { lo, hi, .. } => Some((*lo, *hi)),
            _ => None,
        }
    }

    pub fn to_document(&self) -> CoverDocument {
        let kind = match &self.band {
            Some(_) => "band",
            None if self.regions.iter().all(|r| matches!(r, Region::Ball { .. })) => "ball",
            None => "general",
        };
        CoverDocument { kind: kind.into(), cover: self.clone() }
    }
}

/// JSON form of a cover: `{type, regions, labels, band?}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CoverDocument {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(flatten)]
    pub cover: Cover,
}

/// `N` bands `{q_axis ∈ W_i}` with `W_i = (t_{i−1} − δ, t_i + δ)`,
/// `t_k = −1 + 2k/N`, `δ = min((c1 − 2)/(2N), 1/(2N))`. Then
/// `|W_i| ≤ c1/N`, `−1 ∈ W_1`, `1 ∈ W_N` and `W_i ∩ W_j = ∅` for `|i − j| ≥ 2`.
pub fn build_band_cover(axis: usize, n: usize, c1: f64) -> Result<Cover> {
    if !(1..=3).contains(&axis) {
        return Err(Error::InvalidArgument(format!("axis {axis} not in 1..=3")));
    }
    if n < 2 {
        return Err(Error::Infeasible(format!("band cover needs N >= 2, got {n}")));
    }
    if !(c1 > 2.0) {
        return Err(Error::Infeasible(format!(
            "intervals of length <= c1/N = {c1}/{n} cannot cover [-1, 1] with overlaps unless c1 > 2"
        )));
    }
    let nf = n as f64;
    let delta = ((c1 - 2.0) / (2.0 * nf)).min(1.0 / (2.0 * nf));
    let t = |k: usize| -1.0 + 2.0 * k as f64 / nf;
    let regions = (1..=n).map(|i| Region::Band { axis, lo: t(i - 1) - delta, hi: t(i) + delta }).collect();
    let labels = (1..=n).map(|i| format!("W{i}")).collect();
    let breakpoints = (1..n).map(t).collect();
    Ok(Cover { regions, labels, band: Some(BandCoverParams { axis, n, c1, delta, breakpoints }) })
}

/// A partition of unity subordinated to a cover.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub fields: Vec<ScalarField>,
    pub cover: Cover,
}

/// Worst violations of the partition-of-unity invariants on a grid.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct PartitionDefects {
    pub sum: f64,
    pub negativity: f64,
    pub outside_support: f64,
}

impl PartitionDefects {
    pub fn is_valid(&self) -> bool {
        self.sum <= 1e-10 && self.negativity <= 1e-12 && self.outside_support < 1e-12
    }
}

impl PartitionOfUnity {
    pub fn new(fields: Vec<ScalarField>, cover: Cover) -> Result<Self> {
        if fields.len() != cover.len() {
            return Err(Error::LengthMismatch { expected: cover.len(), got: fields.len() });
        }
        if fields.is_empty() {
            return Err(Error::EmptyFamily("partition with no functions".into()));
        }
        Ok(Self { fields, cover })
    }

    /// `{1}` on the one-set cover.
    pub fn trivial() -> Self {
        Self { fields: vec![ScalarField::constant(1.0)], cover: Cover::new(vec![Region::Sphere]) }
    }

    /// `(f, 1 − f)` on a caller-supplied two-set cover.
    pub fn two_set(f: ScalarField, cover: Cover) -> Result<Self> {
        let g = f.affine(1.0, -1.0).with_label(format!("1 - ({})", f.label()));
        Self::new(vec![f, g], cover)
    }

    /// `((1 + q_a)/2, (1 − q_a)/2)` on `{q_a > −1}, {q_a < 1}`.
    pub fn two_set_coordinate(axis: usize) -> Self {
        let f = ScalarField::coordinate(axis).affine(0.5, 0.5);
        let cover =
            Cover::new(vec![Region::Band { axis, lo: -1.0, hi: 2.0 }, Region::Band { axis, lo: -2.0, hi: 1.0 }]);
        Self::two_set(f, cover).expect("two fields, two regions")
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Values of every function at `q`.
    pub fn values(&self, q: &SpherePoint) -> Vec<f64> {
        self.fields.iter().map(|f| f.value(q)).collect()
    }

    pub fn defects_on(&self, points: &[SpherePoint]) -> PartitionDefects {
        points
            .par_iter()
            .map(|q| {
                let vals = self.values(q);
                let sum = (vals.iter().sum::<f64>() - 1.0).abs();
                let neg = vals.iter().fold(0.0_f64, |m, v| m.max(-v));
                let out = vals
                    .iter()
                    .zip(&self.cover.regions)
                    .filter(|(_, r)| !r.contains(q))
                    .fold(0.0_f64, |m, (v, _)| m.max(v.abs()));
                PartitionDefects { sum, negativity: neg, outside_support: out }
            })
            .reduce(PartitionDefects::default, |a, b| PartitionDefects {
                sum: a.sum.max(b.sum),
                negativity: a.negativity.max(b.negativity),
                outside_support: a.outside_support.max(b.outside_support),
            })
    }

    pub fn validate(&self, grid: &QuadratureGrid) -> Result<PartitionDefects> {
        let d = self.defects_on(grid.nodes());
        if !d.is_valid() {
            return Err(Error::InvalidArgument(format!("partition of unity violates invariants: {d:?}")));
        }
        Ok(d)
    }

    /// `{f_i g_j}` on `{U_i ∩ V_j}`, row-major in `(i, j)`.
    pub fn product(&self, other: &PartitionOfUnity) -> PartitionOfUnity {
        let mut fields = Vec::with_capacity(self.len() * other.len());
        let mut regions = Vec::with_capacity(self.len() * other.len());
        let mut labels = Vec::with_capacity(self.len() * other.len());
        for (i, (f, u)) in self.fields.iter().zip(&self.cover.regions).enumerate() {
            for (j, (g, v)) in other.fields.iter().zip(&other.cover.regions).enumerate() {
                fields.push(f.mul(g));
                regions.push(Region::Intersection { parts: vec![u.clone(), v.clone()] });
                labels.push(format!("({},{})", i + 1, j + 1));
            }
        }
        PartitionOfUnity { fields, cover: Cover { regions, labels, band: None } }
    }

    /// `f_l = Σ_{φ(i) = l} g_i` on the merged regions.
    pub fn merge(&self, assignment: &[usize]) -> Result<PartitionOfUnity> {
        if assignment.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: assignment.len() });
        }
        let count = assignment.iter().max().map_or(0, |m| m + 1);
        let mut fields = Vec::with_capacity(count);
        let mut regions = Vec::with_capacity(count);
        for l in 0..count {
            let members: Vec<usize> = (0..self.len()).filter(|&i| assignment[i] == l).collect();
            if members.is_empty() {
                return Err(Error::InvalidArgument(format!("color {l} unused")));
            }
            let parts: Vec<ScalarField> = members.iter().map(|&i| self.fields[i].clone()).collect();
            fields.push(ScalarField::linear_combination(&vec![1.0; parts.len()], &parts));
            regions.push(Region::Union { parts: members.iter().map(|&i| self.cover.regions[i].clone()).collect() });
        }
        Ok(PartitionOfUnity { fields, cover: Cover::new(regions) })
    }
}

/// Smoothstep partition subordinated to a band cover: with `s_i` rising
/// across `[t_i − w/2, t_i + w/2]`, `h_i = s_{i−1} − s_i` (`s_0 = 1`,
/// `s_N = 0`) composed with the cover's coordinate. `width` defaults to
/// 0.8 of the overlap width `2δ`.
pub fn build_band_partition(cover: &Cover, width: Option<f64>) -> Result<PartitionOfUnity> {
    let params =
        cover.band.as_ref().ok_or_else(|| Error::UnsupportedCover("band partition needs a band cover".into()))?;
    let overlap = 2.0 * params.delta;
    let w = width.unwrap_or(0.8 * overlap);
    if !(w > 0.0) || w >= overlap {
        return Err(Error::InvalidArgument(format!(
            "smoothing width {w} must lie in (0, {overlap}) so supports stay inside the bands"
        )));
    }
    let axis = params.axis;
    let n = params.n;
    let bp = params.breakpoints.clone();
    let fields = (0..n)
        .map(|i| {
            let lower = if i == 0 { None } else { Some(bp[i - 1]) };
            let upper = if i + 1 == n { None } else { Some(bp[i]) };
            // s(t) for a transition centered at c.
            let s = move |c: Option<f64>, empty: f64, t: f64| match c {
                Some(c) => smoothstep((t - c + w / 2.0) / w),
                None => (empty, 0.0),
            };
            let h = move |t: f64| s(lower, 1.0, t).0 - s(upper, 0.0, t).0;
            let dh = move |t: f64| (s(lower, 1.0, t).1 - s(upper, 0.0, t).1) / w;
            ScalarField::coordinate(axis).compose(format!("h{}(q{axis})", i + 1), 64, h, dh)
        })
        .collect();
    PartitionOfUnity::new(fields, cover.clone())
}

/// A greedy cover together with its construction data.
#[derive(Clone, Debug)]
pub struct GreedyCover {
    pub cover: Cover,
    pub centers: Vec<SpherePoint>,
    pub radius: f64,
    pub seed: u64,
    /// Number of candidate points streamed.
    pub candidates: usize,
    /// Largest distance from a candidate to its nearest center (`< r/2` by maximality).
    pub max_candidate_gap: f64,
}

fn fibonacci_lattice(n: usize) -> Vec<SpherePoint> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            SpherePoint::new(Vector3::new(rho * phi.cos(), rho * phi.sin(), z)).expect("unit")
        })
        .collect()
}

/// Maximal `r/2`-separated set grown greedily from a seeded shuffle of a
/// Fibonacci lattice; regions are the geodesic balls of radius `r`.
pub fn build_greedy_cover(r: f64, seed: u64) -> Result<GreedyCover> {
    if !(r > 0.0 && r < PI) {
        return Err(Error::InvalidArgument(format!("radius {r} not in (0, π)")));
    }
    let n = ((4.0 * PI / (r / 8.0).powi(2)).ceil() as usize).clamp(2000, 400_000);
    let mut candidates = fibonacci_lattice(n);
    candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let sep = r / 2.0;
    let mut centers: Vec<SpherePoint> = Vec::new();
    let mut gap: f64 = 0.0;
    for c in &candidates {
        let nearest = centers.iter().map(|z| z.distance(c)).fold(f64::INFINITY, f64::min);
        if nearest >= sep {
            centers.push(*c);
        } else {
            gap = gap.max(nearest);
        }
    }
    let regions = centers
        .iter()
        .map(|z| Region::Ball { center: [z.vector().x, z.vector().y, z.vector().z], radius: r })
        .collect();
    Ok(GreedyCover { cover: Cover::new(regions), centers, radius: r, seed, candidates: n, max_candidate_gap: gap })
}

fn cap_area(rho: f64) -> f64 {
    2.0 * PI * (1.0 - rho.cos())
}

/// Packing bound on the number of centers of an `r/2`-separated set: the
/// caps of radius `r/4` around them are disjoint.
pub fn greedy_center_bound(r: f64) -> usize {
    (4.0 * PI / cap_area(r / 4.0)).floor() as usize
}
