use std::collections::BTreeSet;

use serde::Serialize;

use super::{Cover, Region, SpherePoint};
use crate::error::{Error, Result};

/// Which piece of the decomposition `M = U(I) ⊔ Λ ⊔ U(Iᶜ)` a point lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Layer {
    /// Outside every `U_α`, `α ∈ I`.
    OutsideI,
    /// In some `U_α ∩ U_β`, `α ∈ I`, `β ∈ Iᶜ`.
    Overlap,
    /// Outside every `U_β`, `β ∈ Iᶜ`.
    OutsideComplement,
}

/// Overlap layer of a cover for an index set `I` (0-based).
#[derive(Clone, Debug)]
pub struct OverlapLayer {
    cover: Cover,
    inside: Vec<usize>,
    outside: Vec<usize>,
}

impl OverlapLayer {
    pub fn new(cover: &Cover, indices: &[usize]) -> Result<Self> {
        let inside: BTreeSet<usize> = indices.iter().copied().collect();
        if let Some(&bad) = inside.iter().find(|&&i| i >= cover.len()) {
            return Err(Error::InvalidArgument(format!("index {bad} outside the cover")));
        }
        if inside.is_empty() || inside.len() == cover.len() {
            return Err(Error::InvalidArgument("I and its complement must both be nonempty".into()));
        }
        let outside = (0..cover.len()).filter(|i| !inside.contains(i)).collect();
        Ok(Self { cover: cover.clone(), inside: inside.into_iter().collect(), outside })
    }

    pub fn indices(&self) -> &[usize] {
        &self.inside
    }

    pub fn complement(&self) -> &[usize] {
        &self.outside
    }

    fn in_any(&self, set: &[usize], q: &SpherePoint) -> bool {
        set.iter().any(|&i| self.cover.regions[i].contains(q))
    }

    /// `q ∈ U(I)`.
    pub fn in_outside_i(&self, q: &SpherePoint) -> bool {
        !self.in_any(&self.inside, q)
    }

    /// `q ∈ Λ(𝒰, I)`.
    pub fn in_overlap(&self, q: &SpherePoint) -> bool {
        self.in_any(&self.inside, q) && self.in_any(&self.outside, q)
    }

    /// `q ∈ U(Iᶜ)`.
    pub fn in_outside_complement(&self, q: &SpherePoint) -> bool {
        !self.in_any(&self.outside, q)
    }

    /// Classifies a covered point. Exactly one predicate holds when the
    /// cover contains `q`.
    pub fn classify(&self, q: &SpherePoint) -> Option<Layer> {
        match (self.in_any(&self.inside, q), self.in_any(&self.outside, q)) {
            (false, true) => Some(Layer::OutsideI),
            (true, true) => Some(Layer::Overlap),
            (true, false) => Some(Layer::OutsideComplement),
            (false, false) => None,
        }
    }

    /// For a cover by bands on one axis: `Λ` as a union of disjoint open
    /// intervals of that coordinate, returned with the axis.
    pub fn band_overlap(&self) -> Option<(usize, Vec<(f64, f64)>)> {
        let band = |i: usize| match &self.cover.regions[i] {
            Region::Band { axis, lo, hi } => Some((*axis, *lo, *hi)),
            _ => None,
        };
        let axis = band(0)?.0;
        let mut pieces = Vec::new();
        for &a in &self.inside {
            let (ax, l1, h1) = band(a)?;
            for &b in &self.outside {
                let (bx, l2, h2) = band(b)?;
                if ax != axis || bx != axis {
                    return None;
                }
                let (lo, hi) = (l1.max(l2), h1.min(h2));
                if lo < hi {
                    pieces.push((lo, hi));
                }
            }
        }
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in pieces {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Some((axis, merged))
    }
}
