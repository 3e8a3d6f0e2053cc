use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// A point of the unit sphere `q₁² + q₂² + q₃² = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint(Vector3<f64>);

impl SpherePoint {
    /// Normalizes `v`; fails on the zero vector.
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidArgument(format!("cannot project {v:?} to the sphere")));
        }
        Ok(Self(v / n))
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Vector3::new(x, y, z))
    }

    /// Polar angle `θ` from `q₃` and azimuth `φ`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self(Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()))
    }

    pub fn north() -> Self {
        Self(Vector3::z())
    }

    pub fn south() -> Self {
        Self(-Vector3::z())
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    /// Coordinate `q_axis`, `axis ∈ {1, 2, 3}`.
    pub fn coord(&self, axis: usize) -> f64 {
        self.0[axis - 1]
    }

    pub fn theta(&self) -> f64 {
        self.0.z.clamp(-1.0, 1.0).acos()
    }

    pub fn phi(&self) -> f64 {
        self.0.y.atan2(self.0.x)
    }

    /// Great-circle distance.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        self.0.cross(&other.0).norm().atan2(self.0.dot(&other.0))
    }

    /// An orthonormal basis of the tangent plane.
    pub fn tangent_basis(&self) -> (Vector3<f64>, Vector3<f64>) {
        let q = self.0;
        let seed = if q.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let e1 = (seed - q * q.dot(&seed)).normalize();
        let e2 = q.cross(&e1);
        (e1, e2)
    }

    /// `normalize(q + v)`.
    pub fn retract(&self, v: &Vector3<f64>) -> SpherePoint {
        SpherePoint((self.0 + v).normalize())
    }
}

type ValueFn = dyn Fn(&Vector3<f64>) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync;

/// A smooth function on the sphere given by a smooth extension to a
/// neighbourhood in `ℝ³` together with its ambient gradient.
#[derive(Clone)]
pub struct ScalarField {
    label: String,
    band_limit: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradientFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("label", &self.label).field("band_limit", &self.band_limit).finish()
    }
}

impl ScalarField {
    /// `band_limit` is the declared spherical-harmonic degree (exact for
    /// polynomials, empirical for smoothstep compositions).
    pub fn new(
        label: impl Into<String>,
        band_limit: usize,
        value: impl Fn(&Vector3<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), band_limit, value: Arc::new(value), gradient: Arc::new(gradient) }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), 0, move |_| c, |_| Vector3::zeros())
    }

    /// The coordinate function `q_axis`.
    pub fn coordinate(axis: usize) -> Self {
        assert!((1..=3).contains(&axis), "axis must be 1, 2 or 3");
        let mut e = Vector3::zeros();
        e[axis - 1] = 1.0;
        Self::new(format!("q{axis}"), 1, move |p| p[axis - 1], move |_| e)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_band_limit(mut self, band_limit: usize) -> Self {
        self.band_limit = band_limit;
        self
    }

    pub fn value(&self, q: &SpherePoint) -> f64 {
        (self.value)(q.vector())
    }

    pub fn gradient(&self, q: &SpherePoint) -> Vector3<f64> {
        (self.gradient)(q.vector())
    }

    /// Value of the ambient extension.
    pub fn ambient_value(&self, p: &Vector3<f64>) -> f64 {
        (self.value)(p)
    }

    pub fn ambient_gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        (self.gradient)(p)
    }

    /// `a + b·f`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        let (v, g) = (self.value.clone(), self.gradient.clone());
        Self::new(format!("{a} + {b}*({})", self.label), self.band_limit, move |p| a + b * v(p), move |p| g(p) * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.affine(0.0, c)
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        let (v1, g1, v2, g2) = (self.value.clone(), self.gradient.clone(), other.value.clone(), other.gradient.clone());
        Self::new(
            format!("({}) + ({})", self.label, other.label),
            self.band_limit.max(other.band_limit),
            move |p| v1(p) + v2(p),
            move |p| g1(p) + g2(p),
        )
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        let (v1, g1, v2, g2) = (self.value.clone(), self.gradient.clone(), other.value.clone(), other.gradient.clone());
        let (w1, w2) = (v1.clone(), v2.clone());
        Self::new(
            format!("({})*({})", self.label, other.label),
            self.band_limit + other.band_limit,
            move |p| v1(p) * v2(p),
            move |p| g1(p) * w2(p) + g2(p) * w1(p),
        )
    }

    /// `h ∘ f` for a one-variable function `h` with derivative `dh`.
    pub fn compose(
        &self,
        label: impl Into<String>,
        band_limit: usize,
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dh: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let (v, g) = (self.value.clone(), self.gradient.clone());
        let v2 = v.clone();
        Self::new(label, band_limit, move |p| h(v(p)), move |p| g(p) * dh(v2(p)))
    }

    /// `Σ c_i f_i`.
    pub fn linear_combination(coeffs: &[f64], fields: &[ScalarField]) -> Self {
        let parts: Vec<(f64, ScalarField)> = coeffs.iter().copied().zip(fields.iter().cloned()).collect();
        let parts2 = parts.clone();
        let band = fields.iter().map(|f| f.band_limit).max().unwrap_or(0);
        Self::new(
            "linear combination",
            band,
            move |p| parts.iter().map(|(c, f)| c * f.ambient_value(p)).sum(),
            move |p| parts2.iter().fold(Vector3::zeros(), |acc, (c, f)| acc + f.ambient_gradient(p) * *c),
        )
    }

    /// Largest deviation between the analytic gradient and central
    /// differences of the value, along tangent directions at `q`.
    pub fn gradient_check(&self, q: &SpherePoint, h: f64) -> f64 {
        let g = self.gradient(q);
        let (e1, e2) = q.tangent_basis();
        [e1, e2, *q.vector()]
            .iter()
            .map(|e| {
                let p = q.vector();
                let fd = (self.ambient_value(&(p + e * h)) - self.ambient_value(&(p - e * h))) / (2.0 * h);
                (fd - g.dot(e)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `{f, g}(q) = q · (∇f × ∇g)`, so that `{q₁, q₂} = q₃`.
///
/// The gradient of the bracket is taken by central differences of its
/// ambient extension.
pub fn poisson_bracket(f: &ScalarField, g: &ScalarField) -> ScalarField {
    let (gf, gg) = (f.gradient.clone(), g.gradient.clone());
    let value = move |p: &Vector3<f64>| p.dot(&gf(p).cross(&gg(p)));
    let value = Arc::new(value);
    let v2 = value.clone();
    ScalarField::new(
        format!("{{{}, {}}}", f.label, g.label),
        f.band_limit + g.band_limit,
        move |p| value(p),
        move |p| {
            const H: f64 = 1e-5;
            Vector3::from_fn(|i, _| {
                let mut e = Vector3::zeros();
                e[i] = H;
                (v2(&(p + e)) - v2(&(p - e))) / (2.0 * H)
            })
        },
    )
}

/// Quintic smoothstep `6u⁵ − 15u⁴ + 10u³` on `[0, 1]`, clamped outside,
/// with its derivative. C² across the clamps.
pub fn smoothstep(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        (0.0, 0.0)
    } else if u >= 1.0 {
        (1.0, 0.0)
    } else {
        let u2 = u * u;
        (u2 * u * (10.0 - 15.0 * u + 6.0 * u2), 30.0 * u2 * (1.0 - u) * (1.0 - u))
    }
}
