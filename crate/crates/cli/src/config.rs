//! TOML experiment configuration.
//!
//! A document names the experiment, optionally a seed and an output
//! directory, and carries one section per experiment:
//!
//! ```toml
//! experiment = "noise-localization"
//! seed = 7
//!
//! [noise_localization]
//! m = [16, 32, 64]
//! n = 5
//! axis = 1
//! ```
//!
//! Unknown keys are rejected. A missing section means that experiment's defaults.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use noiselab::phase_space::ScalarField;

/// Largest quantum number any experiment accepts.
pub const M_CEILING: usize = 256;

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    BtVerify,
    NoiseLocalization,
    SpinOverlap,
    Errorbar,
    CoverBuild,
    Pb4Quad,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::BtVerify => "bt-verify",
            Experiment::NoiseLocalization => "noise-localization",
            Experiment::SpinOverlap => "spin-overlap",
            Experiment::Errorbar => "errorbar",
            Experiment::CoverBuild => "cover-build",
            Experiment::Pb4Quad => "pb4-quad",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rejected configuration. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub bt_verify: Option<BtVerifyParams>,
    pub noise_localization: Option<NoiseLocalizationParams>,
    pub spin_overlap: Option<SpinOverlapParams>,
    pub errorbar: Option<ErrorbarParams>,
    pub cover_build: Option<CoverBuildParams>,
    pub pb4_quad: Option<Pb4QuadParams>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Checks that the document is meant for `experiment`.
    pub fn check_experiment(&self, experiment: Experiment) -> Result<(), ConfigError> {
        match self.experiment {
            Some(e) if e != experiment => invalid(format!("config is for `{e}`, not `{experiment}`")),
            _ => Ok(()),
        }
    }
}

fn check_m_list(m: &[usize]) -> Result<(), ConfigError> {
    if m.is_empty() {
        return invalid("m list is empty");
    }
    if let Some(bad) = m.iter().find(|&&v| v == 0 || v > M_CEILING) {
        return invalid(format!("m = {bad} outside 1..={M_CEILING}"));
    }
    Ok(())
}

fn check_axis(name: &str, axis: usize) -> Result<(), ConfigError> {
    if !(1..=3).contains(&axis) {
        return invalid(format!("{name} = {axis} not in 1..=3"));
    }
    Ok(())
}

fn check_c1(c1: f64) -> Result<(), ConfigError> {
    if !(c1 > 2.0 && c1.is_finite()) {
        return invalid(format!("c1 = {c1} must exceed 2"));
    }
    Ok(())
}

/// Symbol names: `1`, `q1`, `q2`, `q3` and products such as `q1*q3`.
pub fn parse_field(name: &str) -> Result<ScalarField, ConfigError> {
    let factors: Vec<&str> = name.split('*').map(str::trim).collect();
    let mut out = ScalarField::constant(1.0);
    for f in &factors {
        let g = match *f {
            "1" => ScalarField::constant(1.0),
            "q1" => ScalarField::coordinate(1),
            "q2" => ScalarField::coordinate(2),
            "q3" => ScalarField::coordinate(3),
            _ => return invalid(format!("unknown symbol `{f}` in `{name}`")),
        };
        out = out.mul(&g);
    }
    Ok(out.with_label(name))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BtVerifyParams {
    pub m: Vec<usize>,
    #[serde(default = "default_pairs")]
    pub pairs: Vec<[String; 2]>,
    /// Required `defect₄(2m)/defect₄(m)` when `m` doubles.
    #[serde(default = "default_contraction")]
    pub contraction: f64,
}

fn default_pairs() -> Vec<[String; 2]> {
    vec![["q1".into(), "q2".into()]]
}

fn default_contraction() -> f64 {
    0.75
}

impl Default for BtVerifyParams {
    fn default() -> Self {
        Self { m: vec![16, 32, 64], pairs: default_pairs(), contraction: default_contraction() }
    }
}

impl BtVerifyParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_m_list(&self.m)?;
        if self.pairs.is_empty() {
            return invalid("no (f, g) pairs");
        }
        for [f, g] in &self.pairs {
            parse_field(f)?;
            parse_field(g)?;
        }
        if !(self.contraction > 0.0) {
            return invalid("contraction must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseLocalizationParams {
    pub m: Vec<usize>,
    #[serde(default = "default_axis1")]
    pub axis: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_c1")]
    pub c1: f64,
    /// Transition width of the partition as a fraction of the overlap `2δ`.
    #[serde(default = "default_width_fraction")]
    pub width_fraction: f64,
    /// `n_θ` of the grid on which `ν_c` is evaluated.
    #[serde(default = "default_nu_c_grid")]
    pub nu_c_grid: usize,
    /// Allowed max/min of `m·upper` across the sweep.
    #[serde(default = "default_ratio")]
    pub bounded_ratio: f64,
    /// `|m·lower − ν_c/2| ≤ rel·ν_c/2 + abs` at the largest `m`.
    #[serde(default = "default_rel_tol")]
    pub lower_rel_tolerance: f64,
    #[serde(default = "default_abs_tol")]
    pub lower_abs_tolerance: f64,
    #[serde(default = "default_gradient_starts")]
    pub gradient_starts: usize,
}

fn default_axis1() -> usize {
    1
}
fn default_axis2() -> usize {
    2
}
fn default_n() -> usize {
    5
}
fn default_c1() -> f64 {
    3.0
}
fn default_width_fraction() -> f64 {
    0.8
}
fn default_nu_c_grid() -> usize {
    96
}
fn default_ratio() -> f64 {
    2.0
}
fn default_rel_tol() -> f64 {
    0.2
}
fn default_abs_tol() -> f64 {
    0.05
}
fn default_gradient_starts() -> usize {
    64
}

impl Default for NoiseLocalizationParams {
    fn default() -> Self {
        Self {
            m: vec![16, 32, 64],
            axis: default_axis1(),
            n: default_n(),
            c1: default_c1(),
            width_fraction: default_width_fraction(),
            nu_c_grid: default_nu_c_grid(),
            bounded_ratio: default_ratio(),
            lower_rel_tolerance: default_rel_tol(),
            lower_abs_tolerance: default_abs_tol(),
            gradient_starts: default_gradient_starts(),
        }
    }
}

impl NoiseLocalizationParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_m_list(&self.m)?;
        check_axis("axis", self.axis)?;
        check_c1(self.c1)?;
        if self.n < 2 {
            return invalid(format!("n = {} below 2", self.n));
        }
        if !(self.width_fraction > 0.0 && self.width_fraction < 1.0) {
            return invalid("width_fraction must lie in (0, 1)");
        }
        if self.nu_c_grid < 8 {
            return invalid("nu_c_grid below 8");
        }
        if self.gradient_starts == 0 {
            return invalid("gradient_starts must be positive");
        }
        if !(self.bounded_ratio >= 1.0) || self.lower_rel_tolerance < 0.0 || self.lower_abs_tolerance < 0.0 {
            return invalid("tolerances must be nonnegative and bounded_ratio ≥ 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinOverlapParams {
    #[serde(default = "default_spin_n")]
    pub n: Vec<usize>,
    #[serde(default = "default_spin_c1")]
    pub c1: f64,
    /// Quantum number of the joint observable check.
    #[serde(default = "default_joint_m")]
    pub joint_m: usize,
    /// `N` of the joint observable check, the smallest `N` when absent.
    pub joint_n: Option<usize>,
    #[serde(default = "default_slope")]
    pub slope: f64,
    #[serde(default = "default_slope_tolerance")]
    pub slope_tolerance: f64,
    #[serde(default = "default_ratio")]
    pub area_ratio: f64,
}

fn default_spin_n() -> Vec<usize> {
    vec![4, 6, 8, 10, 12]
}
fn default_spin_c1() -> f64 {
    2.5
}
fn default_joint_m() -> usize {
    16
}
fn default_slope() -> f64 {
    2.0
}
fn default_slope_tolerance() -> f64 {
    0.1
}

impl Default for SpinOverlapParams {
    fn default() -> Self {
        Self {
            n: default_spin_n(),
            c1: default_spin_c1(),
            joint_m: default_joint_m(),
            joint_n: None,
            slope: default_slope(),
            slope_tolerance: default_slope_tolerance(),
            area_ratio: default_ratio(),
        }
    }
}

impl SpinOverlapParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n.is_empty() {
            return invalid("N list is empty");
        }
        if let Some(bad) = self.n.iter().chain(&self.joint_n).find(|&&n| n < 2) {
            return invalid(format!("N = {bad} below feasibility (N ≥ 2)"));
        }
        check_c1(self.c1)?;
        check_m_list(&[self.joint_m])?;
        if self.slope_tolerance < 0.0 || !(self.area_ratio >= 1.0) {
            return invalid("slope_tolerance must be nonnegative and area_ratio ≥ 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorbarParams {
    pub m: Vec<usize>,
    /// Coordinate observable `q1`, `q2` or `q3`.
    #[serde(default = "default_errorbar_field")]
    pub field: String,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Every interval is shorter than `c`.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Support points of the registration, the interval midpoints when absent.
    pub points: Option<Vec<f64>>,
    #[serde(default = "default_gradient_starts")]
    pub gradient_starts: usize,
}

fn default_errorbar_field() -> String {
    "q3".into()
}
fn default_c() -> f64 {
    0.5
}
fn default_epsilon() -> f64 {
    0.1
}

impl Default for ErrorbarParams {
    fn default() -> Self {
        Self {
            m: vec![64],
            field: default_errorbar_field(),
            n: default_n(),
            c: default_c(),
            epsilon: default_epsilon(),
            points: None,
            gradient_starts: default_gradient_starts(),
        }
    }
}

impl ErrorbarParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_m_list(&self.m)?;
        self.axis()?;
        if self.n < 2 {
            return invalid(format!("n = {} below 2", self.n));
        }
        if !(self.c > 2.0 / self.n as f64) {
            return invalid(format!("{} intervals shorter than c = {} cannot cover [-1, 1]", self.n, self.c));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return invalid("epsilon must lie in [0, 1]");
        }
        if let Some(p) = &self.points {
            if p.len() != self.n {
                return invalid(format!("{} points for {} intervals", p.len(), self.n));
            }
        }
        if self.gradient_starts == 0 {
            return invalid("gradient_starts must be positive");
        }
        Ok(())
    }

    pub fn axis(&self) -> Result<usize, ConfigError> {
        match self.field.as_str() {
            "q1" => Ok(1),
            "q2" => Ok(2),
            "q3" => Ok(3),
            other => invalid(format!("field `{other}` is not a coordinate q1, q2, q3")),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverBuildParams {
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_ks")]
    pub k: Vec<usize>,
}

fn default_r() -> f64 {
    0.5
}
fn default_ks() -> Vec<usize> {
    vec![1, 2]
}

impl Default for CoverBuildParams {
    fn default() -> Self {
        Self { r: default_r(), k: default_ks() }
    }
}

impl CoverBuildParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.r >= 0.1 && self.r < std::f64::consts::PI) {
            return invalid(format!("r = {} outside [0.1, π)", self.r));
        }
        if self.k.is_empty() || self.k.contains(&0) {
            return invalid("k list must be nonempty and positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pb4QuadParams {
    #[serde(default = "default_axis1")]
    pub axis_u: usize,
    #[serde(default = "default_interval")]
    pub u: [f64; 2],
    #[serde(default = "default_axis2")]
    pub axis_v: usize,
    #[serde(default = "default_interval")]
    pub v: [f64; 2],
    /// Extra areas at which the closed form is tabulated.
    #[serde(default)]
    pub areas: Vec<f64>,
    /// Intervals are scaled by this about their centres for the monotonicity check.
    #[serde(default = "default_shrink")]
    pub shrink: f64,
    #[serde(default = "default_pb4_grid")]
    pub grid: usize,
}

fn default_interval() -> [f64; 2] {
    [-0.225, 0.225]
}
fn default_shrink() -> f64 {
    0.8
}
fn default_pb4_grid() -> usize {
    64
}

impl Default for Pb4QuadParams {
    fn default() -> Self {
        Self {
            axis_u: default_axis1(),
            u: default_interval(),
            axis_v: default_axis2(),
            v: default_interval(),
            areas: Vec::new(),
            shrink: default_shrink(),
            grid: default_pb4_grid(),
        }
    }
}

impl Pb4QuadParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_axis("axis_u", self.axis_u)?;
        check_axis("axis_v", self.axis_v)?;
        if self.axis_u == self.axis_v {
            return invalid("axis_u and axis_v must differ");
        }
        for (name, [a, b]) in [("u", self.u), ("v", self.v)] {
            if !(-1.0 <= a && a <= b && b <= 1.0) {
                return invalid(format!("{name} = [{a}, {b}] is not an interval in [-1, 1]"));
            }
        }
        if let Some(a) = self.areas.iter().find(|a| !(**a > 0.0 && **a < 4.0 * std::f64::consts::PI)) {
            return invalid(format!("area {a} outside (0, 4π)"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return invalid("shrink must lie in (0, 1)");
        }
        if self.grid < 16 {
            return invalid("grid below 16");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use noiselab::phase_space::SpherePoint;

    #[test]
    fn sections_fall_back_to_defaults() {
        let c = ExperimentConfig::from_toml("experiment = \"spin-overlap\"\n[spin_overlap]\nc1 = 3.0\n").unwrap();
        assert_eq!(c.experiment, Some(Experiment::SpinOverlap));
        let s = c.spin_overlap.clone().unwrap();
        assert_eq!((s.n, s.c1, s.joint_n), (vec![4, 6, 8, 10, 12], 3.0, None));
        assert!(c.check_experiment(Experiment::SpinOverlap).is_ok());
        assert!(c.check_experiment(Experiment::Errorbar).is_err());
        for p in [
            BtVerifyParams::default().validate(),
            NoiseLocalizationParams::default().validate(),
            SpinOverlapParams::default().validate(),
            ErrorbarParams::default().validate(),
            CoverBuildParams::default().validate(),
            Pb4QuadParams::default().validate(),
        ] {
            p.unwrap();
        }
    }

    #[test]
    fn parse_field_examples() {
        let q = SpherePoint::from_xyz(0.6, 0.0, 0.8).unwrap();
        assert_eq!(parse_field("1").unwrap().value(&q), 1.0);
        assert_eq!(parse_field("q3").unwrap().value(&q), 0.8);
        assert!((parse_field("q1 * q3").unwrap().value(&q) - 0.48).abs() < 1e-15);
        assert!(parse_field("q1+q2").is_err());
        assert!(parse_field("").is_err());
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let nl = NoiseLocalizationParams { width_fraction: 1.0, ..Default::default() };
        assert!(nl.validate().is_err());
        let eb = ErrorbarParams { field: "q1*q2".into(), ..Default::default() };
        assert!(eb.validate().is_err());
        let eb = ErrorbarParams { points: Some(vec![0.0]), ..Default::default() };
        assert!(eb.validate().is_err());
        let pq = Pb4QuadParams { axis_v: 1, ..Default::default() };
        assert!(pq.validate().is_err());
        let pq = Pb4QuadParams { u: [0.2, 0.1], ..Default::default() };
        assert!(pq.validate().is_err());
    }
}
