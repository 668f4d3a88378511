//! Experiment configuration: one TOML document with an `[experiment]`
//! header, the weight distribution, and a section per experiment kind.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::DistributionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Shape,
    Tau,
    BusemannBn,
    BusemannSlope,
    BusemannHighprob,
    Coexist,
    Ends,
    Localize,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Shape => "shape",
            ExperimentKind::Tau => "tau",
            ExperimentKind::BusemannBn => "busemann_bn",
            ExperimentKind::BusemannSlope => "busemann_slope",
            ExperimentKind::BusemannHighprob => "busemann_highprob",
            ExperimentKind::Coexist => "coexist",
            ExperimentKind::Ends => "ends",
            ExperimentKind::Localize => "localize",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    /// At most 2^63 - 1 so that configs round-trip through TOML.
    pub master_seed: u64,
    pub replications: usize,
    /// Worker threads; results do not depend on it.
    #[serde(default = "one")]
    pub parallelism: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionParams {
    /// Padding around the bounding box of sources and targets, as a
    /// multiple of its L-infinity diameter.
    pub margin: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self { margin: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeSourceKind {
    Estimated,
    Diamond,
}

/// Where experiments that need the limit shape get it from. An estimated
/// shape uses its own pilot weights, independent of the replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitShapeParams {
    pub source: ShapeSourceKind,
    pub angular_resolution: usize,
    pub n: u64,
    pub replications: usize,
}

impl Default for LimitShapeParams {
    fn default() -> Self {
        Self { source: ShapeSourceKind::Estimated, angular_resolution: 16, n: 60, replications: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapeParams {
    pub angular_resolution: usize,
    pub n: u64,
    pub sides_tolerance: f64,
    /// Half-width of the boundary raster written as a pixmap.
    pub raster_half_width: i64,
}

impl Default for ShapeParams {
    fn default() -> Self {
        Self { angular_resolution: 16, n: 100, sides_tolerance: 0.01, raster_half_width: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TauParams {
    pub direction: [f64; 2],
    pub n_values: Vec<f64>,
    /// Scale of the eight-image symmetry check; omitted to skip it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry_n: Option<f64>,
}

impl Default for TauParams {
    fn default() -> Self {
        Self { direction: [1.0, 0.0], n_values: vec![50.0, 100.0, 200.0], symmetry_n: Some(100.0) }
    }
}

/// Line indices `ceil(M) + k * n_step` for `k = 1..=n_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BusemannBnParams {
    pub m_big: f64,
    pub epsilon: f64,
    pub n_count: usize,
    pub n_step: f64,
    /// Boundary direction; the side whose midpoint is nearest is used.
    pub direction_angle: f64,
    pub base_point: [i64; 2],
}

impl Default for BusemannBnParams {
    fn default() -> Self {
        Self { m_big: 100.0, epsilon: 0.3, n_count: 30, n_step: 1.0, direction_angle: 0.4, base_point: [0, 0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BusemannSlopeParams {
    /// Tangential displacements, increasing.
    pub m_values: Vec<f64>,
    pub epsilon: f64,
    pub n_count: usize,
    pub n_step: f64,
    /// Coordinate half-axis `axis * pi/2` carrying `v`.
    pub axis: u8,
}

impl Default for BusemannSlopeParams {
    fn default() -> Self {
        Self { m_values: vec![50.0, 100.0], epsilon: 0.3, n_count: 30, n_step: 1.0, axis: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BusemannHighprobParams {
    pub m_big: f64,
    pub epsilon: f64,
    pub n_count: usize,
    pub n_step: f64,
    pub direction_angle: f64,
    pub y: [f64; 2],
}

impl Default for BusemannHighprobParams {
    fn default() -> Self {
        Self { m_big: 50.0, epsilon: 0.3, n_count: 30, n_step: 1.0, direction_angle: 0.4, y: [0.3, 0.6] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoexistParams {
    /// Seed scales, increasing; seeds sit at the four axis boundary points.
    pub m_values: Vec<f64>,
    /// Fixed square window `[-h, h]^2` for every scale.
    pub half_width: i64,
    /// Boundary cells each color must own. The default, 200, is half a
    /// color's fair share of the default window's 1600 boundary cells, so
    /// the event asks for a robust crossing rather than a thin tendril.
    pub boundary_threshold: usize,
    /// Number of line indices in the Busemann check.
    pub check_count: usize,
}

impl Default for CoexistParams {
    fn default() -> Self {
        Self { m_values: vec![5.0, 30.0], half_width: 200, boundary_threshold: 200, check_count: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EndsParams {
    pub half_width: i64,
    /// `[rho0, rho]` pairs.
    pub radii: Vec<[i64; 2]>,
}

impl Default for EndsParams {
    fn default() -> Self {
        Self { half_width: 150, radii: vec![[25, 50], [50, 100]] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalizeParams {
    /// 33 (boundary crossings in an arc) or 34 (path inside a ball).
    pub event: u8,
    pub m_big: f64,
    pub n: f64,
    pub epsilon: f64,
    pub v_angle: f64,
    pub x_angle: f64,
    pub y_angle: f64,
}

impl Default for LocalizeParams {
    fn default() -> Self {
        Self { event: 33, m_big: 20.0, n: 40.0, epsilon: 0.2, v_angle: 0.8, x_angle: -0.6, y_angle: 2.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub region: RegionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_shape: Option<LimitShapeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<TauParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub busemann_bn: Option<BusemannBnParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub busemann_slope: Option<BusemannSlopeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub busemann_highprob: Option<BusemannHighprobParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coexist: Option<CoexistParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ends: Option<EndsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localize: Option<LocalizeParams>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::ConfigInvalid(format!("{field}: {msg}"))
}

fn check(ok: bool, field: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(invalid(field, msg))
    }
}

fn check_increasing(values: &[f64], field: &str) -> Result<()> {
    check(!values.is_empty(), field, "must not be empty")?;
    check(values.iter().all(|v| v.is_finite() && *v > 0.0), field, "values must be positive")?;
    check(values.windows(2).all(|w| w[0] < w[1]), field, "values must be strictly increasing")
}

fn check_epsilon(eps: f64, field: &str) -> Result<()> {
    check(eps > 0.0 && eps < 1.0, field, "must lie in (0, 1)")
}

impl ExperimentConfig {
    /// Defaults for `kind`, with the kind's section filled in.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let mut c = Self {
            experiment: ExperimentSection { kind, master_seed: 1, replications: 50, parallelism: 1, output_dir: None },
            distribution: DistributionSpec::Exponential { rate: 1.0 },
            region: RegionParams::default(),
            limit_shape: None,
            shape: None,
            tau: None,
            busemann_bn: None,
            busemann_slope: None,
            busemann_highprob: None,
            coexist: None,
            ends: None,
            localize: None,
        };
        c.fill_section();
        c
    }

    /// Inserts default parameters for the configured kind if its section is absent.
    pub fn fill_section(&mut self) {
        match self.experiment.kind {
            ExperimentKind::Shape => {
                self.shape.get_or_insert_with(Default::default);
            }
            ExperimentKind::Tau => {
                self.tau.get_or_insert_with(Default::default);
            }
            ExperimentKind::BusemannBn => {
                self.busemann_bn.get_or_insert_with(Default::default);
            }
            ExperimentKind::BusemannSlope => {
                self.busemann_slope.get_or_insert_with(Default::default);
            }
            ExperimentKind::BusemannHighprob => {
                self.busemann_highprob.get_or_insert_with(Default::default);
            }
            ExperimentKind::Coexist => {
                self.coexist.get_or_insert_with(Default::default);
            }
            ExperimentKind::Ends => {
                self.ends.get_or_insert_with(Default::default);
            }
            ExperimentKind::Localize => {
                self.localize.get_or_insert_with(Default::default);
            }
        }
        if self.needs_shape() {
            self.limit_shape.get_or_insert_with(Default::default);
        }
    }

    pub fn needs_shape(&self) -> bool {
        !matches!(self.experiment.kind, ExperimentKind::Shape | ExperimentKind::Tau | ExperimentKind::Ends)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut c: Self = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        c.fill_section();
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    /// Field-level checks of every numeric parameter the kind uses.
    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        check(e.master_seed <= i64::MAX as u64, "experiment.master_seed", "must be at most 2^63 - 1")?;
        check(e.replications >= 1, "experiment.replications", "must be at least 1")?;
        check((1..=1024).contains(&e.parallelism), "experiment.parallelism", "must lie in 1..=1024")?;
        self.distribution.validate().map_err(|err| invalid("distribution", err))?;
        check(self.region.margin.is_finite() && self.region.margin >= 0.0, "region.margin", "must be a nonnegative number")?;
        if self.needs_shape() {
            let s = self.limit_shape.as_ref().ok_or_else(|| invalid("limit_shape", "missing"))?;
            if s.source == ShapeSourceKind::Estimated {
                check(s.angular_resolution >= 8, "limit_shape.angular_resolution", "must be at least 8")?;
                check(s.n >= 1, "limit_shape.n", "must be positive")?;
                check(s.replications >= 1, "limit_shape.replications", "must be at least 1")?;
            }
        }
        let missing = |name: &str| invalid(name, "section missing for this experiment kind");
        match e.kind {
            ExperimentKind::Shape => {
                let p = self.shape.as_ref().ok_or_else(|| missing("shape"))?;
                check(p.angular_resolution >= 8, "shape.angular_resolution", "must be at least 8")?;
                check(p.n >= 1, "shape.n", "must be positive")?;
                check(p.sides_tolerance > 0.0, "shape.sides_tolerance", "must be positive")?;
                check(p.raster_half_width >= 1, "shape.raster_half_width", "must be positive")?;
            }
            ExperimentKind::Tau => {
                let p = self.tau.as_ref().ok_or_else(|| missing("tau"))?;
                check(p.direction.iter().all(|x| x.is_finite()) && p.direction != [0.0, 0.0], "tau.direction", "must be a nonzero vector")?;
                check_increasing(&p.n_values, "tau.n_values")?;
                if let Some(n) = p.symmetry_n {
                    check(n.is_finite() && n > 0.0, "tau.symmetry_n", "must be positive")?;
                }
            }
            ExperimentKind::BusemannBn => {
                let p = self.busemann_bn.as_ref().ok_or_else(|| missing("busemann_bn"))?;
                check(p.m_big.is_finite() && p.m_big > 0.0, "busemann_bn.m_big", "must be positive")?;
                check_epsilon(p.epsilon, "busemann_bn.epsilon")?;
                check(p.n_count >= 1, "busemann_bn.n_count", "must be at least 1")?;
                check(p.n_step > 0.0, "busemann_bn.n_step", "must be positive")?;
                check(p.direction_angle.is_finite(), "busemann_bn.direction_angle", "must be finite")?;
            }
            ExperimentKind::BusemannSlope => {
                let p = self.busemann_slope.as_ref().ok_or_else(|| missing("busemann_slope"))?;
                check_increasing(&p.m_values, "busemann_slope.m_values")?;
                check_epsilon(p.epsilon, "busemann_slope.epsilon")?;
                check(p.n_count >= 1, "busemann_slope.n_count", "must be at least 1")?;
                check(p.n_step > 0.0, "busemann_slope.n_step", "must be positive")?;
                check(p.axis < 4, "busemann_slope.axis", "must be 0, 1, 2 or 3")?;
            }
            ExperimentKind::BusemannHighprob => {
                let p = self.busemann_highprob.as_ref().ok_or_else(|| missing("busemann_highprob"))?;
                check(p.m_big.is_finite() && p.m_big > 0.0, "busemann_highprob.m_big", "must be positive")?;
                check_epsilon(p.epsilon, "busemann_highprob.epsilon")?;
                check(p.n_count >= 1, "busemann_highprob.n_count", "must be at least 1")?;
                check(p.n_step > 0.0, "busemann_highprob.n_step", "must be positive")?;
                check(p.y.iter().all(|x| x.is_finite()), "busemann_highprob.y", "must be finite")?;
            }
            ExperimentKind::Coexist => {
                let p = self.coexist.as_ref().ok_or_else(|| missing("coexist"))?;
                check_increasing(&p.m_values, "coexist.m_values")?;
                check(p.half_width >= 2, "coexist.half_width", "must be at least 2")?;
                check(p.boundary_threshold >= 1, "coexist.boundary_threshold", "must be at least 1")?;
                check(p.check_count >= 1, "coexist.check_count", "must be at least 1")?;
            }
            ExperimentKind::Ends => {
                let p = self.ends.as_ref().ok_or_else(|| missing("ends"))?;
                check(p.half_width >= 2, "ends.half_width", "must be at least 2")?;
                check(!p.radii.is_empty(), "ends.radii", "must not be empty")?;
                for r in &p.radii {
                    check(0 < r[0] && r[0] < r[1], "ends.radii", "each pair needs 0 < rho0 < rho")?;
                    check(r[1] <= p.half_width, "ends.radii", "rho must not exceed half_width")?;
                }
            }
            ExperimentKind::Localize => {
                let p = self.localize.as_ref().ok_or_else(|| missing("localize"))?;
                check(p.event == 33 || p.event == 34, "localize.event", "must be 33 or 34")?;
                check(p.m_big.is_finite() && p.m_big > 0.0, "localize.m_big", "must be positive")?;
                check(p.n.is_finite() && p.n > p.m_big, "localize.n", "must exceed m_big")?;
                check(p.epsilon > 0.0, "localize.epsilon", "must be positive")?;
            }
        }
        Ok(())
    }

    /// The config as echoed into reports: without the worker count and
    /// output directory, which do not affect results.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(exp) = v.get_mut("experiment").and_then(|e| e.as_object_mut()) {
            exp.remove("parallelism");
            exp.remove("output_dir");
        }
        v
    }
}
