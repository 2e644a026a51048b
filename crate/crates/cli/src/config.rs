//! Run configuration: TOML in, validated library objects out.
//!
//! Lengths accept a number, a decimal string, `"p/q"` or `"sqrt(k)"`.
//! Coordinates accept a number (absolute position, treated as irrational by
//! the locus rules) or `"p/q"`, an exact fraction of the matching side.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use gradsense::analysis::{DEFAULT_PD_TOL, DEFAULT_RANK_TOL};
use gradsense::sensing::{
    AnalyticProfile, LocusHints, Rationality, Sensor, SensorGeometry, SensorSuite,
    SpatialDistribution, TabulatedProfile,
};
use gradsense::simulate::{project_initial_state, InitialState, StateCoeffs, TabulatedField};
use gradsense::{build_mode_set, BoundaryRegion, ModeIndex, ModeSet, QuadratureSpec, RectDomain, Side};

use crate::error::{CliError, CliResult};

/// A number or a string to be read in context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub gamma: GammaConfig,
    pub modes: ModesConfig,
    #[serde(default)]
    pub sensors: Vec<SensorConfig>,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub regularization: RegularizationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialStateConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub a1: Scalar,
    pub a2: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    pub side: Side,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    #[serde(rename = "J", default = "default_order")]
    pub order: u32,
    #[serde(default = "default_grouping_tol")]
    pub grouping_tol: f64,
}

fn default_order() -> u32 {
    10
}

fn default_grouping_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default = "default_pd_tol")]
    pub pd_tol: f64,
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            pd_tol: DEFAULT_PD_TOL,
        }
    }
}

fn default_rank_tol() -> f64 {
    DEFAULT_RANK_TOL
}

fn default_pd_tol() -> f64 {
    DEFAULT_PD_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RegularizationConfig {
    /// Defaults to `sigma^2` times the number of samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub side: Side,
    pub lo: Scalar,
    pub hi: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SensorConfig {
    InternalPointwise {
        point: [Scalar; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symmetric: Option<bool>,
    },
    InternalZone {
        center: [Scalar; 2],
        half_widths: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distribution: Option<DistributionConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symmetric: Option<bool>,
    },
    BoundaryZone {
        segments: Vec<SegmentConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distribution: Option<DistributionConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symmetric: Option<bool>,
    },
    BoundaryPointwise {
        side: Side,
        s: Scalar,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symmetric: Option<bool>,
    },
    Filament {
        vertices: Vec<[Scalar; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distribution: Option<DistributionConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symmetric: Option<bool>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    Dirac {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
    CosineBump {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
    Gaussian {
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
    Tent {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
    LinearRamp {
        slope: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
    Tabulated {
        axes: Vec<Vec<f64>>,
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeTerm {
    pub n: u32,
    pub m: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateConfig {
    /// Explicit spectral coefficients; unlisted modes are zero.
    Modes { terms: Vec<ModeTerm> },
    /// `amplitude * x (a1 - x) y (a2 - y)`
    Bubble {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude * exp(-|p - center|^2 / (2 width^2))`
    Gaussian {
        center: [f64; 2],
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Samples on a rectilinear grid spanning the closed domain, row-major
    /// with `x` slowest.
    Grid {
        xs: Vec<f64>,
        ys: Vec<f64>,
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

/// Parses TOML, rejecting unknown fields, and fills dependent defaults so
/// the returned config is fully explicit.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let mut cfg: RunConfig =
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config parse error: {e}")))?;
    let order = cfg.modes.order;
    let n = 2 * order as usize + 2;
    cfg.quadrature.order.get_or_insert(n);
    cfg.quadrature.line_order.get_or_insert(n);
    let horizon = *cfg.time.horizon.get_or_insert(1.0);
    cfg.time.dt.get_or_insert(horizon / 100.0);
    cfg.resolve()?;
    Ok(cfg)
}

/// Everything a command needs, built from a validated [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Setup {
    pub domain: RectDomain,
    pub gamma: BoundaryRegion,
    pub modeset: ModeSet,
    pub quad: QuadratureSpec,
    pub suite: SensorSuite,
    pub horizon: f64,
    pub dt: f64,
    pub rank_tol: f64,
    pub pd_tol: f64,
    pub sigma: f64,
    pub seed: u64,
    pub reg_lambda: Option<f64>,
}

impl RunConfig {
    pub fn resolve(&self) -> CliResult<Setup> {
        let a1 = parse_length("domain.a1", &self.domain.a1)?;
        let a2 = parse_length("domain.a2", &self.domain.a2)?;
        let domain = RectDomain::new(a1, a2).map_err(|e| CliError::config("domain", e))?;

        let side_len = domain.side_length(self.gamma.side);
        let lo = match &self.gamma.lo {
            Some(s) => coord("gamma.lo", s, side_len)?.0,
            None => 0.0,
        };
        let hi = match &self.gamma.hi {
            Some(s) => coord("gamma.hi", s, side_len)?.0,
            None => side_len,
        };
        let gamma = BoundaryRegion::new(&domain, self.gamma.side, lo, hi)
            .map_err(|e| CliError::config("gamma", e))?;

        if self.modes.order == 0 {
            return Err(CliError::config("modes.J", "must be at least 1"));
        }
        let modeset = build_mode_set(domain, self.modes.order, self.modes.grouping_tol)
            .map_err(|e| CliError::config("modes.grouping_tol", e))?;

        let quad = QuadratureSpec::new(
            self.quadrature.order.unwrap_or(2 * self.modes.order as usize + 2),
            self.quadrature.line_order.unwrap_or(2 * self.modes.order as usize + 2),
        )
        .map_err(|e| CliError::config("quadrature", e))?;

        let sensors = self
            .sensors
            .iter()
            .enumerate()
            .map(|(i, s)| build_sensor(&format!("sensors[{i}]"), s, &domain))
            .collect::<CliResult<Vec<_>>>()?;

        let horizon = self.time.horizon.unwrap_or(1.0);
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(CliError::config("time.T", format!("must be positive (got {horizon})")));
        }
        let dt = self.time.dt.unwrap_or(horizon / 100.0);
        if !(dt > 0.0 && dt <= horizon) {
            return Err(CliError::config("time.dt", format!("must satisfy 0 < dt <= T (got {dt})")));
        }
        for (path, v) in [
            ("tolerances.rank_tol", self.tolerances.rank_tol),
            ("tolerances.pd_tol", self.tolerances.pd_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(path, format!("must be positive (got {v})")));
            }
        }
        if !(self.noise.sigma >= 0.0 && self.noise.sigma.is_finite()) {
            return Err(CliError::config("noise.sigma", "must be non-negative"));
        }
        if let Some(l) = self.regularization.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(CliError::config("regularization.lambda", "must be non-negative"));
            }
        }
        Ok(Setup {
            domain,
            gamma,
            modeset,
            quad,
            suite: SensorSuite::new(sensors),
            horizon,
            dt,
            rank_tol: self.tolerances.rank_tol,
            pd_tol: self.tolerances.pd_tol,
            sigma: self.noise.sigma,
            seed: self.noise.seed,
            reg_lambda: self.regularization.lambda,
        })
    }

    /// Projects the configured initial state; `None` when absent.
    pub fn initial_coeffs(&self, setup: &Setup) -> CliResult<Option<StateCoeffs>> {
        let Some(init) = &self.initial_state else {
            return Ok(None);
        };
        let ms = &setup.modeset;
        let d = setup.domain;
        let coeffs = match init {
            InitialStateConfig::Modes { terms } => {
                let mut values = vec![0.0; ms.len()];
                for (k, t) in terms.iter().enumerate() {
                    let pos = ms.index_of(ModeIndex::new(t.n, t.m)).ok_or_else(|| {
                        CliError::config(
                            format!("initial_state.terms[{k}]"),
                            format!("mode ({}, {}) outside 1..={}", t.n, t.m, ms.order()),
                        )
                    })?;
                    values[pos] += t.value;
                }
                StateCoeffs::from_values(ms, values)
                    .map_err(|e| CliError::config("initial_state.terms", e))?
            }
            InitialStateConfig::Bubble { amplitude } => {
                let (a1, a2, amp) = (d.a1(), d.a2(), *amplitude);
                let f = move |p: [f64; 2]| amp * p[0] * (a1 - p[0]) * p[1] * (a2 - p[1]);
                project_initial_state(InitialState::Analytic(&f), ms, &setup.quad)?
            }
            InitialStateConfig::Gaussian {
                center,
                width,
                amplitude,
            } => {
                if !(*width > 0.0) {
                    return Err(CliError::config("initial_state.width", "must be positive"));
                }
                let (c, w, amp) = (*center, *width, *amplitude);
                let f = move |p: [f64; 2]| {
                    let r2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                    amp * (-r2 / (2.0 * w * w)).exp()
                };
                project_initial_state(InitialState::Analytic(&f), ms, &setup.quad)?
            }
            InitialStateConfig::Grid { xs, ys, values } => {
                let table = TabulatedField {
                    xs: xs.clone(),
                    ys: ys.clone(),
                    values: values.clone(),
                };
                project_initial_state(InitialState::Tabulated(&table), ms, &setup.quad)
                    .map_err(|e| CliError::config("initial_state", e))?
            }
        };
        Ok(Some(coeffs))
    }
}

fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Some(r) = parse_ratio(t) {
        return Some(*r.numer() as f64 / *r.denom() as f64);
    }
    t.parse::<f64>().ok()
}

fn parse_ratio(text: &str) -> Option<Ratio<i64>> {
    let t = text.trim();
    let (p, q) = match t.split_once('/') {
        Some((p, q)) => (p.trim().parse::<i64>().ok()?, q.trim().parse::<i64>().ok()?),
        None => (t.parse::<i64>().ok()?, 1),
    };
    (q > 0).then(|| Ratio::new(p, q))
}

fn parse_length(path: &str, value: &Scalar) -> CliResult<f64> {
    let v = match value {
        Scalar::Number(x) => *x,
        Scalar::Text(t) => {
            let t = t.trim();
            let parsed = match t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
                Some(inner) => parse_number(inner).filter(|x| *x >= 0.0).map(f64::sqrt),
                None => parse_number(t),
            };
            parsed.ok_or_else(|| {
                CliError::config(path, format!("cannot read {t:?} as a length (number, \"p/q\" or \"sqrt(k)\")"))
            })?
        }
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(path, format!("must be positive (got {v})")))
    }
}

/// Position along an axis of length `len`, with its rationality flag.
fn coord(path: &str, value: &Scalar, len: f64) -> CliResult<(f64, Rationality)> {
    match value {
        Scalar::Number(x) if x.is_finite() => Ok((*x, Rationality::Irrational)),
        Scalar::Number(x) => Err(CliError::config(path, format!("not finite ({x})"))),
        Scalar::Text(t) => {
            let r = parse_ratio(t).ok_or_else(|| {
                CliError::config(
                    path,
                    format!("{t:?} is not an exact fraction \"p/q\"; use a plain number for an absolute coordinate"),
                )
            })?;
            Ok((*r.numer() as f64 / *r.denom() as f64 * len, Rationality::Exact(r)))
        }
    }
}

fn point(path: &str, p: &[Scalar; 2], d: &RectDomain) -> CliResult<([f64; 2], [Rationality; 2])> {
    let (x, rx) = coord(&format!("{path}[0]"), &p[0], d.a1())?;
    let (y, ry) = coord(&format!("{path}[1]"), &p[1], d.a2())?;
    Ok(([x, y], [rx, ry]))
}

fn distribution(path: &str, cfg: &Option<DistributionConfig>, default: SpatialDistribution) -> CliResult<SpatialDistribution> {
    let Some(cfg) = cfg else {
        return Ok(default);
    };
    let (dist, amplitude) = match cfg {
        DistributionConfig::Dirac { amplitude } => (SpatialDistribution::dirac(), amplitude),
        DistributionConfig::Uniform { amplitude } => (SpatialDistribution::uniform(), amplitude),
        DistributionConfig::CosineBump { amplitude } => {
            (SpatialDistribution::analytic(AnalyticProfile::CosineBump), amplitude)
        }
        DistributionConfig::Gaussian { width, amplitude } => (
            SpatialDistribution::analytic(AnalyticProfile::Gaussian { width: *width }),
            amplitude,
        ),
        DistributionConfig::Tent { amplitude } => (SpatialDistribution::analytic(AnalyticProfile::Tent), amplitude),
        DistributionConfig::LinearRamp { slope, amplitude } => (
            SpatialDistribution::analytic(AnalyticProfile::LinearRamp { slope: *slope }),
            amplitude,
        ),
        DistributionConfig::Tabulated { axes, values, amplitude } => {
            let profile = TabulatedProfile::new(axes.clone(), values.clone())
                .map_err(|e| CliError::config(format!("{path}.distribution"), e))?;
            (SpatialDistribution::tabulated(profile), amplitude)
        }
    };
    Ok(match amplitude {
        Some(a) => dist.scaled(*a),
        None => dist,
    })
}

fn build_sensor(path: &str, cfg: &SensorConfig, d: &RectDomain) -> CliResult<Sensor> {
    let (geometry, dist, ratios, symmetric) = match cfg {
        SensorConfig::InternalPointwise { point: p, symmetric } => {
            let (pt, r) = point(&format!("{path}.point"), p, d)?;
            (
                SensorGeometry::InternalPointwise { point: pt },
                SpatialDistribution::dirac(),
                r.to_vec(),
                *symmetric,
            )
        }
        SensorConfig::InternalZone {
            center,
            half_widths,
            distribution: dc,
            symmetric,
        } => {
            let (c, r) = point(&format!("{path}.center"), center, d)?;
            (
                SensorGeometry::InternalZone {
                    center: c,
                    half_widths: *half_widths,
                },
                distribution(path, dc, SpatialDistribution::uniform())?,
                r.to_vec(),
                *symmetric,
            )
        }
        SensorConfig::BoundaryZone {
            segments,
            distribution: dc,
            symmetric,
        } => {
            if segments.is_empty() || segments.len() > 2 {
                return Err(CliError::config(
                    format!("{path}.segments"),
                    "one segment (one-side case) or two (two-side case) required",
                ));
            }
            let mut regions = Vec::new();
            let mut ratios = Vec::new();
            for (k, seg) in segments.iter().enumerate() {
                let sp = format!("{path}.segments[{k}]");
                let len = d.side_length(seg.side);
                let (lo, rlo) = coord(&format!("{sp}.lo"), &seg.lo, len)?;
                let (hi, rhi) = coord(&format!("{sp}.hi"), &seg.hi, len)?;
                regions.push(BoundaryRegion::new(d, seg.side, lo, hi).map_err(|e| CliError::config(&sp, e))?);
                ratios.push(match (rlo, rhi) {
                    (Rationality::Exact(a), Rationality::Exact(b)) => Rationality::Exact((a + b) / 2),
                    _ => Rationality::Irrational,
                });
            }
            (
                SensorGeometry::BoundaryZone { segments: regions },
                distribution(path, dc, SpatialDistribution::uniform())?,
                ratios,
                *symmetric,
            )
        }
        SensorConfig::BoundaryPointwise { side, s, symmetric } => {
            let (s, r) = coord(&format!("{path}.s"), s, d.side_length(*side))?;
            (
                SensorGeometry::BoundaryPointwise { side: *side, s },
                SpatialDistribution::dirac(),
                vec![r],
                *symmetric,
            )
        }
        SensorConfig::Filament {
            vertices,
            distribution: dc,
            symmetric,
        } => {
            let mut pts = Vec::new();
            let mut sums = [Some(Ratio::new(0i64, 1)), Some(Ratio::new(0i64, 1))];
            for (k, v) in vertices.iter().enumerate() {
                let (p, r) = point(&format!("{path}.vertices[{k}]"), v, d)?;
                pts.push(p);
                for axis in 0..2 {
                    sums[axis] = match (sums[axis], r[axis]) {
                        (Some(acc), Rationality::Exact(x)) => Some(acc + x),
                        _ => None,
                    };
                }
            }
            let n = pts.len().max(1) as i64;
            let ratios = sums
                .iter()
                .map(|s| s.map_or(Rationality::Irrational, |s| Rationality::Exact(s / n)))
                .collect();
            (
                SensorGeometry::Filament { vertices: pts },
                distribution(path, dc, SpatialDistribution::dirac())?,
                ratios,
                *symmetric,
            )
        }
    };
    let sensor = Sensor::new(d, geometry, dist).map_err(|e| CliError::config(path, e))?;
    Ok(sensor.with_hints(LocusHints { ratios, symmetric }))
}
