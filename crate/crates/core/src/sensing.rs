//! Sensors as linear functionals on the eigenbasis.
//!
//! Every sensor has a support (point, rectangle, boundary segments or a
//! polyline) and a spatial distribution on it. Two functionals are exposed:
//! the *value* functional `<phi, f>` that produces outputs, and the
//! *gradient* functional `sum_k <d phi / d xi_k, f>` that fills the rank-test
//! matrices.

use nalgebra::DMatrix;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::analysis::GMatrix;
use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, QuadratureSpec};
use crate::simulate::StateCoeffs;
use crate::spectral::{BoundaryRegion, EigenGroup, Mode, ModeSet, RectDomain, Side};

/// Smooth profiles on the normalized support coordinates `u in [-1, 1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalyticProfile {
    /// `prod (1 + cos(pi u_k)) / 2`
    CosineBump,
    /// `exp(-|u|^2 / (2 width^2))`
    Gaussian { width: f64 },
    /// `prod (1 - |u_k|)`
    Tent,
    /// `1 + slope * u_0`; not symmetric unless `slope == 0`.
    LinearRamp { slope: f64 },
}

impl AnalyticProfile {
    pub fn eval(&self, u: &[f64]) -> f64 {
        match *self {
            AnalyticProfile::CosineBump => u
                .iter()
                .map(|&x| 0.5 * (1.0 + (std::f64::consts::PI * x).cos()))
                .product(),
            AnalyticProfile::Gaussian { width } => {
                let r2: f64 = u.iter().map(|x| x * x).sum();
                (-r2 / (2.0 * width * width)).exp()
            }
            AnalyticProfile::Tent => u.iter().map(|&x| (1.0 - x.abs()).max(0.0)).product(),
            AnalyticProfile::LinearRamp { slope } => 1.0 + slope * u[0],
        }
    }

    pub fn is_point_symmetric(&self) -> bool {
        match *self {
            AnalyticProfile::LinearRamp { slope } => slope == 0.0,
            _ => true,
        }
    }

    fn validate(&self) -> Result<()> {
        if let AnalyticProfile::Gaussian { width } = *self {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "distribution.width",
                    reason: format!("must be positive (got {width})"),
                });
            }
        }
        if let AnalyticProfile::LinearRamp { slope } = *self {
            if !slope.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "distribution.slope",
                    reason: "must be finite".into(),
                });
            }
        }
        Ok(())
    }
}

/// Samples on a strictly increasing grid over the normalized support,
/// interpolated (bi)linearly. One axis for line supports, two for zones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedProfile {
    pub axes: Vec<Vec<f64>>,
    /// Row-major over the axes (first axis slowest).
    pub values: Vec<f64>,
}

impl TabulatedProfile {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let t = Self { axes, values };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidParameter {
            name: "distribution.tabulated",
            reason,
        };
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(bad(format!("expected 1 or 2 axes, got {}", self.axes.len())));
        }
        for (k, axis) in self.axes.iter().enumerate() {
            if axis.len() < 2 {
                return Err(bad(format!("axis {k} needs at least two samples")));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(bad(format!("axis {k} is not strictly increasing")));
            }
            if axis[0] > -1.0 || *axis.last().unwrap() < 1.0 {
                return Err(bad(format!("axis {k} must cover [-1, 1]")));
            }
        }
        let expected: usize = self.axes.iter().map(Vec::len).product();
        if self.values.len() != expected {
            return Err(bad(format!(
                "{} values for a grid of {expected} samples",
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(bad("values must be finite".into()));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        match self.axes.len() {
            1 => {
                let (i, t) = locate(&self.axes[0], u[0]);
                self.values[i] * (1.0 - t) + self.values[i + 1] * t
            }
            _ => {
                let ny = self.axes[1].len();
                let (i, tx) = locate(&self.axes[0], u[0]);
                let (j, ty) = locate(&self.axes[1], u[1]);
                let v = |a: usize, b: usize| self.values[a * ny + b];
                (1.0 - tx) * ((1.0 - ty) * v(i, j) + ty * v(i, j + 1))
                    + tx * ((1.0 - ty) * v(i + 1, j) + ty * v(i + 1, j + 1))
            }
        }
    }
}

fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 2;
    let i = match axis.partition_point(|&a| a <= x) {
        0 => 0,
        k => (k - 1).min(last),
    };
    let t = ((x - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
    (i, t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    Dirac,
    Uniform,
    Analytic(AnalyticProfile),
    Tabulated(TabulatedProfile),
}

impl DistributionKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistributionKind::Dirac => "dirac",
            DistributionKind::Uniform => "uniform",
            DistributionKind::Analytic(_) => "analytic",
            DistributionKind::Tabulated(_) => "tabulated",
        }
    }
}

/// The measurement density `f` on the support, with an overall amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialDistribution {
    pub kind: DistributionKind,
    pub amplitude: f64,
}

impl SpatialDistribution {
    pub fn dirac() -> Self {
        Self {
            kind: DistributionKind::Dirac,
            amplitude: 1.0,
        }
    }

    pub fn uniform() -> Self {
        Self {
            kind: DistributionKind::Uniform,
            amplitude: 1.0,
        }
    }

    pub fn analytic(profile: AnalyticProfile) -> Self {
        Self {
            kind: DistributionKind::Analytic(profile),
            amplitude: 1.0,
        }
    }

    pub fn tabulated(profile: TabulatedProfile) -> Self {
        Self {
            kind: DistributionKind::Tabulated(profile),
            amplitude: 1.0,
        }
    }

    pub fn scaled(mut self, alpha: f64) -> Self {
        self.amplitude *= alpha;
        self
    }

    /// Density at normalized coordinates (amplitude included).
    fn density(&self, u: &[f64]) -> f64 {
        let shape = match &self.kind {
            DistributionKind::Dirac | DistributionKind::Uniform => 1.0,
            DistributionKind::Analytic(p) => p.eval(u),
            DistributionKind::Tabulated(t) => t.eval(u),
        };
        self.amplitude * shape
    }

    /// Panel edges in `[-1, 1]` along `axis`: kinks of the density, or the
    /// core of a narrow Gaussian.
    fn breaks(&self, axis: usize) -> Vec<f64> {
        match &self.kind {
            DistributionKind::Analytic(AnalyticProfile::Tent) => vec![-1.0, 0.0, 1.0],
            DistributionKind::Analytic(AnalyticProfile::Gaussian { width }) => {
                let mut b = vec![-1.0];
                b.extend(
                    (-3..=3)
                        .map(|k| k as f64 * width)
                        .filter(|&x| x > -1.0 && x < 1.0),
                );
                b.push(1.0);
                b
            }
            DistributionKind::Tabulated(t) if axis < t.axes.len() => {
                let mut b = vec![-1.0];
                b.extend(t.axes[axis].iter().copied().filter(|&x| x > -1.0 && x < 1.0));
                b.push(1.0);
                b
            }
            _ => vec![-1.0, 1.0],
        }
    }

    /// Symmetric about the support center, as far as the library can tell.
    pub fn is_point_symmetric(&self) -> Option<bool> {
        match &self.kind {
            DistributionKind::Dirac | DistributionKind::Uniform => Some(true),
            DistributionKind::Analytic(p) => Some(p.is_point_symmetric()),
            DistributionKind::Tabulated(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    InternalPointwise,
    InternalZone,
    BoundaryZone,
    BoundaryPointwise,
    Filament,
}

impl SensorKind {
    pub fn name(self) -> &'static str {
        match self {
            SensorKind::InternalPointwise => "internal_pointwise",
            SensorKind::InternalZone => "internal_zone",
            SensorKind::BoundaryZone => "boundary_zone",
            SensorKind::BoundaryPointwise => "boundary_pointwise",
            SensorKind::Filament => "filament",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SensorGeometry {
    InternalPointwise {
        point: [f64; 2],
    },
    /// `]c1 - l1, c1 + l1[ x ]c2 - l2, c2 + l2[`
    InternalZone {
        center: [f64; 2],
        half_widths: [f64; 2],
    },
    /// One segment (one-side case) or two (two-side case).
    BoundaryZone {
        segments: Vec<BoundaryRegion>,
    },
    BoundaryPointwise {
        side: Side,
        s: f64,
    },
    /// Polyline through the vertices, measured by arc length.
    Filament {
        vertices: Vec<[f64; 2]>,
    },
}

impl SensorGeometry {
    pub fn kind(&self) -> SensorKind {
        match self {
            SensorGeometry::InternalPointwise { .. } => SensorKind::InternalPointwise,
            SensorGeometry::InternalZone { .. } => SensorKind::InternalZone,
            SensorGeometry::BoundaryZone { .. } => SensorKind::BoundaryZone,
            SensorGeometry::BoundaryPointwise { .. } => SensorKind::BoundaryPointwise,
            SensorGeometry::Filament { .. } => SensorKind::Filament,
        }
    }
}

/// Exactness of a coordinate ratio such as `b1 / a1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Rationality {
    Exact(Ratio<i64>),
    Irrational,
    #[default]
    Unknown,
}

/// Information the rational-locus rules need but floats cannot carry.
///
/// `ratios` holds one entry per anchor coordinate: `[x/a1, y/a2]` for points,
/// zone centers and filament symmetry points; one along-side ratio (segment
/// center over side length) per segment for boundary zones; the along-side
/// ratio `s / side length` for boundary points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct LocusHints {
    pub ratios: Vec<Rationality>,
    /// Caller's declaration that `f` is symmetric about the anchor. `None`
    /// defers to what the distribution itself implies.
    pub symmetric: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub geometry: SensorGeometry,
    pub distribution: SpatialDistribution,
    #[serde(default)]
    pub hints: LocusHints,
}

impl Sensor {
    /// Validates geometry against the domain and the distribution against
    /// the support type.
    pub fn new(
        domain: &RectDomain,
        geometry: SensorGeometry,
        distribution: SpatialDistribution,
    ) -> Result<Self> {
        let s = Self {
            geometry,
            distribution,
            hints: LocusHints::default(),
        };
        s.validate(domain)?;
        Ok(s)
    }

    pub fn pointwise(domain: &RectDomain, point: [f64; 2]) -> Result<Self> {
        Self::new(
            domain,
            SensorGeometry::InternalPointwise { point },
            SpatialDistribution::dirac(),
        )
    }

    pub fn zone(
        domain: &RectDomain,
        center: [f64; 2],
        half_widths: [f64; 2],
        distribution: SpatialDistribution,
    ) -> Result<Self> {
        Self::new(
            domain,
            SensorGeometry::InternalZone {
                center,
                half_widths,
            },
            distribution,
        )
    }

    pub fn with_hints(mut self, hints: LocusHints) -> Self {
        self.hints = hints;
        self
    }

    pub fn kind(&self) -> SensorKind {
        self.geometry.kind()
    }

    pub fn validate(&self, domain: &RectDomain) -> Result<()> {
        let kind = self.kind();
        let unsupported = || Error::UnsupportedCombination {
            kind: kind.name(),
            distribution: self.distribution.kind.name(),
        };
        if !self.distribution.amplitude.is_finite() {
            return Err(Error::InvalidParameter {
                name: "distribution.amplitude",
                reason: "must be finite".into(),
            });
        }
        match &self.distribution.kind {
            DistributionKind::Analytic(p) => p.validate()?,
            DistributionKind::Tabulated(t) => {
                t.validate()?;
                let dim = match kind {
                    SensorKind::InternalZone => 2,
                    SensorKind::BoundaryZone | SensorKind::Filament => 1,
                    _ => 0,
                };
                if dim != 0 && t.dimension() != dim {
                    return Err(Error::InvalidParameter {
                        name: "distribution.tabulated",
                        reason: format!(
                            "{} sensor needs a {dim}-axis table, got {}",
                            kind.name(),
                            t.dimension()
                        ),
                    });
                }
            }
            _ => {}
        }
        let is_dirac = matches!(self.distribution.kind, DistributionKind::Dirac);
        match &self.geometry {
            SensorGeometry::InternalPointwise { point } => {
                if !is_dirac {
                    return Err(unsupported());
                }
                if !domain.contains_open(*point) {
                    return Err(Error::InvalidGeometry(format!(
                        "internal point ({}, {}) is not inside the domain",
                        point[0], point[1]
                    )));
                }
            }
            SensorGeometry::BoundaryPointwise { side, s } => {
                if !is_dirac {
                    return Err(unsupported());
                }
                let len = domain.side_length(*side);
                if !(*s >= 0.0 && *s <= len) {
                    return Err(Error::InvalidGeometry(format!(
                        "arc coordinate {s} not on the {side} side [0, {len}]"
                    )));
                }
            }
            SensorGeometry::InternalZone {
                center,
                half_widths,
            } => {
                if is_dirac {
                    return Err(unsupported());
                }
                let lengths = domain.lengths();
                for k in 0..2 {
                    let (c, l) = (center[k], half_widths[k]);
                    if !(l > 0.0 && l.is_finite() && c.is_finite()) {
                        return Err(Error::InvalidGeometry(format!(
                            "zone half-width {l} must be positive"
                        )));
                    }
                    if l <= f64::EPSILON * lengths[k] {
                        return Err(Error::QuadratureUnderflow(format!(
                            "zone half-width {l} below resolution of side {}",
                            lengths[k]
                        )));
                    }
                    if c - l < 0.0 || c + l > lengths[k] {
                        return Err(Error::InvalidGeometry(format!(
                            "zone ]{}, {}[ leaves the domain on axis {}",
                            c - l,
                            c + l,
                            k + 1
                        )));
                    }
                }
            }
            SensorGeometry::BoundaryZone { segments } => {
                if is_dirac {
                    return Err(unsupported());
                }
                if segments.is_empty() || segments.len() > 2 {
                    return Err(Error::InvalidGeometry(format!(
                        "boundary zone takes one or two segments, got {}",
                        segments.len()
                    )));
                }
                for seg in segments {
                    BoundaryRegion::new(domain, seg.side(), seg.lo(), seg.hi())?;
                    if seg.length() <= f64::EPSILON * domain.side_length(seg.side()) {
                        return Err(Error::QuadratureUnderflow(format!(
                            "boundary segment of length {}",
                            seg.length()
                        )));
                    }
                }
            }
            SensorGeometry::Filament { vertices } => {
                if vertices.len() < 2 {
                    return Err(Error::InvalidGeometry(
                        "filament needs at least two vertices".into(),
                    ));
                }
                if let Some(p) = vertices.iter().find(|p| !domain.contains_open(**p)) {
                    return Err(Error::InvalidGeometry(format!(
                        "filament vertex ({}, {}) is not inside the domain",
                        p[0], p[1]
                    )));
                }
                let scale = domain.a1().max(domain.a2());
                if vertices
                    .windows(2)
                    .any(|w| segment_length(w[0], w[1]) <= f64::EPSILON * scale)
                {
                    return Err(Error::QuadratureUnderflow(
                        "filament has a zero-length segment".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Applies the sensor to a scalar field: point evaluation for Dirac
    /// sensors, `int f * field` over the support otherwise.
    pub fn functional<F: Fn([f64; 2]) -> f64>(
        &self,
        domain: &RectDomain,
        quad: &QuadratureSpec,
        field: F,
    ) -> f64 {
        let amp = self.distribution.amplitude;
        match &self.geometry {
            SensorGeometry::InternalPointwise { point } => amp * field(*point),
            SensorGeometry::BoundaryPointwise { side, s } => amp * field(side.point(domain, *s)),
            SensorGeometry::InternalZone {
                center,
                half_widths,
            } => {
                let rule = GaussLegendre::new(quad.order);
                let to_x = |u: f64| center[0] + half_widths[0] * u;
                let to_y = |u: f64| center[1] + half_widths[1] * u;
                let (bx, by) = (self.distribution.breaks(0), self.distribution.breaks(1));
                let mut acc = 0.0;
                for wx in bx.windows(2) {
                    for wy in by.windows(2) {
                        acc += rule.integrate_rect(
                            [to_x(wx[0]), to_x(wx[1])],
                            [to_y(wy[0]), to_y(wy[1])],
                            |p| {
                                let u = [
                                    (p[0] - center[0]) / half_widths[0],
                                    (p[1] - center[1]) / half_widths[1],
                                ];
                                self.distribution.density(&u) * field(p)
                            },
                        );
                    }
                }
                acc
            }
            SensorGeometry::BoundaryZone { segments } => {
                let rule = GaussLegendre::new(quad.line_order);
                let breaks = self.distribution.breaks(0);
                segments
                    .iter()
                    .map(|seg| {
                        let (c, h) = (seg.center(), 0.5 * seg.length());
                        breaks
                            .windows(2)
                            .map(|w| {
                                rule.integrate(c + h * w[0], c + h * w[1], |s| {
                                    self.distribution.density(&[(s - c) / h])
                                        * field(seg.point(domain, s))
                                })
                            })
                            .sum::<f64>()
                    })
                    .sum()
            }
            SensorGeometry::Filament { vertices } => {
                let rule = GaussLegendre::new(quad.line_order);
                let total: f64 = vertices.windows(2).map(|w| segment_length(w[0], w[1])).sum();
                let profile_cuts: Vec<f64> = self
                    .distribution
                    .breaks(0)
                    .iter()
                    .map(|u| 0.5 * (u + 1.0) * total)
                    .collect();
                let mut start = 0.0;
                let mut acc = 0.0;
                for w in vertices.windows(2) {
                    let (p, q) = (w[0], w[1]);
                    let len = segment_length(p, q);
                    let mut cuts = vec![0.0, len];
                    cuts.extend(
                        profile_cuts
                            .iter()
                            .map(|a| a - start)
                            .filter(|&t| t > 0.0 && t < len),
                    );
                    cuts.sort_by(f64::total_cmp);
                    for piece in cuts.windows(2) {
                        acc += rule.integrate(piece[0], piece[1], |t| {
                            let r = t / len;
                            let x = [p[0] + r * (q[0] - p[0]), p[1] + r * (q[1] - p[1])];
                            let u = 2.0 * (start + t) / total - 1.0;
                            self.distribution.density(&[u]) * field(x)
                        });
                    }
                    start += len;
                }
                acc
            }
        }
    }

    /// `<phi, f>`: the output this sensor reports for a unit mode.
    pub fn mode_value(&self, mode: &Mode, domain: &RectDomain, quad: &QuadratureSpec) -> f64 {
        self.functional(domain, quad, |p| mode.value_at(domain, p))
    }

    /// The anchor location used for relocation and locus rules: the point,
    /// zone center, filament centroid, or center of the first boundary
    /// segment.
    pub fn anchor(&self, domain: &RectDomain) -> [f64; 2] {
        match &self.geometry {
            SensorGeometry::InternalPointwise { point } => *point,
            SensorGeometry::InternalZone { center, .. } => *center,
            SensorGeometry::BoundaryPointwise { side, s } => side.point(domain, *s),
            SensorGeometry::BoundaryZone { segments } => {
                segments[0].point(domain, segments[0].center())
            }
            SensorGeometry::Filament { vertices } => {
                let n = vertices.len() as f64;
                let sx: f64 = vertices.iter().map(|v| v[0]).sum();
                let sy: f64 = vertices.iter().map(|v| v[1]).sum();
                [sx / n, sy / n]
            }
        }
    }
}

fn segment_length(p: [f64; 2], q: [f64; 2]) -> f64 {
    ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
}

/// `sum_k <d phi / d xi_k, f>` for one sensor and one mode: the entry of
/// the rank-test matrix in this sensor's row.
pub fn sensor_mode_entry(
    sensor: &Sensor,
    mode: &Mode,
    domain: &RectDomain,
    quad: &QuadratureSpec,
) -> Result<f64> {
    sensor.validate(domain)?;
    Ok(gradient_entry(sensor, mode, domain, quad))
}

fn gradient_entry(sensor: &Sensor, mode: &Mode, domain: &RectDomain, quad: &QuadratureSpec) -> f64 {
    sensor.functional(domain, quad, |p| {
        let g = mode.gradient_at(domain, p);
        g[0] + g[1]
    })
}

/// Ordered list of sensors; the order is the output-channel order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SensorSuite {
    pub sensors: Vec<Sensor>,
}

impl SensorSuite {
    pub fn new(sensors: Vec<Sensor>) -> Self {
        Self { sensors }
    }

    /// Number of sensors `q`.
    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn validate(&self, domain: &RectDomain) -> Result<()> {
        self.sensors.iter().try_for_each(|s| s.validate(domain))
    }

    /// `q x J^2` matrix of value functionals in coefficient order.
    pub fn value_matrix(&self, modeset: &ModeSet, quad: &QuadratureSpec) -> Result<DMatrix<f64>> {
        self.matrix(modeset, quad, |s, m, d, q| s.mode_value(m, d, q))
    }

    /// `q x J^2` matrix of gradient functionals in coefficient order.
    pub fn gradient_matrix(
        &self,
        modeset: &ModeSet,
        quad: &QuadratureSpec,
    ) -> Result<DMatrix<f64>> {
        self.matrix(modeset, quad, gradient_entry)
    }

    fn matrix(
        &self,
        modeset: &ModeSet,
        quad: &QuadratureSpec,
        entry: impl Fn(&Sensor, &Mode, &RectDomain, &QuadratureSpec) -> f64,
    ) -> Result<DMatrix<f64>> {
        let domain = modeset.domain();
        self.validate(domain)?;
        let modes = modeset.modes();
        Ok(DMatrix::from_fn(self.len(), modes.len(), |i, j| {
            entry(&self.sensors[i], &modes[j], domain, quad)
        }))
    }
}

/// The `q x r_n` matrix of gradient functionals for one eigenvalue group,
/// columns in the group's mode order.
pub fn assemble_g(
    suite: &SensorSuite,
    group: &EigenGroup,
    domain: &RectDomain,
    quad: &QuadratureSpec,
) -> Result<GMatrix> {
    if suite.is_empty() {
        return Err(Error::EmptySuite);
    }
    suite.validate(domain)?;
    let entries = DMatrix::from_fn(suite.len(), group.multiplicity(), |i, j| {
        gradient_entry(&suite.sensors[i], &group.modes[j], domain, quad)
    });
    Ok(GMatrix::new(group.eigenvalue, entries))
}

/// Sensor outputs `y_i(t) = sum_a e^{lambda_a t} c_a <phi_a, f_i>`.
pub fn apply_output(
    suite: &SensorSuite,
    coeffs: &StateCoeffs,
    modeset: &ModeSet,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    if !coeffs.matches(modeset) {
        return Err(Error::ModeSetMismatch);
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("time must be non-negative (got {t})"),
        });
    }
    let c = suite.value_matrix(modeset, quad)?;
    Ok(outputs_from_matrix(&c, &modeset.eigenvalues(), coeffs.values(), t))
}

pub(crate) fn outputs_from_matrix(
    values: &DMatrix<f64>,
    eigenvalues: &[f64],
    coeffs: &[f64],
    t: f64,
) -> Vec<f64> {
    let evolved: Vec<f64> = coeffs
        .iter()
        .zip(eigenvalues)
        .map(|(c, l)| c * (l * t).exp())
        .collect();
    (0..values.nrows())
        .map(|i| {
            evolved
                .iter()
                .enumerate()
                .map(|(a, c)| values[(i, a)] * c)
                .sum()
        })
        .collect()
}
