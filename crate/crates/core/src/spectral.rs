//! Truncated eigen-decomposition of the Dirichlet Laplacian on
//! `]0, a1[ x ]0, a2[`.
//!
//! Eigenfunctions are `2/sqrt(a1 a2) sin(n pi x/a1) sin(m pi y/a2)` with
//! eigenvalues `-(n^2/a1^2 + m^2/a2^2) pi^2`. Modes `1 <= n, m <= J` are kept
//! and grouped by (numerically) equal eigenvalue.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Relative slack when deciding whether a point lies on the closed domain.
const CLOSURE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain")]
pub struct RectDomain {
    a1: f64,
    a2: f64,
}

#[derive(Deserialize)]
struct RawDomain {
    a1: f64,
    a2: f64,
}

impl TryFrom<RawDomain> for RectDomain {
    type Error = Error;

    fn try_from(raw: RawDomain) -> Result<Self> {
        RectDomain::new(raw.a1, raw.a2)
    }
}

impl RectDomain {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        if a1 > 0.0 && a2 > 0.0 && a1.is_finite() && a2.is_finite() {
            Ok(Self { a1, a2 })
        } else {
            Err(Error::NonPositiveDomain { a1, a2 })
        }
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn lengths(&self) -> [f64; 2] {
        [self.a1, self.a2]
    }

    pub fn area(&self) -> f64 {
        self.a1 * self.a2
    }

    pub fn side_length(&self, side: Side) -> f64 {
        match side {
            Side::Bottom | Side::Top => self.a1,
            Side::Left | Side::Right => self.a2,
        }
    }

    /// True for points of the closed rectangle (with a round-off margin).
    pub fn contains_closed(&self, p: [f64; 2]) -> bool {
        let [x, y] = p;
        let ex = CLOSURE_SLACK * self.a1;
        let ey = CLOSURE_SLACK * self.a2;
        x.is_finite()
            && y.is_finite()
            && x >= -ex
            && x <= self.a1 + ex
            && y >= -ey
            && y <= self.a2 + ey
    }

    /// True for points strictly inside the rectangle.
    pub fn contains_open(&self, p: [f64; 2]) -> bool {
        let [x, y] = p;
        x > 0.0 && x < self.a1 && y > 0.0 && y < self.a2
    }

    /// The side a boundary point lies on, if any (corners resolve to the
    /// horizontal side).
    pub fn side_of(&self, p: [f64; 2]) -> Option<Side> {
        if !self.contains_closed(p) {
            return None;
        }
        let ex = CLOSURE_SLACK * self.a1;
        let ey = CLOSURE_SLACK * self.a2;
        if p[1].abs() <= ey {
            Some(Side::Bottom)
        } else if (p[1] - self.a2).abs() <= ey {
            Some(Side::Top)
        } else if p[0].abs() <= ex {
            Some(Side::Left)
        } else if (p[0] - self.a1).abs() <= ex {
            Some(Side::Right)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `xi2 = 0`
    Bottom,
    /// `xi2 = a2`
    Top,
    /// `xi1 = 0`
    Left,
    /// `xi1 = a1`
    Right,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn is_horizontal(self) -> bool {
        matches!(self, Side::Bottom | Side::Top)
    }

    /// Boundary point at arc coordinate `s`. Arc length runs along `xi1` on
    /// horizontal sides and along `xi2` on vertical sides.
    pub fn point(self, domain: &RectDomain, s: f64) -> [f64; 2] {
        match self {
            Side::Bottom => [s, 0.0],
            Side::Top => [s, domain.a2],
            Side::Left => [0.0, s],
            Side::Right => [domain.a1, s],
        }
    }

    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
        }
    }

    /// Unit tangent in the direction of increasing arc coordinate.
    pub fn tangent(self) -> [f64; 2] {
        if self.is_horizontal() {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    }

    /// Splits a Cartesian vector into (tangential, outward normal) parts.
    pub fn tangential_normal(self, v: [f64; 2]) -> (f64, f64) {
        let t = self.tangent();
        let n = self.outward_normal();
        (t[0] * v[0] + t[1] * v[1], n[0] * v[0] + n[1] * v[1])
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Bottom => "bottom",
            Side::Top => "top",
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A closed arc-coordinate interval `[lo, hi]` on one side of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRegion {
    side: Side,
    lo: f64,
    hi: f64,
}

impl BoundaryRegion {
    pub fn new(domain: &RectDomain, side: Side, lo: f64, hi: f64) -> Result<Self> {
        let len = domain.side_length(side);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidRegion("bounds must be finite".into()));
        }
        if lo < 0.0 || hi > len * (1.0 + CLOSURE_SLACK) {
            return Err(Error::InvalidRegion(format!(
                "[{lo}, {hi}] not within [0, {len}] on the {side} side"
            )));
        }
        if lo >= hi {
            return Err(Error::InvalidRegion(format!(
                "degenerate interval [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            side,
            lo,
            hi: hi.min(len),
        })
    }

    pub fn whole_side(domain: &RectDomain, side: Side) -> Self {
        Self {
            side,
            lo: 0.0,
            hi: domain.side_length(side),
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.lo && s <= self.hi
    }

    pub fn point(&self, domain: &RectDomain, s: f64) -> [f64; 2] {
        self.side.point(domain, s)
    }

    /// Euclidean distance from `p` to the segment.
    pub fn distance(&self, domain: &RectDomain, p: [f64; 2]) -> f64 {
        let along = if self.side.is_horizontal() { p[0] } else { p[1] };
        let s = along.clamp(self.lo, self.hi);
        let q = self.point(domain, s);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub n: u32,
    pub m: u32,
}

impl ModeIndex {
    pub fn new(n: u32, m: u32) -> Self {
        Self { n, m }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: ModeIndex,
    pub eigenvalue: f64,
}

impl Mode {
    pub fn new(domain: &RectDomain, n: u32, m: u32) -> Self {
        let (n2, m2) = ((n as f64).powi(2), (m as f64).powi(2));
        let eigenvalue = -(n2 / (domain.a1 * domain.a1) + m2 / (domain.a2 * domain.a2)) * PI * PI;
        Self {
            index: ModeIndex::new(n, m),
            eigenvalue,
        }
    }

    /// Wavenumbers `(n pi / a1, m pi / a2)`.
    pub fn wavenumbers(&self, domain: &RectDomain) -> [f64; 2] {
        [
            self.index.n as f64 * PI / domain.a1,
            self.index.m as f64 * PI / domain.a2,
        ]
    }

    /// Eigenfunction value without the domain check.
    pub fn value_at(&self, domain: &RectDomain, p: [f64; 2]) -> f64 {
        let (sx, _) = self.factors_x(domain, p[0]);
        let (sy, _) = self.factors_y(domain, p[1]);
        normalization(domain) * sx * sy
    }

    /// Analytic gradient without the domain check.
    pub fn gradient_at(&self, domain: &RectDomain, p: [f64; 2]) -> [f64; 2] {
        let (sx, cx) = self.factors_x(domain, p[0]);
        let (sy, cy) = self.factors_y(domain, p[1]);
        let [kx, ky] = self.wavenumbers(domain);
        let c = normalization(domain);
        [c * kx * cx * sy, c * ky * sx * cy]
    }

    fn factors_x(&self, domain: &RectDomain, x: f64) -> (f64, f64) {
        let t = self.index.n as f64 * (x / domain.a1);
        (sin_pi(t), cos_pi(t))
    }

    fn factors_y(&self, domain: &RectDomain, y: f64) -> (f64, f64) {
        let t = self.index.m as f64 * (y / domain.a2);
        (sin_pi(t), cos_pi(t))
    }
}

fn normalization(domain: &RectDomain) -> f64 {
    2.0 / (domain.a1 * domain.a2).sqrt()
}

/// `sin(pi t)` with exact zeros at integers and exact extrema at half-integers.
pub(crate) fn sin_pi(t: f64) -> f64 {
    let r = t.rem_euclid(2.0);
    if r == 0.0 || r == 1.0 {
        0.0
    } else if r == 0.5 {
        1.0
    } else if r == 1.5 {
        -1.0
    } else {
        (PI * r).sin()
    }
}

/// `cos(pi t)` with exact zeros at half-integers.
pub(crate) fn cos_pi(t: f64) -> f64 {
    let r = t.rem_euclid(2.0);
    if r == 0.5 || r == 1.5 {
        0.0
    } else if r == 0.0 {
        1.0
    } else if r == 1.0 {
        -1.0
    } else {
        (PI * r).cos()
    }
}

/// Modes sharing one eigenvalue, ordered lexicographically by `(n, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenGroup {
    pub eigenvalue: f64,
    pub modes: Vec<Mode>,
}

impl EigenGroup {
    pub fn multiplicity(&self) -> usize {
        self.modes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    domain: RectDomain,
    order: u32,
    grouping_tol: f64,
    groups: Vec<EigenGroup>,
}

pub fn build_mode_set(domain: RectDomain, order: u32, grouping_tol: f64) -> Result<ModeSet> {
    ModeSet::new(domain, order, grouping_tol)
}

impl ModeSet {
    pub const DEFAULT_ORDER: u32 = 10;
    pub const DEFAULT_GROUPING_TOL: f64 = 1e-9;

    pub fn new(domain: RectDomain, order: u32, grouping_tol: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter {
                name: "modes.J",
                reason: "truncation order must be at least 1".into(),
            });
        }
        if !(grouping_tol >= 0.0 && grouping_tol.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "modes.grouping_tol",
                reason: format!("must be a finite non-negative number (got {grouping_tol})"),
            });
        }
        let mut modes: Vec<Mode> = (1..=order)
            .flat_map(|n| (1..=order).map(move |m| (n, m)))
            .map(|(n, m)| Mode::new(&domain, n, m))
            .collect();
        // Decreasing eigenvalue = increasing |lambda|.
        modes.sort_by(|a, b| {
            b.eigenvalue
                .total_cmp(&a.eigenvalue)
                .then(a.index.cmp(&b.index))
        });

        let mut groups: Vec<EigenGroup> = Vec::new();
        for mode in modes {
            let joins = groups.last().is_some_and(|g| {
                let anchor = g.eigenvalue;
                (mode.eigenvalue - anchor).abs()
                    <= grouping_tol * mode.eigenvalue.abs().max(anchor.abs())
            });
            if joins {
                groups.last_mut().unwrap().modes.push(mode);
            } else {
                groups.push(EigenGroup {
                    eigenvalue: mode.eigenvalue,
                    modes: vec![mode],
                });
            }
        }
        for g in &mut groups {
            g.modes.sort_by_key(|m| m.index);
        }
        Ok(Self {
            domain,
            order,
            grouping_tol,
            groups,
        })
    }

    pub fn domain(&self) -> &RectDomain {
        &self.domain
    }

    /// Truncation order `J`.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn grouping_tol(&self) -> f64 {
        self.grouping_tol
    }

    pub fn groups(&self) -> &[EigenGroup] {
        &self.groups
    }

    /// Number of modes, `J^2`.
    pub fn len(&self) -> usize {
        (self.order as usize).pow(2)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of a mode in coefficient vectors: lexicographic in `(n, m)`.
    pub fn index_of(&self, idx: ModeIndex) -> Option<usize> {
        let j = self.order;
        if idx.n == 0 || idx.m == 0 || idx.n > j || idx.m > j {
            return None;
        }
        Some(((idx.n - 1) * j + (idx.m - 1)) as usize)
    }

    /// All modes in coefficient order.
    pub fn modes(&self) -> Vec<Mode> {
        (1..=self.order)
            .flat_map(|n| (1..=self.order).map(move |m| (n, m)))
            .map(|(n, m)| Mode::new(&self.domain, n, m))
            .collect()
    }

    /// Eigenvalues in coefficient order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes().iter().map(|m| m.eigenvalue).collect()
    }

    /// Coefficient positions of the members of a group.
    pub fn group_positions(&self, group: &EigenGroup) -> Vec<usize> {
        group
            .modes
            .iter()
            .map(|m| self.index_of(m.index).expect("group mode belongs to the set"))
            .collect()
    }

    /// Largest multiplicity `r`.
    pub fn max_multiplicity(&self) -> usize {
        self.groups.iter().map(EigenGroup::multiplicity).max().unwrap_or(0)
    }

    pub fn is_simple_spectrum(&self) -> bool {
        self.groups.iter().all(|g| g.multiplicity() == 1)
    }

    pub(crate) fn same_basis(&self, domain: &RectDomain, order: u32) -> bool {
        self.domain == *domain && self.order == order
    }
}

pub fn is_simple_spectrum(modeset: &ModeSet) -> bool {
    modeset.is_simple_spectrum()
}

pub fn eval_eigenfunction(mode: &Mode, domain: &RectDomain, p: [f64; 2]) -> Result<f64> {
    if !domain.contains_closed(p) {
        return Err(Error::OutOfDomain { point: p });
    }
    Ok(mode.value_at(domain, p))
}

pub fn eval_eigengradient(mode: &Mode, domain: &RectDomain, p: [f64; 2]) -> Result<[f64; 2]> {
    if !domain.contains_closed(p) {
        return Err(Error::OutOfDomain { point: p });
    }
    Ok(mode.gradient_at(domain, p))
}

/// Gradient of the eigenfunction at the boundary point with arc coordinate
/// `s` on `gamma`, in Cartesian components.
pub fn boundary_trace_gradient(
    mode: &Mode,
    domain: &RectDomain,
    gamma: &BoundaryRegion,
    s: f64,
) -> Result<[f64; 2]> {
    if !gamma.contains(s) {
        return Err(Error::OutOfRegion {
            s,
            lo: gamma.lo,
            hi: gamma.hi,
        });
    }
    eval_eigengradient(mode, domain, gamma.point(domain, s))
}
