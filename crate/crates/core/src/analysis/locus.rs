//! Closed-form non-strategic loci on the rectangle.
//!
//! Each rule names a sensor shape and an anchor coordinate set. When every
//! anchor ratio is an exact rational whose reduced denominators fit within
//! the truncation, some retained mode `(n, m)` has its gradient functional
//! annihilated by symmetry, and the sensor cannot be strategic at that
//! truncation.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sensing::{Rationality, Sensor, SensorGeometry};
use crate::spectral::{BoundaryRegion, ModeIndex, RectDomain};

use super::rank::check_gamma;

/// Largest allowed mismatch between an annotated ratio and the float
/// coordinate, relative to the side length.
const HINT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocusRule {
    #[serde(rename = "cor_4_1")]
    SymmetricZone,
    #[serde(rename = "cor_4_2_one_side")]
    BoundaryOneSide,
    #[serde(rename = "cor_4_2_two_side")]
    BoundaryTwoSide,
    #[serde(rename = "cor_4_3_pointwise")]
    InternalPointwise,
    #[serde(rename = "cor_4_3_filament")]
    Filament,
    #[serde(rename = "cor_4_4")]
    BoundaryPointwise,
    #[serde(rename = "none")]
    None,
}

impl LocusRule {
    pub fn as_str(self) -> &'static str {
        match self {
            LocusRule::SymmetricZone => "cor_4_1",
            LocusRule::BoundaryOneSide => "cor_4_2_one_side",
            LocusRule::BoundaryTwoSide => "cor_4_2_two_side",
            LocusRule::InternalPointwise => "cor_4_3_pointwise",
            LocusRule::Filament => "cor_4_3_filament",
            LocusRule::BoundaryPointwise => "cor_4_4",
            LocusRule::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocusReport {
    pub applicable: bool,
    pub non_strategic_by_locus: bool,
    pub matched_rule: LocusRule,
    /// Set for rules whose printed condition was read with a correction.
    pub interpreted: bool,
    pub order: u32,
    pub witness: Option<String>,
    /// A retained mode whose gradient functional vanishes.
    pub witness_mode: Option<ModeIndex>,
}

impl LocusReport {
    fn not_applicable(order: u32) -> Self {
        Self {
            applicable: false,
            non_strategic_by_locus: false,
            matched_rule: LocusRule::None,
            interpreted: false,
            order,
            witness: None,
            witness_mode: None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Index {
    N,
    M,
}

struct Anchor {
    label: &'static str,
    coord: f64,
    length: f64,
    index: Index,
}

/// Evaluates the locus rule matching the sensor's shape at truncation
/// `order`. Anchor ratios come from the sensor's hints.
pub fn locus_check(
    sensor: &Sensor,
    domain: &RectDomain,
    gamma: &BoundaryRegion,
    order: u32,
) -> Result<LocusReport> {
    sensor.validate(domain)?;
    check_gamma(domain, gamma)?;
    if order == 0 {
        return Err(Error::InvalidParameter {
            name: "modes.J",
            reason: "truncation order must be at least 1".into(),
        });
    }
    let symmetric = sensor
        .hints
        .symmetric
        .or(sensor.distribution.is_point_symmetric())
        .unwrap_or(false);
    let [a1, a2] = domain.lengths();
    let point_anchors = |p: [f64; 2], names: [&'static str; 2]| {
        vec![
            Anchor {
                label: names[0],
                coord: p[0],
                length: a1,
                index: Index::N,
            },
            Anchor {
                label: names[1],
                coord: p[1],
                length: a2,
                index: Index::M,
            },
        ]
    };

    let (rule, interpreted, anchors) = match &sensor.geometry {
        SensorGeometry::InternalPointwise { point } => (
            LocusRule::InternalPointwise,
            false,
            point_anchors(*point, ["b1/a1", "b2/a2"]),
        ),
        SensorGeometry::InternalZone { center, .. } => {
            if !symmetric {
                return Ok(LocusReport::not_applicable(order));
            }
            (
                LocusRule::SymmetricZone,
                false,
                point_anchors(*center, ["xi01/a1", "xi02/a2"]),
            )
        }
        SensorGeometry::Filament { vertices } => {
            let scale = a1.max(a2);
            if !symmetric || !is_point_symmetric(vertices, scale) {
                return Ok(LocusReport::not_applicable(order));
            }
            (
                LocusRule::Filament,
                true,
                point_anchors(sensor.anchor(domain), ["b1/a1", "b2/a2"]),
            )
        }
        SensorGeometry::BoundaryPointwise { side, s } => {
            let (label, index) = if side.is_horizontal() {
                ("b1/a1", Index::N)
            } else {
                ("b2/a2", Index::M)
            };
            (
                LocusRule::BoundaryPointwise,
                false,
                vec![Anchor {
                    label,
                    coord: *s,
                    length: domain.side_length(*side),
                    index,
                }],
            )
        }
        SensorGeometry::BoundaryZone { segments } => {
            if !symmetric {
                return Ok(LocusReport::not_applicable(order));
            }
            let rule = if segments.len() == 1 {
                LocusRule::BoundaryOneSide
            } else {
                LocusRule::BoundaryTwoSide
            };
            let anchors = segments
                .iter()
                .map(|seg| {
                    let (label, index) = if seg.side().is_horizontal() {
                        ("eta01/a1", Index::N)
                    } else {
                        ("eta02/a2", Index::M)
                    };
                    Anchor {
                        label,
                        coord: seg.center(),
                        length: domain.side_length(seg.side()),
                        index,
                    }
                })
                .collect();
            (rule, false, anchors)
        }
    };

    let ratios = &sensor.hints.ratios;
    if ratios.len() != anchors.len() {
        if ratios.is_empty() {
            return Err(Error::IrrationalUnsupported(format!(
                "{} needs exact ratios for {}",
                rule.as_str(),
                anchors.iter().map(|a| a.label).collect::<Vec<_>>().join(", ")
            )));
        }
        return Err(Error::InvalidParameter {
            name: "hints.ratios",
            reason: format!("expected {} entries, got {}", anchors.len(), ratios.len()),
        });
    }

    let mut report = LocusReport {
        applicable: true,
        non_strategic_by_locus: false,
        matched_rule: rule,
        interpreted,
        order,
        witness: None,
        witness_mode: None,
    };

    if let Some(k) = ratios.iter().position(|r| *r == Rationality::Irrational) {
        report.witness = Some(format!("{} is irrational", anchors[k].label));
        return Ok(report);
    }
    if let Some(k) = ratios.iter().position(|r| *r == Rationality::Unknown) {
        return Err(Error::IrrationalUnsupported(format!(
            "{} has no exact rational annotation",
            anchors[k].label
        )));
    }

    let mut n_star: i64 = 1;
    let mut m_star: i64 = 1;
    let mut witness = String::new();
    for (anchor, ratio) in anchors.iter().zip(ratios) {
        let Rationality::Exact(r) = *ratio else {
            unreachable!("irrational and unknown ratios handled above")
        };
        check_hint(anchor, r)?;
        let den = *r.denom();
        match anchor.index {
            Index::N => n_star = lcm(n_star, den),
            Index::M => m_star = lcm(m_star, den),
        }
        if !witness.is_empty() {
            witness.push_str(", ");
        }
        let _ = write!(witness, "{} = {}", anchor.label, r);
    }
    report.witness = Some(witness);
    let j = i64::from(order);
    if n_star <= j && m_star <= j {
        report.non_strategic_by_locus = true;
        report.witness_mode = Some(ModeIndex::new(n_star as u32, m_star as u32));
    }
    Ok(report)
}

fn check_hint(anchor: &Anchor, r: Ratio<i64>) -> Result<()> {
    let value = *r.numer() as f64 / *r.denom() as f64;
    if (value * anchor.length - anchor.coord).abs() > HINT_SLACK * anchor.length {
        return Err(Error::InvalidParameter {
            name: "hints.ratios",
            reason: format!(
                "{} annotated as {r} but the coordinate is {}",
                anchor.label,
                anchor.coord / anchor.length
            ),
        });
    }
    Ok(())
}

fn is_point_symmetric(vertices: &[[f64; 2]], scale: f64) -> bool {
    let n = vertices.len();
    let c = [
        vertices[0][0] + vertices[n - 1][0],
        vertices[0][1] + vertices[n - 1][1],
    ];
    (0..n).all(|k| {
        let (p, q) = (vertices[k], vertices[n - 1 - k]);
        (p[0] + q[0] - c[0]).abs() <= HINT_SLACK * scale
            && (p[1] + q[1] - c[1]).abs() <= HINT_SLACK * scale
    })
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}
