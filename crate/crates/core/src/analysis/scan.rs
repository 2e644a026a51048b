use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::sensing::{Sensor, SensorGeometry, SensorSuite};
use crate::spectral::{BoundaryRegion, ModeSet, RectDomain, Side};

use super::rank::{check_gamma, check_rank_tol, rank_test};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanLocation {
    /// New point, zone center or filament centroid.
    Point { x: f64, y: f64 },
    /// New arc position for boundary sensors.
    Arc { side: Side, s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOutcome {
    pub strategic: bool,
    pub sigma_min_overall: f64,
    pub sigma_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub location: ScanLocation,
    pub outcome: Result<ScanOutcome>,
}

/// `n` interior points of `[lo, hi]`: `lo + (i + 1)(hi - lo)/(n + 1)`.
pub fn interior_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n + 1) as f64;
    (0..n).map(|i| lo + (i + 1) as f64 * h).collect()
}

/// Row-major `nx x ny` interior grid over the domain (x slowest).
pub fn interior_point_grid(domain: &RectDomain, nx: usize, ny: usize) -> Vec<ScanLocation> {
    let xs = interior_grid(0.0, domain.a1(), nx);
    let ys = interior_grid(0.0, domain.a2(), ny);
    xs.iter()
        .flat_map(|&x| ys.iter().map(move |&y| ScanLocation::Point { x, y }))
        .collect()
}

/// Moves the template sensor to `location`, keeping its shape and
/// distribution. Locus hints are dropped since the anchor changed.
pub fn relocate(template: &Sensor, location: ScanLocation, domain: &RectDomain) -> Result<Sensor> {
    let mismatch = || {
        Error::InvalidGeometry(format!(
            "{} template cannot be moved to {location:?}",
            template.kind().name()
        ))
    };
    let geometry = match (&template.geometry, location) {
        (SensorGeometry::InternalPointwise { .. }, ScanLocation::Point { x, y }) => {
            SensorGeometry::InternalPointwise { point: [x, y] }
        }
        (SensorGeometry::InternalZone { half_widths, .. }, ScanLocation::Point { x, y }) => {
            SensorGeometry::InternalZone {
                center: [x, y],
                half_widths: *half_widths,
            }
        }
        (SensorGeometry::Filament { vertices }, ScanLocation::Point { x, y }) => {
            let c = template.anchor(domain);
            SensorGeometry::Filament {
                vertices: vertices
                    .iter()
                    .map(|v| [v[0] - c[0] + x, v[1] - c[1] + y])
                    .collect(),
            }
        }
        (SensorGeometry::BoundaryPointwise { .. }, ScanLocation::Arc { side, s }) => {
            SensorGeometry::BoundaryPointwise { side, s }
        }
        (SensorGeometry::BoundaryZone { segments }, ScanLocation::Arc { side, s }) => {
            let half = 0.5 * segments[0].length();
            let mut moved = segments.clone();
            moved[0] = BoundaryRegion::new(domain, side, s - half, s + half)
                .map_err(|e| Error::InvalidGeometry(e.to_string()))?;
            SensorGeometry::BoundaryZone { segments: moved }
        }
        _ => return Err(mismatch()),
    };
    Sensor::new(domain, geometry, template.distribution.clone())
}

/// Rank test with the template relocated to each grid entry. Records come
/// back in grid order; a failing entry never aborts the scan.
pub fn scan_locations(
    template: &Sensor,
    grid: &[ScanLocation],
    modeset: &ModeSet,
    gamma: &BoundaryRegion,
    quad: &QuadratureSpec,
    rank_tol: f64,
) -> Result<Vec<ScanRecord>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "scan.grid",
            reason: "grid is empty".into(),
        });
    }
    check_rank_tol(rank_tol)?;
    check_gamma(modeset.domain(), gamma)?;
    Ok(grid
        .par_iter()
        .map(|&location| ScanRecord {
            location,
            outcome: scan_one(template, location, modeset, gamma, quad, rank_tol),
        })
        .collect())
}

fn scan_one(
    template: &Sensor,
    location: ScanLocation,
    modeset: &ModeSet,
    gamma: &BoundaryRegion,
    quad: &QuadratureSpec,
    rank_tol: f64,
) -> Result<ScanOutcome> {
    let sensor = relocate(template, location, modeset.domain())?;
    let v = rank_test(&SensorSuite::new(vec![sensor]), modeset, gamma, quad, rank_tol)?;
    Ok(ScanOutcome {
        strategic: v.strategic,
        sigma_min_overall: v.sigma_min_overall(),
        sigma_max: v.sigma_max,
    })
}
