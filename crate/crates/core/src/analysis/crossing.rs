use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::quadrature::{GaussLegendre, QuadratureSpec};
use crate::sensing::SensorSuite;
use crate::spectral::{BoundaryRegion, ModeSet, RectDomain};

use super::rank::{assemble_all, check_gamma, check_rank_tol, verdict_from_matrices, StrategicVerdict};

/// Panels per axis when integrating over the collar's bounding box.
const COLLAR_PANELS: usize = 8;

/// Points of the domain within `radius` of a boundary region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collar {
    pub gamma: BoundaryRegion,
    pub radius: f64,
    /// `[[x0, x1], [y0, y1]]`
    pub bounding_box: [[f64; 2]; 2],
}

impl Collar {
    pub fn new(domain: &RectDomain, gamma: &BoundaryRegion, radius: f64) -> Result<Self> {
        check_gamma(domain, gamma)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "crossing.radius",
                reason: format!("must be positive (got {radius})"),
            });
        }
        let side = gamma.side();
        let depth = if side.is_horizontal() {
            domain.a2()
        } else {
            domain.a1()
        };
        if radius >= depth {
            return Err(Error::RadiusTooLarge {
                radius,
                limit: depth,
            });
        }
        let [a1, a2] = domain.lengths();
        let p = gamma.point(domain, gamma.lo());
        let q = gamma.point(domain, gamma.hi());
        let bounding_box = [
            [(p[0].min(q[0]) - radius).max(0.0), (p[0].max(q[0]) + radius).min(a1)],
            [(p[1].min(q[1]) - radius).max(0.0), (p[1].max(q[1]) + radius).min(a2)],
        ];
        Ok(Self {
            gamma: *gamma,
            radius,
            bounding_box,
        })
    }

    pub fn contains(&self, domain: &RectDomain, p: [f64; 2]) -> bool {
        domain.contains_open(p) && self.gamma.distance(domain, p) < self.radius
    }

    /// Area estimate from the same rule used for the diagnostic Gram matrix.
    pub fn area(&self, domain: &RectDomain, quad: &QuadratureSpec) -> f64 {
        self.integrate(domain, quad, |_| 1.0)
    }

    fn integrate<F: FnMut([f64; 2]) -> f64>(
        &self,
        domain: &RectDomain,
        quad: &QuadratureSpec,
        mut f: F,
    ) -> f64 {
        let rule = GaussLegendre::new(quad.order);
        let [[x0, x1], [y0, y1]] = self.bounding_box;
        let hx = (x1 - x0) / COLLAR_PANELS as f64;
        let hy = (y1 - y0) / COLLAR_PANELS as f64;
        let mut total = 0.0;
        for i in 0..COLLAR_PANELS {
            for j in 0..COLLAR_PANELS {
                let xs = [x0 + i as f64 * hx, x0 + (i + 1) as f64 * hx];
                let ys = [y0 + j as f64 * hy, y0 + (j + 1) as f64 * hy];
                total += rule.integrate_rect(xs, ys, |p| {
                    if self.contains(domain, p) {
                        f(p)
                    } else {
                        0.0
                    }
                });
            }
        }
        total
    }
}

/// Finite check of the completeness assumption on a region: the Gram matrix
/// of the retained gradient profiles restricted to the region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessDiagnostic {
    pub region: String,
    pub dimension: usize,
    pub rank: usize,
    /// Largest over smallest retained eigenvalue.
    pub condition: Option<f64>,
}

fn diagnostic_from_gram(region: String, gram: &DMatrix<f64>, tol: f64) -> CompletenessDiagnostic {
    let eig = symmetric_eigenvalues(gram);
    let hi = eig.last().copied().unwrap_or(0.0);
    let kept: Vec<f64> = eig.iter().copied().filter(|&e| e > tol * hi).collect();
    CompletenessDiagnostic {
        region,
        dimension: gram.nrows(),
        rank: kept.len(),
        condition: kept.first().map(|lo| hi / lo),
    }
}

/// Gram matrix of the traced gradients `int_gamma grad phi_a . grad phi_b ds`.
pub fn boundary_completeness(
    modeset: &ModeSet,
    gamma: &BoundaryRegion,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<CompletenessDiagnostic> {
    let domain = modeset.domain();
    check_gamma(domain, gamma)?;
    let rule = GaussLegendre::new(quad.line_order);
    let panels = 2 * modeset.order() as usize;
    let h = gamma.length() / panels as f64;
    let modes = modeset.modes();
    let mut samples: Vec<(f64, Vec<[f64; 2]>)> = Vec::new();
    for k in 0..panels {
        let lo = gamma.lo() + k as f64 * h;
        for (s, w) in rule.mapped(lo, lo + h) {
            let p = gamma.point(domain, s);
            samples.push((w, modes.iter().map(|m| m.gradient_at(domain, p)).collect()));
        }
    }
    let gram = gram_from_samples(modes.len(), &samples);
    Ok(diagnostic_from_gram(
        format!("{} [{}, {}]", gamma.side(), gamma.lo(), gamma.hi()),
        &gram,
        tol,
    ))
}

/// Same Gram matrix over the collar's area.
pub fn collar_completeness(
    modeset: &ModeSet,
    collar: &Collar,
    quad: &QuadratureSpec,
    tol: f64,
) -> CompletenessDiagnostic {
    let domain = modeset.domain();
    let modes = modeset.modes();
    let n = modes.len();
    let mut gram = DMatrix::zeros(n, n);
    let mut grads = vec![[0.0; 2]; n];
    // Accumulate the weighted outer products point by point.
    let rule = GaussLegendre::new(quad.order);
    let [[x0, x1], [y0, y1]] = collar.bounding_box;
    let hx = (x1 - x0) / COLLAR_PANELS as f64;
    let hy = (y1 - y0) / COLLAR_PANELS as f64;
    for i in 0..COLLAR_PANELS {
        for j in 0..COLLAR_PANELS {
            let xa = x0 + i as f64 * hx;
            let ya = y0 + j as f64 * hy;
            for (x, wx) in rule.mapped(xa, xa + hx) {
                for (y, wy) in rule.mapped(ya, ya + hy) {
                    let p = [x, y];
                    if !collar.contains(domain, p) {
                        continue;
                    }
                    for (g, m) in grads.iter_mut().zip(&modes) {
                        *g = m.gradient_at(domain, p);
                    }
                    let w = wx * wy;
                    for a in 0..n {
                        for b in 0..=a {
                            gram[(a, b)] += w * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                        }
                    }
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    diagnostic_from_gram(format!("collar r = {}", collar.radius), &gram, tol)
}

fn gram_from_samples(n: usize, samples: &[(f64, Vec<[f64; 2]>)]) -> DMatrix<f64> {
    let mut gram = DMatrix::zeros(n, n);
    for (w, g) in samples {
        for a in 0..n {
            for b in 0..=a {
                gram[(a, b)] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    gram
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub r_radius: f64,
    pub omega_r: Collar,
    pub internal_pass: bool,
    pub boundary_pass: bool,
    pub implication_holds: bool,
    pub internal_verdict: StrategicVerdict,
    pub boundary_verdict: StrategicVerdict,
    pub collar_completeness: CompletenessDiagnostic,
    pub boundary_completeness: CompletenessDiagnostic,
}

/// Runs the regional test on the collar around `gamma` and on `gamma`
/// itself, and checks that collar success implies boundary success.
pub fn crossing_check(
    suite: &SensorSuite,
    modeset: &ModeSet,
    gamma: &BoundaryRegion,
    r_radius: f64,
    quad: &QuadratureSpec,
    rank_tol: f64,
) -> Result<CrossingReport> {
    check_rank_tol(rank_tol)?;
    let domain = modeset.domain();
    let collar = Collar::new(domain, gamma, r_radius)?;
    let gs = assemble_all(suite, modeset, quad)?;
    let internal = verdict_from_matrices(suite.len(), modeset, gamma, &gs, rank_tol);
    let boundary = verdict_from_matrices(suite.len(), modeset, gamma, &gs, rank_tol);
    let (internal_pass, boundary_pass) = (internal.strategic, boundary.strategic);
    Ok(CrossingReport {
        r_radius,
        omega_r: collar,
        internal_pass,
        boundary_pass,
        implication_holds: !(internal_pass && !boundary_pass),
        collar_completeness: collar_completeness(modeset, &collar, quad, rank_tol),
        boundary_completeness: boundary_completeness(modeset, gamma, quad, rank_tol)?,
        internal_verdict: internal,
        boundary_verdict: boundary,
    })
}
