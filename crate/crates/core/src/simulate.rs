//! Spectral initial states, the heat semigroup and sampled sensor outputs.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{GaussLegendre, QuadratureSpec};
use crate::sensing::{outputs_from_matrix, SensorSuite};
use crate::spectral::{cos_pi, sin_pi, ModeIndex, ModeSet, RectDomain};

/// `c_nm = <x0, phi_nm>` in the mode set's coefficient order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateCoeffs {
    domain: RectDomain,
    order: u32,
    values: Vec<f64>,
}

impl StateCoeffs {
    pub fn zeros(modeset: &ModeSet) -> Self {
        Self {
            domain: *modeset.domain(),
            order: modeset.order(),
            values: vec![0.0; modeset.len()],
        }
    }

    pub fn from_values(modeset: &ModeSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != modeset.len() {
            return Err(Error::InvalidParameter {
                name: "coefficients",
                reason: format!("expected {} values, got {}", modeset.len(), values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "coefficients",
                reason: "values must be finite".into(),
            });
        }
        Ok(Self {
            domain: *modeset.domain(),
            order: modeset.order(),
            values,
        })
    }

    /// Unit coefficient on a single mode.
    pub fn indicator(modeset: &ModeSet, index: ModeIndex) -> Result<Self> {
        let pos = modeset.index_of(index).ok_or(Error::InvalidParameter {
            name: "mode",
            reason: format!("{index} is outside the truncation"),
        })?;
        let mut c = Self::zeros(modeset);
        c.values[pos] = 1.0;
        Ok(c)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> &RectDomain {
        &self.domain
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn get(&self, modeset: &ModeSet, index: ModeIndex) -> Option<f64> {
        modeset.index_of(index).map(|k| self.values[k])
    }

    pub fn matches(&self, modeset: &ModeSet) -> bool {
        modeset.same_basis(&self.domain, self.order)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// State at time `t`: `c_a exp(lambda_a t)`.
    pub fn propagate(&self, modeset: &ModeSet, t: f64) -> Result<Self> {
        if !self.matches(modeset) {
            return Err(Error::ModeSetMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(modeset.eigenvalues())
            .map(|(c, l)| c * (l * t).exp())
            .collect();
        Ok(Self { values, ..*self })
    }

    /// Truncated expansion evaluated at `p`.
    pub fn field_at(&self, modeset: &ModeSet, p: [f64; 2]) -> Result<f64> {
        if !self.matches(modeset) {
            return Err(Error::ModeSetMismatch);
        }
        Ok(modeset
            .modes()
            .iter()
            .zip(&self.values)
            .map(|(m, c)| c * m.value_at(&self.domain, p))
            .sum())
    }
}

/// Samples of an initial state on a rectilinear grid covering the closed
/// domain, interpolated bilinearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedField {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major, `x` slowest.
    pub values: Vec<f64>,
}

impl TabulatedField {
    fn validate(&self, domain: &RectDomain) -> Result<()> {
        let bad = |reason: String| Error::InvalidParameter {
            name: "initial_state.grid",
            reason,
        };
        for (axis, len, name) in [(&self.xs, domain.a1(), "x"), (&self.ys, domain.a2(), "y")] {
            if axis.len() < 2 || axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(bad(format!("{name} axis must be strictly increasing with 2+ samples")));
            }
            let slack = 1e-12 * len;
            if axis[0].abs() > slack || (axis[axis.len() - 1] - len).abs() > slack {
                return Err(bad(format!("{name} axis must span [0, {len}]")));
            }
        }
        if self.values.len() != self.xs.len() * self.ys.len() {
            return Err(bad(format!(
                "{} values for a {}x{} grid",
                self.values.len(),
                self.xs.len(),
                self.ys.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(bad("values must be finite".into()));
        }
        Ok(())
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ys.len() + j]
    }
}

pub enum InitialState<'a> {
    Analytic(&'a (dyn Fn([f64; 2]) -> f64 + Sync)),
    Tabulated(&'a TabulatedField),
}

/// Spectral projection by tensor Gauss-Legendre quadrature.
pub fn project_initial_state(
    state: InitialState<'_>,
    modeset: &ModeSet,
    quad: &QuadratureSpec,
) -> Result<StateCoeffs> {
    let domain = *modeset.domain();
    let j = modeset.order() as usize;
    let rule = GaussLegendre::new(quad.order);
    let (xs, wx, ys, wy, f) = match state {
        InitialState::Analytic(field) => {
            let (xs, wx) = composite_nodes(&rule, &uniform_breaks(domain.a1(), j));
            let (ys, wy) = composite_nodes(&rule, &uniform_breaks(domain.a2(), j));
            let f = DMatrix::from_fn(xs.len(), ys.len(), |a, b| field([xs[a], ys[b]]));
            (xs, wx, ys, wy, f)
        }
        InitialState::Tabulated(table) => {
            table.validate(&domain)?;
            let required = 2 * j;
            for axis in [&table.xs, &table.ys] {
                let samples = axis.len() - 1;
                if samples < required {
                    return Err(Error::QuadratureUnderResolved { samples, required });
                }
            }
            let (xs, wx) = composite_nodes(&rule, &table.xs);
            let (ys, wy) = composite_nodes(&rule, &table.ys);
            let lx: Vec<_> = xs.iter().map(|&x| locate(&table.xs, x)).collect();
            let ly: Vec<_> = ys.iter().map(|&y| locate(&table.ys, y)).collect();
            let f = DMatrix::from_fn(xs.len(), ys.len(), |a, b| {
                let ((i, tx), (k, ty)) = (lx[a], ly[b]);
                (1.0 - tx) * ((1.0 - ty) * table.value(i, k) + ty * table.value(i, k + 1))
                    + tx * ((1.0 - ty) * table.value(i + 1, k) + ty * table.value(i + 1, k + 1))
            });
            (xs, wx, ys, wy, f)
        }
    };
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "initial_state",
            reason: "field is not finite on the domain".into(),
        });
    }
    let sx = sine_table(&xs, &wx, domain.a1(), j);
    let sy = sine_table(&ys, &wy, domain.a2(), j);
    let c = sx * f * sy.transpose();
    let norm = 2.0 / domain.area().sqrt();
    let values = (0..j)
        .flat_map(|n| (0..j).map(move |m| (n, m)))
        .map(|(n, m)| norm * c[(n, m)])
        .collect();
    StateCoeffs::from_values(modeset, values)
}

fn uniform_breaks(len: f64, panels: usize) -> Vec<f64> {
    let panels = panels.max(1);
    (0..=panels).map(|k| len * k as f64 / panels as f64).collect()
}

fn composite_nodes(rule: &GaussLegendre, breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    breaks
        .windows(2)
        .flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>())
        .unzip()
}

/// Rows `n = 1..J` of weighted `sin(n pi x / a)`.
fn sine_table(nodes: &[f64], weights: &[f64], len: f64, j: usize) -> DMatrix<f64> {
    DMatrix::from_fn(j, nodes.len(), |n, k| {
        weights[k] * sin_pi((n + 1) as f64 * (nodes[k] / len))
    })
}

fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 2;
    let i = axis.partition_point(|&a| a <= x).saturating_sub(1).min(last);
    (i, ((x - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub times: Vec<f64>,
    /// One vector of length `q` per time.
    pub samples: Vec<Vec<f64>>,
    pub noise_sigma: f64,
}

impl OutputRecord {
    pub fn q(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// `K = ceil(T / dt)` uniform steps, `t_k = T k / K`, both ends included.
pub fn time_grid(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::NonPositiveHorizon(horizon));
    }
    if !(dt > 0.0 && dt <= horizon) {
        return Err(Error::InvalidParameter {
            name: "time.dt",
            reason: format!("must satisfy 0 < dt <= T (dt = {dt}, T = {horizon})"),
        });
    }
    let k = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((0..=k).map(|i| horizon * i as f64 / k as f64).collect())
}

pub fn simulate_outputs(
    suite: &SensorSuite,
    coeffs: &StateCoeffs,
    modeset: &ModeSet,
    horizon: f64,
    dt: f64,
    quad: &QuadratureSpec,
) -> Result<OutputRecord> {
    let times = time_grid(horizon, dt)?;
    if !coeffs.matches(modeset) {
        return Err(Error::ModeSetMismatch);
    }
    let c = suite.value_matrix(modeset, quad)?;
    let lambda = modeset.eigenvalues();
    let samples = times
        .iter()
        .map(|&t| outputs_from_matrix(&c, &lambda, coeffs.values(), t))
        .collect();
    Ok(OutputRecord {
        times,
        samples,
        noise_sigma: 0.0,
    })
}

/// Adds i.i.d. `N(0, sigma^2)` to every sample; reproducible per seed.
pub fn add_noise(record: &OutputRecord, sigma: f64, seed: u64) -> Result<OutputRecord> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "noise.sigma",
            reason: format!("must be non-negative (got {sigma})"),
        });
    }
    let mut out = record.clone();
    out.noise_sigma = sigma;
    if sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for row in &mut out.samples {
        for y in row.iter_mut() {
            *y += normal.sample(&mut rng);
        }
    }
    Ok(out)
}

/// Gradient of the truncated expansion at `p`.
pub(crate) fn gradient_of(coeffs: &[f64], modeset: &ModeSet, p: [f64; 2]) -> [f64; 2] {
    let domain = modeset.domain();
    let j = modeset.order() as usize;
    let (a1, a2) = (domain.a1(), domain.a2());
    let sx: Vec<(f64, f64)> = (1..=j)
        .map(|n| {
            let t = n as f64 * (p[0] / a1);
            (sin_pi(t), cos_pi(t))
        })
        .collect();
    let sy: Vec<(f64, f64)> = (1..=j)
        .map(|m| {
            let t = m as f64 * (p[1] / a2);
            (sin_pi(t), cos_pi(t))
        })
        .collect();
    let norm = 2.0 / domain.area().sqrt();
    let pi = std::f64::consts::PI;
    let mut g = [0.0; 2];
    for n in 0..j {
        let kx = (n + 1) as f64 * pi / a1;
        for m in 0..j {
            let c = coeffs[n * j + m];
            if c == 0.0 {
                continue;
            }
            let ky = (m + 1) as f64 * pi / a2;
            g[0] += c * kx * sx[n].1 * sy[m].0;
            g[1] += c * ky * sx[n].0 * sy[m].1;
        }
    }
    [norm * g[0], norm * g[1]]
}
