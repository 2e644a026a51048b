#![allow(dead_code)]

use std::f64::consts::PI;

use gradsense::RectDomain;

/// Closed-form `(d/dx, d/dy)` of `2/sqrt(a1 a2) sin(n pi x/a1) sin(m pi y/a2)`.
pub fn gradient_oracle(d: &RectDomain, n: u32, m: u32, p: [f64; 2]) -> [f64; 2] {
    let c = 2.0 / (d.a1() * d.a2()).sqrt();
    let kx = n as f64 * PI / d.a1();
    let ky = m as f64 * PI / d.a2();
    [
        c * kx * (kx * p[0]).cos() * (ky * p[1]).sin(),
        c * ky * (kx * p[0]).sin() * (ky * p[1]).cos(),
    ]
}

pub fn value_oracle(d: &RectDomain, n: u32, m: u32, p: [f64; 2]) -> f64 {
    let c = 2.0 / (d.a1() * d.a2()).sqrt();
    c * (n as f64 * PI * p[0] / d.a1()).sin() * (m as f64 * PI * p[1] / d.a2()).sin()
}

/// Composite Simpson rule with `steps` (even) sub-intervals.
pub fn simpson<F: Fn(f64) -> f64>(a: f64, b: f64, steps: usize, f: F) -> f64 {
    assert!(steps % 2 == 0);
    let h = (b - a) / steps as f64;
    let mut s = f(a) + f(b);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Composite trapezoid rule with `steps` sub-intervals.
pub fn trapezoid<F: Fn(f64) -> f64>(a: f64, b: f64, steps: usize, f: F) -> f64 {
    let h = (b - a) / steps as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for k in 1..steps {
        s += f(a + k as f64 * h);
    }
    s * h
}

/// Explicit five-point finite-difference heat solver with homogeneous
/// Dirichlet walls on a `nodes x nodes` grid (boundary included).
pub struct FdHeat {
    pub nodes: usize,
    pub hx: f64,
    pub hy: f64,
    pub dt: f64,
    u: Vec<f64>,
    scratch: Vec<f64>,
    time: f64,
}

impl FdHeat {
    /// Time step `safety` times the stability limit `1 / (2 (1/hx^2 + 1/hy^2))`.
    pub fn new<F: Fn([f64; 2]) -> f64>(d: &RectDomain, nodes: usize, safety: f64, init: F) -> Self {
        let hx = d.a1() / (nodes - 1) as f64;
        let hy = d.a2() / (nodes - 1) as f64;
        let limit = 0.5 / (1.0 / (hx * hx) + 1.0 / (hy * hy));
        let mut u = vec![0.0; nodes * nodes];
        for i in 1..nodes - 1 {
            for j in 1..nodes - 1 {
                u[i * nodes + j] = init([i as f64 * hx, j as f64 * hy]);
            }
        }
        Self {
            nodes,
            hx,
            hy,
            dt: safety * limit,
            scratch: u.clone(),
            u,
            time: 0.0,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Value at grid node `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.nodes + j]
    }

    /// Advances to exactly `t` using steps no longer than `dt`.
    pub fn advance_to(&mut self, t: f64) {
        let span = t - self.time;
        if span <= 0.0 {
            return;
        }
        let steps = (span / self.dt).ceil() as usize;
        let h = span / steps as f64;
        let n = self.nodes;
        let (rx, ry) = (h / (self.hx * self.hx), h / (self.hy * self.hy));
        for _ in 0..steps {
            for i in 1..n - 1 {
                for j in 1..n - 1 {
                    let k = i * n + j;
                    let c = self.u[k];
                    self.scratch[k] = c
                        + rx * (self.u[k + n] - 2.0 * c + self.u[k - n])
                        + ry * (self.u[k + 1] - 2.0 * c + self.u[k - 1]);
                }
            }
            std::mem::swap(&mut self.u, &mut self.scratch);
        }
        self.time = t;
    }
}
