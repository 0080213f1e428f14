use std::f64::consts::TAU;
use std::fmt::Debug;
use std::path::Path;

use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

pub type Point = SmallVec<[f64; 3]>;

/// An L-periodic Lipschitz map a: R → R^N with |a'| ≤ 1.
pub trait PeriodicCurve: Send + Sync + Debug {
    fn period(&self) -> f64;
    fn dim(&self) -> usize;
    fn position(&self, s: f64) -> Point;
    /// a'(s), right-continuous at corners.
    fn velocity(&self, s: f64) -> Point;
    fn max_speed(&self) -> f64;
    /// |a'| = 1 everywhere and a is C¹.
    fn is_unit_speed(&self) -> bool;
    /// Parameters in [0, L) where a' jumps.
    fn corners(&self) -> Vec<f64> {
        Vec::new()
    }
    fn describe(&self) -> String;
}

fn reduce(s: f64, period: f64) -> f64 {
    let r = s.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Arclength circle of radius R about the origin, period 2πR.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    radius: f64,
}

impl Circle {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!("circle radius {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl PeriodicCurve for Circle {
    fn period(&self) -> f64 {
        TAU * self.radius
    }

    fn dim(&self) -> usize {
        2
    }

    fn position(&self, s: f64) -> Point {
        let (sin, cos) = (s / self.radius).sin_cos();
        smallvec![self.radius * cos, self.radius * sin]
    }

    fn velocity(&self, s: f64) -> Point {
        let (sin, cos) = (s / self.radius).sin_cos();
        smallvec![-sin, cos]
    }

    fn max_speed(&self) -> f64 {
        1.0
    }

    fn is_unit_speed(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("circle(R={})", self.radius)
    }
}

/// a ≡ point, with an arbitrary period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantCurve {
    point: Vec<f64>,
    period: f64,
}

impl ConstantCurve {
    pub fn new(point: Vec<f64>, period: f64) -> Result<Self> {
        if point.is_empty() || !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter("constant curve".into()));
        }
        Ok(Self { point, period })
    }
}

impl PeriodicCurve for ConstantCurve {
    fn period(&self) -> f64 {
        self.period
    }

    fn dim(&self) -> usize {
        self.point.len()
    }

    fn position(&self, _s: f64) -> Point {
        self.point.iter().copied().collect()
    }

    fn velocity(&self, _s: f64) -> Point {
        smallvec![0.0; self.point.len()]
    }

    fn max_speed(&self) -> f64 {
        0.0
    }

    fn is_unit_speed(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        format!("constant({:?})", self.point)
    }
}

/// Counterclockwise arclength parametrization of ∂[−L/2, L/2]² starting
/// at the corner (−L/2, −L/2); period 4L, corners at 0, L, 2L, 3L.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareCurve {
    side: f64,
}

const SQUARE_DIRECTIONS: [[f64; 2]; 4] = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];

impl SquareCurve {
    pub fn new(side: f64) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidParameter(format!("square side {side}")));
        }
        Ok(Self { side })
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    fn edge(&self, s: f64) -> (usize, f64) {
        let r = reduce(s, 4.0 * self.side);
        let k = ((r / self.side).floor() as usize).min(3);
        (k, r - k as f64 * self.side)
    }
}

impl PeriodicCurve for SquareCurve {
    fn period(&self) -> f64 {
        4.0 * self.side
    }

    fn dim(&self) -> usize {
        2
    }

    fn position(&self, s: f64) -> Point {
        let h = 0.5 * self.side;
        let corners = [[-h, -h], [h, -h], [h, h], [-h, h]];
        let (k, r) = self.edge(s);
        let (c, d) = (corners[k], SQUARE_DIRECTIONS[k]);
        smallvec![c[0] + r * d[0], c[1] + r * d[1]]
    }

    fn velocity(&self, s: f64) -> Point {
        let d = SQUARE_DIRECTIONS[self.edge(s).0];
        smallvec![d[0], d[1]]
    }

    fn max_speed(&self) -> f64 {
        1.0
    }

    fn is_unit_speed(&self) -> bool {
        false
    }

    fn corners(&self) -> Vec<f64> {
        (0..4).map(|k| k as f64 * self.side).collect()
    }

    fn describe(&self) -> String {
        format!("square(L={})", self.side)
    }
}

/// Periodic cubic spline through user samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineCurve {
    period: f64,
    knots: Vec<f64>,
    values: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    max_speed: f64,
}

#[derive(Deserialize)]
struct SplineRecord {
    #[serde(rename = "L")]
    period: f64,
    samples: Vec<Vec<f64>>,
}

/// Solves the cyclic tridiagonal system with constant structure
/// lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i] (indices mod n).
fn solve_cyclic(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let thomas = |d: &[f64], r: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut b = d[0];
        x[0] = r[0] / b;
        for i in 1..n {
            c[i] = upper[i - 1] / b;
            b = d[i] - lower[i] * c[i];
            x[i] = (r[i] - lower[i] * x[i - 1]) / b;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i + 1] * x[i + 1];
        }
        x
    };
    // Sherman–Morrison on the corner entries.
    let (alpha, beta) = (upper[n - 1], lower[0]);
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let y = thomas(&d, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = thomas(&d, &u);
    let fact = (y[0] + beta * y[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    y.iter().zip(&z).map(|(yi, zi)| yi - fact * zi).collect()
}

impl SplineCurve {
    /// `samples[i] = [s, a_1, …, a_N]` with s strictly increasing in [0, L).
    pub fn new(period: f64, samples: &[Vec<f64>]) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter(format!("period {period}")));
        }
        if samples.len() < 4 {
            return Err(Error::Malformed("a spline needs at least 4 samples".into()));
        }
        let dim = samples[0].len().saturating_sub(1);
        if dim == 0 || samples.iter().any(|s| s.len() != dim + 1) {
            return Err(Error::Malformed("ragged spline samples".into()));
        }
        if samples.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let knots: Vec<f64> = samples.iter().map(|s| s[0]).collect();
        if knots[0] < 0.0 || knots[knots.len() - 1] >= period || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Malformed("spline parameters must increase within [0, L)".into()));
        }
        let n = knots.len();
        let widths: Vec<f64> = (0..n)
            .map(|i| if i + 1 < n { knots[i + 1] - knots[i] } else { knots[0] + period - knots[i] })
            .collect();
        let lower: Vec<f64> = (0..n).map(|i| widths[(i + n - 1) % n]).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 * (widths[(i + n - 1) % n] + widths[i])).collect();
        let upper = widths.clone();
        let values: Vec<Vec<f64>> = (0..dim).map(|c| samples.iter().map(|s| s[c + 1]).collect()).collect();
        let second = values
            .iter()
            .map(|p| {
                let rhs: Vec<f64> = (0..n)
                    .map(|i| {
                        let (prev, next) = ((i + n - 1) % n, (i + 1) % n);
                        6.0 * ((p[next] - p[i]) / widths[i] - (p[i] - p[prev]) / widths[prev])
                    })
                    .collect();
                solve_cyclic(&lower, &diag, &upper, &rhs)
            })
            .collect();
        let mut curve = Self {
            period,
            knots,
            values,
            second,
            max_speed: 0.0,
        };
        let probes = 32 * n;
        curve.max_speed = (0..probes)
            .map(|k| {
                let v = curve.velocity(period * k as f64 / probes as f64);
                v.iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        if curve.max_speed > 1.0 + 1e-9 {
            return Err(Error::SpeedViolation(curve.max_speed));
        }
        Ok(curve)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let r: SplineRecord = serde_json::from_str(s)?;
        Self::new(r.period, &r.samples)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    fn locate(&self, s: f64) -> (usize, f64, f64) {
        let n = self.knots.len();
        let mut r = reduce(s, self.period);
        if r < self.knots[0] {
            r += self.period;
        }
        let i = self.knots.partition_point(|k| *k <= r).saturating_sub(1).min(n - 1);
        let h = if i + 1 < n { self.knots[i + 1] - self.knots[i] } else { self.knots[0] + self.period - self.knots[i] };
        (i, r - self.knots[i], h)
    }
}

impl PeriodicCurve for SplineCurve {
    fn period(&self) -> f64 {
        self.period
    }

    fn dim(&self) -> usize {
        self.values.len()
    }

    fn position(&self, s: f64) -> Point {
        let (i, x, h) = self.locate(s);
        let j = (i + 1) % self.knots.len();
        let y = h - x;
        self.values
            .iter()
            .zip(&self.second)
            .map(|(p, m)| {
                m[i] * y * y * y / (6.0 * h)
                    + m[j] * x * x * x / (6.0 * h)
                    + (p[i] / h - m[i] * h / 6.0) * y
                    + (p[j] / h - m[j] * h / 6.0) * x
            })
            .collect()
    }

    fn velocity(&self, s: f64) -> Point {
        let (i, x, h) = self.locate(s);
        let j = (i + 1) % self.knots.len();
        let y = h - x;
        self.values
            .iter()
            .zip(&self.second)
            .map(|(p, m)| {
                -m[i] * y * y / (2.0 * h) + m[j] * x * x / (2.0 * h) - (p[i] / h - m[i] * h / 6.0)
                    + (p[j] / h - m[j] * h / 6.0)
            })
            .collect()
    }

    fn max_speed(&self) -> f64 {
        self.max_speed
    }

    fn is_unit_speed(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        format!("spline({} knots, L={})", self.knots.len(), self.period)
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

const PANEL_ORDER: usize = 12;

/// Unit-speed planar curve a'(s) = (cos ψ, sin ψ) with
/// ψ(s) = c + λ Σ_k B_k sin(2πks/L). The odd series makes ∫ sin(λp) vanish;
/// λ is the first positive root of ∫₀^L cos(λ p(s)) ds, which closes the curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierUnitCurve {
    period: f64,
    offset: f64,
    amplitude: f64,
    coefficients: Vec<f64>,
    panel_width: f64,
    panel_starts: Vec<[f64; 2]>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl FourierUnitCurve {
    pub fn new(period: f64, offset: f64, coefficients: Vec<f64>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) || coefficients.is_empty() {
            return Err(Error::InvalidParameter("fourier curve needs a period and modes".into()));
        }
        let spread: f64 = coefficients.iter().map(|b| b.abs()).sum();
        if !(spread > 0.0) {
            return Err(Error::ClosureFailed(1));
        }
        let k = coefficients.len();
        let series = |s: f64| -> f64 {
            coefficients
                .iter()
                .enumerate()
                .map(|(j, b)| b * (TAU * (j + 1) as f64 * s / period).sin())
                .sum()
        };
        // Periodic trapezoid rule: spectrally accurate for the entire integrand.
        let closure = |lambda: f64| -> f64 {
            let m = 64 * k * (4 + (lambda * spread).ceil() as usize);
            let h = period / m as f64;
            (0..m).map(|i| (lambda * series(i as f64 * h)).cos()).sum::<f64>() * h
        };
        let step = 0.05 / spread;
        let mut lo = 0.0;
        let mut f_lo = closure(lo);
        let mut bracket = None;
        for i in 1..=800 {
            let hi = i as f64 * step;
            let f_hi = closure(hi);
            if f_hi == 0.0 {
                bracket = Some((hi, hi));
                break;
            }
            if f_lo.signum() != f_hi.signum() {
                bracket = Some((lo, hi));
                break;
            }
            lo = hi;
            f_lo = f_hi;
        }
        let (mut a, mut b) = bracket.ok_or(Error::ClosureFailed(1))?;
        let f_a = closure(a);
        while b - a > 1e-15 * b {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if closure(mid).signum() == f_a.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        let amplitude = 0.5 * (a + b);
        let (nodes, weights) = gauss_legendre(PANEL_ORDER);
        let panels = 32 * k * (2 + (amplitude * spread).ceil() as usize);
        let mut curve = Self {
            period,
            offset,
            amplitude,
            coefficients,
            panel_width: period / panels as f64,
            panel_starts: vec![[0.0, 0.0]; panels + 1],
            nodes,
            weights,
        };
        for j in 0..panels {
            let s0 = j as f64 * curve.panel_width;
            let d = curve.integrate(s0, s0 + curve.panel_width);
            let p = curve.panel_starts[j];
            curve.panel_starts[j + 1] = [p[0] + d[0], p[1] + d[1]];
        }
        let gap = curve.panel_starts[panels];
        if gap[0].hypot(gap[1]) > 1e-10 * period {
            return Err(Error::ClosureFailed(1));
        }
        Ok(curve)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn angle(&self, s: f64) -> f64 {
        self.offset
            + self.amplitude
                * self
                    .coefficients
                    .iter()
                    .enumerate()
                    .map(|(j, b)| b * (TAU * (j + 1) as f64 * s / self.period).sin())
                    .sum::<f64>()
    }

    fn integrate(&self, a: f64, b: f64) -> [f64; 2] {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut out = [0.0, 0.0];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let (sin, cos) = self.angle(mid + half * x).sin_cos();
            out[0] += w * cos;
            out[1] += w * sin;
        }
        [out[0] * half, out[1] * half]
    }

    /// |a(L) − a(0)| from the panel tables.
    pub fn closure_gap(&self) -> f64 {
        let g = self.panel_starts[self.panel_starts.len() - 1];
        g[0].hypot(g[1])
    }
}

impl PeriodicCurve for FourierUnitCurve {
    fn period(&self) -> f64 {
        self.period
    }

    fn dim(&self) -> usize {
        2
    }

    fn position(&self, s: f64) -> Point {
        let r = reduce(s, self.period);
        let j = ((r / self.panel_width) as usize).min(self.panel_starts.len() - 2);
        let s0 = j as f64 * self.panel_width;
        let d = self.integrate(s0, r);
        let p = self.panel_starts[j];
        smallvec![p[0] + d[0], p[1] + d[1]]
    }

    fn velocity(&self, s: f64) -> Point {
        let (sin, cos) = self.angle(s).sin_cos();
        smallvec![cos, sin]
    }

    fn max_speed(&self) -> f64 {
        1.0
    }

    fn is_unit_speed(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        format!("fourier({} modes, L={})", self.coefficients.len(), self.period)
    }
}
