//! Triple junctions of timelike half-lines in R^{1+1}: the weighted balance
//! Σ θᵢ Rᵢ nᵢ = 0, its solvers, and the null and null-plane limits.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conservation::{energy, momentum, TimeSliceMeasures};
use crate::error::{Error, Result};
use crate::minkowski::{
    classify, null_projection, CausalKind, GrassmannAtom, Matrix, SpacetimeVector, TimelikeProjection,
};
use crate::varifold::{test_family_distance, DiscreteVarifold, GrassFactor, SpacetimeBox, TestFunction, VarifoldAtom};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Lies in the past of the junction point.
    In,
    /// Lies in the future of the junction point.
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rotation {
    Counterclockwise,
    Clockwise,
}

impl Rotation {
    fn apply(self, [a, b]: [f64; 2]) -> [f64; 2] {
        match self {
            Rotation::Counterclockwise => [-b, a],
            Rotation::Clockwise => [b, -a],
        }
    }
}

/// A timelike half-line from the junction point with multiplicity θ
/// relative to its lorentzian length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfLine {
    extension: [f64; 2],
    theta: f64,
    orientation: Orientation,
}

impl HalfLine {
    /// `direction` may point either way along the line; `orientation`
    /// decides the side of the junction.
    pub fn new(direction: [f64; 2], theta: f64, orientation: Orientation) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!("multiplicity {theta}")));
        }
        let class = classify(&SpacetimeVector::new(&direction)?)?;
        if class.kind != CausalKind::Timelike {
            return Err(Error::NotTimelike(class.kind));
        }
        let len = direction[0].hypot(direction[1]);
        let sign = match orientation {
            Orientation::Out => direction[0].signum(),
            Orientation::In => -direction[0].signum(),
        };
        Ok(Self {
            extension: [sign * direction[0] / len, sign * direction[1] / len],
            theta,
            orientation,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Euclidean unit vector pointing from the junction along the line.
    pub fn extension(&self) -> [f64; 2] {
        self.extension
    }

    pub fn velocity(&self) -> f64 {
        self.extension[1] / self.extension[0]
    }

    /// Outward euclidean conormal at the junction point.
    pub fn conormal(&self) -> [f64; 2] {
        [-self.extension[0], -self.extension[1]]
    }

    /// Lorentz-unit normal with nonnegative time component; (0, 1) for a
    /// static line.
    pub fn normal(&self) -> [f64; 2] {
        let [e0, e1] = self.extension;
        let s = if e1 != 0.0 { e1.signum() } else { e0.signum() };
        let l = (e0 * e0 - e1 * e1).sqrt();
        [s * e1 / l, s * e0 / l]
    }

    /// ν = ηn/|ηn|_e
    pub fn unit_covector(&self) -> [f64; 2] {
        let [n0, n1] = self.normal();
        let l = n0.hypot(n1);
        [-n0 / l, n1 / l]
    }

    /// The quarter turn R with Rν = τ.
    pub fn rotation(&self) -> Rotation {
        let (nu, tau) = (self.unit_covector(), self.conormal());
        let ccw = Rotation::Counterclockwise.apply(nu);
        if (ccw[0] - tau[0]).abs() + (ccw[1] - tau[1]).abs() < 1e-9 {
            Rotation::Counterclockwise
        } else {
            Rotation::Clockwise
        }
    }

    pub fn rotated_normal(&self) -> [f64; 2] {
        self.rotation().apply(self.normal())
    }

    pub fn projection(&self) -> TimelikeProjection {
        let [e0, e1] = self.extension;
        let q = e1 * e1 - e0 * e0;
        // P = e ⊗ ηe / (e, e)
        let m = Matrix::from_rows(vec![vec![-e0 * e0 / q, e0 * e1 / q], vec![-e1 * e0 / q, e1 * e1 / q]])
            .expect("2x2");
        TimelikeProjection::from_matrix_unchecked(m, 1)
    }

    /// θ/√(1 − v²), the energy carried per time slice.
    pub fn energy(&self) -> f64 {
        let v = self.velocity();
        self.theta / (1.0 - v * v).sqrt()
    }

    pub fn momentum(&self) -> f64 {
        self.velocity() * self.energy()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionNetwork {
    pub p: [f64; 2],
    pub lines: Vec<HalfLine>,
}

#[derive(Deserialize, Serialize)]
struct LineRecord {
    dir: [f64; 2],
    theta: f64,
    orientation: Orientation,
}

#[derive(Deserialize, Serialize)]
struct NetworkRecord {
    p: [f64; 2],
    lines: Vec<LineRecord>,
}

impl JunctionNetwork {
    pub fn new(p: [f64; 2], lines: Vec<HalfLine>) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::InvalidParameter("network without lines".into()));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { p, lines })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let r: NetworkRecord = serde_json::from_str(s)?;
        let lines = r
            .lines
            .into_iter()
            .map(|l| HalfLine::new(l.dir, l.theta, l.orientation))
            .collect::<Result<Vec<_>>>()?;
        Self::new(r.p, lines)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let r = NetworkRecord {
            p: self.p,
            lines: self
                .lines
                .iter()
                .map(|l| LineRecord {
                    dir: l.extension,
                    theta: l.theta,
                    orientation: l.orientation,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&r)?)
    }

    /// Image under t ↦ 2p⁰ − t: collisions become splittings.
    pub fn time_reversed(&self) -> Result<Self> {
        let lines = self
            .lines
            .iter()
            .map(|l| {
                let o = match l.orientation {
                    Orientation::In => Orientation::Out,
                    Orientation::Out => Orientation::In,
                };
                HalfLine::new([-l.extension[0], l.extension[1]], l.theta, o)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.p, lines)
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let lines = self
            .lines
            .iter()
            .map(|l| HalfLine::new(l.extension, lambda * l.theta, l.orientation))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.p, lines)
    }

    /// Atoms at the midpoints of time cells of width `dt` along each line,
    /// within `window` of the junction time. Ṽ⁰ weights are θ·√(1 − v²)·dt.
    pub fn sample(&self, window: f64, dt: f64) -> Result<DiscreteVarifold> {
        if !(window > 0.0 && dt > 0.0) {
            return Err(Error::InvalidParameter("sampling window".into()));
        }
        let cells = ((window / dt).round() as usize).max(1);
        let dt = window / cells as f64;
        let mut v = DiscreteVarifold::new(1, 1, format!("junction network, window {window}, dt {dt}"))?;
        for line in &self.lines {
            let p = line.projection();
            let vel = line.velocity();
            let w = line.theta * (1.0 - vel * vel).sqrt() * dt;
            for k in 0..cells {
                let s = (k as f64 + 0.5) * dt;
                let t = match line.orientation {
                    Orientation::In => self.p[0] - window + s,
                    Orientation::Out => self.p[0] + s,
                };
                let z = SpacetimeVector::new(&[t, self.p[1] + vel * (t - self.p[0])])?;
                v.push(VarifoldAtom {
                    z,
                    grass: GrassmannAtom::Timelike(p.clone()),
                    weight: w,
                })?;
            }
        }
        Ok(v)
    }
}

/// Σ θᵢ Rᵢ nᵢ.
pub fn balance_residual(net: &JunctionNetwork) -> [f64; 2] {
    net.lines.iter().fold([0.0, 0.0], |acc, l| {
        let r = l.rotated_normal();
        [acc[0] + l.theta * r[0], acc[1] + l.theta * r[1]]
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionConservation {
    pub energy_before: f64,
    pub energy_after: f64,
    pub momentum_before: f64,
    pub momentum_after: f64,
    pub energy_mismatch: f64,
    pub momentum_mismatch: f64,
    pub balance_residual: [f64; 2],
    pub conserved: bool,
}

/// E and P¹ on one slice before and one after the junction, from the
/// sampled network.
pub fn junction_conservation_check(net: &JunctionNetwork) -> Result<JunctionConservation> {
    let window = 1.0;
    let v = net.sample(window, window / 8.0)?;
    let before = TimeSliceMeasures::new(&v, net.p[0] - window, window)?;
    let after = TimeSliceMeasures::new(&v, net.p[0], window)?;
    let first = |p: Vec<f64>| p.first().copied().unwrap_or(0.0);
    let (e0, e1) = (energy(&before), energy(&after));
    let (p0, p1) = (first(momentum(&before)), first(momentum(&after)));
    let scale: f64 = net.lines.iter().map(|l| l.energy()).sum::<f64>().max(1.0);
    let (de, dp) = ((e1 - e0).abs(), (p1 - p0).abs());
    Ok(JunctionConservation {
        energy_before: e0,
        energy_after: e1,
        momentum_before: p0,
        momentum_after: p1,
        energy_mismatch: de,
        momentum_mismatch: dp,
        balance_residual: balance_residual(net),
        conserved: de.max(dp) <= 1e-10 * scale,
    })
}

fn check_angle(x: f64) -> Result<()> {
    if x > FRAC_PI_4 && x < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::NoSolution(format!("angle {x} outside (π/4, π/2)")))
    }
}

/// sin x/√(sin²x − cos²x)
fn s_factor(x: f64) -> f64 {
    x.sin() / (-(2.0 * x).cos()).sqrt()
}

/// cos x/√(sin²x − cos²x)
fn c_factor(x: f64) -> f64 {
    x.cos() / (-(2.0 * x).cos()).sqrt()
}

/// Angle in (π/4, π/2) with the given value of `c_factor`.
fn angle_from_c(c: f64) -> f64 {
    (1.0 + c * c).sqrt().atan2(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitMode {
    Multiplicities { theta2: f64, theta3: f64 },
    Angles { alpha: f64, beta: f64 },
    /// Every pair of positive integers θ₂, θ₃ with θ₂ + θ₃ < θ₁.
    Integer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSolution {
    pub theta: [f64; 3],
    pub alpha: f64,
    pub beta: f64,
    pub residual: f64,
}

impl SplitSolution {
    /// Σ₁ static and incoming, Σ₂ leaving to the left at angle α from the
    /// x-axis, Σ₃ to the right at angle β; junction at the origin.
    pub fn network(&self) -> Result<JunctionNetwork> {
        split_network(self.theta, self.alpha, self.beta)
    }
}

pub fn split_network(theta: [f64; 3], alpha: f64, beta: f64) -> Result<JunctionNetwork> {
    JunctionNetwork::new(
        [0.0, 0.0],
        vec![
            HalfLine::new([-1.0, 0.0], theta[0], Orientation::In)?,
            HalfLine::new([alpha.sin(), -alpha.cos()], theta[1], Orientation::Out)?,
            HalfLine::new([beta.sin(), beta.cos()], theta[2], Orientation::Out)?,
        ],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub theta1: f64,
    pub mode: SplitMode,
    pub solutions: Vec<SplitSolution>,
    /// Real solutions for θ₁ alone form a two-parameter family; listed
    /// solutions are the ones selected by the mode.
    pub unique: bool,
}

fn finish(theta: [f64; 3], alpha: f64, beta: f64) -> Result<SplitSolution> {
    let r = balance_residual(&split_network(theta, alpha, beta)?);
    Ok(SplitSolution {
        theta,
        alpha,
        beta,
        residual: r[0].hypot(r[1]),
    })
}

/// Angles for given multiplicities: F(α) = θ₂S(α) + θ₃S(β(α)) − θ₁ with
/// θ₂C(α) = θ₃C(β), by Newton steps kept inside a shrinking bracket.
fn solve_angles(theta1: f64, theta2: f64, theta3: f64) -> Result<(f64, f64)> {
    if theta1 <= theta2 + theta3 {
        return Err(Error::NoSolution(format!(
            "θ₁ = {theta1} must exceed θ₂ + θ₃ = {}",
            theta2 + theta3
        )));
    }
    let beta_of = |a: f64| angle_from_c(theta2 * c_factor(a) / theta3);
    let f = |a: f64| theta2 * s_factor(a) + theta3 * s_factor(beta_of(a)) - theta1;
    let df = |a: f64| {
        let b = beta_of(a);
        let cube = |x: f64| (-(2.0 * x).cos()).powf(1.5);
        let (ds_a, ds_b) = (-a.cos() / cube(a), -b.cos() / cube(b));
        let (dc_a, dc_b) = (-a.sin() / cube(a), -b.sin() / cube(b));
        theta2 * ds_a + theta3 * ds_b * (theta2 * dc_a / (theta3 * dc_b))
    };
    let (mut lo, mut hi) = (FRAC_PI_4, FRAC_PI_2);
    let mut a = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fa = f(a);
        if fa == 0.0 {
            break;
        }
        // F decreases in α.
        if fa > 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let step = fa / df(a);
        let mut next = a - step;
        if !(next > lo && next < hi) || !step.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - a).abs() <= 1e-15 || hi - lo <= 1e-15 {
            a = next;
            break;
        }
        a = next;
    }
    Ok((a, beta_of(a)))
}

pub fn solve_split(theta1: f64, mode: SplitMode) -> Result<SplitReport> {
    if !(theta1.is_finite() && theta1 > 0.0) {
        return Err(Error::InvalidParameter(format!("θ₁ = {theta1}")));
    }
    let solutions = match mode {
        SplitMode::Multiplicities { theta2, theta3 } => {
            if !(theta2 > 0.0 && theta3 > 0.0) {
                return Err(Error::InvalidParameter("θ₂ and θ₃ must be positive".into()));
            }
            let (alpha, beta) = solve_angles(theta1, theta2, theta3)?;
            vec![finish([theta1, theta2, theta3], alpha, beta)?]
        }
        SplitMode::Angles { alpha, beta } => {
            check_angle(alpha)?;
            check_angle(beta)?;
            let det = s_factor(alpha) * c_factor(beta) + s_factor(beta) * c_factor(alpha);
            let theta2 = theta1 * c_factor(beta) / det;
            let theta3 = theta1 * c_factor(alpha) / det;
            vec![finish([theta1, theta2, theta3], alpha, beta)?]
        }
        SplitMode::Integer => {
            let mut out = Vec::new();
            let top = theta1.ceil() as i64;
            for t2 in 1..top {
                for t3 in 1..top {
                    let (a, b) = (t2 as f64, t3 as f64);
                    if a + b < theta1 {
                        let (alpha, beta) = solve_angles(theta1, a, b)?;
                        out.push(finish([theta1, a, b], alpha, beta)?);
                    }
                }
            }
            if out.is_empty() {
                return Err(Error::NoSolution(format!("no integer split of θ₁ = {theta1}")));
            }
            out
        }
    };
    Ok(SplitReport {
        theta1,
        mode,
        unique: !matches!(mode, SplitMode::Integer),
        solutions,
    })
}

/// Incoming timelike line of multiplicity θ₁ continued after the junction
/// by two null rays x − p¹ = ±(t − p⁰), which carry the energy and
/// momentum of the line: V∞ weights θ₁(1 ± v)/(2√(1 − v²)) per unit time.
pub fn null_limit_varifold(theta1: f64, incoming: [f64; 2], p: [f64; 2], window: f64, dt: f64) -> Result<DiscreteVarifold> {
    let line = HalfLine::new(incoming, theta1, Orientation::In)?;
    let net = JunctionNetwork::new(p, vec![line.clone()])?;
    let mut v = net.sample(window, dt)?.with_provenance(format!("null limit, θ₁ = {theta1}"));
    let cells = ((window / dt).round() as usize).max(1);
    let dt = window / cells as f64;
    let vel = line.velocity();
    let gamma = 1.0 / (1.0 - vel * vel).sqrt();
    for sign in [1.0, -1.0] {
        let q = null_projection(&[sign])?;
        let w = 0.5 * theta1 * (1.0 + sign * vel) * gamma * dt;
        for k in 0..cells {
            let s = (k as f64 + 0.5) * dt;
            v.push(VarifoldAtom {
                z: SpacetimeVector::new(&[p[0] + s, p[1] + sign * s])?,
                grass: GrassmannAtom::Null(q.clone()),
                weight: w,
            })?;
        }
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullPlaneLimit {
    pub velocities: Vec<f64>,
    pub thetas: Vec<f64>,
    pub distances: Vec<f64>,
    pub limit: DiscreteVarifold,
    pub sequence: Vec<DiscreteVarifold>,
}

/// Timelike h-planes span{(1, β e₁), e₂, …, e_h} through the origin with
/// θ = C√(1 − β²), sampled on `[0, window)` in time and `[0, 1)` in the
/// other h − 1 directions with cells of width `dt`, against the limit
/// null plane carrying V∞ = C per unit time and area.
pub fn null_plane_limit(
    h: usize,
    n: usize,
    velocities: &[f64],
    c: f64,
    window: f64,
    dt: f64,
) -> Result<NullPlaneLimit> {
    if h == 0 || h > n || n > crate::minkowski::MAX_SPATIAL_DIM {
        return Err(Error::InvalidParameter(format!("h = {h}, N = {n}")));
    }
    if !(c > 0.0 && window > 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter("limit parameters".into()));
    }
    let approaching = !velocities.is_empty()
        && velocities.iter().all(|b| b.abs() < 1.0)
        && velocities.windows(2).all(|w| w[1] > w[0]);
    if !approaching {
        return Err(Error::NoSolution("velocities do not increase towards 1".into()));
    }
    let nt = ((window / dt).round() as usize).max(1);
    let ns = ((1.0 / dt).round() as usize).max(1);
    let (dt, ds) = (window / nt as f64, 1.0 / ns as f64);
    let cells_per_slice = ns.pow(h as u32 - 1);
    let cell_area = dt * ds.powi(h as i32 - 1);
    let positions = |i: usize, flat: usize, beta: f64| -> Vec<f64> {
        let t = (i as f64 + 0.5) * dt;
        let mut z = vec![0.0; n + 1];
        z[0] = t;
        z[1] = beta * t;
        let mut rem = flat;
        for k in 2..=h {
            z[k] = ((rem % ns) as f64 + 0.5) * ds;
            rem /= ns;
        }
        z
    };
    let mut limit = DiscreteVarifold::new(h, n, format!("null {h}-plane, C = {c}"))?;
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let q = null_projection(&e1)?;
    for i in 0..nt {
        for flat in 0..cells_per_slice {
            limit.push(VarifoldAtom {
                z: SpacetimeVector::new(&positions(i, flat, 1.0))?,
                grass: GrassmannAtom::Null(q.clone()),
                weight: c * cell_area,
            })?;
        }
    }
    let mut thetas = Vec::new();
    let mut sequence = Vec::new();
    for &beta in velocities {
        let theta = c * (1.0 - beta * beta).sqrt();
        let mut tangents = vec![{
            let mut x = vec![0.0; n + 1];
            x[0] = 1.0;
            x[1] = beta;
            SpacetimeVector::new(&x)?
        }];
        for k in 2..=h {
            tangents.push(SpacetimeVector::basis(n + 1, k));
        }
        let p = crate::minkowski::projection_from_frame(&crate::minkowski::frame_from_tangent_basis(&tangents)?);
        // σ^h of a cell is √(1 − β²)·cell area.
        let w = theta * (1.0 - beta * beta).sqrt() * cell_area;
        let mut v = DiscreteVarifold::new(h, n, format!("timelike {h}-plane, β = {beta}"))?;
        for i in 0..nt {
            for flat in 0..cells_per_slice {
                v.push(VarifoldAtom {
                    z: SpacetimeVector::new(&positions(i, flat, beta))?,
                    grass: GrassmannAtom::Timelike(p.clone()),
                    weight: w,
                })?;
            }
        }
        thetas.push(theta);
        sequence.push(v);
    }
    let mut lo = vec![0.0; n + 1];
    let mut hi = vec![1.0; n + 1];
    hi[0] = window;
    hi[1] = window;
    for k in (h + 1)..=n {
        lo[k] = -1.0;
    }
    let region = SpacetimeBox::new(lo, hi)?;
    let mut factors = vec![GrassFactor::Constant(1.0)];
    for r in 0..=n.min(1) {
        for col in 0..=n.min(1) {
            factors.push(GrassFactor::Entry { row: r, col });
        }
    }
    let family = TestFunction::lattice_family(&region, &[0.5, 0.25], &factors)?;
    let distances = sequence
        .iter()
        .map(|v| test_family_distance(v, &limit, &family))
        .collect::<Result<Vec<_>>>()?;
    Ok(NullPlaneLimit {
        velocities: velocities.to_vec(),
        thetas,
        distances,
        limit,
        sequence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn paper_rotated_normals() {
        let a = (2.0 / 3f64.sqrt()).atan();
        let net = split_network([4.0, 1.0, 1.0], a, a).unwrap();
        assert_eq!(net.lines[0].rotated_normal(), [1.0, 0.0]);
        let d = (a.sin().powi(2) - a.cos().powi(2)).sqrt();
        let r2 = net.lines[1].rotated_normal();
        assert_abs_diff_eq!(r2[0], -a.sin() / d, epsilon = 1e-12);
        assert_abs_diff_eq!(r2[1].abs(), a.cos() / d, epsilon = 1e-12);
        let n2 = net.lines[1].normal();
        assert_abs_diff_eq!(n2[0], a.cos() / d, epsilon = 1e-12);
        assert_abs_diff_eq!(n2[1], -a.sin() / d, epsilon = 1e-12);
        let r = balance_residual(&net);
        assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
    }

    #[test]
    fn four_one_one_split() {
        let rep = solve_split(4.0, SplitMode::Multiplicities { theta2: 1.0, theta3: 1.0 }).unwrap();
        let s = &rep.solutions[0];
        let expected = (2.0 / 3f64.sqrt()).atan();
        assert_abs_diff_eq!(s.alpha, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(s.beta, expected, epsilon = 1e-12);
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn angles_give_linear_solution() {
        let third = std::f64::consts::FRAC_PI_3;
        let rep = solve_split(6f64.sqrt(), SplitMode::Angles { alpha: third, beta: third }).unwrap();
        assert_abs_diff_eq!(rep.solutions[0].theta[1], 1.0, epsilon = 1e-12);
        assert!(solve_split(1.0, SplitMode::Angles { alpha: 0.5, beta: 1.0 }).is_err());
        assert!(solve_split(2.0, SplitMode::Multiplicities { theta2: 1.0, theta3: 1.0 }).is_err());
    }

    #[test]
    fn conservation_matches_balance() {
        let a = (2.0 / 3f64.sqrt()).atan();
        let good = junction_conservation_check(&split_network([4.0, 1.0, 1.0], a, a).unwrap()).unwrap();
        assert!(good.conserved);
        assert_abs_diff_eq!(good.energy_before, 4.0, epsilon = 1e-12);
        let bad = junction_conservation_check(&split_network([4.0, 1.0, 2.0], a, a).unwrap()).unwrap();
        assert!(!bad.conserved);
    }

    #[test]
    fn null_limit_carries_energy() {
        let v = null_limit_varifold(3.0, [1.0, 0.0], [0.0, 0.0], 1.0, 0.125).unwrap();
        let before = TimeSliceMeasures::new(&v, -1.0, 1.0).unwrap();
        let after = TimeSliceMeasures::new(&v, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(energy(&before), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(energy(&after), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(momentum(&after)[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn spacelike_line_rejected() {
        assert!(matches!(
            HalfLine::new([0.5, 1.0], 1.0, Orientation::Out),
            Err(Error::NotTimelike(CausalKind::Spacelike))
        ));
    }

    #[test]
    fn null_plane_sequence_converges() {
        let betas: Vec<f64> = (1..=6).map(|l| 1.0 - 0.5f64.powi(l)).collect();
        let lim = null_plane_limit(1, 1, &betas, 1.0, 1.0, 0.01).unwrap();
        assert!(lim.distances.windows(2).all(|w| w[1] < w[0]));
        assert!(lim.thetas.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(
            lim.limit.atoms()[0].grass.matrix(),
            &Matrix::from_rows(vec![vec![1.0, -1.0], vec![1.0, -1.0]]).unwrap()
        );
    }
}
