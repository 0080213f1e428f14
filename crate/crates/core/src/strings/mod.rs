//! Closed strings γ(t,u) = (a(u+t) + b(u−t))/2 built from periodic curves,
//! their constraints, lorentzian area, and sampling into varifolds.

mod curves;
mod sampling;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::dot;
use crate::variation::SurfacePatch;

pub use curves::{Circle, ConstantCurve, FourierUnitCurve, PeriodicCurve, Point, SplineCurve, SquareCurve};
pub use sampling::{
    horizontal_velocity, multiplicity, sample_sheet, sample_varifold, sheet_projection, SurfaceSampling,
    NULL_CELL_THRESHOLD,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Relativistic,
    Subrelativistic,
}

/// A map (t, u) ↦ γ(t, u) ∈ R^N with analytic partials.
pub trait Sheet: Sync {
    fn spatial_dim(&self) -> usize;
    fn gamma(&self, t: f64, u: f64) -> Point;
    /// (γ_t, γ_u)
    fn partials(&self, t: f64, u: f64) -> (Point, Point);
}

#[derive(Clone, Debug)]
pub struct StringSolution {
    a: Arc<dyn PeriodicCurve>,
    b: Arc<dyn PeriodicCurve>,
    flavor: Flavor,
}

/// γ(t, u) = (a(u+t) + b(u−t))/2.
pub fn dalembert(a: Arc<dyn PeriodicCurve>, b: Arc<dyn PeriodicCurve>) -> Result<StringSolution> {
    let (la, lb) = (a.period(), b.period());
    if (la - lb).abs() > 1e-12 * la.max(lb) {
        return Err(Error::PeriodMismatch(la, lb));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    for c in [&a, &b] {
        if c.max_speed() > 1.0 + 1e-9 {
            return Err(Error::SpeedViolation(c.max_speed()));
        }
    }
    let smooth_unit = |c: &Arc<dyn PeriodicCurve>| c.is_unit_speed() && c.corners().is_empty();
    let flavor = if smooth_unit(&a) && smooth_unit(&b) {
        Flavor::Relativistic
    } else {
        Flavor::Subrelativistic
    };
    Ok(StringSolution { a, b, flavor })
}

impl StringSolution {
    pub fn a(&self) -> &dyn PeriodicCurve {
        self.a.as_ref()
    }

    pub fn b(&self) -> &dyn PeriodicCurve {
        self.b.as_ref()
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn period(&self) -> f64 {
        self.a.period()
    }

    pub fn describe(&self) -> String {
        format!("dalembert[{}, {}]", self.a.describe(), self.b.describe())
    }

    /// Φ_γ(t, u) = (t, γ(t, u)).
    pub fn embed(&self, t: f64, u: f64) -> Vec<f64> {
        let mut z = Vec::with_capacity(1 + self.spatial_dim());
        z.push(t);
        z.extend_from_slice(&self.gamma(t, u));
        z
    }

    /// max |γ_tt − γ_uu| by central differences of the analytic partials.
    pub fn wave_residual(&self, t: f64, u: f64) -> f64 {
        let h = 1e-5 * self.period();
        let (tp, _) = self.partials(t + h, u);
        let (tm, _) = self.partials(t - h, u);
        let (_, up) = self.partials(t, u + h);
        let (_, um) = self.partials(t, u - h);
        (0..tp.len())
            .map(|i| ((tp[i] - tm[i]) - (up[i] - um[i])).abs() / (2.0 * h))
            .fold(0.0, f64::max)
    }

    /// Distance from u+t or u−t to the nearest corner of a or b.
    pub fn corner_distance(&self, t: f64, u: f64) -> f64 {
        let l = self.period();
        let dist = |s: f64, corners: Vec<f64>| {
            corners
                .into_iter()
                .map(|c| {
                    let d = (s - c).rem_euclid(l);
                    d.min(l - d)
                })
                .fold(f64::INFINITY, f64::min)
        };
        dist(u + t, self.a.corners()).min(dist(u - t, self.b.corners()))
    }
}

impl Sheet for StringSolution {
    fn spatial_dim(&self) -> usize {
        self.a.dim()
    }

    fn gamma(&self, t: f64, u: f64) -> Point {
        let (p, q) = (self.a.position(u + t), self.b.position(u - t));
        p.iter().zip(&q).map(|(x, y)| 0.5 * (x + y)).collect()
    }

    fn partials(&self, t: f64, u: f64) -> (Point, Point) {
        let (p, q) = (self.a.velocity(u + t), self.b.velocity(u - t));
        (
            p.iter().zip(&q).map(|(x, y)| 0.5 * (x - y)).collect(),
            p.iter().zip(&q).map(|(x, y)| 0.5 * (x + y)).collect(),
        )
    }
}

/// γ(t, u) = origin + t·velocity + u·direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatSheet {
    pub origin: Vec<f64>,
    pub velocity: Vec<f64>,
    pub direction: Vec<f64>,
}

impl Sheet for FlatSheet {
    fn spatial_dim(&self) -> usize {
        self.origin.len()
    }

    fn gamma(&self, t: f64, u: f64) -> Point {
        (0..self.origin.len())
            .map(|i| self.origin[i] + t * self.velocity[i] + u * self.direction[i])
            .collect()
    }

    fn partials(&self, _t: f64, _u: f64) -> (Point, Point) {
        (
            self.velocity.iter().copied().collect(),
            self.direction.iter().copied().collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub flavor: Flavor,
    /// max |(γ_t, γ_u)_e|
    pub orthogonality: f64,
    /// max ||γ_t|² + |γ_u|² − 1|
    pub normalization: f64,
    /// max (|γ_t|² + |γ_u|² − 1)
    pub speed_excess: f64,
    pub cells: usize,
    /// Cells crossed by a line where a' or b' jumps; excluded from the maxima.
    pub flagged_cells: usize,
}

impl ConstraintReport {
    /// Relativistic strings need both identities, subrelativistic ones the
    /// speed bound only.
    pub fn satisfied(&self, tol: f64) -> bool {
        match self.flavor {
            Flavor::Relativistic => self.orthogonality <= tol && self.normalization <= tol,
            Flavor::Subrelativistic => self.speed_excess <= tol,
        }
    }
}

/// Constraint residuals at the midpoints of an `nt × nu` grid over one
/// period in both variables.
pub fn constraint_report(s: &StringSolution, nt: usize, nu: usize) -> Result<ConstraintReport> {
    if nt == 0 || nu == 0 {
        return Err(Error::InvalidParameter("empty constraint grid".into()));
    }
    let l = s.period();
    let (dt, du) = (l / nt as f64, l / nu as f64);
    let rows: Vec<(f64, f64, f64, usize)> = (0..nt)
        .into_par_iter()
        .map(|i| {
            let t = (i as f64 + 0.5) * dt;
            let mut acc = (0.0f64, 0.0f64, f64::NEG_INFINITY, 0usize);
            for j in 0..nu {
                let u = (j as f64 + 0.5) * du;
                if s.corner_distance(t, u) <= 0.5 * (dt + du) {
                    acc.3 += 1;
                    continue;
                }
                let (gt, gu) = s.partials(t, u);
                let e = dot(&gt, &gt) + dot(&gu, &gu) - 1.0;
                acc.0 = acc.0.max(dot(&gt, &gu).abs());
                acc.1 = acc.1.max(e.abs());
                acc.2 = acc.2.max(e);
            }
            acc
        })
        .collect();
    let mut report = ConstraintReport {
        flavor: s.flavor(),
        orthogonality: 0.0,
        normalization: 0.0,
        speed_excess: f64::NEG_INFINITY,
        cells: nt * nu,
        flagged_cells: 0,
    };
    for r in rows {
        report.orthogonality = report.orthogonality.max(r.0);
        report.normalization = report.normalization.max(r.1);
        report.speed_excess = report.speed_excess.max(r.2);
        report.flagged_cells += r.3;
    }
    Ok(report)
}

/// Parameter rectangle [t0, t1) × [u0, u1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPatch {
    pub t0: f64,
    pub t1: f64,
    pub u0: f64,
    pub u1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    /// ∫∫ √(−det g)
    pub parametric: f64,
    /// ∫∫ |ν|·√(det G), G the euclidean Gram matrix
    pub normal: f64,
    /// ∫∫ √(1 − |v|²)·|γ_u|
    pub coarea: f64,
    pub max_relative_deviation: f64,
}

/// Three pointwise densities of σ² at one parameter point.
fn area_densities(gt: &[f64], gu: &[f64]) -> Option<[f64; 3]> {
    let (tt, tu, uu) = (dot(gt, gt), dot(gt, gu), dot(gu, gu));
    if uu.sqrt() <= NULL_CELL_THRESHOLD {
        return None;
    }
    // g = [[|γ_t|² − 1, tu], [tu, uu]] for X_t = (1, γ_t), X_u = (0, γ_u)
    let minus_det_g = (1.0 - tt) * uu + tu * tu;
    // G = [[1 + tt, tu], [tu, uu]]
    let det_gram = (1.0 + tt) * uu - tu * tu;
    // Normal part of e0 is along n1; ν = η n1/|η n1|_e.
    let m: Vec<f64> = {
        // P e0 = −g^{tt} X_t − g^{tu} X_u, with g^{tt} = uu/det, g^{tu} = −tu/det
        let det = -minus_det_g;
        let (gtt, gtu) = (uu / det, -tu / det);
        let mut pe0: Vec<f64> = Vec::with_capacity(1 + gt.len());
        pe0.push(-gtt);
        for k in 0..gt.len() {
            pe0.push(-gtt * gt[k] - gtu * gu[k]);
        }
        let mut e0 = vec![0.0; 1 + gt.len()];
        e0[0] = 1.0;
        e0.iter().zip(&pe0).map(|(a, b)| a - b).collect()
    };
    let m_e2 = dot(&m, &m);
    let nu_norm = if m_e2.sqrt() <= 1e-12 {
        1.0
    } else {
        ((-m[0] * m[0] + dot(&m[1..], &m[1..])) / m_e2).max(0.0).sqrt()
    };
    let v2 = tt - tu * tu / uu;
    if minus_det_g <= 0.0 || v2 >= 1.0 {
        return None;
    }
    Some([
        minus_det_g.sqrt(),
        nu_norm * det_gram.sqrt(),
        (1.0 - v2).sqrt() * uu.sqrt(),
    ])
}

/// σ² of Φ(patch) by three independent midpoint quadratures on an
/// `nt × nu` grid.
pub fn area_three_ways(sheet: &dyn Sheet, patch: ParamPatch, nt: usize, nu: usize) -> Result<AreaReport> {
    if nt == 0 || nu == 0 || !(patch.t1 > patch.t0 && patch.u1 > patch.u0) {
        return Err(Error::InvalidParameter("area patch".into()));
    }
    let (dt, du) = ((patch.t1 - patch.t0) / nt as f64, (patch.u1 - patch.u0) / nu as f64);
    let rows: Vec<Option<[f64; 3]>> = (0..nt)
        .into_par_iter()
        .map(|i| {
            let t = patch.t0 + (i as f64 + 0.5) * dt;
            let mut acc = [0.0; 3];
            for j in 0..nu {
                let u = patch.u0 + (j as f64 + 0.5) * du;
                let (gt, gu) = sheet.partials(t, u);
                let d = area_densities(&gt, &gu)?;
                for k in 0..3 {
                    acc[k] += d[k];
                }
            }
            Some(acc)
        })
        .collect();
    let mut total = [0.0; 3];
    for r in rows {
        let r = r.ok_or(Error::SingularPatch)?;
        for k in 0..3 {
            total[k] += r[k];
        }
    }
    let [parametric, normal, coarea] = total.map(|x| x * dt * du);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    Ok(AreaReport {
        parametric,
        normal,
        coarea,
        max_relative_deviation: rel(parametric, normal).max(rel(parametric, coarea)).max(rel(normal, coarea)),
    })
}

/// World-sheet of a string over a parameter patch, as a surface in R^{1+N}.
pub struct WorldSheet<'a> {
    pub string: &'a StringSolution,
    pub patch: ParamPatch,
}

impl SurfacePatch for WorldSheet<'_> {
    fn h(&self) -> usize {
        2
    }

    fn dim(&self) -> usize {
        1 + self.string.spatial_dim()
    }

    fn point(&self, u: &[f64]) -> Vec<f64> {
        self.string.embed(u[0], u[1])
    }

    fn tangents(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let (gt, gu) = self.string.partials(u[0], u[1]);
        let mut xt = vec![1.0];
        xt.extend_from_slice(&gt);
        let mut xu = vec![0.0];
        xu.extend_from_slice(&gu);
        vec![xt, xu]
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(self.patch.t0, self.patch.t1), (self.patch.u0, self.patch.u1)]
    }

    fn scale(&self) -> f64 {
        self.string.period()
    }
}

/// γ = R(cos(u/R), sin(u/R))·cos(t/R), period 2πR.
pub fn builtin_kink(radius: f64) -> Result<StringSolution> {
    let c: Arc<dyn PeriodicCurve> = Arc::new(Circle::new(radius)?);
    dalembert(c.clone(), c)
}

/// γ = a(u+t)/2.
pub fn builtin_cylinder(a: Arc<dyn PeriodicCurve>) -> Result<StringSolution> {
    if !a.is_unit_speed() {
        return Err(Error::InvalidParameter("cylinder needs a unit-speed curve".into()));
    }
    let b: Arc<dyn PeriodicCurve> = Arc::new(ConstantCurve::new(vec![0.0; a.dim()], a.period())?);
    dalembert(a, b)
}

/// a = b = counterclockwise arclength parametrization of ∂[−L/2, L/2]².
pub fn builtin_square(side: f64) -> Result<StringSolution> {
    let c: Arc<dyn PeriodicCurve> = Arc::new(SquareCurve::new(side)?);
    dalembert(c.clone(), c)
}

pub const RANDOM_STRING_ATTEMPTS: usize = 64;

/// Relativistic string whose curves have random angle series of
/// `modes` sine modes, re-drawn until both close.
pub fn random_relativistic_string(seed: u64, period: f64, modes: usize) -> Result<StringSolution> {
    if modes == 0 {
        return Err(Error::InvalidParameter("mode count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Result<FourierUnitCurve> {
        for _ in 0..RANDOM_STRING_ATTEMPTS {
            let offset = rng.gen_range(0.0..std::f64::consts::TAU);
            let coeffs: Vec<f64> = (1..=modes).map(|k| rng.gen_range(-1.0..1.0) / k as f64).collect();
            match FourierUnitCurve::new(period, offset, coeffs) {
                Ok(c) => return Ok(c),
                Err(Error::ClosureFailed(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::ClosureFailed(RANDOM_STRING_ATTEMPTS))
    };
    let a = draw(&mut rng)?;
    let b = draw(&mut rng)?;
    dalembert(Arc::new(a), Arc::new(b))
}

/// Built-in string by name: `kink` (parameter R), `square` (L),
/// `cylinder` (radius of the generating circle).
pub fn builtin(name: &str, parameter: f64) -> Result<StringSolution> {
    match name {
        "kink" => builtin_kink(parameter),
        "square" => builtin_square(parameter),
        "cylinder" => builtin_cylinder(Arc::new(Circle::new(parameter)?)),
        other => Err(Error::InvalidParameter(format!("unknown builtin string '{other}'"))),
    }
}
