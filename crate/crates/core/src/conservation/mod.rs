//! Time slices of a varifold and the energy E, momentum Pᵃ and angular
//! momentum Ω^{αβ} they carry.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{dot, Matrix};
use crate::strings::{horizontal_velocity, Sheet, StringSolution, NULL_CELL_THRESHOLD};
use crate::varifold::{DiscreteVarifold, VarifoldAtom};

/// Atoms with z⁰ ∈ [start, start + width), weights divided by `width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSliceMeasures {
    pub start: f64,
    pub width: f64,
    pub timelike: Vec<VarifoldAtom>,
    pub null: Vec<VarifoldAtom>,
}

impl TimeSliceMeasures {
    pub fn new(v: &DiscreteVarifold, start: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && start.is_finite()) {
            return Err(Error::InvalidParameter(format!("slice width {width}")));
        }
        let mut s = Self {
            start,
            width,
            timelike: Vec::new(),
            null: Vec::new(),
        };
        for a in v.atoms() {
            let t = a.z.time();
            if t >= start && t < start + width {
                s.push(a);
            }
        }
        Ok(s)
    }

    fn empty(start: f64, width: f64) -> Self {
        Self {
            start,
            width,
            timelike: Vec::new(),
            null: Vec::new(),
        }
    }

    fn push(&mut self, a: &VarifoldAtom) {
        let mut b = a.clone();
        b.weight /= self.width;
        if b.is_timelike() {
            self.timelike.push(b);
        } else {
            self.null.push(b);
        }
    }

    pub fn time(&self) -> f64 {
        self.start + 0.5 * self.width
    }

    fn atoms(&self) -> impl Iterator<Item = &VarifoldAtom> {
        self.timelike.iter().chain(&self.null)
    }

    /// μ_{Ṽ⁰_t} + μ_{V∞_t} total weight.
    pub fn mass(&self) -> f64 {
        self.atoms().map(|a| a.weight).sum()
    }

    pub fn null_mass(&self) -> f64 {
        self.null.iter().map(|a| a.weight).sum()
    }
}

/// Σ w·P⁰₀ over timelike atoms plus Σ w over null atoms (Q⁰₀ = 1).
pub fn energy(slice: &TimeSliceMeasures) -> f64 {
    slice.atoms().map(|a| a.weight * a.grass.matrix()[(0, 0)]).sum()
}

/// Σ w·Pᵃ₀ (resp. w·Qᵃ₀ = w·v∞ᵃ).
pub fn momentum(slice: &TimeSliceMeasures) -> Vec<f64> {
    let d = slice.atoms().next().map_or(0, |a| a.z.dim());
    let mut p = vec![0.0; d.saturating_sub(1)];
    for a in slice.atoms() {
        let m = a.grass.matrix();
        for (i, pi) in p.iter_mut().enumerate() {
            *pi += a.weight * m[(i + 1, 0)];
        }
    }
    p
}

/// Ω^{αβ} = Σ w·(x^α M^β₀ − x^β M^α₀) with x⁰ = t and M = P or Q.
pub fn angular_momentum(slice: &TimeSliceMeasures) -> Matrix {
    let d = slice.atoms().next().map_or(1, |a| a.z.dim());
    let mut omega = Matrix::zeros(d);
    for a in slice.atoms() {
        let m = a.grass.matrix();
        let x = a.z.as_slice();
        for al in 0..d {
            for be in (al + 1)..d {
                let w = a.weight * (x[al] * m[(be, 0)] - x[be] * m[(al, 0)]);
                omega[(al, be)] += w;
                omega[(be, al)] -= w;
            }
        }
    }
    omega
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationOptions {
    pub slice_width: f64,
    /// Slices within `exclusion_margin` of these times are reported but
    /// left out of the drift statistics.
    pub excluded_times: Vec<f64>,
    pub exclusion_margin: f64,
    /// Bound on |x| for atoms in the window.
    pub support_radius: Option<f64>,
}

impl ConservationOptions {
    pub fn with_width(slice_width: f64) -> Self {
        Self {
            slice_width,
            excluded_times: Vec::new(),
            exclusion_margin: 0.0,
            support_radius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceRecord {
    pub t: f64,
    pub energy: f64,
    pub momentum: Vec<f64>,
    pub angular_momentum: Matrix,
    pub mass: f64,
    pub null_mass: f64,
    pub excluded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub slice_width: f64,
    pub slices: Vec<SliceRecord>,
    /// max − min of E over included slices.
    pub energy_drift: f64,
    /// Largest max − min over the components of Pᵃ.
    pub momentum_drift: f64,
    /// Largest max − min over the entries of Ω.
    pub angular_drift: f64,
    pub mean_energy: f64,
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Slices `[t0 + k·w, t0 + (k+1)·w)` covering `[t0, t1)`.
pub fn conservation_report(
    v: &DiscreteVarifold,
    (t0, t1): (f64, f64),
    options: &ConservationOptions,
) -> Result<ConservationReport> {
    let w = options.slice_width;
    if !(w > 0.0 && t1 > t0) {
        return Err(Error::InvalidParameter("conservation window".into()));
    }
    let count = (((t1 - t0) / w) - 1e-9).ceil().max(1.0) as usize;
    let mut slices: Vec<TimeSliceMeasures> = (0..count).map(|k| TimeSliceMeasures::empty(t0 + k as f64 * w, w)).collect();
    for a in v.atoms() {
        let t = a.z.time();
        if t < t0 || t >= t1 {
            continue;
        }
        if let Some(r) = options.support_radius {
            let x = a.z.space();
            if dot(x, x).sqrt() > r {
                return Err(Error::UnboundedSupport(r));
            }
        }
        let k = (((t - t0) / w).floor() as usize).min(count - 1);
        slices[k].push(a);
    }
    let records: Vec<SliceRecord> = slices
        .iter()
        .map(|s| {
            let excluded = options.excluded_times.iter().any(|&te| {
                let gap = if te < s.start {
                    s.start - te
                } else if te > s.start + s.width {
                    te - s.start - s.width
                } else {
                    0.0
                };
                gap <= options.exclusion_margin
            });
            SliceRecord {
                t: s.time(),
                energy: energy(s),
                momentum: momentum(s),
                angular_momentum: angular_momentum(s),
                mass: s.mass(),
                null_mass: s.null_mass(),
                excluded,
            }
        })
        .collect();
    let included: Vec<&SliceRecord> = records.iter().filter(|r| !r.excluded).collect();
    let n = v.dim();
    let energy_drift = spread(included.iter().map(|r| r.energy));
    let momentum_drift = (0..n - 1)
        .map(|i| spread(included.iter().filter(|r| r.momentum.len() == n - 1).map(|r| r.momentum[i])))
        .fold(0.0, f64::max);
    let angular_drift = (0..n * n)
        .map(|k| {
            spread(
                included
                    .iter()
                    .filter(|r| r.angular_momentum.dim() == n)
                    .map(|r| r.angular_momentum.as_slice()[k]),
            )
        })
        .fold(0.0, f64::max);
    let mean_energy = if included.is_empty() {
        0.0
    } else {
        included.iter().map(|r| r.energy).sum::<f64>() / included.len() as f64
    };
    Ok(ConservationReport {
        slice_width: w,
        slices: records,
        energy_drift,
        momentum_drift,
        angular_drift,
        mean_energy,
    })
}

impl ConservationReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per slice: t, E, P_1..P_N, then Ω^{αβ} for α < β.
    pub fn to_csv_string(&self) -> Result<String> {
        let d = self.slices.first().map_or(1, |s| s.angular_momentum.dim());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string(), "E".to_string()];
        header.extend((1..d).map(|i| format!("P_{i}")));
        for a in 0..d {
            for b in (a + 1)..d {
                header.push(format!("Omega_{a}{b}"));
            }
        }
        header.push("excluded".into());
        w.write_record(&header)?;
        for s in &self.slices {
            let mut row = vec![format!("{:.16e}", s.t), format!("{:.16e}", s.energy)];
            row.extend((0..d - 1).map(|i| format!("{:.16e}", s.momentum.get(i).copied().unwrap_or(0.0))));
            for a in 0..d {
                for b in (a + 1)..d {
                    let x = if s.angular_momentum.dim() == d { s.angular_momentum[(a, b)] } else { 0.0 };
                    row.push(format!("{x:.16e}"));
                }
            }
            row.push(s.excluded.to_string());
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Malformed(e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }
}

/// E, Pᵃ and Ω at time t integrated directly over the string parameter,
/// with μ_V density one per unit parameter length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceIntegrals {
    pub energy: f64,
    pub null_energy: f64,
    pub momentum: Vec<f64>,
    pub angular_momentum: Matrix,
}

pub fn string_slice_integrals(s: &StringSolution, t: f64, nodes: usize) -> Result<SliceIntegrals> {
    if nodes == 0 {
        return Err(Error::InvalidParameter("quadrature needs nodes".into()));
    }
    let n = s.spatial_dim();
    let du = s.period() / nodes as f64;
    let mut out = SliceIntegrals {
        energy: 0.0,
        null_energy: 0.0,
        momentum: vec![0.0; n],
        angular_momentum: Matrix::zeros(n + 1),
    };
    for j in 0..nodes {
        let u = (j as f64 + 0.5) * du;
        let (gt, gu) = s.partials(t, u);
        let timelike = dot(&gu, &gu).sqrt() > NULL_CELL_THRESHOLD;
        let v: Vec<f64> = if timelike {
            horizontal_velocity(&gt, &gu).to_vec()
        } else {
            let speed = dot(&gt, &gt).sqrt();
            gt.iter().map(|x| x / speed).collect()
        };
        out.energy += du;
        if !timelike {
            out.null_energy += du;
        }
        let x = s.gamma(t, u);
        // M^α₀ / M⁰₀ = (1, v)
        let xs: Vec<f64> = std::iter::once(t).chain(x.iter().copied()).collect();
        let vs: Vec<f64> = std::iter::once(1.0).chain(v.iter().copied()).collect();
        for i in 0..n {
            out.momentum[i] += du * v[i];
        }
        for a in 0..=n {
            for b in (a + 1)..=n {
                let w = du * (xs[a] * vs[b] - xs[b] * vs[a]);
                out.angular_momentum[(a, b)] += w;
                out.angular_momentum[(b, a)] -= w;
            }
        }
    }
    Ok(out)
}

/// Kink energy 2πR at every regular time.
pub fn kink_energy(radius: f64) -> f64 {
    std::f64::consts::TAU * radius
}

/// (timelike, singular) energy of the square string of side L at time t:
/// 4L and 0 while the slice is an octagon, 8(L − |t|) and 4(2|t| − L)
/// once it is a rotated square.
pub fn square_energy_split(side: f64, t: f64) -> (f64, f64) {
    let mut s = t.rem_euclid(2.0 * side);
    if s > side {
        s = 2.0 * side - s;
    }
    if s <= 0.5 * side {
        (4.0 * side, 0.0)
    } else {
        (8.0 * (side - s), 4.0 * (2.0 * s - side))
    }
}
