use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Point, Sheet, StringSolution};
use crate::error::{Error, Result};
use crate::minkowski::{dot, GrassmannAtom, Matrix, NullProjection, SpacetimeVector, TimelikeProjection};
use crate::varifold::{DiscreteVarifold, VarifoldAtom};

/// Cells with |γ_u| at or below this value at the midpoint are null.
pub const NULL_CELL_THRESHOLD: f64 = 1e-6;

/// Component of γ_t orthogonal to γ_u.
pub fn horizontal_velocity(gt: &[f64], gu: &[f64]) -> Point {
    let c = dot(gt, gu) / dot(gu, gu);
    gt.iter().zip(gu).map(|(a, b)| a - c * b).collect()
}

/// Lorentzian projection onto span{(1, γ_t), (0, γ_u)}, from the inverse
/// induced metric; `None` unless the plane is strictly timelike.
pub fn sheet_projection(gt: &[f64], gu: &[f64]) -> Option<TimelikeProjection> {
    let (tt, tu, uu) = (dot(gt, gt), dot(gt, gu), dot(gu, gu));
    let det = (tt - 1.0) * uu - tu * tu;
    if !(uu.sqrt() > NULL_CELL_THRESHOLD && det < 0.0) {
        return None;
    }
    let inv = [[uu / det, -tu / det], [-tu / det, (tt - 1.0) / det]];
    let d = 1 + gt.len();
    let xt = |a: usize| if a == 0 { 1.0 } else { gt[a - 1] };
    let xu = |a: usize| if a == 0 { 0.0 } else { gu[a - 1] };
    let m = Matrix::from_fn(d, |a, b| {
        let eta = if b == 0 { -1.0 } else { 1.0 };
        let (ta, ua, tb, ub) = (xt(a), xu(a), eta * xt(b), eta * xu(b));
        inv[0][0] * ta * tb + inv[0][1] * ta * ub + inv[1][0] * ua * tb + inv[1][1] * ua * ub
    });
    Some(TimelikeProjection::from_matrix_unchecked(m, 2))
}

/// Density Θ⁰ = √(1 − |v|²)/|γ_u| of the sampled weight against lorentzian
/// area; `None` where the sheet is not strictly timelike.
pub fn multiplicity(gt: &[f64], gu: &[f64]) -> Option<f64> {
    sheet_projection(gt, gu)?;
    let v = horizontal_velocity(gt, gu);
    Some((1.0 - dot(&v, &v)).sqrt() / dot(gu, gu).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSampling {
    pub t0: f64,
    pub t1: f64,
    pub u0: f64,
    pub u1: f64,
    pub dt: f64,
    pub du: f64,
    pub nt: usize,
    pub nu: usize,
    pub timelike_cells: usize,
    pub null_cells: usize,
    pub varifold: DiscreteVarifold,
}

fn cell_count(extent: f64, width: f64) -> Result<usize> {
    if !(extent > 0.0 && width > 0.0 && extent.is_finite() && width.is_finite()) {
        return Err(Error::InvalidParameter(format!("sampling window {extent} with width {width}")));
    }
    let r = extent / width;
    let n = if (r - r.round()).abs() <= 1e-9 * r.max(1.0) { r.round() } else { r.ceil() };
    Ok((n as usize).max(1))
}

fn cell_atom(sheet: &dyn Sheet, t: f64, u: f64, area: f64) -> Result<VarifoldAtom> {
    let (gt, gu) = sheet.partials(t, u);
    let mut z = Vec::with_capacity(1 + gt.len());
    z.push(t);
    z.extend_from_slice(&sheet.gamma(t, u));
    let z = SpacetimeVector::new(&z)?;
    if let Some(p) = sheet_projection(&gt, &gu) {
        // Ṽ⁰ weight area/P⁰₀ = (1 − |v|²)·area, so that μ_V = area.
        let weight = area / p.time_time();
        return Ok(VarifoldAtom {
            z,
            grass: GrassmannAtom::Timelike(p),
            weight,
        });
    }
    let speed = dot(&gt, &gt).sqrt();
    if !(speed > 0.0) {
        return Err(Error::SingularPatch);
    }
    let dir: Vec<f64> = gt.iter().map(|x| x / speed).collect();
    Ok(VarifoldAtom {
        z,
        grass: GrassmannAtom::Null(NullProjection::new(&dir)?),
        weight: area,
    })
}

/// One atom per cell of a `[t0, t1) × [u0, u1)` grid, placed at Φ(midpoint).
/// Widths are shrunk so that the cells tile the window exactly.
pub fn sample_sheet(
    sheet: &dyn Sheet,
    (t0, t1): (f64, f64),
    (u0, u1): (f64, f64),
    (dt, du): (f64, f64),
    provenance: impl Into<String>,
) -> Result<SurfaceSampling> {
    let nt = cell_count(t1 - t0, dt)?;
    let nu = cell_count(u1 - u0, du)?;
    let (dt, du) = ((t1 - t0) / nt as f64, (u1 - u0) / nu as f64);
    let rows: Vec<Vec<VarifoldAtom>> = (0..nt)
        .into_par_iter()
        .map(|i| {
            let t = t0 + (i as f64 + 0.5) * dt;
            (0..nu)
                .map(|j| cell_atom(sheet, t, u0 + (j as f64 + 0.5) * du, dt * du))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let atoms: Vec<VarifoldAtom> = rows.into_iter().flatten().collect();
    let null_cells = atoms.iter().filter(|a| !a.is_timelike()).count();
    let timelike_cells = atoms.len() - null_cells;
    let varifold = DiscreteVarifold::from_atoms(2, sheet.spatial_dim(), provenance, atoms)?;
    Ok(SurfaceSampling {
        t0,
        t1,
        u0,
        u1,
        dt,
        du,
        nt,
        nu,
        timelike_cells,
        null_cells,
        varifold,
    })
}

/// Samples the world-sheet over `[t0, t1)` and one full period in u.
pub fn sample_varifold(s: &StringSolution, t0: f64, t1: f64, dt: f64, du: f64) -> Result<SurfaceSampling> {
    sample_sheet(
        s,
        (t0, t1),
        (0.0, s.period()),
        (dt, du),
        format!("{} on [{t0}, {t1}) dt={dt} du={du}", s.describe()),
    )
}
