//! Sequences of varifolds with singular limits: null zig-zags collapsing
//! onto the time axis, concentric kinks shrinking to a line, and a lattice
//! of small kinks spreading over the unit square.

use std::f64::consts::{PI, SQRT_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{null_projection, GrassmannAtom, Matrix, SpacetimeVector};
use crate::strings::{builtin_kink, sample_varifold};
use crate::variation::{field_family, stationarity_residual, FamilySpec};
use crate::varifold::{
    barycenters, dirac_collapse_check, test_family_distance, CellGrid, DiscreteVarifold, GrassFactor,
    SpacetimeBox, TestFunction, VarifoldAtom,
};

/// Exponent k in ∫(P⁰₀)^k dṼ⁰. On a world-sheet Ṽ⁰ = (1 − |v|²)dt du, so
/// k = 5/4 matches the H¹-slice integral of (1 − |v|²)^{−p/2} for p = 3/2.
pub const KINK_MOMENT_EXPONENT: f64 = 1.25;

fn check_levels(ns: &[usize]) -> Result<()> {
    if ns.is_empty() || ns.contains(&0) || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("n values must be positive and increasing".into()));
    }
    Ok(())
}

/// x = |n t − ⌊n t⌋ − 1/2|/n on `[0, 1)`, null atoms of weight √2·dt at
/// the midpoints of `cells_per_segment` cells on each straight piece.
pub fn zigzag_varifold(n: usize, cells_per_segment: usize) -> Result<DiscreteVarifold> {
    if n == 0 || cells_per_segment == 0 {
        return Err(Error::InvalidParameter("zig-zag resolution".into()));
    }
    let cells = 2 * n * cells_per_segment;
    let dt = 1.0 / cells as f64;
    let nf = n as f64;
    let up = null_projection(&[1.0])?;
    let down = null_projection(&[-1.0])?;
    let mut v = DiscreteVarifold::new(1, 1, format!("null zig-zag n = {n}"))?;
    for k in 0..cells {
        let t = (k as f64 + 0.5) * dt;
        let s = (nf * t).fract();
        let q = if s > 0.5 { up.clone() } else { down.clone() };
        v.push(VarifoldAtom {
            z: SpacetimeVector::new(&[t, (s - 0.5).abs() / nf])?,
            grass: GrassmannAtom::Null(q),
            weight: SQRT_2 * dt,
        })?;
    }
    Ok(v)
}

/// √2 H¹ on the time axis with the fiber split evenly between the two
/// null directions.
pub fn zigzag_limit(cells: usize) -> Result<DiscreteVarifold> {
    let dt = 1.0 / cells as f64;
    let mut v = DiscreteVarifold::new(1, 1, "zig-zag limit")?;
    for k in 0..cells {
        let z = SpacetimeVector::new(&[(k as f64 + 0.5) * dt, 0.0])?;
        for sign in [1.0, -1.0] {
            v.push(VarifoldAtom {
                z: z.clone(),
                grass: GrassmannAtom::Null(null_projection(&[sign])?),
                weight: SQRT_2 * dt / 2.0,
            })?;
        }
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZigzagLevel {
    pub n: usize,
    /// Mean of μ_V(cell)/width over the time cells.
    pub mass_density: f64,
    pub max_density_error: f64,
    /// max over cells of ‖Q̄ − diag(1, −1)‖_max.
    pub q_bar_error: f64,
    pub cells: usize,
    pub collapsed_cells: usize,
    pub limit_distance: f64,
    pub stationarity_max_abs: f64,
}

pub fn converge_zigzag(
    ns: &[usize],
    cell_width: f64,
    cells_per_segment: usize,
    scales: &[f64],
) -> Result<Vec<ZigzagLevel>> {
    check_levels(ns)?;
    if !(cell_width > 0.0 && cell_width <= 1.0) {
        return Err(Error::InvalidParameter(format!("cell width {cell_width}")));
    }
    let grid = CellGrid::new(vec![0.0, -0.5], vec![cell_width, 1.0])?;
    let target = Matrix::diagonal(&[1.0, -1.0]);
    let region = SpacetimeBox::new(vec![0.0, -0.5], vec![1.0, 0.5])?;
    let factors = [
        GrassFactor::Constant(1.0),
        GrassFactor::Entry { row: 0, col: 0 },
        GrassFactor::Entry { row: 0, col: 1 },
        GrassFactor::Entry { row: 1, col: 0 },
        GrassFactor::Entry { row: 1, col: 1 },
    ];
    let tests = TestFunction::lattice_family(&region, scales, &factors)?;
    let fields = field_family(
        &SpacetimeBox::new(vec![0.05, -0.5], vec![0.95, 0.5])?,
        &FamilySpec {
            scales: scales.to_vec(),
            ..FamilySpec::default()
        },
    )?;
    ns.iter()
        .map(|&n| {
            let v = zigzag_varifold(n, cells_per_segment)?;
            let limit = zigzag_limit(2 * n * cells_per_segment)?;
            let cells = barycenters(&v, &grid)?;
            let mut collapsed = 0;
            let (mut sum, mut worst, mut q_err) = (0.0, 0.0f64, 0.0f64);
            for c in &cells {
                let atoms: Vec<&VarifoldAtom> = v
                    .atoms()
                    .iter()
                    .filter(|a| grid.cell_of(a.z.as_slice()) == c.cell)
                    .collect();
                if dirac_collapse_check(c, &atoms, 1e-9) {
                    collapsed += 1;
                }
                let density = c.mass / cell_width;
                sum += density;
                worst = worst.max((density - SQRT_2).abs());
                q_err = q_err.max(c.q_bar.max_abs_diff(&target));
            }
            Ok(ZigzagLevel {
                n,
                mass_density: sum / cells.len() as f64,
                max_density_error: worst,
                q_bar_error: q_err,
                cells: cells.len(),
                collapsed_cells: collapsed,
                limit_distance: test_family_distance(&v, &limit, &tests)?,
                stationarity_max_abs: stationarity_residual(&v, &fields)?.max_abs,
            })
        })
        .collect()
}

/// n times the kink of radius 1/n on `[0, π)`, with `half_period_cells`
/// (even) time cells per half period of the small kink so that singular
/// times fall on cell edges.
pub fn kink_superposition(n: usize, half_period_cells: usize, u_cells: usize) -> Result<DiscreteVarifold> {
    if n == 0 || half_period_cells == 0 || half_period_cells % 2 == 1 || u_cells == 0 {
        return Err(Error::InvalidParameter("kink superposition resolution".into()));
    }
    let r = 1.0 / n as f64;
    let dt = PI * r / half_period_cells as f64;
    let s = builtin_kink(r)?;
    let sampled = sample_varifold(&s, 0.0, PI, dt, TAU * r / u_cells as f64)?;
    Ok(sampled
        .varifold
        .scaled(n as f64)?
        .with_provenance(format!("{n} superposed kinks of radius 1/{n}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinkLevel {
    pub n: usize,
    /// μ_V of the tube |x| ≤ radius over `[0, π)`, per unit time.
    pub tube_mass: f64,
    /// ∫(P⁰₀)^{5/4} dṼ⁰ over `[0, π)`.
    pub moment: f64,
    pub support_radius: f64,
    pub null_atoms: usize,
}

pub fn converge_kinks(ns: &[usize], half_period_cells: usize, u_cells: usize, tube_radius: f64) -> Result<Vec<KinkLevel>> {
    check_levels(ns)?;
    ns.iter()
        .map(|&n| {
            let v = kink_superposition(n, half_period_cells, u_cells)?;
            let mut tube = 0.0;
            let mut moment = 0.0;
            let mut radius = 0.0f64;
            let mut null_atoms = 0;
            for a in v.atoms() {
                let x = a.z.space();
                let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                radius = radius.max(r);
                if r <= tube_radius {
                    tube += a.mass();
                }
                match &a.grass {
                    GrassmannAtom::Timelike(p) => moment += a.weight * p.time_time().powf(KINK_MOMENT_EXPONENT),
                    GrassmannAtom::Null(_) => null_atoms += 1,
                }
            }
            Ok(KinkLevel {
                n,
                tube_mass: tube / PI,
                moment,
                support_radius: radius,
                null_atoms,
            })
        })
        .collect()
}

/// Kinks of radius 1/n² centred at (i/n, j/n), 0 ≤ i, j < n, over one
/// period 2π/n² of the small kink.
pub fn diffuse_kinks(n: usize, cells: usize) -> Result<DiscreteVarifold> {
    if n == 0 || cells == 0 {
        return Err(Error::InvalidParameter("diffuse kink resolution".into()));
    }
    let r = 1.0 / (n * n) as f64;
    let period = TAU * r;
    let s = builtin_kink(r)?;
    let one = sample_varifold(&s, 0.0, period, period / cells as f64, period / cells as f64)?.varifold;
    let atoms: Vec<VarifoldAtom> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let shift = [i as f64 / n as f64, j as f64 / n as f64];
            one.atoms()
                .iter()
                .map(|a| {
                    let z = a.z.as_slice();
                    Ok(VarifoldAtom {
                        z: SpacetimeVector::new(&[z[0], z[1] + shift[0], z[2] + shift[1]])?,
                        grass: a.grass.clone(),
                        weight: a.weight,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    DiscreteVarifold::from_atoms(2, 2, format!("{} kinks of radius 1/{}", n * n, n * n), atoms)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffuseLevel {
    pub n: usize,
    /// μ_V per unit time of the whole configuration.
    pub energy: f64,
    /// max over cells of [0, 1]² of |mass density/2π − 1|.
    pub max_deviation: f64,
    pub cell_masses: Vec<f64>,
}

pub fn converge_diffuse(ns: &[usize], cell_width: f64, cells: usize) -> Result<Vec<DiffuseLevel>> {
    check_levels(ns)?;
    let per_axis = (1.0 / cell_width).round() as usize;
    if !(cell_width > 0.0) || ((per_axis as f64) * cell_width - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("cell width {cell_width} must divide 1")));
    }
    ns.iter()
        .map(|&n| {
            let v = diffuse_kinks(n, cells)?;
            let period = TAU / (n * n) as f64;
            let mut masses = vec![0.0; per_axis * per_axis];
            let mut total = 0.0;
            for a in v.atoms() {
                let m = a.mass();
                total += m;
                let x = a.z.space();
                let (i, j) = ((x[0] / cell_width).floor(), (x[1] / cell_width).floor());
                if (0.0..per_axis as f64).contains(&i) && (0.0..per_axis as f64).contains(&j) {
                    masses[i as usize * per_axis + j as usize] += m / period;
                }
            }
            let uniform = TAU * cell_width * cell_width;
            let max_deviation = masses.iter().map(|m| (m / uniform - 1.0).abs()).fold(0.0, f64::max);
            Ok(DiffuseLevel {
                n,
                energy: total / period,
                max_deviation,
                cell_masses: masses,
            })
        })
        .collect()
}
