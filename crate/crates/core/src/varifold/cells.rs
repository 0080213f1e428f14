use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DiscreteVarifold, VarifoldAtom};
use crate::error::{Error, Result};
use crate::minkowski::{GrassmannAtom, Matrix};

/// Uniform axis-aligned boxes anchored at `origin`. An infinite width leaves
/// that coordinate unbinned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    origin: Vec<f64>,
    widths: Vec<f64>,
}

impl CellGrid {
    pub fn new(origin: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        if origin.len() != widths.len() {
            return Err(Error::DimensionMismatch {
                expected: origin.len(),
                found: widths.len(),
            });
        }
        if widths.is_empty() || widths.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter("cell widths must be positive".into()));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { origin, widths })
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn cell_of(&self, z: &[f64]) -> Vec<i64> {
        z.iter()
            .zip(self.origin.iter().zip(&self.widths))
            .map(|(x, (o, w))| {
                if w.is_finite() {
                    ((x - o) / w).floor() as i64
                } else {
                    0
                }
            })
            .collect()
    }

    /// Lower corner of a cell; unbinned coordinates report −∞.
    pub fn cell_origin(&self, cell: &[i64]) -> Vec<f64> {
        cell.iter()
            .zip(self.origin.iter().zip(&self.widths))
            .map(|(k, (o, w))| if w.is_finite() { o + *k as f64 * w } else { f64::NEG_INFINITY })
            .collect()
    }
}

/// Fiber barycenters of one cell. `p_bar` averages timelike projections with
/// their Ṽ⁰ weights, `q_bar` averages null matrices with their V∞ weights;
/// an empty part is reported as the zero matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellBarycenter {
    pub cell: Vec<i64>,
    pub p_bar: Matrix,
    pub q_bar: Matrix,
    pub timelike_weight: f64,
    pub null_weight: f64,
    /// μ_V of the cell.
    pub mass: f64,
    pub atom_count: usize,
}

struct Accumulator {
    p: Matrix,
    q: Matrix,
    wt: f64,
    wn: f64,
    mass: f64,
    count: usize,
}

pub fn barycenters(v: &DiscreteVarifold, grid: &CellGrid) -> Result<Vec<CellBarycenter>> {
    if grid.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            found: grid.dim(),
        });
    }
    let d = v.dim();
    let mut cells: BTreeMap<Vec<i64>, Accumulator> = BTreeMap::new();
    for a in v.atoms() {
        let acc = cells.entry(grid.cell_of(a.z.as_slice())).or_insert_with(|| Accumulator {
            p: Matrix::zeros(d),
            q: Matrix::zeros(d),
            wt: 0.0,
            wn: 0.0,
            mass: 0.0,
            count: 0,
        });
        acc.count += 1;
        acc.mass += a.mass();
        match &a.grass {
            GrassmannAtom::Timelike(p) => {
                acc.p.add_scaled(p.matrix(), a.weight);
                acc.wt += a.weight;
            }
            GrassmannAtom::Null(q) => {
                acc.q.add_scaled(q.matrix(), a.weight);
                acc.wn += a.weight;
            }
        }
    }
    Ok(cells
        .into_iter()
        .map(|(cell, acc)| CellBarycenter {
            cell,
            p_bar: if acc.wt > 0.0 { acc.p.scale(1.0 / acc.wt) } else { acc.p },
            q_bar: if acc.wn > 0.0 { acc.q.scale(1.0 / acc.wn) } else { acc.q },
            timelike_weight: acc.wt,
            null_weight: acc.wn,
            mass: acc.mass,
            atom_count: acc.count,
        })
        .collect())
}

/// Whether the fiber measure of the cell is a single Dirac mass. The
/// timelike part collapses iff P̄ is idempotent; the null part collapses
/// iff Q̄ is nilpotent, since (Σλᵢ Qᵢ)²⁰₀ = Σλᵢλⱼ(1 − vᵢ·vⱼ) vanishes only
/// when all velocities agree. Every part carrying mass must collapse.
pub fn dirac_collapse_check(cell: &CellBarycenter, atoms: &[&VarifoldAtom], tol: f64) -> bool {
    if cell.timelike_weight <= 0.0 && cell.null_weight <= 0.0 {
        return false;
    }
    let mut collapsed = true;
    if cell.timelike_weight > 0.0 {
        let p = &cell.p_bar;
        let s = p.max_abs().max(1.0);
        collapsed &= p.mul(p).max_abs_diff(p) <= tol * s * s;
    }
    if cell.null_weight > 0.0 {
        let q = &cell.q_bar;
        collapsed &= q.mul(q).max_abs() <= tol;
    }
    if collapsed {
        debug_assert!(atoms.iter().all(|a| {
            let bar = if a.is_timelike() { &cell.p_bar } else { &cell.q_bar };
            a.grass.matrix().max_abs_diff(bar) <= tol.sqrt() * bar.max_abs().max(1.0)
        }));
    }
    collapsed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::{Matrix, SpacetimeVector, TimelikeProjection};
    use crate::varifold::tests::{boosted_atom, null_atom};
    use approx::assert_abs_diff_eq;

    fn mirrored_atom(z: &[f64], w: f64) -> VarifoldAtom {
        let p = TimelikeProjection::from_matrix(
            Matrix::from_rows(vec![
                vec![25.0 / 16.0, 15.0 / 16.0],
                vec![-15.0 / 16.0, -9.0 / 16.0],
            ])
            .unwrap(),
            1,
        )
        .unwrap();
        VarifoldAtom::new(SpacetimeVector::new(z).unwrap(), GrassmannAtom::Timelike(p), w).unwrap()
    }

    fn grid() -> CellGrid {
        CellGrid::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn single_atom_barycenter() {
        let a = boosted_atom(&[0.5, 0.5], 2.0);
        let v = DiscreteVarifold::from_atoms(1, 1, "t", vec![a.clone()]).unwrap();
        let b = barycenters(&v, &grid()).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(&b[0].p_bar, a.grass.matrix());
        assert!(dirac_collapse_check(&b[0], &[&a], 1e-10));
    }

    #[test]
    fn oscillating_cell() {
        let (a, m) = (boosted_atom(&[0.5, 0.5], 1.0), mirrored_atom(&[0.4, 0.4], 1.0));
        let v = DiscreteVarifold::from_atoms(1, 1, "t", vec![a.clone(), m.clone()]).unwrap();
        let b = &barycenters(&v, &grid()).unwrap()[0];
        let expected = Matrix::diagonal(&[25.0 / 16.0, -9.0 / 16.0]);
        assert_abs_diff_eq!(b.p_bar.max_abs_diff(&expected), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.p_bar.trace(), 1.0, epsilon = 1e-15);
        assert!(!dirac_collapse_check(b, &[&a, &m], 1e-10));

        let v = DiscreteVarifold::from_atoms(1, 1, "t", vec![a.clone(), a.clone()]).unwrap();
        let b = &barycenters(&v, &grid()).unwrap()[0];
        assert!(dirac_collapse_check(b, &[&a, &a], 1e-10));
    }

    #[test]
    fn null_barycenter() {
        let (p, m) = (null_atom(&[0.5, 0.5], 1.0, 1.0), null_atom(&[0.5, 0.5], -1.0, 1.0));
        let v = DiscreteVarifold::from_atoms(1, 1, "t", vec![p.clone(), m.clone()]).unwrap();
        let b = &barycenters(&v, &grid()).unwrap()[0];
        assert_eq!(b.q_bar, Matrix::diagonal(&[1.0, -1.0]));
        assert!(!dirac_collapse_check(b, &[&p, &m], 1e-10));
        let v = DiscreteVarifold::from_atoms(1, 1, "t", vec![p.clone()]).unwrap();
        let b = &barycenters(&v, &grid()).unwrap()[0];
        assert!(dirac_collapse_check(b, &[&p], 1e-10));
    }

    #[test]
    fn cells_are_sorted_and_separate() {
        let v = DiscreteVarifold::from_atoms(
            1,
            1,
            "t",
            vec![boosted_atom(&[1.5, 0.5], 1.0), boosted_atom(&[0.5, 0.5], 1.0)],
        )
        .unwrap();
        let b = barycenters(&v, &grid()).unwrap();
        assert_eq!(b.iter().map(|c| c.cell.clone()).collect::<Vec<_>>(), vec![vec![0, 0], vec![1, 0]]);
    }
}
