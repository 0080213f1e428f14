//! Discrete lorentzian h-varifolds: finite sums of weighted atoms
//! (z, P or Q, w). Timelike weights are Ṽ⁰ masses, null weights V∞ masses,
//! so that μ_V charges each timelike atom with w·P⁰₀ and each null atom
//! with w.

mod cells;
mod io;
mod reference;
mod test_function;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{GrassmannAtom, Matrix, SpacetimeVector, TimelikeProjection};

pub use cells::{barycenters, dirac_collapse_check, CellBarycenter, CellGrid};
pub use reference::{radon_nikodym_split, MassSplit, PointCloudReference, ReferenceSet, SegmentReference};
pub use test_function::{action, test_family_distance, Bump, GrassFactor, TestFunction};
pub(crate) use test_function::{lattice_bumps, QUARTIC_SLOPE_MAX};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarifoldAtom {
    pub z: SpacetimeVector,
    pub grass: GrassmannAtom,
    pub weight: f64,
}

impl VarifoldAtom {
    pub fn new(z: SpacetimeVector, grass: GrassmannAtom, weight: f64) -> Result<Self> {
        if z.dim() != grass.dim() {
            return Err(Error::DimensionMismatch {
                expected: grass.dim(),
                found: z.dim(),
            });
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidParameter(format!("atom weight {weight}")));
        }
        Ok(Self { z, grass, weight })
    }

    /// Timelike atom from a V⁰ mass, converted to the stored Ṽ⁰ weight.
    pub fn from_v0_mass(z: SpacetimeVector, p: TimelikeProjection, mass: f64) -> Result<Self> {
        let w = mass / p.time_time();
        Self::new(z, GrassmannAtom::Timelike(p), w)
    }

    /// Contribution to μ_V.
    pub fn mass(&self) -> f64 {
        self.weight * self.grass.time_time()
    }

    pub fn is_timelike(&self) -> bool {
        self.grass.is_timelike()
    }
}

/// Axis-aligned half-open box [lo, hi) in spacetime; infinite bounds allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl SpacetimeBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| a.is_nan() || b.is_nan() || a > b) {
            return Err(Error::InvalidParameter("box bounds out of order".into()));
        }
        Ok(Self { lo, hi })
    }

    /// Box [c − r, c + r).
    pub fn centered(center: &[f64], half_widths: &[f64]) -> Result<Self> {
        Self::new(
            center.iter().zip(half_widths).map(|(c, r)| c - r).collect(),
            center.iter().zip(half_widths).map(|(c, r)| c + r).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *x >= *a && *x < *b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteVarifold {
    h: usize,
    n: usize,
    atoms: Vec<VarifoldAtom>,
    provenance: String,
}

/// Sum over `items` in fixed-size chunks, combined in order, so the result
/// does not depend on the thread count.
pub(crate) fn ordered_sum<T: Sync>(items: &[T], f: impl Fn(&T) -> f64 + Sync) -> f64 {
    const CHUNK: usize = 4096;
    if items.len() <= CHUNK {
        return items.iter().map(&f).sum();
    }
    let partial: Vec<f64> = items
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(&f).sum())
        .collect();
    partial.iter().sum()
}

impl DiscreteVarifold {
    pub fn new(h: usize, n: usize, provenance: impl Into<String>) -> Result<Self> {
        if n == 0 || n > crate::minkowski::MAX_SPATIAL_DIM {
            return Err(Error::InvalidParameter(format!("spatial dimension {n}")));
        }
        if h == 0 || h > n {
            return Err(Error::InvalidParameter(format!("plane dimension {h} with N = {n}")));
        }
        Ok(Self {
            h,
            n,
            atoms: Vec::new(),
            provenance: provenance.into(),
        })
    }

    pub fn from_atoms(
        h: usize,
        n: usize,
        provenance: impl Into<String>,
        atoms: Vec<VarifoldAtom>,
    ) -> Result<Self> {
        let mut v = Self::new(h, n, provenance)?;
        v.atoms.reserve(atoms.len());
        for a in atoms {
            v.push(a)?;
        }
        Ok(v)
    }

    pub fn push(&mut self, atom: VarifoldAtom) -> Result<()> {
        if atom.z.dim() != self.n + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.n + 1,
                found: atom.z.dim(),
            });
        }
        if let GrassmannAtom::Timelike(p) = &atom.grass {
            if p.h() != self.h {
                return Err(Error::DimensionMismatch {
                    expected: self.h,
                    found: p.h(),
                });
            }
        }
        self.atoms.push(atom);
        Ok(())
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn spatial_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn atoms(&self) -> &[VarifoldAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    /// Total mass μ_V(R^{1+N}).
    pub fn mass(&self) -> f64 {
        ordered_sum(&self.atoms, VarifoldAtom::mass)
    }

    /// μ_V(region).
    pub fn mu_v(&self, region: &SpacetimeBox) -> f64 {
        ordered_sum(&self.atoms, |a| {
            if region.contains(a.z.as_slice()) {
                a.mass()
            } else {
                0.0
            }
        })
    }

    /// Partition into the timelike part V⁰ and the null part V∞.
    pub fn split(&self) -> (DiscreteVarifold, DiscreteVarifold) {
        let (t, n): (Vec<_>, Vec<_>) = self.atoms.iter().cloned().partition(|a| a.is_timelike());
        let part = |atoms, tag: &str| DiscreteVarifold {
            h: self.h,
            n: self.n,
            atoms,
            provenance: format!("{} [{tag}]", self.provenance),
        };
        (part(t, "timelike"), part(n, "null"))
    }

    /// λ·V.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("scale factor {lambda}")));
        }
        let mut out = self.clone();
        out.atoms.iter_mut().for_each(|a| a.weight *= lambda);
        Ok(out)
    }

    /// V₁ + V₂ as a concatenation of atom lists.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if (self.h, self.n) != (other.h, other.n) {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let mut out = self.clone();
        out.atoms.extend(other.atoms.iter().cloned());
        Ok(out)
    }

    /// Push-forward under an affine Lorentz map z ↦ Lz + c. Weights are
    /// unchanged; P ↦ LPL⁻¹ and null atoms are rebuilt from the mapped
    /// direction (1, v∞).
    pub fn transformed(&self, l: &Matrix, shift: &[f64]) -> Result<Self> {
        let d = self.dim();
        if l.dim() != d || shift.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: l.dim(),
            });
        }
        crate::minkowski::is_lorentz(l)?;
        let mut out = Self::new(self.h, self.n, self.provenance.clone())?;
        for a in &self.atoms {
            let mut z = l.mul_vec(a.z.as_slice());
            z.iter_mut().zip(shift).for_each(|(x, s)| *x += s);
            let z = SpacetimeVector::new(&z)?;
            let grass = match &a.grass {
                GrassmannAtom::Timelike(p) => {
                    GrassmannAtom::Timelike(crate::minkowski::lorentz_boost(p, l)?)
                }
                GrassmannAtom::Null(q) => {
                    let mut dir = vec![1.0];
                    dir.extend_from_slice(q.velocity());
                    let w = l.mul_vec(&dir);
                    let v: Vec<f64> = w[1..].iter().map(|x| x / w[0]).collect();
                    let s = crate::minkowski::norm(&v);
                    let v: Vec<f64> = v.iter().map(|x| x / s).collect();
                    GrassmannAtom::Null(crate::minkowski::null_projection(&v)?)
                }
            };
            out.atoms.push(VarifoldAtom::new(z, grass, a.weight)?);
        }
        Ok(out)
    }

    /// Smallest box containing every atom point (closed on the right).
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let first = self.atoms.first()?;
        let mut lo = first.z.as_slice().to_vec();
        let mut hi = lo.clone();
        for a in &self.atoms {
            for (i, x) in a.z.as_slice().iter().enumerate() {
                lo[i] = lo[i].min(*x);
                hi[i] = hi[i].max(*x);
            }
        }
        Some((lo, hi))
    }
}
