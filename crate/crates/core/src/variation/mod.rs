//! First variation δV(Y) = V(tr(P dY)), stationarity residuals over
//! families of bump fields, and tangential calculus on analytic surfaces.

mod field;
mod surface;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::varifold::{lattice_bumps, ordered_sum, Bump, DiscreteVarifold, SpacetimeBox, VarifoldAtom};

pub use field::{ScalarField, TestVectorField, VectorField};
pub use surface::{
    mean_curvature, mean_curvature_defect, projection_at, projection_divergence, tangential_divergence,
    tangential_gradient, weak_stationarity_residual, AffinePatch, CylinderPatch, SurfacePatch,
};

impl ScalarField for Bump {
    fn value(&self, z: &[f64]) -> f64 {
        Bump::value(self, z)
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.value_and_gradient(z, &mut g);
        g
    }
}

fn atom_term(a: &VarifoldAtom, y: &dyn VectorField) -> f64 {
    a.weight * a.grass.matrix().trace_product(&y.jacobian(a.z.as_slice()))
}

/// Σ w·tr(P dY(z)) over timelike atoms plus Σ w·tr(Q dY(z)) over null atoms.
pub fn first_variation(v: &DiscreteVarifold, y: &dyn VectorField) -> Result<f64> {
    if y.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            found: y.dim(),
        });
    }
    Ok(match y.support() {
        Some(b) => ordered_sum(v.atoms(), |a| {
            if b.contains(a.z.as_slice()) {
                atom_term(a, y)
            } else {
                0.0
            }
        }),
        None => ordered_sum(v.atoms(), |a| atom_term(a, y)),
    })
}

/// Parameters of a lattice family of directional bump fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    /// Bump diameters relative to the region extent.
    pub scales: Vec<f64>,
    pub seed: u64,
    /// Random shift of each centre, as a fraction of its half-width.
    pub jitter: f64,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self {
            scales: vec![0.5, 0.25, 0.125],
            seed: 0,
            jitter: 0.0,
        }
    }
}

/// Unit-amplitude bump fields in every coordinate direction, supported
/// inside `region`.
pub fn field_family(region: &SpacetimeBox, spec: &FamilySpec) -> Result<Vec<TestVectorField>> {
    if !(0.0..1.0).contains(&spec.jitter) {
        return Err(Error::InvalidParameter(format!("jitter {}", spec.jitter)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = region.dim();
    let mut out = Vec::new();
    for bump in lattice_bumps(region, &spec.scales)? {
        let bump = if spec.jitter > 0.0 {
            let r: Vec<f64> = bump.half_widths().iter().map(|r| r * (1.0 - spec.jitter)).collect();
            let c: Vec<f64> = bump
                .center()
                .iter()
                .zip(bump.half_widths())
                .map(|(c, w)| c + spec.jitter * w * rng.gen_range(-1.0..1.0))
                .collect();
            Bump::new(c, r)?
        } else {
            bump
        };
        for alpha in 0..d {
            out.push(TestVectorField::directional(bump.clone(), alpha, 1.0)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldResidual {
    pub center: Vec<f64>,
    /// Largest half-width of the bump.
    pub scale: f64,
    pub direction: Option<usize>,
    pub delta_v: f64,
    pub c1_norm: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub family_size: usize,
    pub max_abs: f64,
    pub max_normalized: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub fields: Vec<FieldResidual>,
}

impl VariationReport {
    pub fn is_stationary(&self, tau: f64) -> bool {
        self.max_normalized <= tau
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let d = self.fields.first().map_or(0, |f| f.center.len());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (0..d).map(|i| format!("center_{i}")).collect();
        header.extend(["scale", "direction", "delta_v", "normalized"].map(String::from));
        w.write_record(&header)?;
        for f in &self.fields {
            let mut row: Vec<String> = f.center.iter().map(|c| format!("{c:.16e}")).collect();
            row.push(format!("{:.16e}", f.scale));
            row.push(f.direction.map_or_else(|| "affine".to_string(), |a| a.to_string()));
            row.push(format!("{:.16e}", f.delta_v));
            row.push(format!("{:.16e}", f.normalized));
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

/// Atoms sorted by time so that each field only visits its time slab.
struct TimeIndex<'a> {
    atoms: Vec<&'a VarifoldAtom>,
    times: Vec<f64>,
}

impl<'a> TimeIndex<'a> {
    fn new(v: &'a DiscreteVarifold) -> Self {
        let mut atoms: Vec<&VarifoldAtom> = v.atoms().iter().collect();
        atoms.sort_by(|a, b| a.z.time().total_cmp(&b.z.time()));
        let times = atoms.iter().map(|a| a.z.time()).collect();
        Self { atoms, times }
    }

    fn delta_v(&self, y: &TestVectorField) -> f64 {
        let b = y.bump().support();
        let start = self.times.partition_point(|t| *t < b.lo()[0]);
        let end = self.times.partition_point(|t| *t <= b.hi()[0]);
        self.atoms[start..end]
            .iter()
            .filter(|a| b.contains(a.z.as_slice()))
            .map(|a| atom_term(a, y))
            .sum()
    }
}

pub fn stationarity_residual(v: &DiscreteVarifold, family: &[TestVectorField]) -> Result<VariationReport> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if let Some(y) = family.iter().find(|y| y.dim() != v.dim()) {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            found: y.dim(),
        });
    }
    let index = TimeIndex::new(v);
    let fields: Vec<FieldResidual> = family
        .par_iter()
        .map(|y| {
            let delta_v = index.delta_v(y);
            let c1_norm = y.c1_norm();
            FieldResidual {
                center: y.bump().center().to_vec(),
                scale: y.bump().half_widths().iter().fold(0.0, |m: f64, r| m.max(*r)),
                direction: y.direction(),
                delta_v,
                c1_norm,
                normalized: if c1_norm > 0.0 { delta_v.abs() / c1_norm } else { 0.0 },
            }
        })
        .collect();
    Ok(VariationReport {
        family_size: fields.len(),
        max_abs: fields.iter().fold(0.0, |m, f| m.max(f.delta_v.abs())),
        max_normalized: fields.iter().fold(0.0, |m, f| m.max(f.normalized)),
        seed: None,
        fields,
    })
}
