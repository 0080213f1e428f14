//! JSON exchange format. Reals are written as decimal strings with 17
//! significant digits; the reader also accepts plain JSON numbers.

use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{DiscreteVarifold, VarifoldAtom};
use crate::error::{Error, Result};
use crate::minkowski::{
    null_projection, GrassmannAtom, Matrix, SpacetimeVector, TimelikeProjection,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:.16e}", self.0))
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct RealVisitor;
        impl Visitor<'_> for RealVisitor {
            type Value = Real;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a real as a number or decimal string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                v.trim().parse::<f64>().map(Real).map_err(E::custom)
            }
        }
        d.deserialize_any(RealVisitor)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Timelike,
    Null,
}

#[derive(Serialize, Deserialize)]
struct AtomRecord {
    z: Vec<Real>,
    kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<Real>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_inf: Option<Vec<Real>>,
    weight: Real,
}

#[derive(Serialize, Deserialize)]
struct VarifoldRecord {
    h: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(default)]
    provenance: String,
    atoms: Vec<AtomRecord>,
}

fn reals(v: &[f64]) -> Vec<Real> {
    v.iter().copied().map(Real).collect()
}

fn floats(v: &[Real]) -> Vec<f64> {
    v.iter().map(|r| r.0).collect()
}

impl DiscreteVarifold {
    pub fn to_json_string(&self) -> Result<String> {
        let record = VarifoldRecord {
            h: self.h(),
            n: self.spatial_dim(),
            provenance: self.provenance().to_string(),
            atoms: self
                .atoms()
                .iter()
                .map(|a| match &a.grass {
                    GrassmannAtom::Timelike(p) => AtomRecord {
                        z: reals(a.z.as_slice()),
                        kind: Kind::Timelike,
                        matrix: Some(p.matrix().rows().iter().map(|r| reals(r)).collect()),
                        v_inf: None,
                        weight: Real(a.weight),
                    },
                    GrassmannAtom::Null(q) => AtomRecord {
                        z: reals(a.z.as_slice()),
                        kind: Kind::Null,
                        matrix: None,
                        v_inf: Some(reals(q.velocity())),
                        weight: Real(a.weight),
                    },
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&record)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let record: VarifoldRecord = serde_json::from_str(s)?;
        let mut v = DiscreteVarifold::new(record.h, record.n, record.provenance)?;
        for (i, a) in record.atoms.into_iter().enumerate() {
            let z = SpacetimeVector::new(&floats(&a.z))?;
            let grass = match a.kind {
                Kind::Timelike => {
                    let rows = a
                        .matrix
                        .ok_or_else(|| Error::Malformed(format!("atom {i}: timelike atom without matrix")))?;
                    let m = Matrix::from_rows(rows.iter().map(|r| floats(r)).collect())?;
                    GrassmannAtom::Timelike(TimelikeProjection::from_matrix(m, record.h)?)
                }
                Kind::Null => {
                    let vel = a
                        .v_inf
                        .ok_or_else(|| Error::Malformed(format!("atom {i}: null atom without v_inf")))?;
                    GrassmannAtom::Null(null_projection(&floats(&vel))?)
                }
            };
            v.push(VarifoldAtom::new(z, grass, a.weight.0)?)?;
        }
        Ok(v)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}
