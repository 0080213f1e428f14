//! Lorentzian linear algebra on R^{1+N} with η = diag(−1, 1, …, 1):
//! causal classification, normal frames of timelike planes, timelike and
//! null projections, and the compactifying map q.

mod frame;
mod matrix;
mod projection;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub use frame::{frame_from_tangent_basis, NormalFrame};
pub use matrix::Matrix;
pub use projection::{
    boost_matrix, is_lorentz, lorentz_boost, null_projection, projection_from_frame, q_embed,
    q_inverse, rotation_matrix, GrassmannAtom, NullProjection, TimelikeProjection,
};

/// Relative tolerance of the causal classification.
pub const EPS_NULL: f64 = 1e-9;

/// Largest spatial dimension supported.
pub const MAX_SPATIAL_DIM: usize = 8;

pub(crate) type Components = SmallVec<[f64; 4]>;

/// A point or direction (t, x¹, …, x^N).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct SpacetimeVector(Components);

/// A covector, components with lower indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct SpacetimeCovector(Components);

fn check_components(c: &[f64]) -> Result<()> {
    if c.len() < 2 || c.len() > MAX_SPATIAL_DIM + 1 {
        return Err(Error::InvalidParameter(format!(
            "spacetime dimension {} outside 2..={}",
            c.len(),
            MAX_SPATIAL_DIM + 1
        )));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

impl SpacetimeVector {
    pub fn new(components: &[f64]) -> Result<Self> {
        check_components(components)?;
        Ok(Self(components.into()))
    }

    /// Time component t and spatial part x.
    pub fn from_time_space(t: f64, x: &[f64]) -> Result<Self> {
        let mut c = Components::with_capacity(x.len() + 1);
        c.push(t);
        c.extend_from_slice(x);
        check_components(&c)?;
        Ok(Self(c))
    }

    /// Standard basis vector e_α.
    pub(crate) fn from_components(c: Components) -> Self {
        Self(c)
    }

    pub fn basis(dim: usize, alpha: usize) -> Self {
        let mut c: Components = smallvec::smallvec![0.0; dim];
        c[alpha] = 1.0;
        Self(c)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(smallvec::smallvec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Spatial dimension N.
    pub fn spatial_dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn time(&self) -> f64 {
        self.0[0]
    }

    pub fn space(&self) -> &[f64] {
        &self.0[1..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn euclidean_norm(&self) -> f64 {
        norm(&self.0)
    }

    /// Index lowering: (ηv)_α.
    pub fn lower(&self) -> SpacetimeCovector {
        let mut c = self.0.clone();
        c[0] = -c[0];
        SpacetimeCovector(c)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| x * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl SpacetimeCovector {
    pub fn new(components: &[f64]) -> Result<Self> {
        check_components(components)?;
        Ok(Self(components.into()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Index raising.
    pub fn raise(&self) -> SpacetimeVector {
        let mut c = self.0.clone();
        c[0] = -c[0];
        SpacetimeVector(c)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

macro_rules! vec_conversions {
    ($t:ty) => {
        impl From<$t> for Vec<f64> {
            fn from(v: $t) -> Self {
                v.0.to_vec()
            }
        }
        impl TryFrom<Vec<f64>> for $t {
            type Error = Error;
            fn try_from(v: Vec<f64>) -> Result<Self> {
                <$t>::new(&v)
            }
        }
    };
}
vec_conversions!(SpacetimeVector);
vec_conversions!(SpacetimeCovector);

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// −a⁰b⁰ + Σ aᵃbᵃ on raw component slices.
pub(crate) fn eta_dot(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

/// The lorentzian scalar product (v, w).
pub fn lorentz_product(v: &SpacetimeVector, w: &SpacetimeVector) -> Result<f64> {
    if v.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            found: w.dim(),
        });
    }
    Ok(eta_dot(&v.0, &w.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalKind {
    Spacelike,
    Timelike,
    Null,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalClass {
    pub kind: CausalKind,
    /// The quadratic form (v, v).
    pub interval: f64,
}

pub fn classify(v: &SpacetimeVector) -> Result<CausalClass> {
    let e2 = dot(&v.0, &v.0);
    if e2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let interval = eta_dot(&v.0, &v.0);
    let kind = if interval < -EPS_NULL * e2 {
        CausalKind::Timelike
    } else if interval > EPS_NULL * e2 {
        CausalKind::Spacelike
    } else {
        CausalKind::Null
    };
    Ok(CausalClass { kind, interval })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> SpacetimeVector {
        SpacetimeVector::new(c).unwrap()
    }

    #[test]
    fn products() {
        assert_eq!(lorentz_product(&v(&[1.0, 0.0]), &v(&[1.0, 0.0])).unwrap(), -1.0);
        assert_eq!(lorentz_product(&v(&[1.0, 1.0]), &v(&[1.0, 1.0])).unwrap(), 0.0);
        assert_eq!(
            lorentz_product(&v(&[0.75, 1.25]), &v(&[0.75, 1.25])).unwrap(),
            1.0
        );
        assert!(lorentz_product(&v(&[1.0, 0.0]), &v(&[1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(classify(&v(&[1.0, 0.0, 0.0])).unwrap().kind, CausalKind::Timelike);
        assert_eq!(classify(&v(&[1.0, 1.0, 0.0])).unwrap().kind, CausalKind::Null);
        assert_eq!(classify(&v(&[0.0, 1.0, 0.0])).unwrap().kind, CausalKind::Spacelike);
        assert!(matches!(classify(&v(&[0.0, 0.0])), Err(Error::ZeroVector)));
    }

    #[test]
    fn invalid_vectors() {
        assert!(SpacetimeVector::new(&[1.0]).is_err());
        assert!(SpacetimeVector::new(&[1.0, f64::NAN]).is_err());
    }
}
