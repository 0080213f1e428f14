use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{dot, eta_dot, norm, CausalKind, Components, SpacetimeVector, EPS_NULL};
use crate::error::{Error, Result};

/// Lorentzian-orthonormal spacelike frame n_1, …, n_{N+1−h} of the
/// orthogonal complement of a timelike h-plane. Only n_1 may have a time
/// component, and it is nonnegative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFrame {
    h: usize,
    vectors: SmallVec<[SpacetimeVector; 2]>,
}

const ORTHO_TOL: f64 = 1e-10;

impl NormalFrame {
    pub fn new(h: usize, vectors: Vec<SpacetimeVector>) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::InvalidFrame("no normal vectors".into()))?;
        let dim = first.dim();
        if h == 0 || h + vectors.len() != dim {
            return Err(Error::InvalidFrame(format!(
                "{} normals for h = {h} in dimension {dim}",
                vectors.len()
            )));
        }
        for (i, ni) in vectors.iter().enumerate() {
            if ni.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: ni.dim(),
                });
            }
            let s = ni.euclidean_norm();
            if i == 0 && ni.time() < -1e-14 * s {
                return Err(Error::InvalidFrame("n_1 has negative time component".into()));
            }
            if i > 0 && ni.time().abs() > 1e-12 * s {
                return Err(Error::InvalidFrame(format!(
                    "n_{} has nonzero time component",
                    i + 1
                )));
            }
            for (j, nj) in vectors.iter().enumerate().take(i + 1) {
                let target = if i == j { 1.0 } else { 0.0 };
                let defect = (eta_dot(ni.as_slice(), nj.as_slice()) - target).abs();
                if defect > ORTHO_TOL * (s * nj.euclidean_norm()).max(1.0) {
                    return Err(Error::InvalidFrame(format!(
                        "(n_{}, n_{}) deviates from {target} by {defect:e}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            h,
            vectors: vectors.into_iter().collect(),
        })
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.h + self.vectors.len()
    }

    pub fn vectors(&self) -> &[SpacetimeVector] {
        &self.vectors
    }

    pub fn n1(&self) -> &SpacetimeVector {
        &self.vectors[0]
    }

    /// Normal velocity of the time slice, v = (n_1⁰/|n_1ₓ|²)·n_1ₓ; zero when
    /// n_1⁰ vanishes.
    pub fn horizontal_velocity(&self) -> Vec<f64> {
        let n1 = self.n1();
        let nx = n1.space();
        if n1.time() == 0.0 {
            return vec![0.0; nx.len()];
        }
        let nx2 = dot(nx, nx);
        nx.iter().map(|x| n1.time() * x / nx2).collect()
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    for x in v.iter_mut() {
        *x /= n;
    }
    n
}

fn lex_positive(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-14) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Euclidean projection of `v` off an orthonormal set, applied twice.
fn project_off(v: &mut [f64], basis: &[Components]) {
    for _ in 0..2 {
        for u in basis {
            let c = dot(v, u);
            axpy(v, -c, u);
        }
    }
}

/// Distinguished normal frame of the plane spanned by `basis`.
pub fn frame_from_tangent_basis(basis: &[SpacetimeVector]) -> Result<NormalFrame> {
    let h = basis.len();
    let first = basis.first().ok_or(Error::DegenerateBasis)?;
    let dim = first.dim();
    for b in basis {
        if b.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: b.dim(),
            });
        }
    }
    if h >= dim {
        return Err(Error::InvalidParameter(format!(
            "plane dimension {h} must be below spacetime dimension {dim}"
        )));
    }

    // The lorentzian complement of Π is the euclidean complement of ηΠ.
    let mut lowered: SmallVec<[Components; 4]> = SmallVec::new();
    for b in basis {
        let scale = b.euclidean_norm();
        let mut u: Components = b.as_slice().into();
        u[0] = -u[0];
        project_off(&mut u, &lowered);
        if norm(&u) <= 1e-12 * scale || scale == 0.0 {
            return Err(Error::DegenerateBasis);
        }
        normalize(&mut u);
        lowered.push(u);
    }
    let m = dim - h;
    let threshold = 0.5 / (dim as f64).sqrt();
    let mut complement: SmallVec<[Components; 4]> = SmallVec::new();
    for k in 0..dim {
        if complement.len() == m {
            break;
        }
        let mut e: Components = smallvec::smallvec![0.0; dim];
        e[k] = 1.0;
        project_off(&mut e, &lowered);
        project_off(&mut e, &complement);
        if norm(&e) > threshold {
            normalize(&mut e);
            complement.push(e);
        }
    }
    debug_assert_eq!(complement.len(), m);

    // On an orthonormal complement the Gram matrix of η is I − 2·c⁰c⁰ᵀ.
    let time_sq: f64 = complement.iter().map(|c| c[0] * c[0]).sum();
    let margin = 1.0 - 2.0 * time_sq;
    if margin <= EPS_NULL {
        let kind = if margin < -EPS_NULL {
            CausalKind::Spacelike
        } else {
            CausalKind::Null
        };
        return Err(Error::NotTimelike(kind));
    }

    let pivot = (0..m)
        .max_by(|&a, &b| complement[a][0].abs().total_cmp(&complement[b][0].abs()))
        .unwrap_or(0);
    let mut vectors: Vec<SpacetimeVector> = Vec::with_capacity(m);
    if complement[pivot][0].abs() <= 1e-14 {
        // e_0 ∈ Π: the complement is spatial.
        for c in complement.iter_mut() {
            c[0] = 0.0;
            normalize(c);
            lex_positive(c);
            vectors.push(SpacetimeVector::from_components(c.clone()));
        }
    } else {
        let cp = complement[pivot].clone();
        let mut spatial: SmallVec<[Components; 4]> = SmallVec::new();
        for (i, c) in complement.iter().enumerate() {
            if i == pivot {
                continue;
            }
            let mut w = c.clone();
            axpy(&mut w, -c[0] / cp[0], &cp);
            w[0] = 0.0;
            project_off(&mut w, &spatial);
            normalize(&mut w);
            lex_positive(&mut w);
            spatial.push(w);
        }
        let mut n1 = cp;
        project_off(&mut n1, &spatial);
        let q = eta_dot(&n1, &n1);
        if q <= 0.0 {
            return Err(Error::NotTimelike(CausalKind::Null));
        }
        let s = if n1[0] < 0.0 { -1.0 } else { 1.0 } / q.sqrt();
        n1.iter_mut().for_each(|x| *x *= s);
        vectors.push(SpacetimeVector::from_components(n1));
        vectors.extend(spatial.into_iter().map(SpacetimeVector::from_components));
    }
    Ok(NormalFrame {
        h,
        vectors: vectors.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(c: &[f64]) -> SpacetimeVector {
        SpacetimeVector::new(c).unwrap()
    }

    #[test]
    fn static_line() {
        let f = frame_from_tangent_basis(&[v(&[1.0, 0.0])]).unwrap();
        assert_eq!(f.n1().as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn moving_line() {
        let f = frame_from_tangent_basis(&[v(&[1.0, 0.6])]).unwrap();
        assert_abs_diff_eq!(f.n1().time(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(f.n1().space()[0], 1.25, epsilon = 1e-15);
        let vel = f.horizontal_velocity();
        assert_abs_diff_eq!(vel[0], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn static_plane_in_three_dimensions() {
        let f = frame_from_tangent_basis(&[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).unwrap();
        assert_eq!(f.n1().as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_null_and_spacelike_planes() {
        assert!(matches!(
            frame_from_tangent_basis(&[v(&[1.0, 1.0])]),
            Err(Error::NotTimelike(CausalKind::Null))
        ));
        assert!(matches!(
            frame_from_tangent_basis(&[v(&[0.0, 1.0, 0.0])]),
            Err(Error::NotTimelike(CausalKind::Spacelike))
        ));
        assert!(matches!(
            frame_from_tangent_basis(&[v(&[1.0, 0.0, 0.0]), v(&[2.0, 0.0, 0.0])]),
            Err(Error::DegenerateBasis)
        ));
    }

    #[test]
    fn frame_validation() {
        assert!(NormalFrame::new(1, vec![v(&[0.75, 1.25])]).is_ok());
        assert!(NormalFrame::new(1, vec![v(&[-0.75, 1.25])]).is_err());
        assert!(NormalFrame::new(1, vec![v(&[0.0, 2.0])]).is_err());
        assert!(NormalFrame::new(2, vec![v(&[0.0, 1.0])]).is_err());
    }
}
