use serde::{Deserialize, Serialize};

use super::{ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::minkowski::{
    eta_dot, frame_from_tangent_basis, projection_from_frame, CausalKind, Matrix, SpacetimeCovector,
    SpacetimeVector, TimelikeProjection,
};

/// A parametrized timelike h-surface X: U ⊂ R^h → R^{1+N}.
pub trait SurfacePatch: Sync {
    fn h(&self) -> usize;
    fn dim(&self) -> usize;
    fn point(&self, u: &[f64]) -> Vec<f64>;
    /// ∂_i X for i < h.
    fn tangents(&self, u: &[f64]) -> Vec<Vec<f64>>;
    /// Parameter box.
    fn domain(&self) -> Vec<(f64, f64)>;
    /// Length scale used for finite-difference steps.
    fn scale(&self) -> f64 {
        1.0
    }
}

/// X(u) = origin + Σ uᵢ·directionᵢ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePatch {
    pub origin: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub extent: f64,
}

impl SurfacePatch for AffinePatch {
    fn h(&self) -> usize {
        self.directions.len()
    }

    fn dim(&self) -> usize {
        self.origin.len()
    }

    fn point(&self, u: &[f64]) -> Vec<f64> {
        let mut x = self.origin.clone();
        for (ui, d) in u.iter().zip(&self.directions) {
            for (xa, da) in x.iter_mut().zip(d) {
                *xa += ui * da;
            }
        }
        x
    }

    fn tangents(&self, _u: &[f64]) -> Vec<Vec<f64>> {
        self.directions.clone()
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(-self.extent, self.extent); self.h()]
    }
}

/// Static cylinder R × (circle of radius r) in R^{1+2}, X(t, φ) = (t, r cos φ, r sin φ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderPatch {
    pub radius: f64,
}

impl SurfacePatch for CylinderPatch {
    fn h(&self) -> usize {
        2
    }

    fn dim(&self) -> usize {
        3
    }

    fn point(&self, u: &[f64]) -> Vec<f64> {
        vec![u[0], self.radius * u[1].cos(), self.radius * u[1].sin()]
    }

    fn tangents(&self, u: &[f64]) -> Vec<Vec<f64>> {
        vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, -self.radius * u[1].sin(), self.radius * u[1].cos()],
        ]
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0), (0.0, std::f64::consts::TAU)]
    }

    fn scale(&self) -> f64 {
        self.radius
    }
}

struct Local {
    tangents: Vec<Vec<f64>>,
    inverse_metric: Vec<Vec<f64>>,
    projection: TimelikeProjection,
}

fn invert(mut a: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .ok_or(Error::DegenerateBasis)?;
        if a[p][c].abs() <= 1e-12 * scale {
            return Err(Error::DegenerateBasis);
        }
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for i in 0..n {
            if i != c {
                let f = a[i][c];
                for j in 0..n {
                    a[i][j] -= f * a[c][j];
                    inv[i][j] -= f * inv[c][j];
                }
            }
        }
    }
    Ok(inv)
}

fn local(patch: &dyn SurfacePatch, u: &[f64]) -> Result<Local> {
    let tangents = patch.tangents(u);
    let basis = tangents
        .iter()
        .map(|t| SpacetimeVector::new(t))
        .collect::<Result<Vec<_>>>()?;
    let frame = frame_from_tangent_basis(&basis).map_err(|e| match e {
        Error::NotTimelike(CausalKind::Null) => Error::NullTangent,
        other => other,
    })?;
    let metric = tangents
        .iter()
        .map(|a| tangents.iter().map(|b| eta_dot(a, b)).collect())
        .collect();
    Ok(Local {
        inverse_metric: invert(metric)?,
        projection: projection_from_frame(&frame),
        tangents,
    })
}

pub fn projection_at(patch: &dyn SurfacePatch, u: &[f64]) -> Result<TimelikeProjection> {
    Ok(local(patch, u)?.projection)
}

/// tr(P_Σ dY) at X(u).
pub fn tangential_divergence(patch: &dyn SurfacePatch, y: &dyn VectorField, u: &[f64]) -> Result<f64> {
    let p = projection_at(patch, u)?;
    Ok(p.matrix().trace_product(&y.jacobian(&patch.point(u))))
}

/// (d_τψ)_β = ∂_αψ P^α_β at X(u).
pub fn tangential_gradient(
    patch: &dyn SurfacePatch,
    psi: &dyn ScalarField,
    u: &[f64],
) -> Result<SpacetimeCovector> {
    let p = projection_at(patch, u)?;
    let g = psi.gradient(&patch.point(u));
    let d = g.len();
    let out: Vec<f64> = (0..d).map(|b| (0..d).map(|a| g[a] * p.matrix()[(a, b)]).sum()).collect();
    SpacetimeCovector::new(&out)
}

fn step(patch: &dyn SurfacePatch) -> f64 {
    1e-5 * patch.scale()
}

/// Central difference of a vector-valued map along parameter i.
fn partial<T>(
    patch: &dyn SurfacePatch,
    u: &[f64],
    i: usize,
    f: &dyn Fn(&[f64]) -> Result<T>,
    flatten: impl Fn(&T) -> Vec<f64>,
) -> Result<Vec<f64>> {
    let hstep = step(patch);
    let mut up = u.to_vec();
    let mut um = u.to_vec();
    up[i] += hstep;
    um[i] -= hstep;
    let (fp, fm) = (flatten(&f(&up)?), flatten(&f(&um)?));
    Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * hstep)).collect())
}

/// Σ g^{ik}·(ηX_k)_ρ·∂_i F^ρ_α for a matrix field F along the surface.
fn matrix_divergence(
    patch: &dyn SurfacePatch,
    u: &[f64],
    loc: &Local,
    f: &dyn Fn(&[f64]) -> Result<Matrix>,
) -> Result<Vec<f64>> {
    let h = patch.h();
    let d = patch.dim();
    let mut out = vec![0.0; d];
    for i in 0..h {
        let df = partial(patch, u, i, f, |m: &Matrix| m.as_slice().to_vec())?;
        for k in 0..h {
            let gik = loc.inverse_metric[i][k];
            if gik == 0.0 {
                continue;
            }
            let xk = &loc.tangents[k];
            for (alpha, o) in out.iter_mut().enumerate() {
                let mut s = 0.0;
                for rho in 0..d {
                    let eta = if rho == 0 { -1.0 } else { 1.0 };
                    s += eta * xk[rho] * df[rho * d + alpha];
                }
                *o += gik * s;
            }
        }
    }
    Ok(out)
}

/// div_τ P_Σ at X(u), by central differences of P_Σ.
pub fn projection_divergence(patch: &dyn SurfacePatch, u: &[f64]) -> Result<SpacetimeCovector> {
    let loc = local(patch, u)?;
    let f = |w: &[f64]| projection_at(patch, w).map(|p| p.matrix().clone());
    SpacetimeCovector::new(&matrix_divergence(patch, u, &loc, &f)?)
}

/// Normal frame at u' obtained by projecting `reference` onto the normal
/// space at u' and orthonormalizing in order, which is smooth in u'.
fn transported_frame(patch: &dyn SurfacePatch, u: &[f64], reference: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let p = projection_at(patch, u).map_err(|_| Error::FrameNotDifferentiable)?;
    let d = patch.dim();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(reference.len());
    for n in reference {
        let pn = p.matrix().mul_vec(n);
        let mut v: Vec<f64> = n.iter().zip(&pn).map(|(a, b)| a - b).collect();
        for w in &out {
            let c = eta_dot(&v, w);
            for a in 0..d {
                v[a] -= c * w[a];
            }
        }
        let l2 = eta_dot(&v, &v);
        if !(l2 > 0.5) {
            return Err(Error::FrameNotDifferentiable);
        }
        let l = l2.sqrt();
        out.push(v.into_iter().map(|x| x / l).collect());
    }
    Ok(out)
}

/// H = Σ_j (div_τ n_j)·n_j from central differences of a smooth normal frame.
pub fn mean_curvature(patch: &dyn SurfacePatch, u: &[f64]) -> Result<SpacetimeVector> {
    let loc = local(patch, u)?;
    let basis = loc
        .tangents
        .iter()
        .map(|t| SpacetimeVector::new(t))
        .collect::<Result<Vec<_>>>()?;
    let frame = frame_from_tangent_basis(&basis)?;
    let normals: Vec<Vec<f64>> = frame.vectors().iter().map(|n| n.as_slice().to_vec()).collect();
    let d = patch.dim();
    let h = patch.h();
    let mut derivs = Vec::with_capacity(h);
    for i in 0..h {
        let f = |w: &[f64]| transported_frame(patch, w, &normals);
        let dn = partial(patch, u, i, &f, |fr: &Vec<Vec<f64>>| fr.concat())?;
        if dn.iter().any(|x| !x.is_finite()) {
            return Err(Error::FrameNotDifferentiable);
        }
        derivs.push(dn);
    }
    let mut hvec = vec![0.0; d];
    for (j, n) in normals.iter().enumerate() {
        let mut div = 0.0;
        for i in 0..h {
            for k in 0..h {
                div += loc.inverse_metric[i][k] * eta_dot(&derivs[i][j * d..(j + 1) * d], &loc.tangents[k]);
            }
        }
        for a in 0..d {
            hvec[a] += div * n[a];
        }
    }
    SpacetimeVector::new(&hvec)
}

/// max |div_τ P_Σ + ηH| at X(u).
pub fn mean_curvature_defect(patch: &dyn SurfacePatch, u: &[f64]) -> Result<f64> {
    let div = projection_divergence(patch, u)?;
    let eta_h = mean_curvature(patch, u)?.lower();
    Ok(div
        .as_slice()
        .iter()
        .zip(eta_h.as_slice())
        .fold(0.0, |m, (a, b)| m.max((a + b).abs())))
}

/// Sup over an interior parameter grid with `nodes` points per axis of
/// |P̄·d_τθ + θ·div_τ P̄|, after checking Range(P̄) ⊆ T Σ.
pub fn weak_stationarity_residual(
    patch: &dyn SurfacePatch,
    p_bar: &(dyn Fn(&[f64]) -> Matrix + Sync),
    theta: &(dyn Fn(&[f64]) -> f64 + Sync),
    nodes: usize,
) -> Result<f64> {
    if nodes == 0 {
        return Err(Error::InvalidParameter("grid needs at least one node".into()));
    }
    let dom = patch.domain();
    let h = patch.h();
    let d = patch.dim();
    let total = nodes.pow(h as u32);
    let mut sup = 0.0f64;
    let mut u = vec![0.0; h];
    for flat in 0..total {
        let mut rem = flat;
        for (i, (a, b)) in dom.iter().enumerate() {
            let k = rem % nodes;
            rem /= nodes;
            u[i] = a + (b - a) * (k as f64 + 0.5) / nodes as f64;
        }
        let loc = local(patch, &u)?;
        let pb = p_bar(&u);
        let defect = loc.projection.matrix().mul(&pb).max_abs_diff(&pb);
        if defect > 1e-8 * pb.max_abs().max(1.0) {
            return Err(Error::RangeCondition(defect));
        }
        let mut grad_theta = vec![0.0; d];
        for i in 0..h {
            let dth = partial(patch, &u, i, &|w: &[f64]| Ok(theta(w)), |x: &f64| vec![*x])?[0];
            for k in 0..h {
                let c = loc.inverse_metric[i][k] * dth;
                for (a, g) in grad_theta.iter_mut().enumerate() {
                    let eta = if a == 0 { -1.0 } else { 1.0 };
                    *g += c * eta * loc.tangents[k][a];
                }
            }
        }
        let div = matrix_divergence(patch, &u, &loc, &|w: &[f64]| Ok(p_bar(w)))?;
        let th = theta(&u);
        for beta in 0..d {
            let r: f64 = (0..d).map(|a| grad_theta[a] * pb[(a, beta)]).sum::<f64>() + th * div[beta];
            sup = sup.max(r.abs());
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variation::TestVectorField;
    use crate::varifold::Bump;
    use approx::assert_abs_diff_eq;

    fn plane() -> AffinePatch {
        AffinePatch {
            origin: vec![0.0, 0.2, -0.1],
            directions: vec![vec![1.0, 0.3, 0.0], vec![0.0, 0.0, 1.0]],
            extent: 1.0,
        }
    }

    #[test]
    fn constant_field_has_zero_divergence() {
        let y = TestVectorField::directional(Bump::new(vec![0.0; 3], vec![1e6; 3]).unwrap(), 1, 1.0).unwrap();
        assert_abs_diff_eq!(tangential_divergence(&plane(), &y, &[0.1, 0.2]).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn time_axis_divergence() {
        // Y = (t·χ, 0): divergence along the axis is χ + t∂_tχ.
        let axis = AffinePatch {
            origin: vec![0.0, 0.0],
            directions: vec![vec![1.0, 0.0]],
            extent: 1.0,
        };
        let chi = Bump::new(vec![0.1, 0.0], vec![1.0, 1.0]).unwrap();
        let y = TestVectorField::affine(chi.clone(), vec![0.0, 0.0], Matrix::diagonal(&[1.0, 0.0])).unwrap();
        let t = 0.4;
        let mut g = [0.0; 2];
        let c = chi.value_and_gradient(&[t, 0.0], &mut g);
        assert_abs_diff_eq!(tangential_divergence(&axis, &y, &[t]).unwrap(), c + t * g[0], epsilon = 1e-14);
    }

    #[test]
    fn plane_and_cylinder_curvature() {
        let h = mean_curvature(&plane(), &[0.0, 0.0]).unwrap();
        assert!(h.euclidean_norm() < 1e-8);
        let r = 0.7;
        let cyl = CylinderPatch { radius: r };
        for phi in [0.0, 1.0, 2.5, 4.0] {
            let h = mean_curvature(&cyl, &[0.2, phi]).unwrap();
            assert_abs_diff_eq!(h.time(), 0.0, epsilon = 1e-8);
            assert_abs_diff_eq!(h.euclidean_norm(), 1.0 / r, epsilon = 1e-5);
            assert!(mean_curvature_defect(&cyl, &[0.2, phi]).unwrap() < 1e-6);
        }
    }

    #[test]
    fn cylinder_weak_stationarity() {
        let cyl = CylinderPatch { radius: 1.0 };
        let p_bar = |_: &[f64]| Matrix::diagonal(&[2.0, 0.0, 0.0]);
        let theta = |u: &[f64]| 2.0 + u[1].sin();
        assert!(weak_stationarity_residual(&cyl, &p_bar, &theta, 8).unwrap() < 1e-6);
        let bad = |_: &[f64]| Matrix::diagonal(&[0.0, 1.0, 0.0]);
        assert!(matches!(
            weak_stationarity_residual(&cyl, &bad, &theta, 4),
            Err(Error::RangeCondition(_))
        ));
    }

    #[test]
    fn null_tangent_is_reported() {
        let null = AffinePatch {
            origin: vec![0.0, 0.0],
            directions: vec![vec![1.0, 1.0]],
            extent: 1.0,
        };
        let y = TestVectorField::directional(Bump::new(vec![0.0; 2], vec![1.0; 2]).unwrap(), 0, 1.0).unwrap();
        assert!(matches!(tangential_divergence(&null, &y, &[0.0]), Err(Error::NullTangent)));
    }
}
