use serde::{Deserialize, Serialize};

use super::{ordered_sum, DiscreteVarifold, SpacetimeBox, VarifoldAtom};
use crate::error::{Error, Result};
use crate::minkowski::{GrassmannAtom, Matrix};

/// Product of quartic bumps (1 − s²)² over every coordinate, s being the
/// offset from `center` in units of `half_widths`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    center: Vec<f64>,
    half_widths: Vec<f64>,
}

fn quartic(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let u = 1.0 - s * s;
        u * u
    }
}

fn quartic_derivative(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        -4.0 * s * (1.0 - s * s)
    }
}

/// max |d/ds (1 − s²)²|, attained at s = ±1/√3.
pub(crate) const QUARTIC_SLOPE_MAX: f64 = 1.539_600_717_839_002;

impl Bump {
    pub fn new(center: Vec<f64>, half_widths: Vec<f64>) -> Result<Self> {
        if center.len() != half_widths.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                found: half_widths.len(),
            });
        }
        if center.iter().any(|c| !c.is_finite())
            || half_widths.iter().any(|r| !(r.is_finite() && *r > 0.0))
        {
            return Err(Error::InvalidParameter("bump center or widths".into()));
        }
        Ok(Self {
            center,
            half_widths,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn support(&self) -> SpacetimeBox {
        SpacetimeBox::centered(&self.center, &self.half_widths).expect("validated bump")
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let mut v = 1.0;
        for ((x, c), r) in z.iter().zip(&self.center).zip(&self.half_widths) {
            v *= quartic((x - c) / r);
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }

    /// Value and gradient ∂_β φ.
    pub fn value_and_gradient(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.dim();
        let mut f = [0.0; 9];
        let mut df = [0.0; 9];
        for i in 0..d {
            let s = (z[i] - self.center[i]) / self.half_widths[i];
            if s.abs() >= 1.0 {
                grad[..d].iter_mut().for_each(|g| *g = 0.0);
                return 0.0;
            }
            f[i] = quartic(s);
            df[i] = quartic_derivative(s) / self.half_widths[i];
        }
        let value: f64 = f[..d].iter().product();
        for (b, g) in grad[..d].iter_mut().enumerate() {
            let mut p = df[b];
            for (i, fi) in f[..d].iter().enumerate() {
                if i != b {
                    p *= fi;
                }
            }
            *g = p;
        }
        value
    }
}

/// Grassmann factor g, evaluated on q(P) for timelike atoms and on Q for
/// null atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GrassFactor {
    Constant(f64),
    Entry { row: usize, col: usize },
    Linear { weights: Matrix, offset: f64 },
}

impl GrassFactor {
    pub fn eval(&self, m: &Matrix) -> f64 {
        match self {
            GrassFactor::Constant(c) => *c,
            GrassFactor::Entry { row, col } => m[(*row, *col)],
            GrassFactor::Linear { weights, offset } => {
                offset
                    + weights
                        .as_slice()
                        .iter()
                        .zip(m.as_slice())
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            }
        }
    }
}

/// f(z, P) = φ(z)·g(q(P))·P⁰₀ with recession function f^∞(z, Q) = φ(z)·g(Q).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub spatial: Bump,
    pub grass: GrassFactor,
}

impl TestFunction {
    pub fn new(spatial: Bump, grass: GrassFactor) -> Self {
        Self { spatial, grass }
    }

    /// f at a timelike atom, f^∞ at a null atom.
    pub fn eval(&self, atom: &VarifoldAtom) -> f64 {
        let phi = self.spatial.value(atom.z.as_slice());
        if phi == 0.0 {
            return 0.0;
        }
        match &atom.grass {
            GrassmannAtom::Timelike(p) => {
                // g(q(P))·P⁰₀ with q(P) = P/P⁰₀
                let p00 = p.time_time();
                let g = match &self.grass {
                    GrassFactor::Constant(c) => *c,
                    GrassFactor::Entry { row, col } => p.matrix()[(*row, *col)] / p00,
                    other => other.eval(&p.q_embed()),
                };
                phi * g * p00
            }
            GrassmannAtom::Null(q) => phi * self.grass.eval(q.matrix()),
        }
    }

    /// Lattice family: bumps of half-width `scale·extent/2` centred on a
    /// lattice of spacing equal to the half-width, times every factor in
    /// `factors`.
    pub fn lattice_family(
        region: &SpacetimeBox,
        scales: &[f64],
        factors: &[GrassFactor],
    ) -> Result<Vec<TestFunction>> {
        let mut out = Vec::new();
        for bump in lattice_bumps(region, scales)? {
            for g in factors {
                out.push(TestFunction::new(bump.clone(), g.clone()));
            }
        }
        Ok(out)
    }
}

/// Bumps whose supports tile `region` with overlap, at each relative scale.
pub(crate) fn lattice_bumps(region: &SpacetimeBox, scales: &[f64]) -> Result<Vec<Bump>> {
    let d = region.dim();
    if scales.is_empty() || scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidParameter("family scales must be positive".into()));
    }
    if region
        .lo()
        .iter()
        .zip(region.hi())
        .any(|(a, b)| !(a.is_finite() && b.is_finite() && b > a))
    {
        return Err(Error::InvalidParameter("family region must be bounded".into()));
    }
    let mut out = Vec::new();
    for &s in scales {
        let mut counts = Vec::with_capacity(d);
        let mut radii = Vec::with_capacity(d);
        for i in 0..d {
            let extent = region.hi()[i] - region.lo()[i];
            let r = 0.5 * s * extent;
            let k = ((extent / r).round() as usize).max(2) - 1;
            counts.push(k);
            radii.push(extent / (k + 1) as f64);
        }
        let total: usize = counts.iter().product();
        for flat in 0..total {
            let mut rem = flat;
            let mut center = Vec::with_capacity(d);
            for i in 0..d {
                let k = rem % counts[i];
                rem /= counts[i];
                center.push(region.lo()[i] + (k + 1) as f64 * radii[i]);
            }
            out.push(Bump::new(center, radii.clone())?);
        }
    }
    Ok(out)
}

/// Σ_T w·f(z, P) + Σ_N w·f^∞(z, Q).
pub fn action(v: &DiscreteVarifold, f: &TestFunction) -> f64 {
    ordered_sum(v.atoms(), |a| a.weight * f.eval(a))
}

/// max over the family of |V₁(f) − V₂(f)|.
pub fn test_family_distance(
    v1: &DiscreteVarifold,
    v2: &DiscreteVarifold,
    family: &[TestFunction],
) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if (v1.h(), v1.spatial_dim()) != (v2.h(), v2.spatial_dim()) {
        return Err(Error::DimensionMismatch {
            expected: v1.spatial_dim(),
            found: v2.spatial_dim(),
        });
    }
    Ok(family
        .iter()
        .map(|f| (action(v1, f) - action(v2, f)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::{GrassmannAtom, Matrix, SpacetimeVector, TimelikeProjection};
    use crate::varifold::tests::null_atom;
    use approx::assert_abs_diff_eq;

    fn wide() -> Bump {
        Bump::new(vec![0.0, 0.0], vec![1e6, 1e6]).unwrap()
    }

    #[test]
    fn empty_varifold_has_zero_action() {
        let v = DiscreteVarifold::new(1, 1, "e").unwrap();
        let f = TestFunction::new(wide(), GrassFactor::Constant(1.0));
        assert_eq!(action(&v, &f), 0.0);
    }

    #[test]
    fn timelike_and_null_actions() {
        let p = TimelikeProjection::from_matrix(Matrix::diagonal(&[1.0, 0.0]), 1).unwrap();
        let a = VarifoldAtom::new(
            SpacetimeVector::new(&[0.0, 0.0]).unwrap(),
            GrassmannAtom::Timelike(p),
            0.7,
        )
        .unwrap();
        let v = DiscreteVarifold::from_atoms(1, 1, "t", vec![a]).unwrap();
        let f = TestFunction::new(wide(), GrassFactor::Constant(1.0));
        assert_abs_diff_eq!(action(&v, &f), 0.7, epsilon = 1e-9);

        // φ = 2 at the atom, g(Q) = Q⁰₀.
        let phi = Bump::new(vec![0.0, 1.0], vec![1.0, 1e9]).unwrap();
        let two = TestFunction::new(phi, GrassFactor::Entry { row: 0, col: 0 });
        let v = DiscreteVarifold::from_atoms(1, 1, "n", vec![null_atom(&[0.0, 0.0], 1.0, 0.5)]).unwrap();
        let scaled = v.scaled(2.0).unwrap();
        assert_abs_diff_eq!(action(&scaled, &two), 2.0 * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn bump_gradient_matches_differences() {
        let b = Bump::new(vec![0.1, -0.2, 0.3], vec![0.5, 0.7, 0.9]).unwrap();
        let z = [0.2, 0.1, 0.0];
        let mut g = [0.0; 3];
        b.value_and_gradient(&z, &mut g);
        for i in 0..3 {
            let mut zp = z;
            let mut zm = z;
            zp[i] += 1e-6;
            zm[i] -= 1e-6;
            let fd = (b.value(&zp) - b.value(&zm)) / 2e-6;
            assert_abs_diff_eq!(fd, g[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn family_distance_requires_family() {
        let v = DiscreteVarifold::new(1, 1, "e").unwrap();
        assert!(matches!(test_family_distance(&v, &v, &[]), Err(Error::EmptyFamily)));
    }

    #[test]
    fn lattice_covers_region() {
        let region = SpacetimeBox::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let bumps = lattice_bumps(&region, &[0.5]).unwrap();
        assert_eq!(bumps.len(), 9);
        for b in &bumps {
            let s = b.support();
            assert!(s.lo()[0] >= -1e-12 && s.hi()[0] <= 1.0 + 1e-12);
        }
    }
}
