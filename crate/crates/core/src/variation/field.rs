use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::Matrix;
use crate::varifold::{Bump, SpacetimeBox};

/// A C¹ vector field on R^{1+N} with an exact Jacobian
/// `J[(α, β)] = ∂_β Y^α`.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;
    fn value(&self, z: &[f64]) -> Vec<f64>;
    fn jacobian(&self, z: &[f64]) -> Matrix;
    /// Closed box outside of which the field vanishes, if any.
    fn support(&self) -> Option<SpacetimeBox> {
        None
    }
}

/// A C¹ scalar field with exact gradient.
pub trait ScalarField: Sync {
    fn value(&self, z: &[f64]) -> f64;
    fn gradient(&self, z: &[f64]) -> Vec<f64>;
}

/// Y(z) = b(z)·(c + M z) with b a product of quartic bumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestVectorField {
    bump: Bump,
    constant: Vec<f64>,
    linear: Option<Matrix>,
}

impl TestVectorField {
    /// amplitude·b(z)·e_α
    pub fn directional(bump: Bump, direction: usize, amplitude: f64) -> Result<Self> {
        let d = bump.dim();
        if direction >= d {
            return Err(Error::InvalidParameter(format!("direction {direction} in dimension {d}")));
        }
        let mut constant = vec![0.0; d];
        constant[direction] = amplitude;
        Ok(Self {
            bump,
            constant,
            linear: None,
        })
    }

    pub fn affine(bump: Bump, constant: Vec<f64>, linear: Matrix) -> Result<Self> {
        let d = bump.dim();
        if constant.len() != d || linear.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: constant.len(),
            });
        }
        Ok(Self {
            bump,
            constant,
            linear: Some(linear),
        })
    }

    pub fn bump(&self) -> &Bump {
        &self.bump
    }

    /// Index α when the field is amplitude·b·e_α.
    pub fn direction(&self) -> Option<usize> {
        if self.linear.is_some() {
            return None;
        }
        let nz: Vec<usize> = (0..self.constant.len()).filter(|&i| self.constant[i] != 0.0).collect();
        (nz.len() == 1).then(|| nz[0])
    }

    fn amplitude_at(&self, z: &[f64]) -> Vec<f64> {
        let mut a = self.constant.clone();
        if let Some(m) = &self.linear {
            for (ai, mi) in a.iter_mut().zip(m.mul_vec(z)) {
                *ai += mi;
            }
        }
        a
    }

    /// sup|Y| + sup|dY| in max-entry norms. Exact for directional fields,
    /// sampled on a lattice over the support otherwise.
    pub fn c1_norm(&self) -> f64 {
        let d = self.dim();
        if self.linear.is_none() {
            let amp = self.constant.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let slope = self
                .bump
                .half_widths()
                .iter()
                .fold(0.0f64, |m, r| m.max(crate::varifold::QUARTIC_SLOPE_MAX / r));
            return amp * (1.0 + slope);
        }
        let per_axis: usize = if d <= 3 { 9 } else { 5 };
        let total = per_axis.pow(d as u32);
        let (c, r) = (self.bump.center(), self.bump.half_widths());
        let mut sup_y = 0.0f64;
        let mut sup_dy = 0.0f64;
        let mut z = vec![0.0; d];
        for flat in 0..total {
            let mut rem = flat;
            for i in 0..d {
                let k = rem % per_axis;
                rem /= per_axis;
                z[i] = c[i] + r[i] * (2.0 * (k as f64 + 0.5) / per_axis as f64 - 1.0);
            }
            sup_y = self.value(&z).iter().fold(sup_y, |m, x| m.max(x.abs()));
            sup_dy = sup_dy.max(self.jacobian(&z).max_abs());
        }
        sup_y + sup_dy
    }
}

impl VectorField for TestVectorField {
    fn dim(&self) -> usize {
        self.bump.dim()
    }

    fn value(&self, z: &[f64]) -> Vec<f64> {
        let b = self.bump.value(z);
        if b == 0.0 {
            return vec![0.0; self.dim()];
        }
        self.amplitude_at(z).into_iter().map(|a| a * b).collect()
    }

    fn jacobian(&self, z: &[f64]) -> Matrix {
        let d = self.dim();
        let mut grad = [0.0; 9];
        let b = self.bump.value_and_gradient(z, &mut grad);
        let mut j = Matrix::zeros(d);
        if b == 0.0 && grad[..d].iter().all(|g| *g == 0.0) {
            return j;
        }
        let a = self.amplitude_at(z);
        for alpha in 0..d {
            for beta in 0..d {
                j[(alpha, beta)] = a[alpha] * grad[beta];
            }
        }
        if let Some(m) = &self.linear {
            j.add_scaled(m, b);
        }
        j
    }

    fn support(&self) -> Option<SpacetimeBox> {
        Some(self.bump.support())
    }
}
