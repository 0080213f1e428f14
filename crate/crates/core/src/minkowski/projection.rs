use serde::{Deserialize, Serialize};

use super::{norm, Matrix, NormalFrame};
use crate::error::{Error, Result};

/// Lorentzian orthogonal projection P onto a timelike h-plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimelikeProjection {
    matrix: Matrix,
    h: usize,
}

/// Boundary point −(1,v)⊗η(1,v) of the compactified model, attached to a
/// null plane with unit velocity v.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullProjection {
    velocity: Vec<f64>,
    matrix: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GrassmannAtom {
    Timelike(TimelikeProjection),
    Null(NullProjection),
}

fn projection_scale(m: &Matrix) -> f64 {
    let s = m.max_abs().max(1.0);
    s * s
}

impl TimelikeProjection {
    /// Wraps a matrix after checking the projection invariants up to a
    /// relative tolerance.
    pub fn from_matrix(matrix: Matrix, h: usize) -> Result<Self> {
        Self::check(&matrix, h, 1e-9)?;
        Ok(Self { matrix, h })
    }

    pub(crate) fn from_matrix_unchecked(matrix: Matrix, h: usize) -> Self {
        Self { matrix, h }
    }

    fn check(m: &Matrix, h: usize, tol: f64) -> Result<()> {
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        if h == 0 || h >= m.dim() {
            return Err(Error::InvalidProjection(format!(
                "h = {h} invalid in dimension {}",
                m.dim()
            )));
        }
        let s = projection_scale(m);
        let idem = m.mul(m).max_abs_diff(m);
        if idem > tol * s {
            return Err(Error::InvalidProjection(format!("‖P²−P‖ = {idem:e}")));
        }
        let tr = (m.trace() - h as f64).abs();
        if tr > tol * s {
            return Err(Error::InvalidProjection(format!("|tr P − h| = {tr:e}")));
        }
        let lowered = m.eta_left();
        let sym = lowered.max_abs_diff(&lowered.transpose());
        if sym > tol * s {
            return Err(Error::InvalidProjection(format!("ηP not symmetric ({sym:e})")));
        }
        if m[(0, 0)] < 1.0 - tol * s {
            return Err(Error::InvalidProjection(format!("P⁰₀ = {} < 1", m[(0, 0)])));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// P⁰₀ = 1 + (n_1⁰)² = 1/(1−|v|²).
    pub fn time_time(&self) -> f64 {
        self.matrix[(0, 0)]
    }

    /// The column Pᵃ₀, a = 1..N.
    pub fn momentum_column(&self) -> Vec<f64> {
        (1..self.dim()).map(|a| self.matrix[(a, 0)]).collect()
    }

    /// Horizontal normal velocity, v = Pᵃ₀/P⁰₀.
    pub fn horizontal_velocity(&self) -> Vec<f64> {
        let p00 = self.time_time();
        (1..self.dim()).map(|a| self.matrix[(a, 0)] / p00).collect()
    }

    pub fn q_embed(&self) -> Matrix {
        q_embed(self)
    }
}

impl NullProjection {
    pub fn new(velocity: &[f64]) -> Result<Self> {
        null_projection(velocity)
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

impl GrassmannAtom {
    pub fn matrix(&self) -> &Matrix {
        match self {
            GrassmannAtom::Timelike(p) => p.matrix(),
            GrassmannAtom::Null(q) => q.matrix(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix().dim()
    }

    pub fn is_timelike(&self) -> bool {
        matches!(self, GrassmannAtom::Timelike(_))
    }

    /// P⁰₀ for timelike atoms, Q⁰₀ = 1 for null ones.
    pub fn time_time(&self) -> f64 {
        match self {
            GrassmannAtom::Timelike(p) => p.time_time(),
            GrassmannAtom::Null(_) => 1.0,
        }
    }

    /// Point of the closed compact model: q(P) or Q.
    pub fn compact_image(&self) -> Matrix {
        match self {
            GrassmannAtom::Timelike(p) => q_embed(p),
            GrassmannAtom::Null(q) => q.matrix().clone(),
        }
    }

    pub fn horizontal_velocity(&self) -> Vec<f64> {
        match self {
            GrassmannAtom::Timelike(p) => p.horizontal_velocity(),
            GrassmannAtom::Null(q) => q.velocity().to_vec(),
        }
    }
}

/// P = Id − Σ_j n_j ⊗ ηn_j.
pub fn projection_from_frame(frame: &NormalFrame) -> TimelikeProjection {
    let d = frame.dim();
    let mut m = Matrix::identity(d);
    for n in frame.vectors() {
        let c = n.as_slice();
        for a in 0..d {
            if c[a] == 0.0 {
                continue;
            }
            m[(a, 0)] += c[a] * c[0];
            for b in 1..d {
                m[(a, b)] -= c[a] * c[b];
            }
        }
    }
    TimelikeProjection::from_matrix_unchecked(m, frame.h())
}

/// q(P) = P/P⁰₀.
pub fn q_embed(p: &TimelikeProjection) -> Matrix {
    p.matrix().scale(1.0 / p.time_time())
}

/// Inverse of q on its image. Since tr q(P) = h/P⁰₀, the factor
/// 1 + (n_1⁰)² is recovered from the trace.
pub fn q_inverse(q: &Matrix, h: usize) -> Result<TimelikeProjection> {
    if !q.is_finite() {
        return Err(Error::NonFinite);
    }
    let tr = q.trace();
    if !(tr > 0.0 && tr <= h as f64 * (1.0 + 1e-12)) {
        return Err(Error::NotInImage(format!("tr Q = {tr} outside (0, h]")));
    }
    let p = q.scale(h as f64 / tr);
    TimelikeProjection::check(&p, h, 1e-9).map_err(|e| Error::NotInImage(e.to_string()))?;
    Ok(TimelikeProjection::from_matrix_unchecked(p, h))
}

/// Q = −(1,v)⊗η(1,v) for a unit velocity v.
pub fn null_projection(velocity: &[f64]) -> Result<NullProjection> {
    if velocity.is_empty() {
        return Err(Error::InvalidParameter("empty velocity".into()));
    }
    if velocity.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let speed = norm(velocity);
    if (speed - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitVelocity(speed));
    }
    let d = velocity.len() + 1;
    let w = |i: usize| if i == 0 { 1.0 } else { velocity[i - 1] };
    let matrix = Matrix::from_fn(d, |a, b| {
        let lowered = if b == 0 { -1.0 } else { w(b) };
        -w(a) * lowered
    });
    Ok(NullProjection {
        velocity: velocity.to_vec(),
        matrix,
    })
}

/// Checks LᵀηL = η up to 1e−12 relative to the size of L.
pub fn is_lorentz(l: &Matrix) -> Result<()> {
    if !l.is_finite() {
        return Err(Error::NonFinite);
    }
    let d = l.dim();
    let eta = Matrix::diagonal(&eta_diag(d));
    let defect = l.transpose().mul(&eta.mul(l)).max_abs_diff(&eta);
    let s = l.max_abs().max(1.0);
    if defect > 1e-12 * s * s {
        return Err(Error::NotLorentz(defect));
    }
    Ok(())
}

fn eta_diag(d: usize) -> Vec<f64> {
    let mut e = vec![1.0; d];
    e[0] = -1.0;
    e
}

/// Projection onto L(Π): L P L⁻¹ with L⁻¹ = η Lᵀ η.
pub fn lorentz_boost(p: &TimelikeProjection, l: &Matrix) -> Result<TimelikeProjection> {
    if l.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: l.dim(),
        });
    }
    is_lorentz(l)?;
    let inv = l.transpose().eta_left().eta_right();
    let m = l.mul(&p.matrix).mul(&inv);
    Ok(TimelikeProjection::from_matrix_unchecked(m, p.h()))
}

/// Pure boost with spatial velocity β, |β| < 1.
pub fn boost_matrix(velocity: &[f64]) -> Result<Matrix> {
    if velocity.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let b2: f64 = velocity.iter().map(|x| x * x).sum();
    if b2 >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "boost speed {} is not below 1",
            b2.sqrt()
        )));
    }
    let d = velocity.len() + 1;
    let gamma = 1.0 / (1.0 - b2).sqrt();
    let k = if b2 > 0.0 { (gamma - 1.0) / b2 } else { 0.0 };
    Ok(Matrix::from_fn(d, |i, j| match (i, j) {
        (0, 0) => gamma,
        (0, j) => gamma * velocity[j - 1],
        (i, 0) => gamma * velocity[i - 1],
        (i, j) => (if i == j { 1.0 } else { 0.0 }) + k * velocity[i - 1] * velocity[j - 1],
    }))
}

/// Spatial rotation by `angle` in the coordinate plane (i, j), 1 ≤ i, j ≤ N.
pub fn rotation_matrix(dim: usize, i: usize, j: usize, angle: f64) -> Result<Matrix> {
    if i == 0 || j == 0 || i >= dim || j >= dim || i == j {
        return Err(Error::InvalidParameter(format!(
            "rotation plane ({i}, {j}) invalid in dimension {dim}"
        )));
    }
    let mut r = Matrix::identity(dim);
    let (s, c) = angle.sin_cos();
    r[(i, i)] = c;
    r[(j, j)] = c;
    r[(i, j)] = -s;
    r[(j, i)] = s;
    Ok(r)
}
