//! Reference computations shared by the integration tests. Everything here
//! is written from the definitions, without calling into the library's
//! algorithms, so it can serve as an oracle.

#![allow(dead_code)]

use lorvar::minkowski::{Matrix, SpacetimeVector};
use rand::Rng;

pub fn lorentz_dot(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

/// Inverse of a small dense matrix by Gauss-Jordan with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let p = a[col][col];
        assert!(p.abs() > 1e-300, "singular matrix");
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// η-orthogonal projection onto span(basis): P = X (XᵀηX)⁻¹ Xᵀη, returned
/// with rows indexed by the upper index.
pub fn projection_oracle(basis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let h = basis.len();
    let d = basis[0].len();
    let gram: Vec<Vec<f64>> = (0..h)
        .map(|i| (0..h).map(|j| lorentz_dot(&basis[i], &basis[j])).collect())
        .collect();
    let g = invert(&gram);
    let mut p = vec![vec![0.0; d]; d];
    for (a, row) in p.iter_mut().enumerate() {
        for (b, entry) in row.iter_mut().enumerate() {
            let sign = if b == 0 { -1.0 } else { 1.0 };
            let mut s = 0.0;
            for i in 0..h {
                for j in 0..h {
                    s += basis[i][a] * g[i][j] * sign * basis[j][b];
                }
            }
            *entry = s;
        }
    }
    p
}

/// −(1,v)⊗η(1,v), rows indexed by the upper index.
pub fn null_oracle(v: &[f64]) -> Vec<Vec<f64>> {
    let w: Vec<f64> = std::iter::once(1.0).chain(v.iter().copied()).collect();
    let lowered: Vec<f64> = w.iter().enumerate().map(|(b, x)| if b == 0 { -x } else { *x }).collect();
    w.iter().map(|wa| lowered.iter().map(|lb| -wa * lb).collect()).collect()
}

pub fn max_diff(m: &Matrix, reference: &[Vec<f64>]) -> f64 {
    let d = m.dim();
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            worst = worst.max((m[(a, b)] - reference[a][b]).abs());
        }
    }
    worst
}

pub fn unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if s > 0.1 && s <= 1.0 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

/// Tangent basis of a random timelike h-plane in R^{1+n}: one timelike
/// vector (1, w) with |w| ≤ `max_speed`, then h − 1 generic vectors.
pub fn random_timelike_basis(rng: &mut impl Rng, n: usize, h: usize, max_speed: f64) -> Vec<Vec<f64>> {
    let speed = rng.gen_range(0.0..max_speed);
    let dir = unit_vector(rng, n);
    let mut first = vec![1.0];
    first.extend(dir.iter().map(|x| speed * x));
    let mut basis = vec![first];
    for _ in 1..h {
        basis.push((0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    basis
}

pub fn to_vectors(basis: &[Vec<f64>]) -> Vec<SpacetimeVector> {
    basis.iter().map(|b| SpacetimeVector::new(b).unwrap()).collect()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let x = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// 2π∫₀^π |cos t|^{-1/2} dt, the kink's (P⁰₀)^{5/4} moment over half a
/// period, by Simpson after the substitution t = π/2 − w².
pub fn kink_moment_oracle() -> f64 {
    let half = simpson(
        |w| {
            if w == 0.0 {
                2.0
            } else {
                2.0 * w / (w * w).sin().sqrt()
            }
        },
        0.0,
        std::f64::consts::FRAC_PI_2.sqrt(),
        20_000,
    );
    std::f64::consts::TAU * 2.0 * half
}

/// Energy and momentum of a straight line of multiplicity θ through the
/// junction, with direction (e⁰, e¹): E = θ/√(1 − v²), P = E·v, v = e¹/e⁰.
pub fn line_energy_momentum(dir: [f64; 2], theta: f64) -> (f64, f64) {
    let v = dir[1] / dir[0];
    let e = theta / (1.0 - v * v).sqrt();
    (e, e * v)
}
