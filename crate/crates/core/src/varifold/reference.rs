use serde::{Deserialize, Serialize};

use super::DiscreteVarifold;
use crate::minkowski::{dot, norm};

/// A set in spacetime with a euclidean distance query.
pub trait ReferenceSet {
    fn distance(&self, z: &[f64]) -> f64;
}

/// Finite union of closed spacetime segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentReference {
    pub segments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ReferenceSet for SegmentReference {
    fn distance(&self, z: &[f64]) -> f64 {
        self.segments
            .iter()
            .map(|(a, b)| {
                let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
                let az: Vec<f64> = z.iter().zip(a).map(|(x, y)| x - y).collect();
                let l2 = dot(&ab, &ab);
                let s = if l2 > 0.0 { (dot(&az, &ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
                let r: Vec<f64> = az.iter().zip(&ab).map(|(p, q)| p - s * q).collect();
                norm(&r)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// A parametrized patch represented by a dense sample of its points; the
/// distance is exact up to the sampling resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloudReference {
    pub points: Vec<Vec<f64>>,
}

impl PointCloudReference {
    /// Samples `map` on a uniform grid of `counts[i]` nodes per parameter
    /// range, endpoints included.
    pub fn from_patch(
        map: impl Fn(&[f64]) -> Vec<f64>,
        ranges: &[(f64, f64)],
        counts: &[usize],
    ) -> Self {
        let total: usize = counts.iter().product();
        let mut points = Vec::with_capacity(total);
        let mut params = vec![0.0; ranges.len()];
        for flat in 0..total {
            let mut rem = flat;
            for (i, ((a, b), n)) in ranges.iter().zip(counts).enumerate() {
                let k = rem % n;
                rem /= n;
                params[i] = if *n > 1 { a + (b - a) * k as f64 / (*n - 1) as f64 } else { *a };
            }
            points.push(map(&params));
        }
        Self { points }
    }
}

impl ReferenceSet for PointCloudReference {
    fn distance(&self, z: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|p| {
                p.iter()
                    .zip(z)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// μ_V mass within `delta` of the reference set, mass elsewhere, and the
/// diffuse part, which vanishes for atomic measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSplit {
    pub absolutely_continuous: f64,
    pub singular: f64,
    pub diffuse: f64,
}

pub fn radon_nikodym_split(
    v: &DiscreteVarifold,
    reference: &dyn ReferenceSet,
    delta: f64,
) -> MassSplit {
    let mut split = MassSplit {
        absolutely_continuous: 0.0,
        singular: 0.0,
        diffuse: 0.0,
    };
    for a in v.atoms() {
        if reference.distance(a.z.as_slice()) <= delta {
            split.absolutely_continuous += a.mass();
        } else {
            split.singular += a.mass();
        }
    }
    split
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varifold::tests::boosted_atom;
    use approx::assert_abs_diff_eq;

    #[test]
    fn split_by_proximity() {
        let v = DiscreteVarifold::from_atoms(
            1,
            1,
            "t",
            vec![boosted_atom(&[0.0, 0.0], 1.0), boosted_atom(&[0.0, 5.0], 1.0)],
        )
        .unwrap();
        let axis = SegmentReference {
            segments: vec![(vec![-1.0, 0.0], vec![1.0, 0.0])],
        };
        let s = radon_nikodym_split(&v, &axis, 1e-9);
        assert_abs_diff_eq!(s.absolutely_continuous, 25.0 / 16.0);
        assert_abs_diff_eq!(s.singular, 25.0 / 16.0);
        assert_eq!(s.diffuse, 0.0);
        let far = SegmentReference {
            segments: vec![(vec![9.0, 9.0], vec![10.0, 9.0])],
        };
        assert_eq!(radon_nikodym_split(&v, &far, 0.1).absolutely_continuous, 0.0);
    }

    #[test]
    fn point_cloud_distance() {
        let c = PointCloudReference::from_patch(|p| vec![p[0], 0.0], &[(0.0, 1.0)], &[11]);
        assert_abs_diff_eq!(c.distance(&[0.5, 0.3]), 0.3, epsilon = 1e-12);
    }
}
