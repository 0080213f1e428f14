mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use common::*;
use lorvar::conservation::{energy, momentum, TimeSliceMeasures};
use lorvar::junctions::{
    balance_residual, junction_conservation_check, null_limit_varifold, null_plane_limit, solve_split,
    split_network, HalfLine, JunctionNetwork, Orientation, SplitMode,
};
use lorvar::variation::{field_family, stationarity_residual, FamilySpec};
use lorvar::varifold::SpacetimeBox;
use proptest::prelude::*;

fn norm(r: [f64; 2]) -> f64 {
    r[0].hypot(r[1])
}

/// |ΣE_in − ΣE_out| + |ΣP_in − ΣP_out| from the line directions alone.
fn flux_mismatch(net: &JunctionNetwork) -> f64 {
    let (mut de, mut dp) = (0.0, 0.0);
    for l in &net.lines {
        let (e, p) = line_energy_momentum(l.extension(), l.theta());
        let sign = if l.orientation() == Orientation::In { 1.0 } else { -1.0 };
        de += sign * e;
        dp += sign * p;
    }
    de.abs() + dp.abs()
}

fn thetas() -> impl Strategy<Value = [f64; 3]> {
    (0.3f64..5.0, 0.3f64..5.0, 0.01f64..5.0).prop_map(|(a, b, extra)| [a + b + extra, a, b])
}

proptest! {
    #[test]
    fn solved_networks_balance_and_conserve(theta in thetas()) {
        let rep = solve_split(theta[0], SplitMode::Multiplicities { theta2: theta[1], theta3: theta[2] }).unwrap();
        let sol = &rep.solutions[0];
        prop_assert!(sol.alpha > FRAC_PI_4 && sol.alpha < FRAC_PI_2);
        prop_assert!(sol.beta > FRAC_PI_4 && sol.beta < FRAC_PI_2);
        prop_assert!(sol.residual <= 1e-10 * theta[0]);
        let net = sol.network().unwrap();
        let check = junction_conservation_check(&net).unwrap();
        prop_assert!(check.conserved);
        prop_assert!(check.energy_mismatch <= 1e-10 * check.energy_before);
        prop_assert!(flux_mismatch(&net) <= 1e-10 * check.energy_before);
    }

    #[test]
    fn perturbed_networks_neither_balance_nor_conserve(theta in thetas(), delta in 1e-3f64..0.1, which in 0usize..3) {
        let sol = &solve_split(theta[0], SplitMode::Multiplicities { theta2: theta[1], theta3: theta[2] }).unwrap().solutions[0];
        let (mut t, mut a, mut b) = (sol.theta, sol.alpha, sol.beta);
        match which {
            0 => t[1] *= 1.0 + delta,
            1 => a = if a + delta < FRAC_PI_2 { a + delta } else { a - delta },
            _ => b = if b - delta > FRAC_PI_4 { b - delta } else { b + delta },
        }
        let net = split_network(t, a, b).unwrap();
        let check = junction_conservation_check(&net).unwrap();
        prop_assert!(norm(balance_residual(&net)) >= 1e-6);
        prop_assert!(!check.conserved);
        prop_assert!(check.energy_mismatch.max(check.momentum_mismatch) >= 1e-6);
        prop_assert!(flux_mismatch(&net) >= 1e-6);
    }

    #[test]
    fn angles_and_multiplicities_round_trip(alpha in 0.8f64..1.55, beta in 0.8f64..1.55, theta1 in 0.5f64..10.0) {
        let fwd = &solve_split(theta1, SplitMode::Angles { alpha, beta }).unwrap().solutions[0];
        prop_assert!(fwd.residual <= 1e-10 * theta1);
        let back = &solve_split(theta1, SplitMode::Multiplicities { theta2: fwd.theta[1], theta3: fwd.theta[2] }).unwrap().solutions[0];
        prop_assert!((back.alpha - alpha).abs() <= 1e-10);
        prop_assert!((back.beta - beta).abs() <= 1e-10);
        prop_assert!(back.residual <= 1e-10 * theta1);
    }

    #[test]
    fn balance_survives_scaling_and_time_reversal(theta in thetas(), lambda in 0.01f64..100.0) {
        let net = solve_split(theta[0], SplitMode::Multiplicities { theta2: theta[1], theta3: theta[2] }).unwrap().solutions[0].network().unwrap();
        let base = norm(balance_residual(&net));
        prop_assert!(norm(balance_residual(&net.scaled(lambda).unwrap())) <= 1e-10 * lambda * theta[0]);
        let rev = net.time_reversed().unwrap();
        prop_assert!(rev.lines.iter().zip(&net.lines).all(|(r, l)| r.orientation() != l.orientation()));
        prop_assert!((norm(balance_residual(&rev)) - base).abs() <= 1e-12 * theta[0]);
        prop_assert!(junction_conservation_check(&rev).unwrap().conserved);
    }

    #[test]
    fn unbalanced_residual_scales_linearly(theta in thetas(), delta in 1e-2f64..0.3, lambda in 0.1f64..10.0) {
        let net = split_network([theta[0], theta[1] * (1.0 + delta), theta[2]], 1.0, 1.1).unwrap();
        let r = balance_residual(&net);
        let s = balance_residual(&net.scaled(lambda).unwrap());
        prop_assert!((s[0] - lambda * r[0]).abs() <= 1e-12 * lambda * theta[0]);
        prop_assert!((s[1] - lambda * r[1]).abs() <= 1e-12 * lambda * theta[0]);
    }
}

#[test]
fn four_one_one_split_angle() {
    let sol = &solve_split(4.0, SplitMode::Multiplicities { theta2: 1.0, theta3: 1.0 }).unwrap().solutions[0];
    let expected = (2.0 / 3f64.sqrt()).atan();
    assert!((sol.alpha - expected).abs() <= 1e-12);
    assert!((sol.beta - expected).abs() <= 1e-12);
    assert!(solve_split(2.0, SplitMode::Multiplicities { theta2: 1.0, theta3: 1.0 }).is_err());
}

#[test]
fn integer_mode_lists_every_split() {
    let rep = solve_split(5.0, SplitMode::Integer).unwrap();
    // θ₂ + θ₃ < 5 with θ₂, θ₃ ≥ 1
    assert_eq!(rep.solutions.len(), 6);
    assert!(!rep.unique);
    assert!(rep.solutions.iter().all(|s| s.residual <= 1e-10 * 5.0));
}

fn stationarity_levels(net: &JunctionNetwork) -> Vec<f64> {
    let region = SpacetimeBox::centered(&net.p, &[0.9, 0.9]).unwrap();
    let family = field_family(&region, &FamilySpec { scales: vec![0.5, 0.25], seed: 0, jitter: 0.0 }).unwrap();
    assert!(family.iter().any(|y| y.bump().center().iter().zip(&net.p).all(|(c, p)| (c - p).abs() <= 1e-12)));
    [0.05, 0.025, 0.0125]
        .iter()
        .map(|&dt| stationarity_residual(&net.sample(1.0, dt).unwrap(), &family).unwrap().max_abs)
        .collect()
}

#[test]
fn balanced_junctions_refine_towards_stationarity() {
    let mut net = solve_split(3.0, SplitMode::Multiplicities { theta2: 1.2, theta3: 0.7 }).unwrap().solutions[0]
        .network()
        .unwrap();
    net.p = [0.3, -0.2];
    let r = stationarity_levels(&net);
    assert!(r[1] <= 0.55 * r[0] && r[2] <= 0.55 * r[1], "{r:?}");

    let bad = split_network([3.0, 1.5, 0.7], 1.0, 1.1).unwrap();
    let r = stationarity_levels(&bad);
    assert!(r[2] >= 0.5 * r[0], "{r:?}");
}

#[test]
fn null_limit_carries_the_incoming_flux() {
    for incoming in [[1.0, 0.0], [1.0, 0.4], [2.0, -1.0]] {
        let theta1 = 2.5;
        let v = null_limit_varifold(theta1, incoming, [0.0, 0.0], 1.0, 1.0 / 64.0).unwrap();
        let before = TimeSliceMeasures::new(&v, -1.0, 1.0).unwrap();
        let after = TimeSliceMeasures::new(&v, 0.0, 1.0).unwrap();
        let (e, p) = line_energy_momentum(incoming, theta1);
        assert!((energy(&before) - e).abs() <= 1e-12 * e);
        assert!((energy(&after) - e).abs() <= 1e-12 * e);
        assert!((momentum(&after)[0] - p).abs() <= 1e-12 * e);
        assert!(after.timelike.is_empty() && after.null.len() == 128);
    }
}

#[test]
fn null_plane_sequence_approaches_its_limit() {
    let lim = null_plane_limit(2, 2, &[0.5, 0.9, 0.99, 0.999], 1.0, 1.0, 0.05).unwrap();
    assert!(lim.thetas.windows(2).all(|w| w[1] < w[0]));
    assert!(lim.distances.windows(2).all(|w| w[1] < w[0]), "{:?}", lim.distances);
    for (beta, theta) in lim.velocities.iter().zip(&lim.thetas) {
        assert!((theta - (1.0 - beta * beta).sqrt()).abs() <= 1e-12);
    }
    for v in &lim.sequence {
        assert!((v.mass() - lim.limit.mass()).abs() <= 1e-9 * lim.limit.mass());
    }
    assert!(null_plane_limit(2, 2, &[0.9, 0.5], 1.0, 1.0, 0.05).is_err());
}

#[test]
fn network_json_round_trip_and_validation() {
    let net = split_network([4.0, 1.0, 1.0], 1.0, 1.2).unwrap();
    let back = JunctionNetwork::from_json_str(&net.to_json_string().unwrap()).unwrap();
    for (a, b) in back.lines.iter().zip(&net.lines) {
        assert!((a.extension()[0] - b.extension()[0]).abs() <= 1e-15);
        assert!((a.extension()[1] - b.extension()[1]).abs() <= 1e-15);
        assert_eq!(a.orientation(), b.orientation());
    }
    assert!(HalfLine::new([1.0, 1.0], 1.0, Orientation::Out).is_err());
    assert!(HalfLine::new([0.2, 1.0], 1.0, Orientation::Out).is_err());
    assert!(HalfLine::new([1.0, 0.0], -1.0, Orientation::In).is_err());
    assert!(JunctionNetwork::from_json_str(r#"{"p":[0,0],"lines":[{"dir":[1,0],"theta":1,"orientation":"sideways"}]}"#).is_err());
}
