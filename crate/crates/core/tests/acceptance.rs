//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits 0 unless `LORVAR_ACCEPTANCE_STRICT=1` is set, in which case any
//! FAIL makes the process exit 1.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2, TAU};
use std::time::Instant;

use common::*;
use lorvar::conservation::{conservation_report, ConservationOptions};
use lorvar::experiments::{converge_diffuse, converge_kinks, run, zigzag_varifold, ExperimentConfig, ExperimentReport};
use lorvar::junctions::{balance_residual, junction_conservation_check, solve_split, split_network, JunctionNetwork, SplitMode};
use lorvar::minkowski::{
    frame_from_tangent_basis, projection_from_frame, q_embed, Matrix, NormalFrame, SpacetimeVector,
};
use lorvar::strings::{area_three_ways, builtin, builtin_kink, random_relativistic_string, sample_varifold, ParamPatch};
use lorvar::variation::{weak_stationarity_residual, CylinderPatch};
use lorvar::varifold::{barycenters, dirac_collapse_check, CellGrid, VarifoldAtom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

fn projection_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let (mut idem, mut trace, mut sym) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=3);
        let h = rng.gen_range(1..=n);
        let basis = random_timelike_basis(&mut rng, n, h, 0.99);
        let p = projection_from_frame(&frame_from_tangent_basis(&to_vectors(&basis)).unwrap());
        let m = p.matrix();
        idem = idem.max(m.mul(m).max_abs_diff(m));
        trace = trace.max((m.trace() - h as f64).abs());
        let eta_p = m.eta_left();
        sym = sym.max(eta_p.max_abs_diff(&eta_p.transpose()));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        idem <= 1e-12 && trace <= 1e-12 && sym <= 1e-12 && secs < 1.0,
        format!("|P²−P| {idem:.1e}, |trP−h| {trace:.1e}, |ηP−(ηP)ᵀ| {sym:.1e}, {secs:.3} s"),
    )
}

fn boundary_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ok = true;
    let (mut worst_scaled, mut speed_gap) = (0.0f64, 0.0);
    for n in 1..=3 {
        let e = unit_vector(&mut rng, n);
        let oracle = null_oracle(&e);
        for k in 1..=20 {
            let tau = 2f64.powi(k);
            let spatial = (1.0 + tau * tau).sqrt();
            let mut comps = vec![tau];
            comps.extend(e.iter().map(|x| spatial * x));
            let frame = NormalFrame::new(n, vec![SpacetimeVector::new(&comps).unwrap()]).unwrap();
            let err = max_diff(&q_embed(&projection_from_frame(&frame)), &oracle);
            worst_scaled = worst_scaled.max(err * 4f64.powi(k));
            ok &= err <= 10.0 * 4f64.powi(-k);
            if k == 20 {
                let v = frame.horizontal_velocity();
                let gap = (v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs();
                speed_gap = f64::max(speed_gap, gap);
                ok &= gap <= 1e-9;
            }
        }
    }
    Outcome::new(ok, format!("max err·4^k {worst_scaled:.3}, ||v|−1| at k=20 {speed_gap:.1e}"))
}

fn area_oracle() -> Outcome {
    let kink = builtin_kink(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = Instant::now();
    let (mut pairwise, mut analytic) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let t0 = rng.gen_range(-1.2..0.2);
        let t1 = t0 + rng.gen_range(0.1..1.0);
        let u0 = rng.gen_range(0.0..TAU);
        let u1 = u0 + rng.gen_range(0.1..TAU);
        let r = area_three_ways(&kink, ParamPatch { t0, t1, u0, u1 }, 1000, 1000).unwrap();
        let areas = [r.parametric, r.normal, r.coarea];
        for i in 0..3 {
            for j in i + 1..3 {
                pairwise = pairwise.max((areas[i] - areas[j]).abs() / areas[i].abs().max(areas[j].abs()));
            }
        }
        // σ² element of the unit kink is cos²t dt du
        let g = |t: f64| t / 2.0 + (2.0 * t).sin() / 4.0;
        let exact = (u1 - u0) * (g(t1) - g(t0));
        analytic = areas.iter().map(|a| (a - exact).abs() / exact).fold(analytic, f64::max);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        pairwise <= 1e-6 && analytic <= 1e-6 && secs < 10.0,
        format!("pairwise {pairwise:.1e}, vs closed form {analytic:.1e}, {secs:.2} s"),
    )
}

fn string_run(name: &str, parameter: f64, slice: Option<f64>) -> ExperimentReport {
    let mut cfg = ExperimentConfig::new("string-run");
    cfg.builtin = Some(name.into());
    cfg.parameter = Some(parameter);
    cfg.refinements = 3;
    cfg.slice_width = slice;
    run(&cfg).unwrap()
}

fn column(rep: &ExperimentReport, table: &str, name: &str) -> Vec<f64> {
    let t = &rep.tables[table];
    let k = t.columns.iter().position(|c| c == name).unwrap();
    t.rows.iter().map(|r| r[k]).collect()
}

fn kink() -> Outcome {
    let rep = string_run("kink", 1.0, None);
    let widths: Vec<f64> = rep.refinement.iter().map(|r| r.width).collect();
    let excluded = column(&rep, "slices", "excluded");
    let energies = column(&rep, "slices", "E");
    let (p1, p2) = (column(&rep, "slices", "P_1"), column(&rep, "slices", "P_2"));
    let mut e_err = 0.0f64;
    let mut p_max = 0.0f64;
    let mut used = 0;
    for i in 0..energies.len() {
        if excluded[i] == 0.0 {
            used += 1;
            e_err = e_err.max((energies[i] - TAU).abs() / TAU);
            p_max = p_max.max(p1[i].hypot(p2[i]));
        }
    }
    let stat: Vec<f64> = rep.refinement.iter().map(|r| r.get("stationarity_max_abs")).collect();
    let ratios: Vec<f64> = stat.windows(2).map(|w| w[1] / w[0]).collect();
    let finest_ok = (widths[2] - 5e-3).abs() <= 1e-12 && (widths[0] - 2e-2).abs() <= 1e-12;
    Outcome::new(
        finest_ok && used > 0 && e_err <= 0.01 && p_max <= 1e-3 && ratios.iter().all(|r| *r <= 0.55),
        format!("|E−2π|/2π {e_err:.1e} over {used} slices, |P| {p_max:.1e}, residual ratios {ratios:.3?}"),
    )
}

fn square() -> Outcome {
    let side = 1.0;
    let rep = string_run("square", side, Some(0.02));
    let t = column(&rep, "slices", "t");
    let e = column(&rep, "slices", "E");
    let null = column(&rep, "slices", "null_mass");
    let e_err = e.iter().map(|x| (x - 4.0 * side).abs() / (4.0 * side)).fold(0.0, f64::max);
    let mut null_err = 0.0f64;
    for (t, m) in t.iter().zip(&null) {
        if *t > 0.55 * side && *t < 0.95 * side {
            let expected = 4.0 * (2.0 * t - side);
            null_err = null_err.max((m - expected).abs() / expected);
        }
    }
    Outcome::new(
        e_err <= 0.02 && null_err <= 0.05,
        format!("|E−4L|/4L {e_err:.1e}, null mass vs 4(2t−L) {null_err:.2e}"),
    )
}

fn cylinder() -> Outcome {
    let r = 1.0;
    let s = builtin("cylinder", r).unwrap();
    let (t_end, dt) = (1.0, 0.005);
    let v = sample_varifold(&s, 0.0, t_end, dt, dt).unwrap().varifold;
    let target = Matrix::diagonal(&[2.0, 0.0, 0.0]);
    let grid = CellGrid::new(vec![0.0, -r, -r], vec![0.25, 2.0 * r, 2.0 * r]).unwrap();
    let p_err = barycenters(&v, &grid)
        .unwrap()
        .iter()
        .filter(|c| c.timelike_weight > 0.0)
        .map(|c| c.p_bar.max_abs_diff(&target) / 2.0)
        .fold(0.0, f64::max);

    let p_bar = |_: &[f64]| Matrix::diagonal(&[2.0, 0.0, 0.0]);
    let theta = |u: &[f64]| 1.5 + (2.0 * u[1]).sin() + 0.3 * (3.0 * u[1]).cos();
    let weak = weak_stationarity_residual(&CylinderPatch { radius: r / 2.0 }, &p_bar, &theta, 64).unwrap();

    let image_radius = v
        .atoms()
        .iter()
        .map(|a: &VarifoldAtom| a.z.space().iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let multiplicity = v.mass() / (TAU * image_radius * t_end);
    let theta_err = (multiplicity - 2.0).abs() / 2.0;
    Outcome::new(
        p_err <= 0.02 && weak <= 1e-6 && theta_err <= 0.02,
        format!("P̄ vs diag(2,0,0) {p_err:.3} (limit is diag(1,½,½)), weak residual {weak:.1e}, Θ⁰ {multiplicity:.6}"),
    )
}

fn flux_mismatch(net: &JunctionNetwork) -> f64 {
    let (mut de, mut dp) = (0.0, 0.0);
    for l in &net.lines {
        let (e, p) = line_energy_momentum(l.extension(), l.theta());
        let sign = if l.orientation() == lorvar::junctions::Orientation::In { 1.0 } else { -1.0 };
        de += sign * e;
        dp += sign * p;
    }
    de.abs() + dp.abs()
}

fn junctions() -> Outcome {
    let sol = &solve_split(4.0, SplitMode::Multiplicities { theta2: 1.0, theta3: 1.0 }).unwrap().solutions[0];
    let expected = (2.0 / 3f64.sqrt()).atan();
    let angle_err = (sol.alpha - expected).abs().max((sol.beta - expected).abs());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut solved_worst, mut perturbed_best) = (0.0f64, f64::INFINITY);
    let mut agree = true;
    for _ in 0..100 {
        let (a, b) = (rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0));
        let theta1 = a + b + rng.gen_range(0.01..5.0);
        let sol = &solve_split(theta1, SplitMode::Multiplicities { theta2: a, theta3: b }).unwrap().solutions[0];
        let net = sol.network().unwrap();
        let check = junction_conservation_check(&net).unwrap();
        let bal = balance_residual(&net);
        let worst = bal[0].hypot(bal[1]).max(flux_mismatch(&net)).max(check.energy_mismatch).max(check.momentum_mismatch);
        solved_worst = solved_worst.max(worst / theta1);
        agree &= check.conserved;

        let delta = rng.gen_range(1e-3..0.1);
        let (mut t, mut al, mut be) = (sol.theta, sol.alpha, sol.beta);
        match rng.gen_range(0..3) {
            0 => t[1] *= 1.0 + delta,
            1 => al = if al + delta < FRAC_PI_2 { al + delta } else { al - delta },
            _ => be = if be - delta > FRAC_PI_4 { be - delta } else { be + delta },
        }
        let bad = split_network(t, al, be).unwrap();
        let check = junction_conservation_check(&bad).unwrap();
        let bal = balance_residual(&bad);
        let least = bal[0].hypot(bal[1]).min(flux_mismatch(&bad)).min(check.energy_mismatch.max(check.momentum_mismatch));
        perturbed_best = perturbed_best.min(least);
        agree &= !check.conserved;
    }
    Outcome::new(
        angle_err <= 1e-12 && solved_worst <= 1e-10 && perturbed_best >= 1e-6 && agree,
        format!("(4,1,1) angle error {angle_err:.1e}, solved ≤ {solved_worst:.1e}, perturbed ≥ {perturbed_best:.1e}"),
    )
}

fn conservation_suite() -> Outcome {
    let mut ok = true;
    let mut worst_ratio = 0.0f64;
    let mut worst_extrapolated = 0.0f64;
    for seed in 0..10 {
        let s = random_relativistic_string(seed, 1.0, 3).unwrap();
        let scale = s.period();
        let drifts: Vec<[f64; 3]> = [0.0125, 0.00625, 0.003125]
            .iter()
            .map(|&d| {
                let v = sample_varifold(&s, 0.0, 0.5, d, d).unwrap().varifold;
                let rep = conservation_report(&v, (0.0, 0.5), &ConservationOptions::with_width(0.025)).unwrap();
                assert_eq!(rep.slices.len(), 20);
                [rep.energy_drift, rep.momentum_drift, rep.angular_drift]
            })
            .collect();
        for q in 0..3 {
            let series: Vec<f64> = drifts.iter().map(|d| d[q]).collect();
            for w in series.windows(2) {
                let settled = w[1] <= 1e-10 * scale;
                if !settled {
                    worst_ratio = worst_ratio.max(w[1] / w[0]);
                }
                ok &= settled || w[1] <= 0.55 * w[0];
            }
            let extrapolated = (2.0 * series[2] - series[1]).max(0.0) / scale;
            worst_extrapolated = worst_extrapolated.max(extrapolated);
            ok &= extrapolated <= 1e-3;
        }
    }
    Outcome::new(
        ok,
        format!("worst unsettled drift ratio {worst_ratio:.3}, extrapolated drift {worst_extrapolated:.1e}"),
    )
}

fn zigzag() -> Outcome {
    let width = 0.25;
    let v = zigzag_varifold(32, 8).unwrap();
    let grid = CellGrid::new(vec![0.0, -0.5], vec![width, 1.0]).unwrap();
    let cells = barycenters(&v, &grid).unwrap();
    let mut q_target = vec![vec![0.0; 2]; 2];
    for sign in [1.0, -1.0] {
        let q = null_oracle(&[sign]);
        for a in 0..2 {
            for b in 0..2 {
                q_target[a][b] += 0.5 * q[a][b];
            }
        }
    }
    let (mut density_err, mut q_err) = (0.0f64, 0.0f64);
    let mut collapsed = 0;
    for c in &cells {
        density_err = density_err.max((c.mass / width - SQRT_2).abs() / SQRT_2);
        q_err = q_err.max(max_diff(&c.q_bar, &q_target));
        let atoms: Vec<&VarifoldAtom> = v.atoms().iter().filter(|a| grid.cell_of(a.z.as_slice()) == c.cell).collect();
        if dirac_collapse_check(c, &atoms, 1e-9) {
            collapsed += 1;
        }
    }
    Outcome::new(
        cells.len() == 4 && density_err <= 0.01 && q_err <= 1e-6 && collapsed == 0,
        format!("{} axis cells, density error {density_err:.1e}, Q̄ error {q_err:.1e}, collapsed {collapsed}", cells.len()),
    )
}

/// Exact cell masses for kinks centred at (i/n, j/n): a centre on a cell
/// edge gives half its mass to each side.
fn diffuse_oracle(n: usize, per_axis: usize) -> f64 {
    let share = |i: usize, k: usize| {
        let (c, lo, hi) = (i * per_axis, k * n, (k + 1) * n);
        if c > lo && c < hi {
            1.0
        } else if c == lo || c == hi {
            0.5
        } else {
            0.0
        }
    };
    let axis: Vec<f64> = (0..per_axis).map(|k| (0..n).map(|i| share(i, k)).sum()).collect();
    let uniform = (n * n) as f64 / (per_axis * per_axis) as f64;
    let mut worst = 0.0f64;
    for a in &axis {
        for b in &axis {
            worst = worst.max((a * b / uniform - 1.0).abs());
        }
    }
    worst
}

fn limits() -> Outcome {
    let kinks = converge_kinks(&[1, 2, 4, 8, 16, 32], 256, 16, 1.0).unwrap();
    let oracle = kink_moment_oracle();
    let tube_err = kinks.iter().map(|k| (k.tube_mass - TAU).abs() / TAU).fold(0.0, f64::max);
    let hi = kinks.iter().map(|k| k.moment).fold(0.0, f64::max);
    let lo = kinks.iter().map(|k| k.moment).fold(f64::INFINITY, f64::min);
    let moment_err = kinks.iter().map(|k| (k.moment - oracle).abs() / oracle).fold(0.0, f64::max);

    let diffuse = converge_diffuse(&[4, 8, 16, 32], 0.25, 16).unwrap();
    let devs: Vec<f64> = diffuse.iter().map(|d| d.max_deviation).collect();
    let oracle_err = diffuse.iter().map(|d| (d.max_deviation - diffuse_oracle(d.n, 4)).abs()).fold(0.0, f64::max);
    let energy_err = diffuse.iter().map(|d| (d.energy - TAU).abs() / TAU).fold(0.0, f64::max);
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    Outcome::new(
        tube_err <= 0.02 && hi / lo - 1.0 <= 0.1 && moment_err <= 0.1 && decreasing && oracle_err <= 1e-9 && energy_err <= 1e-9,
        format!(
            "tube mass error {tube_err:.1e}, moment spread {:.1e}, vs {oracle:.3} {moment_err:.3}, diffuse deviation {devs:.4?} (oracle error {oracle_err:.0e})",
            hi / lo - 1.0
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("projection algebra", projection_algebra),
        ("null boundary law", boundary_law),
        ("area agreement", area_oracle),
        ("kink string", kink),
        ("square string", square),
        ("cylinder", cylinder),
        ("triple junction", junctions),
        ("conservation drifts", conservation_suite),
        ("zig-zag limit", zigzag),
        ("kink limits", limits),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        if !outcome.passed {
            failed += 1;
        }
        println!(
            "AC{} {} {name}: {} [{:.1} s]",
            i + 1,
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    let strict = std::env::var("LORVAR_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
