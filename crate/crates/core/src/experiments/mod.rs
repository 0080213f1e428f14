//! Experiment pipelines with machine-readable reports: every report carries
//! the refinement table its checks are decided on.

mod limits;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conservation::{conservation_report, energy, momentum, ConservationOptions, TimeSliceMeasures};
use crate::error::{Error, Result};
use crate::junctions::{
    balance_residual, junction_conservation_check, null_limit_varifold, null_plane_limit, solve_split,
    JunctionNetwork, SplitMode,
};
use crate::minkowski::{
    boost_matrix, classify, frame_from_tangent_basis, lorentz_boost, null_projection, projection_from_frame,
    SpacetimeVector,
};
use crate::strings::{
    builtin, constraint_report, dalembert, random_relativistic_string, sample_varifold, Flavor, PeriodicCurve,
    SplineCurve, StringSolution,
};
use crate::variation::{field_family, stationarity_residual, FamilySpec};
use crate::varifold::{DiscreteVarifold, SpacetimeBox};

pub use limits::{
    converge_diffuse, converge_kinks, converge_zigzag, diffuse_kinks, kink_superposition, zigzag_limit,
    zigzag_varifold, DiffuseLevel, KinkLevel, ZigzagLevel, KINK_MOMENT_EXPONENT,
};

pub const EXPERIMENTS: [&str; 8] = [
    "classify",
    "project",
    "string-run",
    "junction-solve",
    "converge-zigzag",
    "converge-kinks",
    "converge-diffuse",
    "null-plane",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    /// Coarsest time width; finer levels halve it.
    pub grid_dt: Option<f64>,
    pub grid_du: Option<f64>,
    pub refinements: usize,
    pub slice_width: Option<f64>,
    pub family_scales: Vec<f64>,
    pub window: Option<[f64; 2]>,
    /// `kink`, `square`, `cylinder` or `random`.
    pub builtin: Option<String>,
    /// R for kink and cylinder, L for square and random strings.
    pub parameter: Option<f64>,
    pub modes: usize,
    pub curve_a: Option<PathBuf>,
    pub curve_b: Option<PathBuf>,
    pub network: Option<PathBuf>,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub theta3: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub integer: bool,
    pub n_values: Vec<usize>,
    pub cell_width: Option<f64>,
    pub tube_radius: f64,
    pub vectors: Vec<Vec<f64>>,
    pub basis: Vec<Vec<f64>>,
    pub h: usize,
    pub spatial_dim: usize,
    pub c: f64,
    pub levels: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: String::new(),
            seed: 0,
            grid_dt: None,
            grid_du: None,
            refinements: 3,
            slice_width: None,
            family_scales: vec![0.5, 0.25],
            window: None,
            builtin: None,
            parameter: None,
            modes: 3,
            curve_a: None,
            curve_b: None,
            network: None,
            theta1: None,
            theta2: None,
            theta3: None,
            alpha: None,
            beta: None,
            integer: false,
            n_values: Vec::new(),
            cell_width: None,
            tube_radius: 1.0,
            vectors: Vec::new(),
            basis: Vec::new(),
            h: 1,
            spatial_dim: 1,
            c: 1.0,
            levels: 6,
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(Error::UnknownExperiment(self.experiment.clone()));
        }
        let positive = [
            ("grid-dt", self.grid_dt),
            ("grid-du", self.grid_du),
            ("slice-width", self.slice_width),
            ("parameter", self.parameter),
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("theta3", self.theta3),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("cell-width", self.cell_width),
            ("tube-radius", Some(self.tube_radius)),
            ("c", Some(self.c)),
        ];
        for (name, value) in positive {
            if let Some(x) = value {
                if !(x.is_finite() && x > 0.0) {
                    return Err(Error::Malformed(format!("{name} must be positive, got {x}")));
                }
            }
        }
        if self.family_scales.is_empty() || self.family_scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Malformed("family scales must be positive".into()));
        }
        if let Some([a, b]) = self.window {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::Malformed(format!("window [{a}, {b})")));
            }
        }
        if self.refinements < 2 {
            return Err(Error::Malformed("at least two refinement levels are needed".into()));
        }
        if self.n_values.contains(&0) || self.modes == 0 || self.levels == 0 || self.h == 0 {
            return Err(Error::Malformed("counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: 1.0,
            passed: ok,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub width: f64,
    pub values: BTreeMap<String, f64>,
}

impl RefinementRow {
    fn new(width: f64, values: impl IntoIterator<Item = (&'static str, f64)>) -> Self {
        Self {
            width,
            values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn get(&self, key: &str) -> f64 {
        self.values.get(key).copied().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|&x| format_cell(x)))?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?)
            .map_err(|e| Error::Malformed(e.to_string()))
    }
}

fn format_cell(x: f64) -> String {
    let x = x + 0.0;
    if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub results: BTreeMap<String, Value>,
    pub refinement: Vec<RefinementRow>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub tables: BTreeMap<String, Table>,
}

impl ExperimentReport {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            experiment: config.experiment.clone(),
            seed: config.seed,
            config: config.clone(),
            results: BTreeMap::new(),
            refinement: Vec::new(),
            checks: Vec::new(),
            passed: false,
            tables: BTreeMap::new(),
        }
    }

    fn result(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.results.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    fn finish(mut self) -> Self {
        self.passed = !self.checks.is_empty() && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Refinement table with one column per key seen in any row.
    pub fn refinement_table(&self) -> Table {
        let keys: Vec<String> = self
            .refinement
            .iter()
            .flat_map(|r| r.values.keys().cloned())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut columns = vec!["width".to_string()];
        columns.extend(keys.iter().cloned());
        Table {
            columns,
            rows: self
                .refinement
                .iter()
                .map(|r| std::iter::once(r.width).chain(keys.iter().map(|k| r.get(k))).collect())
                .collect(),
        }
    }

    /// Writes `<experiment>.json`, `<experiment>_refinement.csv` and one CSV
    /// per table; returns the paths written.
    pub fn write(&self, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = out_dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join(format!("{}.json", self.experiment));
        std::fs::write(&json, self.to_json_string()?)?;
        written.push(json);
        let mut tables = vec![("refinement".to_string(), self.refinement_table())];
        tables.extend(self.tables.iter().map(|(k, t)| (k.clone(), t.clone())));
        for (name, table) in tables {
            let path = dir.join(format!("{}_{}.csv", self.experiment, name));
            std::fs::write(&path, table.to_csv_string()?)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let report = ExperimentReport::new(config);
    let report = match config.experiment.as_str() {
        "classify" => run_classify(config, report),
        "project" => run_project(config, report),
        "string-run" => run_string(config, report),
        "junction-solve" => run_junction(config, report),
        "converge-zigzag" => run_zigzag(config, report),
        "converge-kinks" => run_kinks(config, report),
        "converge-diffuse" => run_diffuse(config, report),
        "null-plane" => run_null_plane(config, report),
        other => Err(Error::UnknownExperiment(other.to_string())),
    }?;
    Ok(report.finish())
}

/// Successive ratios r(w/2)/r(w) all at most `ratio`, or the finest value
/// at round-off level `floor`.
fn refines(values: &[f64], ratio: f64, floor: f64) -> (bool, f64) {
    let worst = values
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .fold(0.0, f64::max);
    let last = values.last().copied().unwrap_or(0.0);
    (worst <= ratio || last <= floor, worst)
}

fn run_classify(cfg: &ExperimentConfig, mut rep: ExperimentReport) -> Result<ExperimentReport> {
    let vectors = if cfg.vectors.is_empty() {
        vec![vec![1.0, 0.5], vec![1.0, 1.0], vec![1.0, 2.0], vec![0.0, 1.0, 1.0], vec![2.0, 1.0, -1.0]]
    } else {
        cfg.vectors.clone()
    };
    let mut classes = Vec::new();
    for v in &vectors {
        let c = classify(&SpacetimeVector::new(v)?)?;
        classes.push(json!({ "vector": v, "kind": c.kind, "interval": c.interval }));
    }
    rep.result("classes", &classes)?;
    let mut consistent = true;
    for lambda in [1.0, 1e-3, 1e-6] {
        let agree = vectors
            .iter()
            .map(|v| {
                let scaled: Vec<f64> = v.iter().map(|x| lambda * x).collect();
                let a = classify(&SpacetimeVector::new(v)?)?.kind;
                let b = classify(&SpacetimeVector::new(&scaled)?)?.kind;
                Ok(if a == b { 1.0 } else { 0.0 })
            })
            .collect::<Result<Vec<f64>>>()?;
        let frac = agree.iter().sum::<f64>() / agree.len() as f64;
        consistent &= frac == 1.0;
        rep.refinement.push(RefinementRow::new(lambda, [("agreement", frac)]));
    }
    rep.checks.push(Check::holds("scale_invariant_classes", consistent));
    Ok(rep)
}

fn run_project(cfg: &ExperimentConfig, mut rep: ExperimentReport) -> Result<ExperimentReport> {
    let basis = if cfg.basis.is_empty() {
        vec![vec![1.0, 0.5, 0.0], vec![0.0, 0.0, 1.0]]
    } else {
        cfg.basis.clone()
    };
    let vectors = basis.iter().map(|b| SpacetimeVector::new(b)).collect::<Result<Vec<_>>>()?;
    let p = projection_from_frame(&frame_from_tangent_basis(&vectors)?);
    let m = p.matrix();
    let idempotency = m.mul(m).max_abs_diff(m);
    let trace = (m.trace() - p.h() as f64).abs();
    let eta_p = m.eta_left();
    let symmetry = eta_p.max_abs_diff(&eta_p.transpose());
    rep.result("projection", m.rows())?;
    rep.result("q", p.q_embed().rows())?;
    rep.result("horizontal_velocity", p.horizontal_velocity())?;
    rep.result("time_time", p.time_time())?;
    rep.checks.push(Check::at_most("idempotency", idempotency, 1e-12));
    rep.checks.push(Check::at_most("trace", trace, 1e-12));
    rep.checks.push(Check::at_most("eta_symmetry", symmetry, 1e-12));

    let n = m.dim() - 1;
    let mut dir = vec![0.0; n];
    dir[0] = 1.0;
    let limit = null_projection(&dir)?;
    let mut bounded = true;
    for k in 1..=cfg.levels.max(2) {
        let gamma = 2f64.powi(k as i32);
        let mut beta = vec![0.0; n];
        beta[0] = (1.0 - 1.0 / (gamma * gamma)).sqrt();
        let pk = lorentz_boost(&p, &boost_matrix(&beta)?)?;
        let err = pk.q_embed().max_abs_diff(limit.matrix());
        let v = pk.horizontal_velocity();
        let speed = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let width = 1.0 / pk.time_time();
        bounded &= err <= 10.0 * width;
        rep.refinement
            .push(RefinementRow::new(width, [("boost_gamma", gamma), ("q_error", err), ("speed_defect", (1.0 - speed).abs())]));
    }
    rep.checks.push(Check::holds("boundary_approach_rate", bounded));
    Ok(rep)
}

struct StringSetup {
    string: StringSolution,
    name: String,
    parameter: f64,
    window: [f64; 2],
    grid: f64,
    excluded: Vec<f64>,
}

fn string_setup(cfg: &ExperimentConfig) -> Result<StringSetup> {
    if let Some(a_path) = &cfg.curve_a {
        let a: Arc<dyn PeriodicCurve> = Arc::new(SplineCurve::read_json(a_path)?);
        let b: Arc<dyn PeriodicCurve> = match &cfg.curve_b {
            Some(p) => Arc::new(SplineCurve::read_json(p)?),
            None => a.clone(),
        };
        let string = dalembert(a, b)?;
        let l = string.period();
        return Ok(StringSetup {
            name: "curve".into(),
            parameter: l,
            window: cfg.window.unwrap_or([0.0, l / 2.0]),
            grid: cfg.grid_dt.unwrap_or(l / 40.0),
            excluded: Vec::new(),
            string,
        });
    }
    let name = cfg.builtin.clone().unwrap_or_else(|| "kink".into());
    let parameter = cfg.parameter.unwrap_or(1.0);
    let (string, window, grid, excluded) = match name.as_str() {
        "random" => (
            random_relativistic_string(cfg.seed, parameter, cfg.modes)?,
            [0.0, parameter / 2.0],
            parameter / 50.0,
            Vec::new(),
        ),
        "kink" => {
            let w = cfg.window.unwrap_or([0.0, 1.5 * parameter]);
            let first = ((w[0] / (PI * parameter) - 0.5).floor() as i64) - 1;
            let last = ((w[1] / (PI * parameter) - 0.5).ceil() as i64) + 1;
            let singular = (first..=last).map(|k| (0.5 + k as f64) * PI * parameter).collect();
            (builtin("kink", parameter)?, w, 0.02 * parameter, singular)
        }
        "square" => (builtin("square", parameter)?, [0.0, parameter], 0.02 * parameter, Vec::new()),
        "cylinder" => (builtin("cylinder", parameter)?, [0.0, parameter], 0.02 * parameter, Vec::new()),
        other => return Err(Error::Malformed(format!("unknown builtin string '{other}'"))),
    };
    Ok(StringSetup {
        string,
        name,
        parameter,
        window: cfg.window.unwrap_or(window),
        grid: cfg.grid_dt.unwrap_or(grid),
        excluded,
    })
}

fn padded_region(v: &DiscreteVarifold, (t0, t1): (f64, f64), pad: f64) -> Result<SpacetimeBox> {
    let (lo, hi) = v
        .bounding_box()
        .ok_or_else(|| Error::Malformed("empty sample".into()))?;
    let margin = (t1 - t0) / 15.0;
    let mut a = vec![t0 + margin];
    let mut b = vec![t1 - margin];
    for i in 1..lo.len() {
        let e = (hi[i] - lo[i]).max(pad);
        a.push(lo[i] - 0.1 * e);
        b.push(hi[i] + 0.1 * e);
    }
    SpacetimeBox::new(a, b)
}

fn run_string(cfg: &ExperimentConfig, mut rep: ExperimentReport) -> Result<ExperimentReport> {
    let setup = string_setup(cfg)?;
    let s = &setup.string;
    let l = s.period();
    let [t0, t1] = setup.window;
    let du0 = cfg.grid_du.unwrap_or(setup.grid);
    let slice = cfg.slice_width.unwrap_or(5.0 * setup.grid);
    let options = ConservationOptions {
        excluded_times: setup.excluded.clone(),
        exclusion_margin: slice,
        ..ConservationOptions::with_width(slice)
    };
    rep.result("string", s.describe())?;
    rep.result("builtin", &setup.name)?;
    rep.result("parameter", setup.parameter)?;
    rep.result("flavor", s.flavor())?;
    rep.result("expected_energy", l)?;
    rep.result("constraints", constraint_report(s, 64, 64)?)?;

    let relativistic = s.flavor() == Flavor::Relativistic;
    let square = setup.name == "square";
    let mut family = None;
    let mut stationarity = Vec::new();
    let mut last = None;
    for level in 0..cfg.refinements {
        let f = 0.5f64.powi(level as i32);
        let sampled = sample_varifold(s, t0, t1, setup.grid * f, du0 * f)?;
        let v = &sampled.varifold;
        if family.is_none() {
            let region = padded_region(v, (t0, t1), setup.parameter)?;
            family = Some(field_family(
                &region,
                &FamilySpec {
                    scales: cfg.family_scales.clone(),
                    seed: cfg.seed,
                    jitter: 0.0,
                },
            )?);
        }
        let stat = stationarity_residual(v, family.as_ref().expect("family built"))?;
        let cons = conservation_report(v, (t0, t1), &options)?;
        let included: Vec<_> = cons.slices.iter().filter(|r| !r.excluded).collect();
        let momentum_max = included
            .iter()
            .map(|r| r.momentum.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let energy_error = included.iter().map(|r| (r.energy - l).abs() / l).fold(0.0, f64::max);
        let mut row = vec![
            ("energy_mean", cons.mean_energy),
            ("energy_max_rel_error", energy_error),
            ("energy_drift", cons.energy_drift),
            ("momentum_max", momentum_max),
            ("momentum_drift", cons.momentum_drift),
            ("angular_drift", cons.angular_drift),
            ("stationarity_max_abs", stat.max_abs),
            ("stationarity_max_normalized", stat.max_normalized),
            ("null_cells", sampled.null_cells as f64),
            ("timelike_cells", sampled.timelike_cells as f64),
        ];
        if square {
            let side = setup.parameter;
            let err = cons
                .slices
                .iter()
                .filter(|r| r.t > 0.55 * side && r.t < 0.95 * side)
                .map(|r| {
                    let expected = 4.0 * (2.0 * r.t - side);
                    (r.null_mass - expected).abs() / expected
                })
                .fold(0.0, f64::max);
            row.push(("null_mass_max_rel_error", err));
        }
        stationarity.push(stat.max_abs);
        rep.refinement.push(RefinementRow::new(sampled.dt, row));
        last = Some(cons);
    }
    let cons = last.expect("at least two levels");
    let dim = s.a().dim();
    let mut columns = vec!["t".to_string(), "E".to_string()];
    columns.extend((1..=dim).map(|i| format!("P_{i}")));
    columns.extend(["mass".to_string(), "null_mass".to_string(), "excluded".to_string()]);
    rep.tables.insert(
        "slices".into(),
        Table {
            columns,
            rows: cons
                .slices
                .iter()
                .map(|r| {
                    let mut row = vec![r.t, r.energy];
                    row.extend(r.momentum.iter().copied());
                    row.extend([r.mass, r.null_mass, if r.excluded { 1.0 } else { 0.0 }]);
                    row
                })
                .collect(),
        },
    );

    let finest = rep.refinement.last().expect("rows").clone();
    let energy_tol = if square { 0.02 } else { 0.01 };
    rep.checks.push(Check::at_most("energy", finest.get("energy_max_rel_error"), energy_tol));
    rep.checks.push(Check::at_most("momentum", finest.get("momentum_max"), 1e-3 * l));
    if square {
        rep.checks.push(Check::at_most("null_mass", finest.get("null_mass_max_rel_error"), 0.05));
    }
    if relativistic {
        let (ok, worst) = refines(&stationarity, 0.55, 1e-10 * l);
        rep.result("stationarity_worst_ratio", worst)?;
        rep.checks.push(Check::holds("stationarity_refines", ok));
    }
    Ok(rep)
}

fn run_junction(cfg: &ExperimentConfig, mut rep: ExperimentReport) -> Result<ExperimentReport> {
    let net = if let Some(path) = &cfg.network {
        JunctionNetwork::read_json(path)?
    } else {
        let theta1 = cfg
            .theta1
            .ok_or_else(|| Error::Malformed("junction-solve needs --theta1 or --network".into()))?;
        let mode = match (cfg.theta2, cfg.theta3, cfg.alpha, cfg.beta, cfg.integer) {
            (Some(theta2), Some(theta3), None, None, false) => SplitMode::Multiplicities { theta2, theta3 },
            (None, None, Some(alpha), Some(beta), false) => SplitMode::Angles { alpha, beta },
            (None, None, None, None, true) => SplitMode::Integer,
            _ => {
                return Err(Error::Malformed(
                    "give exactly one of: theta2 and theta3, alpha and beta, or integer".into(),
                ))
            }
        };
        let split = solve_split(theta1, mode)?;
        let worst = split.solutions.iter().map(|s| s.residual).fold(0.0, f64::max);
        rep.checks.push(Check::at_most("solution_residual", worst, 1e-12 * theta1.max(1.0)));
        rep.tables.insert(
            "solutions".into(),
            Table {
                columns: ["theta1", "theta2", "theta3", "alpha", "beta", "residual"].map(String::from).to_vec(),
                rows: split
                    .solutions
                    .iter()
                    .map(|s| vec![s.theta[0], s.theta[1], s.theta[2], s.alpha, s.beta, s.residual])
                    .collect(),
            },
        );
        let net = split.solutions[0].network()?;
        rep.result("split", &split)?;

        let nl = null_limit_varifold(theta1, [1.0, 0.0], net.p, 1.0, 1.0 / 64.0)?;
        let before = TimeSliceMeasures::new(&nl, net.p[0] - 1.0, 1.0)?;
        let after = TimeSliceMeasures::new(&nl, net.p[0], 1.0)?;
        rep.result(
            "null_limit",
            json!({
                "energy_before": energy(&before),
                "energy_after": energy(&after),
                "momentum_after": momentum(&after),
                "null_density_per_length": theta1 / (2.0 * SQRT_2),
            }),
        )?;
        net
    };
    rep.result("network", serde_json::from_str::<Value>(&net.to_json_string()?)?)?;
    let residual = balance_residual(&net);
    let reversed = balance_residual(&net.time_reversed()?);
    let conservation = junction_conservation_check(&net)?;
    let scale: f64 = net.lines.iter().map(|l| l.energy()).sum::<f64>().max(1.0);
    let norm = residual[0].hypot(residual[1]);
    let balanced = norm <= 1e-10 * scale;
    rep.result("balance_residual", residual)?;
    rep.result("time_reversed_residual", reversed)?;
    rep.result("conservation", &conservation)?;
    rep.checks.push(Check::at_most(
        "time_reversal",
        (reversed[0].hypot(reversed[1]) - norm).abs(),
        1e-12 * scale,
    ));
    rep.checks.push(Check::holds("balance_iff_conservation", balanced == conservation.conserved));

    let dt0 = cfg.grid_dt.unwrap_or(0.05);
    let region = SpacetimeBox::centered(&net.p, &[0.9, 0.9])?;
    let family = field_family(
        &region,
        &FamilySpec {
            scales: cfg.family_scales.clone(),
            seed: cfg.seed,
            jitter: 0.0,
        },
    )?;
    let mut values = Vec::new();
    for level in 0..cfg.refinements {
        let dt = dt0 * 0.5f64.powi(level as i32);
        let stat = stationarity_residual(&net.sample(1.0, dt)?, &family)?;
        values.push(stat.max_abs);
        rep.refinement.push(RefinementRow::new(
            dt,
            [("stationarity_max_abs", stat.max_abs), ("stationarity_max_normalized", stat.max_normalized)],
        ));
    }
    if balanced {
        let (ok, worst) = refines(&values, 0.55, 1e-10 * scale);
        rep.result("stationarity_worst_ratio", worst)?;
        rep.checks.push(Check::holds("stationarity_refines", ok));
    }
    Ok(rep)
}

fn run_zigzag(cfg: &ExperimentConfig, mut rep: ExperimentReport) -> Result<ExperimentReport> {
    let ns = if cfg.n_values.is_empty() { vec![4, 8, 16, 32] } else { cfg.n_values.clone() };
    let levels = converge_zigzag(&ns, cfg.cell_width.unwrap_or(0.25), 8, &cfg.family_scales)?;
    for l in &levels {
        rep.refinement.push(RefinementRow::new(
            1.0 / l.n as f64,
            [
                ("n", l.n as f64),
                ("mass_density", l.mass_density),
                ("max_density_error", l.max_density_error),
                ("q_bar_error", l.q_bar_error),
                ("collapsed_cells", l.collapsed_cells as f64),
                ("limit_distance", l.limit_distance),
                ("stationarity_max_abs", l.stationarity_max_abs),
            ],
        ));
    }
    let last = levels.last().expect("levels");
    rep.result("levels", &levels)?;
    rep.checks.push(Check::at_most("mass_density", last.max_density_error / SQRT_2, 0.01));
    rep.checks.push(Check::at_most("q_bar", last.q_bar_error, 1e-6));
    rep.checks.push(Check::holds("no_dirac_collapse", last.collapsed_cells == 0));
    rep.checks.push(Check::holds(
        "distance_decreasing",
        levels.windows(2).all(|w| w[1].limit_distance < w[0].limit_distance),
    ));
    Ok(rep)
}

fn run_kinks(cfg: &ExperimentConfig, mut rep: ExperimentReport) -> Result<ExperimentReport> {
    let ns = if cfg.n_values.is_empty() { vec![1, 2, 4, 8, 16, 32] } else { cfg.n_values.clone() };
    let half = cfg.grid_dt.map(|d| 2 * ((FRAC_PI_2 / d).ceil() as usize).max(1)).unwrap_or(256);
    let levels = converge_kinks(&ns, half, 16, cfg.tube_radius)?;
    for l in &levels {
        rep.refinement.push(RefinementRow::new(
            1.0 / l.n as f64,
            [
                ("n", l.n as f64),
                ("tube_mass", l.tube_mass),
                ("moment", l.moment),
                ("support_radius", l.support_radius),
            ],
        ));
    }
    let tube = levels.iter().map(|l| (l.tube_mass - TAU).abs() / TAU).fold(0.0, f64::max);
    let (lo, hi) = levels
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), l| (a.min(l.moment), b.max(l.moment)));
    rep.result("levels", &levels)?;
    rep.result("moment_exponent", KINK_MOMENT_EXPONENT)?;
    rep.checks.push(Check::at_most("tube_mass", tube, 0.02));
    rep.checks.push(Check::at_most("moment_uniform", hi / lo - 1.0, 0.1));
    rep.checks.push(Check::holds(
        "support_shrinks",
        levels.iter().all(|l| l.support_radius <= (1.0 + 1e-9) / l.n as f64),
    ));
    Ok(rep)
}

fn run_diffuse(cfg: &ExperimentConfig, mut rep: ExperimentReport) -> Result<ExperimentReport> {
    let ns = if cfg.n_values.is_empty() { vec![4, 8, 16, 32] } else { cfg.n_values.clone() };
    let cells = cfg.grid_dt.map(|d| 4 * ((TAU / d / 4.0).ceil() as usize).max(1)).unwrap_or(16);
    let width = cfg.cell_width.unwrap_or(0.25);
    let levels = converge_diffuse(&ns, width, cells)?;
    for l in &levels {
        rep.refinement.push(RefinementRow::new(
            1.0 / l.n as f64,
            [("n", l.n as f64), ("energy", l.energy), ("max_deviation", l.max_deviation)],
        ));
    }
    let per_axis = (1.0 / width).round() as usize;
    let mut rows = Vec::new();
    for l in &levels {
        for (k, m) in l.cell_masses.iter().enumerate() {
            let (i, j) = (k / per_axis, k % per_axis);
            rows.push(vec![l.n as f64, i as f64 * width, j as f64 * width, *m]);
        }
    }
    rep.tables.insert(
        "histogram".into(),
        Table {
            columns: ["n", "x", "y", "mass_per_time"].map(String::from).to_vec(),
            rows,
        },
    );
    let energy = levels.iter().map(|l| (l.energy - TAU).abs() / TAU).fold(0.0, f64::max);
    rep.result("levels", &levels)?;
    rep.checks.push(Check::at_most("energy", energy, 1e-9));
    rep.checks.push(Check::holds(
        "deviation_decreasing",
        levels.windows(2).all(|w| w[1].max_deviation < w[0].max_deviation),
    ));
    Ok(rep)
}

fn run_null_plane(cfg: &ExperimentConfig, mut rep: ExperimentReport) -> Result<ExperimentReport> {
    let betas: Vec<f64> = (1..=cfg.levels).map(|l| 1.0 - 0.5f64.powi(l as i32)).collect();
    let dt = cfg.grid_dt.unwrap_or(0.02);
    let lim = null_plane_limit(cfg.h, cfg.spatial_dim.max(cfg.h), &betas, cfg.c, 1.0, dt)?;
    for (i, b) in betas.iter().enumerate() {
        rep.refinement.push(RefinementRow::new(
            1.0 - b,
            [("velocity", *b), ("theta", lim.thetas[i]), ("distance", lim.distances[i])],
        ));
    }
    let family = field_family(
        &SpacetimeBox::new(
            std::iter::once(0.05).chain(std::iter::repeat(-0.2).take(lim.limit.dim() - 1)).collect(),
            std::iter::once(0.95).chain(std::iter::repeat(1.2).take(lim.limit.dim() - 1)).collect(),
        )?,
        &FamilySpec {
            scales: cfg.family_scales.clone(),
            seed: cfg.seed,
            jitter: 0.0,
        },
    )?;
    let mut residuals = Vec::new();
    for level in 0..cfg.refinements {
        let w = dt * 0.5f64.powi(level as i32);
        let limit = null_plane_limit(cfg.h, cfg.spatial_dim.max(cfg.h), &betas[..1], cfg.c, 1.0, w)?.limit;
        residuals.push(stationarity_residual(&limit, &family)?.max_abs);
    }
    let first = &lim.limit.atoms()[0];
    rep.result("limit_q", first.grass.matrix().rows())?;
    rep.result("limit_density_per_length", cfg.c / SQRT_2)?;
    rep.result("limit_stationarity_max_abs", &residuals)?;
    rep.checks.push(Check::holds(
        "distance_decreasing",
        lim.distances.windows(2).all(|w| w[1] < w[0]),
    ));
    rep.checks.push(Check::holds("theta_decreasing", lim.thetas.windows(2).all(|w| w[1] < w[0])));
    let (ok, worst) = refines(&residuals, 0.55, 1e-12);
    rep.result("limit_stationarity_worst_ratio", worst)?;
    rep.checks.push(Check::holds("limit_stationarity_refines", ok));
    Ok(rep)
}
