//! `lorvar` experiment runner. Writes `<experiment>.json` plus CSV tables to
//! the output directory; exits 0 iff every declared check passed, 1 if some
//! check failed and 2 on errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use lorvar::experiments::{run, ExperimentConfig, EXPERIMENTS};

#[derive(Debug, Parser)]
#[command(name = "lorvar", version, about = "Run lorentzian varifold experiments")]
struct Args {
    /// Experiment name (alternative to --experiment).
    #[arg(value_name = "EXPERIMENT")]
    positional: Option<String>,
    #[arg(long)]
    experiment: Option<String>,
    /// JSON experiment config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid_dt: Option<f64>,
    #[arg(long)]
    grid_du: Option<f64>,
    /// Number of grid levels, each halving the previous width.
    #[arg(long)]
    refinements: Option<usize>,
    #[arg(long)]
    slice_width: Option<f64>,
    /// Comma-separated bump diameters relative to the region extent.
    #[arg(long, value_delimiter = ',')]
    family_scales: Option<Vec<f64>>,
    /// Time window `t0,t1`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    window: Option<Vec<f64>>,
    /// kink, square, cylinder or random.
    #[arg(long)]
    builtin: Option<String>,
    /// Radius of the kink or cylinder.
    #[arg(long = "R")]
    radius: Option<f64>,
    /// Side of the square or period of a random string.
    #[arg(long = "L")]
    length: Option<f64>,
    /// Sine modes of random strings.
    #[arg(long)]
    modes: Option<usize>,
    /// JSON curve `{L, samples: [[s, a...]]}`.
    #[arg(long)]
    curve_a: Option<PathBuf>,
    /// Second curve; defaults to the first.
    #[arg(long)]
    curve_b: Option<PathBuf>,
    /// Junction network JSON `{p, lines: [{dir, theta, orientation}]}`.
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    theta1: Option<f64>,
    #[arg(long)]
    theta2: Option<f64>,
    #[arg(long)]
    theta3: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Enumerate integer splittings of theta1.
    #[arg(long)]
    integer: bool,
    /// Comma-separated increasing sequence indices.
    #[arg(long = "n", value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long)]
    cell_width: Option<f64>,
    #[arg(long)]
    tube_radius: Option<f64>,
    /// Vector to classify, comma-separated; repeatable.
    #[arg(long = "vector", allow_hyphen_values = true)]
    vectors: Vec<String>,
    /// Tangent basis vector, comma-separated; repeatable.
    #[arg(long = "basis", allow_hyphen_values = true)]
    basis: Vec<String>,
    #[arg(long)]
    h: Option<usize>,
    #[arg(long = "N")]
    spatial_dim: Option<usize>,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number '{x}' in '{s}'")))
        .collect()
}

fn build_config(args: Args) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    match (args.positional, args.experiment) {
        (Some(a), Some(b)) if a != b => bail!("conflicting experiment names '{a}' and '{b}'"),
        (Some(e), _) | (None, Some(e)) => cfg.experiment = e,
        (None, None) if cfg.experiment.is_empty() => {
            bail!("no experiment given; choose one of {}", EXPERIMENTS.join(", "))
        }
        _ => {}
    }
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = args.$field { cfg.$field = v; })* };
    }
    macro_rules! set_opt {
        ($($field:ident),*) => { $(if args.$field.is_some() { cfg.$field = args.$field; })* };
    }
    set!(seed, refinements, family_scales, modes, n_values, tube_radius, h, spatial_dim, c, levels);
    set_opt!(grid_dt, grid_du, slice_width, builtin, curve_a, curve_b, network, theta1, theta2, theta3, alpha, beta, cell_width);
    if let Some(w) = args.window {
        cfg.window = Some([w[0], w[1]]);
    }
    if args.radius.is_some() && args.length.is_some() {
        bail!("--R and --L are exclusive");
    }
    if let Some(p) = args.radius.or(args.length) {
        cfg.parameter = Some(p);
    }
    cfg.integer |= args.integer;
    if !args.vectors.is_empty() {
        cfg.vectors = args.vectors.iter().map(|v| parse_list(v)).collect::<Result<_>>()?;
    }
    if !args.basis.is_empty() {
        cfg.basis = args.basis.iter().map(|v| parse_list(v)).collect::<Result<_>>()?;
    }
    Ok(cfg)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("LORVAR_THREADS") {
        let n: usize = v.parse().with_context(|| format!("LORVAR_THREADS='{v}' is not a count"))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
    }
    Ok(())
}

fn execute(args: Args) -> Result<bool> {
    configure_threads()?;
    let out_dir = args.out_dir.clone();
    let cfg = build_config(args)?;
    let report = run(&cfg)?;
    let written = report.write(&out_dir)?;
    for c in &report.checks {
        println!(
            "{} {:<28} value {:.6e} tolerance {:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    println!("{}: {}", report.experiment, if report.passed { "passed" } else { "failed" });
    Ok(report.passed)
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
