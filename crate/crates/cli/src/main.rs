use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cspstream::csp::{parse_instance, write_instance};
use cspstream::gen::{generate, Family, GenSpec};
use cspstream::harness::{run_experiment, space_curve, write_results, ALocKind, ExperimentSpec, InstanceSource, Mode};
use cspstream::lp::{empirical_alpha, known_alpha};
use cspstream::reduction::EstimatorConfig;
use cspstream::{Instance, RandomTape};

#[derive(Parser)]
#[command(name = "cspstream", version, about = "Sublinear-space Max-CSP value estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials of one estimator on an instance file.
    Estimate(EstimateArgs),
    /// Write a random instance.
    Gen(GenArgs),
    /// Peak sketch size against n.
    SpaceCurve(SpaceArgs),
}

#[derive(Args)]
struct Knobs {
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long = "B")]
    b: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 1)]
    radius: usize,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long, default_value_t = 0.25)]
    c_exp: f64,
    #[arg(long, default_value_t = 0.5)]
    q_exp: f64,
    #[arg(long)]
    eps_adv: Option<f64>,
    #[arg(long)]
    hash_range: Option<u64>,
    #[arg(long)]
    cset_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Knobs {
    fn config(&self) -> anyhow::Result<EstimatorConfig> {
        let space_cap = match std::env::var("CSPSTREAM_SPACE_CAP") {
            Ok(v) => Some(v.parse().context("CSPSTREAM_SPACE_CAP must be an integer")?),
            Err(_) => None,
        };
        Ok(EstimatorConfig {
            epsilon: self.epsilon,
            delta: self.delta,
            b: self.b,
            rho: self.rho,
            radius: self.radius,
            t_max: self.t_max,
            c_exp: self.c_exp,
            q_exp: self.q_exp,
            eps_adv: self.eps_adv,
            hash_range: self.hash_range,
            cset_size: self.cset_size,
            space_cap,
            seed: self.seed,
            ..Default::default()
        })
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "offline")]
    mode: String,
    /// A number, `known:<family>`, or `empirical`.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Local map on balls: `lp` or `exact-val`.
    #[arg(long, default_value = "lp")]
    aloc: String,
    /// Record wall time per trial.
    #[arg(long)]
    timing: bool,
    /// JSON-lines output; the summary goes to `<json>.summary.json`.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    sigma: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    allow_isolated: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpaceArgs {
    /// Comma-separated, ascending.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1024, 2048, 4096, 8192])]
    n_grid: Vec<usize>,
    #[arg(long, default_value = "maxcut")]
    family: String,
    #[arg(long, default_value_t = 4)]
    m_per_n: usize,
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

fn resolve_alpha(spec: &str, inst: &Instance, seed: u64) -> anyhow::Result<(f64, serde_json::Value)> {
    if let Some(family) = spec.strip_prefix("known:") {
        let Some(est) = known_alpha(family) else {
            bail!("no known integrality gap for {family:?}; pass a number or `empirical`");
        };
        let a = cspstream::csp::rational_value(&est.alpha);
        return Ok((a, json!({ "alpha": a, "provenance": "known", "family": family })));
    }
    if spec == "empirical" {
        let preds: Vec<_> = inst.predicates().iter().map(|(_, p)| p.clone()).collect();
        let extra: Vec<Instance> = if inst.n() <= 16 { vec![inst.clone()] } else { Vec::new() };
        let est = empirical_alpha(&preds, 200, 8, &extra, &RandomTape::new(seed))?;
        let a = cspstream::csp::rational_value(&est.alpha);
        return Ok((a, json!({ "alpha": a, "provenance": "empirical", "instances": est.instances })));
    }
    let a: f64 = spec.parse().with_context(|| format!("bad --alpha {spec:?}"))?;
    Ok((a, json!({ "alpha": a, "provenance": "given" })))
}

fn estimate(args: EstimateArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let inst = parse_instance(&text)?;
    let mode: Mode = args.mode.parse()?;
    let mut config = args.knobs.config()?;
    let mut alpha_info = serde_json::Value::Null;
    if matches!(mode, Mode::Offline | Mode::Stream | Mode::Coupled) {
        let Some(spec) = args.alpha.as_deref() else {
            bail!("--alpha is required for mode {}: a value, known:<family>, or empirical", args.mode);
        };
        let (a, info) = resolve_alpha(spec, &inst, config.seed)?;
        config.alpha = Some(a);
        alpha_info = info;
    }
    let aloc = match args.aloc.as_str() {
        "lp" => ALocKind::Lp,
        "exact-val" => ALocKind::ExactVal,
        other => bail!("unknown --aloc {other:?}"),
    };
    let params = config.resolve(inst.n(), inst.k(), inst.sigma(), Some(inst.m())).ok();
    let spec = ExperimentSpec {
        mode,
        source: InstanceSource::File(args.input.clone()),
        config,
        trials: args.trials,
        aloc,
        timing: args.timing,
    };
    let (records, summary) = run_experiment(&spec)?;
    if let Some(path) = &args.json {
        let summary_path = write_results(path, &records, &summary)?;
        eprintln!("wrote {} and {}", path.display(), summary_path.display());
    }
    let report = json!({
        "mode": args.mode,
        "trials": summary.trials,
        "errors": summary.errors,
        "mean": summary.mean,
        "stderr": summary.stderr,
        "match_rate": summary.match_rate,
        "out": records.first().and_then(|r| r.value(mode)),
        "alpha": alpha_info,
        "params": params,
        "first_error": records.iter().find_map(|r| r.error.clone()),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn gen(args: GenArgs) -> anyhow::Result<()> {
    let family: Family = args.family.parse()?;
    let mut spec = GenSpec::new(family, args.n, args.m).seed(args.seed);
    spec.k = args.k.unwrap_or(spec.k);
    spec.sigma = args.sigma.unwrap_or(spec.sigma);
    spec.allow_isolated = args.allow_isolated;
    let text = write_instance(&generate(&spec)?);
    match args.out {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn curve(args: SpaceArgs) -> anyhow::Result<()> {
    let family: Family = args.family.parse()?;
    let config = args.knobs.config()?;
    let first = *args.n_grid.first().context("empty --n-grid")?;
    let gen = GenSpec::new(family, first, 0).seed(config.seed);
    let curve = space_curve(&args.n_grid, &gen, args.m_per_n, &config)?;
    let out = serde_json::to_string_pretty(&curve.to_json(&config))?;
    match args.json {
        Some(path) => std::fs::write(&path, out + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{out}"),
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Estimate(a) => estimate(a),
        Command::Gen(a) => gen(a),
        Command::SpaceCurve(a) => curve(a),
    }
}
