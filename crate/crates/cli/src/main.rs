use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use sensyn::covering::{select_method, Method, Recommendation, DEFAULT_CHI};
use sensyn::error::SynthesisError;
use sensyn::eval::{coverage_redundancy, sweep, verify, write_csv, SweepConfig, VerificationReport};
use sensyn::geometry::{Point, SensorSpec};
use sensyn::hierarchy::{flat_synthesize, hierarchical_synthesize, HierarchyConfig, SynthesisMethod};
use sensyn::placement::{DeployedSensor, Placement, Role};
use sensyn::scenario::{compute_gamma, generate, Scenario, ScenarioSpec};

const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_VERIFY: u8 = 4;
const EXIT_TIMEOUT: u8 = 5;

#[derive(Parser)]
#[command(
    name = "sensyn",
    version,
    about = "Synthesize k-covering connected sensor networks on obstructed grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario file.
    Generate(GenerateArgs),
    /// Synthesize a placement for a scenario.
    Synth(SynthArgs),
    /// Check a placement against a scenario.
    Verify(VerifyArgs),
    /// Run a comparison sweep and write CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long, default_value_t = 1.0)]
    cell_size: f64,
    /// Fraction of occupied cells, in [0, 1).
    #[arg(long)]
    extent: f64,
    /// Target mean number of occupied 8-neighbors of an occupied cell.
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sensing radius in meters.
    #[arg(long, default_value_t = 6.0)]
    sensing_radius: f64,
    /// Communication radius in meters (defaults to the sensing radius).
    #[arg(long)]
    comm_radius: Option<f64>,
    /// Coverage demand.
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Smc,
    Milp,
    Auto,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Demand per sensor type, comma separated; overrides the scenario.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<u32>>,
    /// Sub-area side in cells.
    #[arg(long, default_value_t = 10)]
    sub_area: usize,
    /// Time budget in seconds.
    #[arg(long, default_value_t = 120.0)]
    time_budget: f64,
    /// Recorded in the output; synthesis itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Open-cell threshold above which MILP needs partitioning.
    #[arg(long, default_value_t = DEFAULT_CHI)]
    chi: usize,
    /// Solve every sub-area for the full demand instead of covering once
    /// and filling in the residual.
    #[arg(long)]
    no_coverage_repair: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    placement: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep configuration (JSON); omitted fields take their defaults.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    parallel: Option<usize>,
    /// Also write per-cell summaries as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SensorRecord {
    x_m: f64,
    y_m: f64,
    type_id: usize,
    role: Role,
}

#[derive(Debug, Serialize, Deserialize)]
struct Metrics {
    n: usize,
    alpha: f64,
    runtime_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Selection {
    method: Method,
    row: usize,
    rule: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlacementFile {
    method: SynthesisMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selection: Option<Selection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    k: Vec<u32>,
    hierarchy: bool,
    sub_areas: usize,
    relays_added: usize,
    proven_minimal: bool,
    fallback: bool,
    sensors: Vec<SensorRecord>,
    metrics: Metrics,
    verified: bool,
    report: VerificationReport,
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_generate(a: &GenerateArgs) -> Result<u8, Failure> {
    if !(0.0..1.0).contains(&a.extent) {
        return Err(usage(anyhow::anyhow!("--extent must lie in [0, 1), got {}", a.extent)));
    }
    let spec =
        SensorSpec::new(0, a.sensing_radius, a.comm_radius.unwrap_or(a.sensing_radius)).map_err(|e| usage(e.into()))?;
    let g = generate(&ScenarioSpec {
        width: a.width,
        height: a.height,
        cell_size: a.cell_size,
        extent: a.extent,
        gamma_target: a.gamma,
        seed: a.seed,
    })
    .map_err(|e| usage(e.into()))?;
    let scenario = Scenario::new(&g.region, &[spec], &[a.k], a.seed);
    scenario.save(&a.out).map_err(|e| usage(e.into()))?;
    match g.gamma {
        Some(gamma) => println!("wrote {}: extent {:.3}, gamma {:.2}", a.out.display(), g.extent, gamma),
        None => println!("wrote {}: extent {:.3}", a.out.display(), g.extent),
    }
    Ok(0)
}

fn choose_method(
    a: &SynthArgs,
    scenario: &Scenario,
    specs: &[SensorSpec],
) -> anyhow::Result<(SynthesisMethod, Option<Recommendation>)> {
    match a.method {
        MethodArg::Smc => Ok((SynthesisMethod::Smc, None)),
        MethodArg::Milp => Ok((SynthesisMethod::Milp, None)),
        MethodArg::Auto => {
            let region = scenario.region()?;
            let gamma = compute_gamma(&region).unwrap_or(0.0);
            // The smallest ratio decides whether coverage implies connectivity.
            let beta = specs.iter().map(SensorSpec::beta).fold(f64::INFINITY, f64::min);
            let rec = select_method(region.extent(), gamma, beta, region.open_count(), a.chi);
            let method = match rec.method {
                Method::Smc => SynthesisMethod::Smc,
                // Either is fine within chi; MILP is the faster of the two.
                Method::Milp | Method::Either => SynthesisMethod::Milp,
            };
            Ok((method, Some(rec)))
        }
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<u8, Failure> {
    if !(a.time_budget > 0.0) || a.sub_area == 0 {
        return Err(usage(anyhow::anyhow!("--time-budget and --sub-area must be positive")));
    }
    let scenario = Scenario::load(&a.scenario)
        .with_context(|| format!("loading {}", a.scenario.display()))
        .map_err(usage)?;
    let region = scenario.region().map_err(|e| usage(e.into()))?;
    let specs = scenario.specs().map_err(|e| usage(e.into()))?;
    let k = a.k.clone().unwrap_or_else(|| scenario.k.clone());
    if k.len() != specs.len() {
        return Err(usage(anyhow::anyhow!(
            "{} demands given for {} sensor types",
            k.len(),
            specs.len()
        )));
    }
    let (method, rec) = choose_method(a, &scenario, &specs).map_err(usage)?;
    if let Some(r) = &rec {
        println!("method: {} (table row {}: {})", method_name(method), r.row, r.rule);
    }
    let budget = Duration::from_secs_f64(a.time_budget);
    let hierarchy = match method {
        SynthesisMethod::Smc => true,
        SynthesisMethod::Milp => region.open_count() > a.chi,
    };
    let start = Instant::now();
    let out = if hierarchy {
        let cfg = HierarchyConfig {
            sub_w: a.sub_area,
            sub_h: a.sub_area,
            coverage_repair: !a.no_coverage_repair,
            smc_connectivity: false,
            time_budget: budget,
        };
        hierarchical_synthesize(&region, method, &specs, &k, &cfg)
    } else {
        flat_synthesize(&region, method, &specs, &k, budget)
    };
    let runtime = start.elapsed().as_secs_f64();
    let out = match out {
        Ok(o) => o,
        Err(e) => {
            let code = if matches!(e, SynthesisError::Timeout(_)) {
                EXIT_TIMEOUT
            } else {
                EXIT_INFEASIBLE
            };
            return Err(Failure { code, error: e.into() });
        }
    };
    let report = verify(&out.placement, &region, &specs, &k);
    let verified = report.passed();
    let file = PlacementFile {
        method,
        selection: rec.map(|r| Selection {
            method: r.method,
            row: r.row,
            rule: r.rule.to_string(),
        }),
        seed: a.seed.or(Some(scenario.seed)),
        k: k.clone(),
        hierarchy,
        sub_areas: out.sub_areas,
        relays_added: out.relays_added,
        proven_minimal: out.proven_minimal,
        fallback: out.fallback,
        sensors: out
            .placement
            .sensors
            .iter()
            .map(|s| SensorRecord {
                x_m: s.position.x,
                y_m: s.position.y,
                type_id: s.type_id,
                role: s.role,
            })
            .collect(),
        metrics: Metrics {
            n: out.placement.len(),
            alpha: coverage_redundancy(&out.placement, &region, &specs, &k),
            runtime_s: runtime,
        },
        verified,
        report,
    };
    write_json(&a.out, &file).map_err(usage)?;
    println!(
        "{}: {} sensors ({} relays), alpha {:.3}, {:.2} s, verified={}",
        method_name(method),
        file.metrics.n,
        file.relays_added,
        file.metrics.alpha,
        runtime,
        verified
    );
    Ok(if verified { 0 } else { EXIT_VERIFY })
}

fn method_name(m: SynthesisMethod) -> &'static str {
    match m {
        SynthesisMethod::Smc => "smc",
        SynthesisMethod::Milp => "milp",
    }
}

fn cmd_verify(a: &VerifyArgs) -> Result<u8, Failure> {
    let scenario = Scenario::load(&a.scenario)
        .with_context(|| format!("loading {}", a.scenario.display()))
        .map_err(usage)?;
    let region = scenario.region().map_err(|e| usage(e.into()))?;
    let specs = scenario.specs().map_err(|e| usage(e.into()))?;
    let text = fs::read_to_string(&a.placement)
        .with_context(|| format!("reading {}", a.placement.display()))
        .map_err(usage)?;
    let file: PlacementFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", a.placement.display()))
        .map_err(usage)?;
    if file.k.len() != specs.len() {
        return Err(usage(anyhow::anyhow!(
            "placement has {} demands for {} sensor types",
            file.k.len(),
            specs.len()
        )));
    }
    let placement = Placement::new(
        file.sensors
            .iter()
            .map(|s| DeployedSensor::new(Point::new(s.x_m, s.y_m), s.type_id, s.role))
            .collect(),
    );
    let report = verify(&placement, &region, &specs, &file.k);
    println!(
        "{}",
        serde_json::json!({
            "passed": report.passed(),
            "coverage_ok": report.coverage_ok,
            "connected": report.connected,
            "component_count": report.component_count,
            "placement_ok": report.placement_ok,
            "uncovered": report.uncovered.len(),
        })
    );
    Ok(if report.passed() { 0 } else { EXIT_VERIFY })
}

fn cmd_sweep(a: &SweepArgs) -> Result<u8, Failure> {
    let text = fs::read_to_string(&a.config)
        .with_context(|| format!("reading {}", a.config.display()))
        .map_err(usage)?;
    let cfg: SweepConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", a.config.display()))
        .map_err(usage)?;
    cfg.validate().map_err(|e| usage(anyhow::anyhow!(e)))?;
    if let Some(n) = a.parallel {
        if n == 0 {
            return Err(usage(anyhow::anyhow!("--parallel must be positive")));
        }
        if !sensyn::par::init_threads(n) {
            log::warn!("thread count not applied");
        }
    }
    let result = sweep(&cfg);
    let file = fs::File::create(&a.out)
        .with_context(|| format!("creating {}", a.out.display()))
        .map_err(usage)?;
    write_csv(&result.rows, file).map_err(|e| usage(e.into()))?;
    if let Some(path) = &a.summary {
        write_json(path, &result.cells).map_err(usage)?;
    }
    println!(
        "wrote {} rows for {} cells to {}",
        result.rows.len(),
        result.cells.len(),
        a.out.display()
    );
    Ok(0)
}
