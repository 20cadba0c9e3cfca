//! Command-line front end: simulation runs, baseline comparison, diagram
//! evaluation, validation, and the set/evaluate benchmark.
//!
//! Machine-readable output (JSON or CSV) goes to stdout; diagnostics go to
//! stderr. Exit status is 0 on success, 1 on validation or runtime errors,
//! and 2 on usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use heatwise::agents::{
    build_heating_query, heating_template, HeatingContext, HEATING_TEMPLATE_ID,
};
use heatwise::decision::{evaluate_diagram, validate_diagram, InfluenceDiagram};
use heatwise::pronouncer::Pronouncer;
use heatwise::sim::{
    compare, load_scenario, run, run_baseline, validate_scenario, Metrics, RunOutput, Scenario,
    SimConfig,
};
use heatwise::thermal::ThermalParams;

#[derive(Parser)]
#[command(
    name = "heatwise",
    version,
    about = "Agent-controlled building heating simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the agent-controlled simulation of a scenario.
    Simulate(SimulateArgs),
    /// Run the constant-setpoint thermostat baseline on a scenario.
    Baseline(BaselineArgs),
    /// Compare two metrics files (agent vs baseline) and report savings.
    Compare(CompareArgs),
    /// Evaluate an influence diagram file and print the evaluation.
    Eval(EvalArgs),
    /// Validate a scenario or diagram file and print the report.
    Validate(ValidateArgs),
    /// Benchmark set/evaluate runs against a registered template.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Configuration file (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the per-tick trace CSV here.
    #[arg(long)]
    out_trace: Option<PathBuf>,
    /// Write the metrics JSON here.
    #[arg(long)]
    out_metrics: Option<PathBuf>,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Constant thermostat setpoint, °C.
    #[arg(long, default_value_t = 22.0)]
    setpoint: f64,
    #[arg(long)]
    out_trace: Option<PathBuf>,
    #[arg(long)]
    out_metrics: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Metrics JSON of the agent-controlled run.
    agent: PathBuf,
    /// Metrics JSON of the baseline run.
    baseline: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct EvalArgs {
    /// Influence diagram file (JSON).
    #[arg(long)]
    diagram: PathBuf,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ValidateTarget {
    /// Scenario file to validate.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Diagram file to validate.
    #[arg(long)]
    diagram: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    target: ValidateTarget,
}

#[derive(Args)]
struct BenchArgs {
    /// Template to benchmark.
    #[arg(long, default_value = HEATING_TEMPLATE_ID, value_parser = [HEATING_TEMPLATE_ID])]
    template: String,
    /// Number of timed set/evaluate runs.
    #[arg(long, default_value_t = 10_000)]
    runs: usize,
    /// Untimed warm-up runs discarded before measuring.
    #[arg(long, default_value_t = 0)]
    warmup: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Simulate(args) => {
            let (scenario, config) = load_inputs(&args.scenario, args.config.as_ref(), args.seed)?;
            let output = run(&scenario, &config).map_err(|e| e.to_string())?;
            write_outputs(&output, args.out_trace.as_ref(), args.out_metrics.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Baseline(args) => {
            let (scenario, config) = load_inputs(&args.scenario, args.config.as_ref(), args.seed)?;
            let output =
                run_baseline(&scenario, &config, args.setpoint).map_err(|e| e.to_string())?;
            write_outputs(&output, args.out_trace.as_ref(), args.out_metrics.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare(args) => {
            let agent = read_metrics(&args.agent)?;
            let baseline = read_metrics(&args.baseline)?;
            let report = compare(&agent, &baseline).map_err(|e| e.to_string())?;
            match args.format {
                Format::Json => println!("{}", report.to_json()),
                Format::Csv => println!("{}", report.csv_row()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval(args) => {
            let text = fs::read_to_string(&args.diagram)
                .map_err(|e| format!("{}: {e}", args.diagram.display()))?;
            let diagram = InfluenceDiagram::from_json(&text).map_err(|e| e.to_string())?;
            let report = validate_diagram(&diagram);
            if !report.is_ok() {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report json")
                );
                return Ok(ExitCode::from(1));
            }
            let evaluation = evaluate_diagram(&diagram).map_err(|e| e.to_string())?;
            println!("{}", evaluation.to_json());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(args) => {
            let (ok, problems) = if let Some(path) = &args.target.scenario {
                let text =
                    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                let scenario = Scenario::from_json(&text).map_err(|e| e.to_string())?;
                let problems = validate_scenario(&scenario);
                (problems.is_empty(), problems)
            } else {
                let path = args
                    .target
                    .diagram
                    .as_ref()
                    .expect("clap enforces the group");
                let text =
                    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                let diagram = InfluenceDiagram::from_json(&text).map_err(|e| e.to_string())?;
                let report = validate_diagram(&diagram);
                (
                    report.is_ok(),
                    report.violations.iter().map(|v| v.to_string()).collect(),
                )
            };
            let summary = serde_json::json!({ "ok": ok, "violations": problems });
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary json")
            );
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Bench(args) => {
            let pronouncer = Pronouncer::new();
            pronouncer
                .register_template(heating_template())
                .map_err(|e| e.to_string())?;
            // Reference context: setback room asked to reach 22 °C within
            // three hours; fixed seed so the bound values are stable.
            let ctx = HeatingContext::new(ThermalParams::default(), 16.0, 22.0, 3.0 * 3600.0);
            let query = build_heating_query(&ctx, 1000, 42, "bench").map_err(|e| e.to_string())?;
            let stats = pronouncer
                .benchmark(&args.template, &query.bindings, args.runs, args.warmup)
                .map_err(|e| e.to_string())?;
            match args.format {
                Format::Csv => println!("{}", stats.csv_row()),
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&stats).expect("stats json")
                ),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_inputs(
    scenario_path: &Path,
    config_path: Option<&PathBuf>,
    seed: Option<u64>,
) -> Result<(Scenario, SimConfig), String> {
    let mut scenario = load_scenario(scenario_path).map_err(|e| e.to_string())?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let config = match config_path {
        Some(path) => SimConfig::load(path).map_err(|e| e.to_string())?,
        None => SimConfig::default(),
    };
    Ok((scenario, config))
}

fn write_outputs(
    output: &RunOutput,
    trace_path: Option<&PathBuf>,
    metrics_path: Option<&PathBuf>,
) -> Result<(), String> {
    if let Some(path) = trace_path {
        let mut buffer = Vec::new();
        heatwise::sim::write_trace_csv(&output.trace, &mut buffer).map_err(|e| e.to_string())?;
        fs::write(path, buffer).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = metrics_path {
        let mut text = output.metrics.to_json();
        text.push('\n');
        fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if trace_path.is_none() && metrics_path.is_none() {
        println!("{}", output.metrics.to_json());
    }
    Ok(())
}

fn read_metrics(path: &PathBuf) -> Result<Metrics, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Metrics::from_json(&text).map_err(|e| e.to_string())
}
