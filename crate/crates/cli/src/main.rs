//! `depcost`: estimation and welfare analysis of power-outage choice data.
//!
//! Exit codes: 0 success (including fits that stop at the iteration budget,
//! which are reported with `converged = false`), 1 usage or configuration
//! error, 2 data validation error, 3 numerical failure.

mod artifact;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use depcost::dataset::{load_dataset, save_dataset, ColumnMap};
use depcost::design::{self, Design, Levels};
use depcost::estimate::{self, EstimationResult, FitOptions};
use depcost::model::{ModelName, TransformKind, UtilitySpec};
use depcost::report::format_table;
use depcost::simgen::{self, RecoveryReport};
use depcost::welfare::{dcf_curve, fit_polynomial, CostUnit, DcfConfig, DcfCurve};
use serde::Deserialize;
use serde_json::json;

use config::Config;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<depcost::Error> for CliError {
    fn from(e: depcost::Error) -> Self {
        use depcost::Error::*;
        let msg = e.to_string();
        match e {
            Csv(_) | MissingColumn(_) | BadRow { .. } | DuplicateScenario { .. }
            | OrphanObservation(_) | EmptyDataset | EmptyDesign | TooFewPoints { .. } => {
                CliError::Data(msg)
            }
            TransformDomain(_) | ZeroCostCoefficient | NonFiniteStart
            | SingularInformation(_) => CliError::Numeric(msg),
            _ => CliError::Usage(msg),
        }
    }
}

#[derive(Parser)]
#[command(name = "depcost", version, about = "Deprivation cost estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Optional TOML configuration file; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random component of the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Monthly,
    Total12,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    Boxcox,
    Power,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic choice dataset from a known model.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Model the choices are generated from.
        #[arg(long, default_value = "MNL1")]
        model: String,
        /// Number of synthetic respondents.
        #[arg(long)]
        respondents: Option<usize>,
        /// Experimental design CSV (block,dt,wt,p); defaults to the built-in
        /// balanced 36-scenario design.
        #[arg(long)]
        design: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model (or all ten) to a dataset by maximum likelihood.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV.
        #[arg(long)]
        data: PathBuf,
        /// Model name, or "all".
        #[arg(long, default_value = "MNL1")]
        model: String,
        /// Simulation draws per respondent for mixed logit models.
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a deprivation cost curve from a fitted model artifact.
    Dcf {
        #[command(flatten)]
        common: Common,
        /// Estimation artifact JSON produced by `estimate`.
        #[arg(long)]
        estimate: PathBuf,
        /// Children flag the curve is evaluated at.
        #[arg(long, default_value_t = 0)]
        ch: u8,
        #[arg(long, value_enum, default_value_t = UnitArg::Total12)]
        unit: UnitArg,
        /// Parameterization for models with a time-shape parameter.
        #[arg(long, value_enum, default_value_t = TransformArg::Boxcox)]
        transform: TransformArg,
        /// Curve horizon in days.
        #[arg(long, default_value_t = 30.0)]
        horizon: f64,
        /// Grid step in days.
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a polynomial to a cost curve artifact.
    FitCurve {
        #[command(flatten)]
        common: Common,
        /// Curve artifact JSON produced by `dcf`.
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Level balance and D-error of an experimental design.
    DesignEval {
        #[command(flatten)]
        common: Common,
        /// Design CSV; defaults to the built-in balanced design.
        #[arg(long)]
        design: Option<PathBuf>,
        /// Reference monthly bill used to pivot scenario costs.
        #[arg(long, default_value_t = 150.0)]
        bill: f64,
        /// Swap budget for local design improvement; 0 evaluates only.
        #[arg(long, default_value_t = 0)]
        improve: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parameter recovery experiment: generate, fit, summarize bias and
    /// coverage across replications.
    Recover {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "MNL1")]
        model: String,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long)]
        respondents: Option<usize>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an estimation table from one or more estimate artifacts.
    Report {
        #[command(flatten)]
        common: Common,
        /// Estimation artifact JSON files.
        #[arg(required = true)]
        estimates: Vec<PathBuf>,
        /// Optional file to write the table to (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn parse_models(name: &str) -> Result<Vec<ModelName>, CliError> {
    if name.eq_ignore_ascii_case("all") {
        Ok(ModelName::ALL.to_vec())
    } else {
        Ok(vec![ModelName::parse(name)?])
    }
}

fn load_design_or_default(path: Option<&Path>) -> Result<(Design, Vec<artifact::InputRef>), CliError> {
    match path {
        None => Ok((Design::balanced_default(), Vec::new())),
        Some(p) => {
            let d = design::load_design(p, Levels::default(), b',')?;
            Ok((d, vec![artifact::sha256_file(p)?]))
        }
    }
}

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out.display())))
}

#[derive(Deserialize)]
struct EstimateArtifact {
    payload: EstimationResult,
}

#[derive(Deserialize)]
struct CurveArtifact {
    payload: DcfCurve,
}

fn read_artifact<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{} is not a {what} artifact: {e}", path.display())))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { common, model, respondents, design, out } => {
            let cfg = Config::load(common.config.as_deref())?;
            let models = parse_models(&model)?;
            if models.len() != 1 {
                return Err(CliError::Usage("simulate needs a single model".into()));
            }
            let spec = UtilitySpec::for_model(models[0]);
            let truth = config::resolve_params(&spec, cfg.truth.as_ref(), "truth")?;
            let population = cfg.population(respondents, common.seed);
            let (design, mut inputs) = load_design_or_default(design.as_deref())?;
            let skeleton = simgen::generate_population(&population, &design)?;
            let data = simgen::simulate_choices(&skeleton, &spec, &truth, common.seed ^ 0x5DEE_CE66)?;
            ensure_out_dir(&out)?;
            let csv_path = out.join("dataset.csv");
            save_dataset(&data, &csv_path, b',')?;
            inputs.push(artifact::sha256_file(&csv_path)?);
            artifact::write(
                &out.join("simulate.json"),
                "simulate",
                inputs,
                json!({
                    "model": spec.name,
                    "truth": truth,
                    "population": population,
                    "seed": common.seed,
                }),
                json!({
                    "n_respondents": data.n_respondents(),
                    "n_observations": data.n_observations(),
                    "dataset": csv_path.display().to_string(),
                }),
            )?;
            println!(
                "wrote {} ({} respondents, {} observations)",
                csv_path.display(),
                data.n_respondents(),
                data.n_observations()
            );
            Ok(())
        }

        Command::Estimate { common, data, model, draws, out } => {
            let cfg = Config::load(common.config.as_deref())?;
            let models = parse_models(&model)?;
            let dataset = load_dataset(&data, &ColumnMap::default(), b',')?;
            let draw_config = cfg.draws(draws, common.seed)?;
            let input = artifact::sha256_file(&data)?;
            ensure_out_dir(&out)?;
            for name in models {
                let spec = UtilitySpec::for_model(name);
                let result = estimate::fit(
                    &spec,
                    &dataset,
                    &draw_config,
                    &estimate::default_start(&spec),
                    &FitOptions::default(),
                )?;
                let path = out.join(format!("estimate-{}.json", name.as_str().to_lowercase()));
                artifact::write(
                    &path,
                    "estimate",
                    vec![artifact::InputRef {
                        path: input.path.clone(),
                        sha256: input.sha256.clone(),
                    }],
                    json!({ "model": name, "draws": draw_config, "seed": common.seed }),
                    &result,
                )?;
                println!(
                    "{}: LL {:.2}, adj rho-sq {:.4}, converged {} -> {}",
                    name, result.ll_final, result.adj_rho_sq, result.converged, path.display()
                );
            }
            Ok(())
        }

        Command::Dcf { common, estimate, ch, unit, transform, horizon, step, out } => {
            let _ = Config::load(common.config.as_deref())?;
            if !(horizon > 0.0 && step > 0.0 && step <= horizon) {
                return Err(CliError::Usage("need 0 < step <= horizon".into()));
            }
            let fitted: EstimateArtifact = read_artifact(&estimate, "estimation")?;
            let spec = UtilitySpec::for_model(fitted.payload.spec_name);
            let n = (horizon / step).round() as usize;
            let dcf_config = DcfConfig {
                time_grid: (0..=n).map(|i| i as f64 * step).collect(),
                unit: match unit {
                    UnitArg::Monthly => CostUnit::MonthlyEquivalent,
                    UnitArg::Total12 => CostUnit::Total12Month,
                },
                ch,
                transform_variant: match transform {
                    TransformArg::Boxcox => TransformKind::BoxCox,
                    TransformArg::Power => TransformKind::Power,
                },
                quadrature_tolerance: 1e-6,
            };
            let curve = dcf_curve(&spec, &fitted.payload.estimates, &dcf_config)?;
            ensure_out_dir(&out)?;
            let csv_path = out.join("curve.csv");
            let mut csv = String::from("time_days,cost_dollars,unit,spec,ch\n");
            for (t, c) in curve.times.iter().zip(&curve.costs) {
                csv.push_str(&format!(
                    "{t},{c},{},{},{ch}\n",
                    curve.unit.as_str(),
                    curve.spec_name
                ));
            }
            std::fs::write(&csv_path, csv)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", csv_path.display())))?;
            artifact::write(
                &out.join("curve.json"),
                "dcf-curve",
                vec![artifact::sha256_file(&estimate)?],
                serde_json::to_value(&dcf_config)
                    .map_err(|e| CliError::Usage(e.to_string()))?,
                &curve,
            )?;
            println!(
                "{}: cost at {horizon} days = {:.2} ({}) -> {}",
                curve.spec_name,
                curve.costs.last().unwrap(),
                curve.unit.as_str(),
                csv_path.display()
            );
            Ok(())
        }

        Command::FitCurve { common, curve, degree, out } => {
            let _ = Config::load(common.config.as_deref())?;
            let loaded: CurveArtifact = read_artifact(&curve, "curve")?;
            let fit = fit_polynomial(&loaded.payload, degree)?;
            ensure_out_dir(&out)?;
            artifact::write(
                &out.join("polyfit.json"),
                "polyfit",
                vec![artifact::sha256_file(&curve)?],
                json!({ "degree": degree }),
                &fit,
            )?;
            println!(
                "degree-{degree} fit: adj R^2 = {:.5}, coefficients {:?}",
                fit.adj_r_squared, fit.coefficients
            );
            Ok(())
        }

        Command::DesignEval { common, design, bill, improve, out } => {
            let cfg = Config::load(common.config.as_deref())?;
            let (loaded, mut inputs) = load_design_or_default(design.as_deref())?;
            let spec = UtilitySpec::for_model(ModelName::Mnl1);
            let priors = config::resolve_params(&spec, cfg.priors.as_ref(), "priors")?;
            let balance = design::level_balance_report(&loaded)?;
            let d_err = design::d_error(&loaded, &priors, bill)?;
            ensure_out_dir(&out)?;
            let mut payload = json!({ "d_error": d_err, "balance": balance });
            if improve > 0 {
                let (better, trace) =
                    design::improve_design(&loaded, &priors, improve, common.seed, bill)?;
                let improved_path = out.join("design-improved.csv");
                design::save_design(&better, &improved_path, b',')?;
                inputs.push(artifact::sha256_file(&improved_path)?);
                payload["improved_d_error"] = json!(trace.last().copied());
                payload["trace"] = json!(trace);
                payload["improved_design"] = json!(improved_path.display().to_string());
            }
            artifact::write(
                &out.join("design-eval.json"),
                "design-eval",
                inputs,
                json!({ "bill": bill, "priors": priors, "improve": improve, "seed": common.seed }),
                payload,
            )?;
            println!("D-error = {d_err:.6}");
            Ok(())
        }

        Command::Recover { common, model, reps, respondents, draws, out } => {
            let cfg = Config::load(common.config.as_deref())?;
            let models = parse_models(&model)?;
            if models.len() != 1 {
                return Err(CliError::Usage("recover needs a single model".into()));
            }
            let spec = UtilitySpec::for_model(models[0]);
            let truth = config::resolve_params(&spec, cfg.truth.as_ref(), "truth")?;
            let population = cfg.population(respondents, common.seed);
            let draw_config = cfg.draws(draws, common.seed)?;
            let report: RecoveryReport = simgen::recovery_experiment(
                &spec,
                &truth,
                &population,
                &Design::balanced_default(),
                &draw_config,
                reps,
                &FitOptions::default(),
            )?;
            ensure_out_dir(&out)?;
            artifact::write(
                &out.join("recovery.json"),
                "recovery",
                Vec::new(),
                json!({
                    "model": spec.name,
                    "truth": truth,
                    "population": population,
                    "draws": draw_config,
                    "reps": reps,
                }),
                &report,
            )?;
            for p in &report.parameters {
                println!(
                    "{}: truth {:.4}, mean est {:.4}, bias {:.4}, 2SE coverage {:.2}",
                    p.label, p.truth, p.mean_estimate, p.bias, p.coverage_2se
                );
            }
            Ok(())
        }

        Command::Report { common, estimates, out } => {
            let _ = Config::load(common.config.as_deref())?;
            let mut results = Vec::new();
            for path in &estimates {
                let a: EstimateArtifact = read_artifact(path, "estimation")?;
                results.push(a.payload);
            }
            let table = format_table(&results);
            match out {
                Some(path) => std::fs::write(&path, &table)
                    .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?,
                None => print!("{table}"),
            }
            Ok(())
        }
    }
}
