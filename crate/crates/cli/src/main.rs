use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coxflow::experiment::{run_experiment, run_girsanov_check};
use coxflow::oracle::{misclassification, mc_phi_risk, OracleTable};
use coxflow::select::fit_penalized;
use coxflow::{
    cosine_dictionary, feature_matrix, fit_erm, read_dataset, scenario, simulate_dataset, write_dataset,
    Coefficients, Error, FeatureMatrix, Label, LabeledSample, RunConfig,
};

#[derive(Parser)]
#[command(name = "coxflow", version, about = "Classification of stopped Cox-process paths")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (or directory for `experiment`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a labeled dataset from the configured scenario.
    Simulate {
        /// Overrides the configured sample size.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Dump the feature matrix of a dataset as CSV.
    Features {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "B")]
        b: usize,
    },
    /// Logit-loss ERM over a single class F_B.
    Fit {
        /// Feature CSV or dataset file.
        #[arg(long)]
        features: PathBuf,
        #[arg(long = "B")]
        b: usize,
    },
    /// Choose the class index and write the selection report.
    Select {
        #[arg(long)]
        data: PathBuf,
        /// Also write the chosen coefficients here.
        #[arg(long)]
        coeffs_out: Option<PathBuf>,
    },
    /// Risk of a fitted classifier against the Bayes oracle.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        scenario: String,
    },
    /// Consistency experiment over the configured sample sizes.
    Experiment,
    /// Monte-Carlo check of the change-of-measure identity.
    CheckGirsanov {
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
    },
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_invariant_failure() {
            Failure::Check(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn write_output(out: Option<&Path>, body: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::Usage(e.to_string())),
    }
}

fn require_out(out: Option<&Path>, what: &str) -> CliResult<PathBuf> {
    out.map(Path::to_path_buf)
        .ok_or_else(|| Failure::Usage(format!("--out <{what}> is required")))
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn dataset_features(samples: &[LabeledSample], b: usize) -> CliResult<FeatureMatrix> {
    let first = samples.first().ok_or(Error::EmptyDataset)?;
    let dict = cosine_dictionary(first.z.dim(), first.x.horizon());
    Ok(feature_matrix(samples, &dict, b)?)
}

fn is_feature_csv(path: &Path) -> CliResult<bool> {
    let file = fs::File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(first.starts_with("i,y,"))
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let config = load_config(&cli)?;
    let out = cli.out.as_deref();

    match &cli.command {
        Command::Simulate { n } => {
            let path = require_out(out, "dataset-file")?;
            let mut sim = config.sim_config()?;
            if let Some(n) = n {
                sim.n = *n;
            }
            let samples = simulate_dataset(&sim, &config.model()?)?;
            write_dataset(&path, &samples)?;
        }
        Command::Features { data, b } => {
            let fm = dataset_features(&read_dataset(data)?, *b)?;
            let mut buf = Vec::new();
            fm.write_csv(&mut buf).map_err(|e| Failure::Usage(e.to_string()))?;
            write_output(out, &String::from_utf8_lossy(&buf))?;
        }
        Command::Fit { features, b } => {
            let path = require_out(out, "coeff-file")?;
            let fm = if is_feature_csv(features)? {
                FeatureMatrix::read_csv_file(features)?
            } else {
                dataset_features(&read_dataset(features)?, *b)?
            };
            let report = fit_erm(&fm, *b, &config.fit_options())?;
            report.coefficients.write_file(&path)?;
            eprintln!(
                "B={} risk={:.10} iterations={} converged={}",
                b, report.risk, report.iterations, report.converged
            );
        }
        Command::Select { data, coeffs_out } => {
            let samples = read_dataset(data)?;
            let first = samples.first().ok_or(Error::EmptyDataset)?;
            let dict = cosine_dictionary(first.z.dim(), first.x.horizon());
            let (_, report) = fit_penalized(&samples, &dict, &config.selection()?)?;
            write_output(out, &report.to_csv())?;
            if let Some(path) = coeffs_out {
                report.coefficients.write_file(path)?;
            }
        }
        Command::Evaluate { data, coeffs, scenario: name } => {
            let samples = read_dataset(data)?;
            let first = samples.first().ok_or(Error::EmptyDataset)?;
            let model = scenario(name, first.x.horizon(), config.p_plus)?;
            let coeffs = Coefficients::read_file(coeffs)?;
            let fm = dataset_features(&samples, coeffs.radius)?;
            let scores = coeffs.scores(&fm);
            let predictions: Vec<Label> = scores.iter().map(|&s| Label::from_score(s)).collect();
            let risk = misclassification(&predictions, fm.labels())?;
            let table = OracleTable::build(&model, &samples)?;
            let bayes = table.bayes_risk();
            let phi = mc_phi_risk(&scores, fm.labels())?;
            let body = format!(
                "risk,se,bayes_risk,bayes_se,phi_risk,phi_risk_star\n{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                risk.value,
                risk.std_error,
                bayes.value,
                bayes.std_error,
                phi.value,
                table.phi_risk_star()?
            );
            write_output(out, &body)?;
        }
        Command::Experiment => {
            let dir = require_out(out, "directory")?;
            let report = run_experiment(&config)?;
            report.write(&dir)?;
            eprint!("{}", report.aggregate_csv());
        }
        Command::CheckGirsanov { reps } => {
            let report = run_girsanov_check(&config, *reps)?;
            write_output(out, &report.to_csv())?;
            if !report.passed() {
                return Err(Failure::Check(format!(
                    "change-of-measure check failed (max |W| under unit rate: {:e})",
                    report.unit_weight_max
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(2)
        }
    }
}
