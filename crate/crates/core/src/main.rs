use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use activesplit::harness::{self, Aggregates, ExperimentConfig};
use activesplit::split::{SplitKind, SplitPlan};
use activesplit::surrogate::{self, SurrogateParams};
use activesplit::{data, plot, report, Error, IngestOptions};

const RECORDS_FILE: &str = "records.csv";
const AGGREGATES_FILE: &str = "aggregates.json";
const CONFIG_FILE: &str = "config.json";

#[derive(Parser)]
#[command(
    name = "activesplit",
    version,
    about = "Benchmark QSAR regressors under activity-quantile bootstrap splits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse dataset files and print summary statistics.
    ValidateData {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Average activities of rows that share an id.
        #[arg(long)]
        dedup_average: bool,
    },
    /// Run an experiment and write records.csv and aggregates.json.
    Run(RunArgs),
    /// Print tables from a results directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write SVG figures for a results directory into <out>/plots.
    Plot {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write surrogate datasets with the panel's sizes, plus a sample config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "ACTIVESPLIT_SEED", default_value_t = 0)]
        seed: u64,
        /// Comma-separated panel names; all 25 if omitted.
        #[arg(long, value_delimiter = ',')]
        datasets: Option<Vec<String>>,
    },
    /// Print one split of a dataset as JSON.
    Split {
        #[arg(long)]
        data: PathBuf,
        /// Plan label: kfold<k>, bootstrap or qboot<q>.
        #[arg(long)]
        plan: String,
        #[arg(long, env = "ACTIVESPLIT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        iteration: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, env = "ACTIVESPLIT_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Comma-separated dataset names to keep.
    #[arg(long, value_delimiter = ',')]
    datasets: Option<Vec<String>>,
    /// Overwrite a completed run in --out.
    #[arg(long)]
    force: bool,
}

/// Process exit status with its diagnostic.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
    fn data(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 3,
            message: e.to_string(),
        }
    }
}

/// Exit code for an error raised while loading datasets.
fn load_failure(e: Error) -> Failure {
    match e {
        Error::Config(_) => Failure::config(e),
        _ => Failure::data(e),
    }
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write(path: &Path, body: &str) -> Result<(), Failure> {
    std::fs::write(path, body).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn validate_data(paths: &[PathBuf], dedup_average: bool) -> Result<(), Failure> {
    let opts = IngestOptions {
        dedup_average,
        name: None,
    };
    println!("name\ttarget\tn\tmin\tmedian\tmax\tbit_density\tconstant_bits\tdistinct_fp");
    for p in paths {
        let d = data::parse_dataset(p, &opts).map_err(Failure::data)?;
        let s = d.summary();
        println!(
            "{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.4}\t{}\t{}",
            s.name,
            s.target_id,
            s.n,
            s.activity_min,
            s.activity_median,
            s.activity_max,
            s.bit_density,
            s.constant_columns,
            s.distinct_fingerprints
        );
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let mut config = ExperimentConfig::load(&args.config).map_err(Failure::config)?;
    if let Some(a) = args.iterations {
        config.iterations = a;
    }
    if let Some(s) = args.seed {
        config.master_seed = s;
    }
    if let Some(p) = args.parallelism {
        config.parallelism = p;
    }
    config.validate().map_err(Failure::config)?;

    let aggregates_path = args.out.join(AGGREGATES_FILE);
    if aggregates_path.exists() && !args.force {
        return Err(Failure::config(format!(
            "{} holds a completed run; pass --force to overwrite",
            args.out.display()
        )));
    }

    let mut datasets = config.load_datasets().map_err(load_failure)?;
    if let Some(keep) = &args.datasets {
        if let Some(missing) = keep
            .iter()
            .find(|k| !datasets.iter().any(|d| d.name() == k.as_str()))
        {
            return Err(Failure::config(format!(
                "--datasets: no dataset named {missing}"
            )));
        }
        let (paths, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut config.datasets)
            .into_iter()
            .zip(datasets)
            .filter(|(_, d)| keep.iter().any(|k| k == d.name()))
            .unzip();
        config.datasets = paths;
        datasets = kept;
    }
    for d in &datasets {
        for k in &config.split_plans {
            k.validate(d.len())
                .map_err(|e| Failure::data(format!("dataset {}, split {k}: {e}", d.name())))?;
        }
    }

    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::runtime(format!("{}: {e}", args.out.display())))?;
    let started = now();
    let records = harness::run_experiment(&config, &datasets).map_err(Failure::runtime)?;
    let finished = now();
    let agg = harness::aggregate(&config, &datasets, &records, started, finished)
        .map_err(Failure::runtime)?;

    let config_json = serde_json::to_string_pretty(&config).map_err(Failure::runtime)?;
    write(&args.out.join(CONFIG_FILE), &(config_json + "\n"))?;
    write(
        &args.out.join(RECORDS_FILE),
        &harness::records_to_csv(&records),
    )?;
    write(&aggregates_path, &agg.to_json())?;
    eprintln!(
        "wrote {} records for {} datasets to {}",
        records.len(),
        datasets.len(),
        args.out.display()
    );
    Ok(())
}

fn load_aggregates(dir: &Path) -> Result<Aggregates, Failure> {
    let path = dir.join(AGGREGATES_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    Aggregates::from_json(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn synth(out: &Path, seed: u64, names: Option<&[String]>) -> Result<(), Failure> {
    let entries: Vec<surrogate::PanelEntry> = match names {
        None => surrogate::PANEL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| {
                surrogate::panel_entry(n)
                    .ok_or_else(|| Failure::config(format!("no panel dataset named {n}")))
            })
            .collect::<Result<_, _>>()?,
    };
    std::fs::create_dir_all(out)
        .map_err(|e| Failure::runtime(format!("{}: {e}", out.display())))?;
    let params = SurrogateParams::default();
    let mut files = Vec::new();
    for e in &entries {
        let d = surrogate::generate(e.name, e.chembl_id, e.size, &params, seed)
            .map_err(Failure::runtime)?;
        let file = format!("{}.csv", e.name.to_ascii_lowercase().replace(' ', "_"));
        d.write_csv(out.join(&file)).map_err(Failure::runtime)?;
        files.push(PathBuf::from(file));
    }
    let mut split_plans = vec![SplitKind::Bootstrap];
    split_plans.extend([0.9, 0.8, 0.6, 0.4].map(|q| SplitKind::QuantileBootstrap { q }));
    split_plans.push(SplitKind::Kfold { k: 5 });
    let config = ExperimentConfig {
        datasets: files,
        models: activesplit::ModelSpec::defaults(),
        split_plans,
        gammas: vec![0.9, 0.95, 0.99],
        iterations: 400,
        master_seed: seed,
        parallelism: 1,
        dedup_average: false,
    };
    let json = serde_json::to_string_pretty(&config).map_err(Failure::runtime)?;
    write(&out.join(CONFIG_FILE), &(json + "\n"))?;
    eprintln!("wrote {} datasets to {}", entries.len(), out.display());
    Ok(())
}

fn split(data_path: &Path, label: &str, seed: u64, iteration: usize) -> Result<(), Failure> {
    let kind = SplitKind::from_label(label)
        .ok_or_else(|| Failure::config(format!("unknown split plan {label}")))?;
    let d = data::parse_dataset(data_path, &IngestOptions::default()).map_err(Failure::data)?;
    let plan = SplitPlan { kind, seed };
    let splits = plan.generate(&d, iteration + 1).map_err(Failure::data)?;
    let s = splits.get(iteration).ok_or_else(|| {
        Failure::config(format!(
            "{label} has {} splits, asked for index {iteration}",
            splits.len()
        ))
    })?;
    println!("{}", s.to_json());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ValidateData {
            paths,
            dedup_average,
        } => validate_data(&paths, dedup_average),
        Command::Run(args) => run(&args),
        Command::Report { out } => {
            let agg = load_aggregates(&out)?;
            print!("{}", report::render(&agg));
            Ok(())
        }
        Command::Plot { out } => {
            let agg = load_aggregates(&out)?;
            let files = plot::write_all(&agg, &out.join("plots")).map_err(Failure::runtime)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Synth {
            out,
            seed,
            datasets,
        } => synth(&out, seed, datasets.as_deref()),
        Command::Split {
            data,
            plan,
            seed,
            iteration,
        } => split(&data, &plan, seed, iteration),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
