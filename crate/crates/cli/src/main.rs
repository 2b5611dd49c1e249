//! Command line front end for the tracerisk library.
//!
//! Three subcommands cover the usual workflow: `generate` produces a
//! synthetic call detail dataset plus a matching tower hierarchy,
//! `assess` runs the full risk assessment over a generalization grid,
//! and `unicity` estimates unicity curves on their own.
//!
//! Exit codes: 0 on success, 2 for usage or configuration problems,
//! 3 for malformed input data.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tracerisk_core::generalize::Generalizer;
use tracerisk_core::io::cdr::{parse_cdr, write_cdr, CdrSchemaConfig};
use tracerisk_core::io::report::{write_report, write_unicity_report, ReportFormat, UnicityReport};
use tracerisk_core::io::spatial::{parse_spatial_map, write_spatial_map};
use tracerisk_core::io::utility::{parse_utility_scores, UtilityTable};
use tracerisk_core::model::{GeneralizationProfile, SpatialHierarchy};
use tracerisk_core::reident::{self, CensoredPolicy, ReidentConfig, TraceSizeBasis};
use tracerisk_core::stats::build_report;
use tracerisk_core::synth::{self, LevelSpec, SynthConfig};

#[derive(Parser)]
#[command(name = "tracerisk", version, about = "Reidentification risk assessment for location traces")]
struct Cli {
    /// Worker threads for the parallel stages (0 or absent: all cores)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic call dataset and tower hierarchy
    Generate(GenerateArgs),
    /// Assess reidentification risk across a generalization grid
    Assess(AssessArgs),
    /// Estimate unicity across a generalization grid
    Unicity(UnicityArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of simulated users
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    users: u32,

    /// Length of the observation period in days
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    days: u32,

    /// Number of antenna towers
    #[arg(long, default_value_t = 2130, value_parser = clap::value_parser!(u32).range(1..))]
    towers: u32,

    /// Zone count for the finest spatial level
    #[arg(long, default_value_t = 2130, value_parser = clap::value_parser!(u32).range(1..))]
    zips: u32,

    /// Zone count for the middle spatial level
    #[arg(long, default_value_t = 156, value_parser = clap::value_parser!(u32).range(1..))]
    districts: u32,

    /// Zone count for the coarsest spatial level
    #[arg(long, default_value_t = 56, value_parser = clap::value_parser!(u32).range(1..))]
    municipalities: u32,

    /// Median calls per user over the whole period
    #[arg(long, default_value_t = 50.0)]
    calls_median: f64,

    /// Log-normal sigma for per-user call counts
    #[arg(long, default_value_t = 1.0)]
    calls_sigma: f64,

    /// Anchor towers per user
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    anchors: u32,

    /// Seed for the generator
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Directory that receives cdr.csv and hierarchy.csv
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct AssessArgs {
    /// Call detail records, CSV
    #[arg(long, value_name = "FILE")]
    cdr: PathBuf,

    /// Tower-to-zone hierarchy, CSV
    #[arg(long, value_name = "FILE")]
    hierarchy: PathBuf,

    /// Spatial levels to assess (default: every level in the hierarchy)
    #[arg(long, value_delimiter = ',', value_name = "LEVEL,..")]
    spatial: Option<Vec<String>>,

    /// Temporal slice widths in hours
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 6, 12, 24], value_name = "HOURS,..")]
    temporal: Vec<u32>,

    /// Random point orderings per user for the cost estimate
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    trials: u32,

    /// Sampled subsets per user and prefix size for the unicity estimate
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..))]
    unicity_trials: u32,

    /// Unicity prefix sizes
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 3, 4, 5], value_parser = clap::value_parser!(u32).range(1..), value_name = "P,..")]
    p: Vec<u32>,

    /// Seed for all sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// How users whose full trace is not unique enter the cost average
    #[arg(long, value_enum, default_value_t = PolicyArg::Exclude)]
    censored_policy: PolicyArg,

    /// Whether trace size counts distinct points or raw records
    #[arg(long, value_enum, default_value_t = BasisArg::DistinctPoints)]
    basis: BasisArg,

    /// Utility scores per profile, CSV
    #[arg(long, value_name = "FILE")]
    utility: Option<PathBuf>,

    /// Partition the grid into Pareto-efficient and dominated profiles
    #[arg(long, requires = "utility")]
    pareto: bool,

    /// Timestamp format of the time column
    #[arg(long, default_value = "%y-%m-%d %H:%M")]
    time_format: String,

    /// Timezone the records were logged in
    #[arg(long, default_value = "UTC")]
    timezone: String,

    /// Field delimiter of the CDR file
    #[arg(long, default_value_t = ',')]
    delimiter: char,

    /// Report format
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// Report destination
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct UnicityArgs {
    /// Call detail records, CSV
    #[arg(long, value_name = "FILE")]
    cdr: PathBuf,

    /// Tower-to-zone hierarchy, CSV
    #[arg(long, value_name = "FILE")]
    hierarchy: PathBuf,

    /// Spatial levels to assess (default: every level in the hierarchy)
    #[arg(long, value_delimiter = ',', value_name = "LEVEL,..")]
    spatial: Option<Vec<String>>,

    /// Temporal slice widths in hours
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 6, 12, 24], value_name = "HOURS,..")]
    temporal: Vec<u32>,

    /// Unicity prefix sizes
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 3, 4], value_parser = clap::value_parser!(u32).range(1..), value_name = "P,..")]
    p: Vec<u32>,

    /// Sampled subsets per user and prefix size
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..))]
    trials: u32,

    /// Seed for all sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Timestamp format of the time column
    #[arg(long, default_value = "%y-%m-%d %H:%M")]
    time_format: String,

    /// Timezone the records were logged in
    #[arg(long, default_value = "UTC")]
    timezone: String,

    /// Field delimiter of the CDR file
    #[arg(long, default_value_t = ',')]
    delimiter: char,

    /// Report format
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// Report destination (default: stdout)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Exclude,
    CountAsFull,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    DistinctPoints,
    RawRecords,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Data(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => f.write_str(msg),
        }
    }
}

impl From<tracerisk_core::Error> for CliError {
    fn from(err: tracerisk_core::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

fn usage(msg: impl fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_err() {
            eprintln!("error: thread pool already initialized");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Assess(args) => cmd_assess(args),
        Command::Unicity(args) => cmd_unicity(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.code()
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let config = SynthConfig {
        n_users: args.users,
        n_towers: args.towers,
        levels: vec![
            LevelSpec::new("zip", args.zips),
            LevelSpec::new("district", args.districts),
            LevelSpec::new("municipality", args.municipalities),
        ],
        period_days: args.days,
        calls_median: args.calls_median,
        calls_sigma: args.calls_sigma,
        anchors_per_user: args.anchors,
        seed: args.seed,
        ..SynthConfig::default()
    };
    let (dataset, hierarchy) = synth::generate(&config).map_err(usage)?;

    std::fs::create_dir_all(&args.out)
        .map_err(|err| usage(format_args!("cannot create {}: {err}", args.out.display())))?;
    let cdr_path = args.out.join("cdr.csv");
    let mut cdr_out = create_output(&cdr_path)?;
    write_cdr(&mut cdr_out, &dataset, &CdrSchemaConfig::default())
        .map_err(|err| usage(format_args!("cannot write {}: {err}", cdr_path.display())))?;
    let hierarchy_path = args.out.join("hierarchy.csv");
    let mut hierarchy_out = create_output(&hierarchy_path)?;
    write_spatial_map(&mut hierarchy_out, &hierarchy)
        .map_err(|err| usage(format_args!("cannot write {}: {err}", hierarchy_path.display())))?;

    eprintln!(
        "wrote {} records for {} users to {}",
        dataset.n_records(),
        dataset.n_users(),
        args.out.display()
    );
    Ok(())
}

fn cmd_assess(args: AssessArgs) -> Result<(), CliError> {
    let schema = schema_config(&args.time_format, &args.timezone, args.delimiter)?;
    let raw = parse_cdr(open_input(&args.cdr)?, &schema)?;
    let hierarchy = parse_spatial_map(open_input(&args.hierarchy)?)?;
    let profiles = profile_grid(&hierarchy, args.spatial.as_deref(), &args.temporal)?;

    let utilities: Option<UtilityTable> = match &args.utility {
        Some(path) => Some(parse_utility_scores(open_input(path)?)?),
        None => None,
    };

    let config = ReidentConfig {
        trials_per_user: args.trials,
        unicity_trials: args.unicity_trials,
        p_values: args.p.clone(),
        seed: args.seed,
        censored_policy: match args.censored_policy {
            PolicyArg::Exclude => CensoredPolicy::Exclude,
            PolicyArg::CountAsFull => CensoredPolicy::CountAsFull,
        },
        trace_size_basis: match args.basis {
            BasisArg::DistinctPoints => TraceSizeBasis::DistinctPoints,
            BasisArg::RawRecords => TraceSizeBasis::RawRecords,
        },
    };
    config.validate().map_err(usage)?;

    let generalizer = Generalizer::new(&raw, &hierarchy)?;
    let mut metrics = Vec::with_capacity(profiles.len());
    for profile in &profiles {
        let dataset = generalizer.generalize(profile)?;
        let m = reident::assess(&dataset, &config)?;
        match (m.c, m.r) {
            (Some(c), Some(r)) => eprintln!("{profile}: c={c:.3} r={r:.3}"),
            _ => eprintln!("{profile}: every trace censored"),
        }
        metrics.push(m);
    }

    let report = build_report(&config, metrics, utilities.as_ref(), args.pareto)?;
    let format = match args.format {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
    };
    let mut out = create_output(&args.out)?;
    write_report(&mut out, &report, format)
        .map_err(|err| usage(format_args!("cannot write {}: {err}", args.out.display())))?;
    out.flush()
        .map_err(|err| usage(format_args!("cannot write {}: {err}", args.out.display())))?;
    Ok(())
}

fn cmd_unicity(args: UnicityArgs) -> Result<(), CliError> {
    let schema = schema_config(&args.time_format, &args.timezone, args.delimiter)?;
    let raw = parse_cdr(open_input(&args.cdr)?, &schema)?;
    let hierarchy = parse_spatial_map(open_input(&args.hierarchy)?)?;
    let profiles = profile_grid(&hierarchy, args.spatial.as_deref(), &args.temporal)?;

    let mut p_values = args.p.clone();
    p_values.sort_unstable();
    p_values.dedup();
    if p_values.is_empty() {
        return Err(usage("at least one prefix size is required"));
    }

    let generalizer = Generalizer::new(&raw, &hierarchy)?;
    let mut report = UnicityReport {
        seed: args.seed,
        trials: args.trials,
        rows: Vec::new(),
    };
    for profile in &profiles {
        let dataset = generalizer.generalize(profile)?;
        for estimate in reident::unicity_many(&dataset, &p_values, args.trials, args.seed)? {
            if estimate.eligible_users == 0 {
                return Err(CliError::Data(format!(
                    "under {profile} no user has a trace of at least {} points",
                    estimate.p
                )));
            }
            report.push(profile, estimate);
        }
    }

    let format = match args.format {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
    };
    match &args.out {
        Some(path) => {
            let mut out = create_output(path)?;
            write_unicity_report(&mut out, &report, format)
                .map_err(|err| usage(format_args!("cannot write {}: {err}", path.display())))?;
            out.flush()
                .map_err(|err| usage(format_args!("cannot write {}: {err}", path.display())))?;
        }
        None => {
            let stdout = std::io::stdout();
            write_unicity_report(&mut stdout.lock(), &report, format)
                .map_err(|err| usage(format_args!("cannot write report: {err}")))?;
        }
    }
    Ok(())
}

fn schema_config(
    time_format: &str,
    timezone: &str,
    delimiter: char,
) -> Result<CdrSchemaConfig, CliError> {
    if !delimiter.is_ascii() {
        return Err(usage("delimiter must be a single ascii character"));
    }
    Ok(CdrSchemaConfig {
        time_format: time_format.to_owned(),
        timezone: timezone.to_owned(),
        delimiter: delimiter as u8,
        ..CdrSchemaConfig::default()
    })
}

fn profile_grid(
    hierarchy: &SpatialHierarchy,
    spatial: Option<&[String]>,
    temporal: &[u32],
) -> Result<Vec<GeneralizationProfile>, CliError> {
    let levels: Vec<String> = match spatial {
        Some(names) => {
            let mut resolved = Vec::new();
            for name in names {
                let level = hierarchy
                    .levels()
                    .iter()
                    .find(|l| l.eq_ignore_ascii_case(name))
                    .ok_or_else(|| {
                        usage(format_args!(
                            "unknown spatial level `{name}` (hierarchy has: {})",
                            hierarchy.levels().join(", ")
                        ))
                    })?;
                if !resolved.contains(level) {
                    resolved.push(level.clone());
                }
            }
            resolved
        }
        None => hierarchy.levels().to_vec(),
    };
    if temporal.is_empty() {
        return Err(usage("at least one temporal granularity is required"));
    }
    let mut hours: Vec<u32> = temporal.to_vec();
    hours.sort_unstable();
    hours.dedup();

    let mut profiles = Vec::with_capacity(levels.len() * hours.len());
    for level in &levels {
        for &h in &hours {
            profiles.push(GeneralizationProfile::new(level.clone(), h).map_err(usage)?);
        }
    }
    Ok(profiles)
}

fn open_input(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|err| CliError::Data(format!("cannot read {}: {err}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|err| usage(format_args!("cannot write {}: {err}", path.display())))
}
