//! Command-line driver behind the `s2sl` binary.
//!
//! Subcommands: `synth`, `gradcheck`, `train`, `bench`. Every source of
//! randomness is derived from `--seed`, so repeating a command with the same
//! flags reproduces its output byte for byte.
//!
//! Exit codes: 0 success, 1 gradient check failure, 2 data error (unreadable
//! or malformed input, unwritable output, training blow-up), 3 configuration
//! error.
//!
//! A `--config FILE` of `key = value` lines (keys are flag names without the
//! leading dashes, `#` starts a comment) supplies defaults; flags given on the
//! command line take precedence.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::datasets::{gen_gaussian_two_class, load_csv, write_csv, CsvOptions, Dataset};
use crate::error::Error;
use crate::evalharness::{
    run_experiment, run_holdout, GridMode, HarnessConfig, HiddenSpec, Method, ProportionSpec,
    RefPolicyKind,
};
use crate::nnet::{finite_diff_check_with, init_network, GradCheckReport, NetConfig, Network};
use crate::numkit::{Matrix, RngStream};

pub const EXIT_OK: i32 = 0;
pub const EXIT_GRADCHECK: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Tolerance for `gradcheck`.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(
    name = "s2sl",
    version,
    about = "Simultaneous two-sample learning experiments",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic two-class Gaussian dataset as CSV.
    Synth(SynthArgs),
    /// Compare analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Train one model on a stratified split and report held-out metrics.
    Train(TrainArgs),
    /// Cross-validated s2sL vs MLP comparison over training-data proportions.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SynthParams {
    /// Feature dimension.
    #[arg(long = "d", default_value_t = 13)]
    d: usize,
    /// Samples in the first class.
    #[arg(long, default_value_t = 60)]
    n1: usize,
    /// Samples in the second class.
    #[arg(long, default_value_t = 60)]
    n2: usize,
    /// Distance between the class means along every axis.
    #[arg(long, default_value_t = 1.0)]
    sep: f64,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Feature CSV (d numeric columns, then a label). Synthetic data is generated when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Skip the first line of the CSV.
    #[arg(long)]
    header: bool,
    #[command(flatten)]
    synth: SynthParams,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RefPolicyArg {
    Stratified,
    All,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Hidden units: a fixed count, `search` (2, 4, 8, ... up to twice the
    /// input width) or `search-all` (every count in that range).
    #[arg(long, default_value = "search")]
    hidden: String,
    /// Number of reference samples used for voting.
    #[arg(long = "refs", default_value_t = crate::s2s::DEFAULT_REFERENCES)]
    refs: usize,
    #[arg(long = "ref-policy", value_enum, default_value_t = RefPolicyArg::Stratified)]
    ref_policy: RefPolicyArg,
    #[arg(long, default_value_t = NetConfig::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = NetConfig::DEFAULT_LR)]
    lr: f64,
    #[arg(long, default_value_t = NetConfig::DEFAULT_BATCH)]
    batch: usize,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    params: SynthParams,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; an existing directory receives `synthetic.csv`.
    #[arg(long, default_value = "synthetic.csv")]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Deliberately break the w2 gradient (for testing the checker).
    #[arg(long)]
    corrupt: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "s2sl")]
    method: String,
    /// Fraction of each class held out for evaluation.
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory to write `model.txt` into.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// `s2sl`, `mlp` or `both`.
    #[arg(long, default_value = "both")]
    method: String,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Comma list of numerators over 4, e.g. `1,2,3,4`.
    #[arg(long, default_value = "1,2,3,4")]
    proportions: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Task name used in the reports; defaults to the dataset name.
    #[arg(long)]
    task: Option<String>,
    /// Directory for `report.csv` and `report.txt`.
    #[arg(long, default_value = "s2sl-out")]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Error raised by a command, with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Config(_) | Error::Shape { .. } => EXIT_CONFIG,
            _ => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Runs the binary with process arguments (program name first) and returns
/// the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_output(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with_output<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config_file(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            return e.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(&a, out),
        Command::Gradcheck(a) => cmd_gradcheck(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

/// Inserts `--key value` pairs from a `--config FILE` right after the
/// subcommand so that later command-line flags override them.
fn expand_config_file(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let pos = args.iter().position(|a| a == "--config");
    let inline = args
        .iter()
        .position(|a| a.to_string_lossy().starts_with("--config="));
    let path = match (pos, inline) {
        (Some(i), _) => match args.get(i + 1) {
            Some(p) => PathBuf::from(p),
            None => return Ok(args),
        },
        (None, Some(i)) => PathBuf::from(&args[i].to_string_lossy()["--config=".len()..]),
        (None, None) => return Ok(args),
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| {
                CliError::config(format!(
                    "{}:{}: expected `key = value`",
                    path.display(),
                    n + 1
                ))
            })?;
        if key.is_empty() || key == "config" {
            return Err(CliError::config(format!(
                "{}:{}: invalid key `{key}`",
                path.display(),
                n + 1
            )));
        }
        match value {
            "true" => extra.push(OsString::from(format!("--{key}"))),
            "false" => {}
            v => {
                extra.push(OsString::from(format!("--{key}")));
                extra.push(OsString::from(v));
            }
        }
    }
    // program name and subcommand come first
    let split = args.len().min(2);
    let mut out: Vec<OsString> = args[..split].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[split..]);
    Ok(out)
}

fn load_dataset(a: &DataArgs, seed: u64) -> CliResult<Dataset> {
    match &a.data {
        Some(path) => Ok(load_csv(
            path,
            &CsvOptions {
                dim: None,
                header: a.header,
            },
        )?),
        None => {
            let p = &a.synth;
            let mut rng = RngStream::derive(seed, &[0x5A7]);
            Ok(gen_gaussian_two_class(p.d, p.n1, p.n2, p.sep, &mut rng)?)
        }
    }
}

fn parse_hidden(s: &str) -> CliResult<HiddenSpec> {
    match s {
        "search" => Ok(HiddenSpec::Search(GridMode::Geometric)),
        "search-all" => Ok(HiddenSpec::Search(GridMode::Exhaustive)),
        n => match n.parse::<usize>() {
            Ok(h) if h >= 1 => Ok(HiddenSpec::Fixed(h)),
            _ => Err(CliError::config(format!(
                "--hidden expects a count >= 1, `search` or `search-all`, got `{n}`"
            ))),
        },
    }
}

fn parse_methods(s: &str) -> CliResult<Vec<Method>> {
    if s.eq_ignore_ascii_case("both") {
        return Ok(Method::BOTH.to_vec());
    }
    Ok(vec![s.parse::<Method>()?])
}

fn harness_config(model: &ModelArgs, seed: u64) -> CliResult<HarnessConfig> {
    Ok(HarnessConfig {
        hidden: parse_hidden(&model.hidden)?,
        references: model.refs,
        reference_policy: match model.ref_policy {
            RefPolicyArg::Stratified => RefPolicyKind::Stratified,
            RefPolicyArg::All => RefPolicyKind::All,
        },
        epochs: model.epochs,
        learning_rate: model.lr,
        batch_size: model.batch,
        seed,
        ..HarnessConfig::default()
    })
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| Error::io(path, e).into()
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> CliResult<i32> {
    let p = &a.params;
    let mut rng = RngStream::derive(a.seed, &[0x5A7]);
    let ds = gen_gaussian_two_class(p.d, p.n1, p.n2, p.sep, &mut rng)?;
    let path = if a.out.is_dir() {
        a.out.join("synthetic.csv")
    } else {
        a.out.clone()
    };
    write_csv(&ds, &path)?;
    let counts = ds.class_counts();
    writeln!(
        out,
        "wrote {}: {} rows ({}={}, {}={}), d={}",
        path.display(),
        ds.len(),
        ds.class_names[0],
        counts[0],
        ds.class_names[1],
        counts[1],
        ds.dim()
    )
    .map_err(io_err(Path::new("<stdout>")))?;
    Ok(EXIT_OK)
}

/// Random small networks and batches for both output/loss pairings.
fn gradcheck_fixtures(seed: u64) -> Vec<(&'static str, Network, Matrix, Matrix)> {
    let mut rng = RngStream::derive(seed, &[0x6C]);
    let mut out = Vec::new();
    for (name, cfg) in [
        ("sigmoid+bce", NetConfig::s2s(3, 2, 4)),
        ("softmax+cross_entropy", NetConfig::baseline(3, 2, 4)),
    ] {
        let net = init_network(cfg.clone(), &mut rng).expect("fixture config is valid");
        let rows = 8;
        let x = Matrix::from_fn(rows, cfg.input_dim, |_, _| rng.uniform(-1.0, 1.0));
        let t = match cfg.output_activation {
            crate::nnet::OutputActivation::Sigmoid => {
                Matrix::from_fn(rows, cfg.output_dim, |_, _| rng.below(2) as f64)
            }
            crate::nnet::OutputActivation::Softmax => {
                let labels: Vec<usize> = (0..rows).map(|_| rng.below(cfg.output_dim)).collect();
                Matrix::from_fn(rows, cfg.output_dim, |r, c| {
                    f64::from(u8::from(labels[r] == c))
                })
            }
        };
        out.push((name, net, x, t));
    }
    out
}

fn cmd_gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> CliResult<i32> {
    let stdout_err = io_err(Path::new("<stdout>"));
    let mut failed = false;
    let mut lines = String::new();
    for (name, net, x, t) in gradcheck_fixtures(a.seed) {
        let corrupt = a.corrupt;
        let report: GradCheckReport = finite_diff_check_with(&net, &x, &t, |n, x, t| {
            let mut g = n.gradient(x, t)?;
            if corrupt {
                g.w2.data_mut()
                    .iter_mut()
                    .for_each(|v| *v = 2.0 * *v + 0.05);
            }
            Ok(g)
        })?;
        let ok = report.max_relative_error < GRADCHECK_TOLERANCE;
        lines.push_str(&format!(
            "{name}: max relative error {:.3e} over {} parameters ({})\n",
            report.max_relative_error,
            report.parameters_checked,
            if ok { "ok" } else { "FAIL" }
        ));
        if !ok {
            failed = true;
            if let Some(coord) = report.worst {
                lines.push_str(&format!(
                    "  worst at {coord}: analytic {:.6e}, numeric {:.6e}\n",
                    report.worst_analytic, report.worst_numeric
                ));
            }
        }
    }
    out.write_all(lines.as_bytes()).map_err(stdout_err)?;
    Ok(if failed { EXIT_GRADCHECK } else { EXIT_OK })
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> CliResult<i32> {
    if !(a.holdout > 0.0 && a.holdout < 1.0) {
        return Err(CliError::config(format!(
            "--holdout must be in (0, 1), got {}",
            a.holdout
        )));
    }
    let method: Method = a.method.parse()?;
    let cfg = harness_config(&a.model, a.seed)?;
    cfg.validate()?;
    let ds = load_dataset(&a.data, a.seed)?;
    let r = run_holdout(&ds, method, a.holdout, &cfg)?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        r.model.network().save(dir.join("model.txt"))?;
    }
    let c = r.confusion;
    writeln!(
        out,
        "method={} hidden={} train={} test={} accuracy={:.2} f1={:.4} tp={} fp={} fn={} tn={}",
        method.id(),
        r.hidden_units,
        r.train_size,
        r.test_size,
        r.accuracy,
        r.f1,
        c.tp,
        c.fp,
        c.fn_,
        c.tn
    )
    .map_err(io_err(Path::new("<stdout>")))?;
    Ok(EXIT_OK)
}

fn parse_proportions(s: &str) -> CliResult<Vec<ProportionSpec>> {
    let mut props: Vec<ProportionSpec> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    props.sort();
    props.dedup();
    if props.is_empty() {
        return Err(CliError::config("--proportions needs at least one value"));
    }
    Ok(props)
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> CliResult<i32> {
    let mut cfg = harness_config(&a.model, a.seed)?;
    cfg.folds = a.folds;
    cfg.proportions = parse_proportions(&a.proportions)?;
    cfg.methods = parse_methods(&a.method)?;
    cfg.validate()?;
    let ds = load_dataset(&a.data, a.seed)?;
    cfg.task = a.task.clone().unwrap_or_else(|| ds.name.clone());
    if cfg.task.contains(',') || cfg.task.contains('\n') {
        return Err(CliError::config(
            "--task must not contain commas or newlines",
        ));
    }
    let report = run_experiment(&ds, &cfg)?;

    create_dir(&a.out)?;
    let csv_path = a.out.join("report.csv");
    let table_path = a.out.join("report.txt");
    let table = report.to_table();
    std::fs::write(&csv_path, report.to_csv()).map_err(io_err(&csv_path))?;
    std::fs::write(&table_path, &table).map_err(io_err(&table_path))?;
    write!(out, "{table}").map_err(io_err(Path::new("<stdout>")))?;
    writeln!(
        out,
        "\nwrote {} and {}",
        csv_path.display(),
        table_path.display()
    )
    .map_err(io_err(Path::new("<stdout>")))?;
    Ok(EXIT_OK)
}
