//! Command-line front end for the `heisenspec` library.
//!
//! [`run_command`] takes an argument vector and two writers and returns the
//! process exit code: 0 on success, 2 when the inputs violate a
//! precondition (a condition that fails, an excluded parameter, a bad
//! config), 1 for internal failures.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};
use heisenspec::conventions::ConventionsLedger;
use serde_json::{Map, Value};

use config::{ConfigFile, List};
use output::{record, Format};

pub use output::{emit_table, TableRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;

/// Default ledger location, relative to the working directory.
pub const DEFAULT_LEDGER: &str = "heisenspec-ledger.json";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Library(#[from] heisenspec::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("refusing to mix {0} in one table")]
    MixedTable(String),
    #[error("output: {0}")]
    Output(String),
    #[error("accuracy: {0}")]
    Tolerance(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    /// A condition was evaluated and fails; the report is still emitted.
    #[error("{0}")]
    ConditionFails(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Library(e) if e.is_precondition() => EXIT_PRECONDITION,
            CliError::Config(_) | CliError::MixedTable(_) | CliError::ConditionFails(_) => EXIT_PRECONDITION,
            _ => EXIT_INTERNAL,
        }
    }

    pub fn reason(&self) -> &'static str {
        match self {
            CliError::Library(e) => e.reason(),
            CliError::Config(_) => "config",
            CliError::MixedTable(_) => "mixed_table",
            CliError::Output(_) => "output",
            CliError::Tolerance(_) => "tolerance",
            CliError::Io(_) => "io",
            CliError::ConditionFails(_) => "condition_fails",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "heisenspec", version, about = "Hypoellipticity conditions, heat kernels and Weyl constants for Heisenberg-manifold sublaplacians")]
pub struct Cli {
    /// Output format: json or csv (weyl-table defaults to csv, the rest to json).
    #[arg(long, global = true)]
    pub format: Option<Format>,
    /// Write the artifact here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// key=value file supplying defaults for any long option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Conventions ledger to read (and, for nilcheck, write).
    #[arg(long, global = true)]
    pub ledger: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the hypoellipticity conditions Y(q), X(k) and X(p,q).
    Conditions(commands::ConditionsArgs),
    /// Model heat kernel k_mu(x0, x', t).
    Mehler(commands::MehlerArgs),
    /// The constant nu(mu) = k_mu(0,0,1)/(n+1)!.
    Nu(commands::NuArgs),
    /// Tables of Weyl constants.
    WeylTable(commands::WeylTableArgs),
    /// Weyl constant of the Gover-Graham operator of order 2k.
    GgConstant(commands::GgArgs),
    /// Count eigenvalues on the Heisenberg nilmanifold and settle the volume prefactor.
    Nilcheck(commands::NilcheckArgs),
    /// Print the conventions ledger.
    Conventions,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Conditions(_) => "conditions",
            Command::Mehler(_) => "mehler",
            Command::Nu(_) => "nu",
            Command::WeylTable(_) => "weyl-table",
            Command::GgConstant(_) => "gg-constant",
            Command::Nilcheck(_) => "nilcheck",
            Command::Conventions => "conventions",
        }
    }
}

/// Resolved global settings plus the config file for command options.
pub struct Context {
    pub format: Format,
    pub output: Option<PathBuf>,
    pub ledger_path: PathBuf,
    pub file: ConfigFile,
}

impl Context {
    /// Ledger on disk if present, otherwise the built-in one.
    pub fn ledger(&self) -> Result<ConventionsLedger, CliError> {
        load_ledger(&self.ledger_path)
    }
}

pub fn load_ledger(path: &Path) -> Result<ConventionsLedger, CliError> {
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        Ok(ConventionsLedger::from_json(&text)?)
    } else {
        Ok(ConventionsLedger::standard()?)
    }
}

/// What a command produced: the bytes to write and the exit status.
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub error: Option<CliError>,
}

fn allowed_keys(cmd: &str) -> Vec<String> {
    let root = Cli::command();
    let mut keys: Vec<String> = root.get_arguments().map(|a| a.get_id().to_string()).collect();
    if let Some(sub) = root.find_subcommand(cmd) {
        keys.extend(sub.get_arguments().map(|a| a.get_id().to_string()));
    }
    keys.retain(|k| k != "config" && k != "help" && k != "version");
    keys
}

fn context(cli: &Cli) -> Result<Context, CliError> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let allowed = allowed_keys(cli.command.name());
    file.check_keys(allowed.iter().map(String::as_str))?;
    // tables read most naturally as CSV; everything else defaults to JSON
    let default_format = match cli.command {
        Command::WeylTable(_) => Format::Csv,
        _ => Format::Json,
    };
    let format = file.resolve_or(cli.format, "format", default_format)?;
    let output = file.resolve(cli.output.clone(), "output")?;
    let ledger_path = match file.resolve(cli.ledger.clone(), "ledger")? {
        Some(p) => p,
        None => std::env::var_os("HEISENSPEC_LEDGER")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_LEDGER)),
    };
    Ok(Context {
        format,
        output,
        ledger_path,
        file,
    })
}

fn error_artifact(command: &str, conventions: &str, err: &CliError, format: Format) -> Vec<u8> {
    let mut fields = Map::new();
    fields.insert("error".into(), Value::from(err.to_string()));
    fields.insert("reason".into(), Value::from(err.reason()));
    fields.insert("exit_code".into(), Value::from(err.exit_code()));
    match format {
        Format::Json => output::emit_record(&record(command, conventions, fields), Format::Json).unwrap_or_default(),
        Format::Csv => Vec::new(),
    }
}

/// Parses `args` (including the program name), runs the command and writes
/// the artifact. Returns the exit code.
pub fn run_command<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PRECONDITION } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let name = cli.command.name();
    let ctx = match context(&cli) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            let format = cli.format.unwrap_or(Format::Json);
            let _ = stdout.write_all(&error_artifact(name, "", &e, format));
            return e.exit_code();
        }
    };
    let conventions = ctx.ledger().map(|l| l.hash()).unwrap_or_default();
    let outcome = commands::dispatch(&cli.command, &ctx, stderr);
    let (bytes, code) = match outcome {
        Ok(Outcome { bytes, error: None }) => (bytes, EXIT_OK),
        Ok(Outcome { bytes, error: Some(e) }) => {
            let _ = writeln!(stderr, "error: {e}");
            (bytes, e.exit_code())
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            (error_artifact(name, &conventions, &e, ctx.format), e.exit_code())
        }
    };
    let written = match &ctx.output {
        Some(path) => std::fs::write(path, &bytes),
        None => stdout.write_all(&bytes),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write output: {e}");
        return EXIT_INTERNAL;
    }
    code
}

/// Helper for list-valued options.
pub(crate) type Floats = List<f64>;
pub(crate) type Sizes = List<usize>;
