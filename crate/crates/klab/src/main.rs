use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use klab::cli::{self, EXIT_USAGE};
use klab::config::{Config, OutputFormat};

#[derive(Parser)]
#[command(
    name = "klab",
    about = "Desk-scale laboratory for plain and prefix-free Kolmogorov complexity",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// Config file with key = value lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Max total string length for pair scans.
    #[arg(long = "scale-L", value_name = "N", global = true)]
    scale_l: Option<u32>,
    /// Max program bits P.
    #[arg(long = "prog-bits", value_name = "N", global = true)]
    prog_bits: Option<u32>,
    /// Step budget T.
    #[arg(long, value_name = "N", global = true)]
    budget: Option<u32>,
    /// Worker threads; 0 = autodetect.
    #[arg(long, value_name = "N", global = true)]
    workers: Option<usize>,
    /// Report format: csv or json.
    #[arg(long, value_name = "FMT", global = true)]
    format: Option<String>,
    /// Cache directory (default: $KLAB_CACHE_DIR or ./klab-cache).
    #[arg(long = "cache-dir", value_name = "PATH", global = true)]
    cache_dir: Option<PathBuf>,
    /// Also write the report payload to this file.
    #[arg(long, value_name = "PATH", global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the frozen reference machine.
    Machine {
        #[command(subcommand)]
        sub: MachineCmd,
    },
    /// Build or refresh the complexity-table caches.
    Tables {
        #[command(subcommand)]
        sub: TablesCmd,
    },
    /// Measure one identity (or all) and check pinned regression bounds.
    Verify {
        /// Identity tag (THM1, PROP2, ..., REMARK_SCAN) or "all".
        identity: String,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Combine report files into one document keyed by identity and scale.
    Report {
        #[command(subcommand)]
        sub: ReportCmd,
    },
}

#[derive(Subcommand)]
enum MachineCmd {
    /// Print the canonical serialization and fingerprint.
    Describe,
}

#[derive(Subcommand)]
enum TablesCmd {
    Build {
        #[command(flatten)]
        opts: CommonOpts,
    },
}

#[derive(Subcommand)]
enum ReportCmd {
    Merge {
        /// Output path for the merged document.
        #[arg(long, required = true)]
        out: PathBuf,
        /// Input report files (JSON arrays from verify).
        inputs: Vec<PathBuf>,
    },
}

fn build_config(opts: &CommonOpts) -> Result<Config, String> {
    let mut cfg = Config::default();
    if let Some(path) = &opts.config {
        cfg.apply_file(path).map_err(|e| e.to_string())?;
    }
    if let Some(l) = opts.scale_l {
        cfg.scale_l = l;
    }
    if let Some(p) = opts.prog_bits {
        cfg.prog_bits = p;
    }
    if let Some(t) = opts.budget {
        cfg.budget = t;
    }
    if let Some(w) = opts.workers {
        cfg.workers = w;
    }
    if let Some(f) = &opts.format {
        cfg.output_format = OutputFormat::parse(f)
            .ok_or_else(|| format!("--format must be csv or json, got {f:?}"))?;
    }
    if let Some(dir) = &opts.cache_dir {
        cfg.cache_dir = dir.clone();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    if cfg.workers > 0 {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };

    let code = match cli.command {
        Command::Machine { sub: MachineCmd::Describe } => cli::cmd_machine_describe(),
        Command::Tables { sub: TablesCmd::Build { opts } } => match build_config(&opts) {
            Ok(cfg) => cli::cmd_tables_build(&cfg),
            Err(msg) => {
                eprintln!("klab: {msg}");
                EXIT_USAGE
            }
        },
        Command::Verify { identity, opts } => match build_config(&opts) {
            Ok(cfg) => cli::cmd_verify(&identity, &cfg, opts.out.as_deref()),
            Err(msg) => {
                eprintln!("klab: {msg}");
                EXIT_USAGE
            }
        },
        Command::Report { sub: ReportCmd::Merge { out, inputs } } => {
            cli::cmd_report_merge(&inputs, &out)
        }
    };
    ExitCode::from(code as u8)
}
