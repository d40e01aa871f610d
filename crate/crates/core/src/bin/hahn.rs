use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hahn::cli::{run, Command, OutputFormat, SessionConfig};

#[derive(Parser)]
#[command(name = "hahn", version, about = "Grid-based Hahn series and transseries calculator")]
struct Args {
    /// Number of terms printed
    #[arg(long, env = "HF_DEPTH", default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    depth: u32,
    /// Maximum exponential height
    #[arg(long, env = "HF_HEIGHT", default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    height: u32,
    /// Maximum expansion degree when certifying terms
    #[arg(long, env = "HF_BUDGET", default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
    budget: u32,
    #[arg(long, env = "HF_OUTPUT", value_enum, default_value_t = Output::Text)]
    output: Output,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate an expression and print its leading terms
    Eval {
        #[arg(allow_hyphen_values = true)]
        expr: String,
    },
    /// Is the set in FILE truncation closed?
    CheckTc { file: PathBuf },
    /// Is the set in FILE IL-closed?
    CheckIl { file: PathBuf },
    /// Is the set in FILE TIL-closed?
    CheckTil { file: PathBuf },
    /// Print the IL closure of the set in FILE
    IlClose { file: PathBuf },
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cfg = SessionConfig {
        depth: args.depth as usize,
        height: args.height as usize,
        budget: args.budget as usize,
        output: match args.output {
            Output::Text => OutputFormat::Text,
            Output::Json => OutputFormat::Json,
        },
    };
    let cmd = match args.cmd {
        Cmd::Eval { expr } => Command::Eval(expr),
        Cmd::CheckTc { file } => Command::CheckTc(file),
        Cmd::CheckIl { file } => Command::CheckIl(file),
        Cmd::CheckTil { file } => Command::CheckTil(file),
        Cmd::IlClose { file } => Command::IlClose(file),
    };
    let out = run(&cmd, &cfg);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    ExitCode::from(out.code as u8)
}
