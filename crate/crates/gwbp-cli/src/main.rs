use std::process::ExitCode;

use clap::Parser;

use gwbp_cli::spec::{Command, Params, RunSpec};
use gwbp_cli::{error_json, exit_code, output, resolve, run_to_bytes};

/// Galton-Watson survival bounds, S_inf estimates and fixation probabilities.
#[derive(Debug, Parser)]
#[command(name = "gwb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
    /// Print the run specification as JSON instead of executing it.
    #[arg(long, global = true)]
    print_spec: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = RunSpec {
        command: cli.command,
        params: cli.params,
    };
    let result = if cli.print_spec {
        output::emit(format!("{}\n", spec.to_json()).as_bytes(), None)
    } else {
        resolve(spec).and_then(|spec| {
            let bytes = run_to_bytes(&spec)?;
            output::emit(&bytes, spec.params.out.as_deref())
        })
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
