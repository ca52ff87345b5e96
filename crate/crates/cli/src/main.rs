//! `splitscore` command-line tool.
//!
//! Exit codes: 0 success, 1 I/O or file-format failure, 2 validation
//! failure, 3 numerical failure. Errors print one machine-readable line on
//! stderr: `error code=<n> detail=<message>`.

mod args;
mod commands;
mod config;
mod modelspec;
mod sink;

use clap::Parser;

fn main() {
    let cli = args::Cli::parse();
    let result = match &cli.command {
        args::Command::Split(a) => commands::cmd_split(a),
        args::Command::OracleCheck(a) => commands::cmd_oracle_check(a),
        args::Command::Discriminate(a) => commands::cmd_discriminate(a),
        args::Command::Score(a) => commands::cmd_score(a),
        args::Command::SelectKernel(a) => commands::cmd_select_kernel(a),
        args::Command::OodTest(a) => commands::cmd_ood_test(a),
    };
    if let Err(e) = result {
        let code = commands::exit_code(&e);
        eprintln!("error code={code} detail={e}");
        std::process::exit(code);
    }
}
