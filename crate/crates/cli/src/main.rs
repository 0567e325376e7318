mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Eval(a) => commands::eval(a),
        Command::Maxload(a) => commands::maxload(a),
        Command::Tail(a) => commands::tail(a),
        Command::Scaling(a) => commands::scaling(a),
        Command::Exhaustive(a) => commands::exhaustive(a),
        Command::LemmaCheck(a) => commands::lemma_check(a),
        Command::Genkeys(a) => commands::genkeys(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
