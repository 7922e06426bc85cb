//! `momtail`: exact moment sequences, tail-order comparisons, counterexample
//! constructions, filter queries and lexicographic games.

mod args;
mod cache;
mod commands;
mod failure;
mod output;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = failure::classify(&err);
            eprintln!("{}", failure::diagnostic(&err, code));
            ExitCode::from(code as u8)
        }
    }
}
