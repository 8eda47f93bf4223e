mod args;
mod commands;
mod config;
mod fail;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version exit 0, usage errors exit 2
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { fail::USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Eval(a) => commands::eval(a),
        Command::Report(a) => commands::report(a),
        Command::Rulings(a) => commands::rulings(a),
        Command::Rigidity(a) => commands::rigidity(a),
        Command::Verify(a) => commands::verify(a),
        Command::Corpus(a) => commands::list_corpus(a),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            for line in &out.lines {
                if writeln!(stdout, "{line}").is_err() {
                    break;
                }
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
