mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use chronobell::Error;

/// 2: usage or parameter problems, 3: the lambda source ran out of words.
fn exit_status(e: &Error) -> u8 {
    match e {
        Error::StreamExhausted { .. } | Error::Capacity { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Chsh(a) => commands::chsh(a),
        Command::Covariance(a) => commands::covariance(a),
        Command::Nogo(a) => commands::nogo(a),
        Command::Flash(a) => commands::flash(a),
        Command::GenLambda(a) => commands::gen_lambda(a),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.report.as_bytes());
            if out.status != 0 {
                eprintln!("error: internal cross-checks disagree");
            }
            ExitCode::from(out.status as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}
