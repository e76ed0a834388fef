use std::io::Write;

use clap::Parser;
use motic::cli::{explain_bytes, max_terms_from_env, run_bytes, Cli, Command};

fn main() {
    let cli = Cli::parse();
    let max_terms = match max_terms_from_env() {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    };
    let path = match &cli.command {
        Command::Run(a) => &a.profile,
        Command::Explain(a) => &a.profile,
    };
    let src = match std::fs::read(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {path}: {e}");
            std::process::exit(3);
        }
    };
    let out = match &cli.command {
        Command::Run(a) => run_bytes(&src, a, max_terms),
        Command::Explain(a) => explain_bytes(&src, a, max_terms),
    };
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.text.as_bytes());
    let _ = stdout.flush();
    std::process::exit(out.code);
}
