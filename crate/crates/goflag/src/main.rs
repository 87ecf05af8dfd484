use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use goflag::cli::{run, Cli, EXIT_ERROR};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = run(&cli);
    let written = if out.code == EXIT_ERROR {
        std::io::stderr().write_all(out.text.as_bytes())
    } else if let Some(path) = cli.out_path() {
        std::fs::write(path, &out.text)
    } else {
        std::io::stdout().write_all(out.text.as_bytes())
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_ERROR as u8);
    }
    ExitCode::from(out.code as u8)
}
