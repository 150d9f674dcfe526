use clap::Parser;

use warpcurv::cli::{run, Cli, EXIT_ERROR};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = std::panic::catch_unwind(|| run(cli)).unwrap_or_else(|_| {
        eprintln!("error: internal failure");
        EXIT_ERROR
    });
    std::process::exit(code);
}
