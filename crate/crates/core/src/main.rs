use clap::Parser;
use fogsched::cli::{execute, Cli, Failure};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(cli) {
        if !matches!(e, Failure::Violations(_)) {
            eprintln!("error: {e}");
        }
        std::process::exit(e.exit_code());
    }
}
