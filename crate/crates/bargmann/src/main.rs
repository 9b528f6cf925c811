use clap::Parser;

use bargmann::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = bargmann::commands::run(cli.command) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
