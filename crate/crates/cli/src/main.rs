use clap::Parser;
use doubleshrink_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = doubleshrink_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
