use clap::Parser;

fn main() {
    let cli = blockseg::cli::Cli::parse();
    if let Err(err) = blockseg::cli::run(cli) {
        eprintln!("blockseg: {err}");
        std::process::exit(err.exit_code());
    }
}
