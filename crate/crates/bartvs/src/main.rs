use clap::Parser;

fn main() {
    let cli = bartvs::cli::Cli::parse();
    if let Err(e) = bartvs::cli::run(cli) {
        eprintln!("bartvs: {e}");
        std::process::exit(e.exit_code());
    }
}
