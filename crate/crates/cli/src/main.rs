use clap::Parser;

fn main() {
    let cli = svmp_cli::cli::Cli::parse();
    if let Err(e) = svmp_cli::run(cli) {
        eprintln!("error: {}: {}", e.category(), e);
        std::process::exit(e.exit_code());
    }
}
