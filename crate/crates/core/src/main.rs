use clap::Parser;

fn main() {
    let cli = wavelab::cli::Cli::parse();
    std::process::exit(wavelab::cli::run(&cli));
}
