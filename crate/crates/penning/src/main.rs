use clap::Parser;

fn main() {
    let cli = penning::cli::Cli::parse();
    std::process::exit(penning::cli::run(cli));
}
