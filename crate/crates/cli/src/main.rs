use clap::Parser;

fn main() {
    std::process::exit(fq_cli::run(fq_cli::Cli::parse()));
}
