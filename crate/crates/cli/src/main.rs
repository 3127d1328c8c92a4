use clap::Parser;

fn main() {
    let cli = minmax_lab_cli::Cli::parse();
    std::process::exit(minmax_lab_cli::run(cli));
}
