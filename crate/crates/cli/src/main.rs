use clap::Parser;

fn main() {
    let cli = ctrex_cli::Cli::parse();
    std::process::exit(ctrex_cli::run(cli));
}
