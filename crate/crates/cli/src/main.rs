use clap::Parser;

fn main() {
    let cli = toricloc_cli::Cli::parse();
    std::process::exit(toricloc_cli::execute(&cli));
}
