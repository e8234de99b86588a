use clap::Parser;

fn main() {
    let args = cdofdm::cli::Args::parse();
    if let Err(e) = cdofdm::cli::run(&args) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
