use clap::Parser;

fn main() {
    let cli = distlab::harness::Cli::parse();
    match distlab::harness::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
