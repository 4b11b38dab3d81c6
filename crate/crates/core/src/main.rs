use clap::Parser;

use hspec::cli::{configure_threads, emit, exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    let result = configure_threads()
        .and_then(|()| run(&cli))
        .and_then(|out| emit(&out));
    if let Err(e) = result {
        eprintln!("hspec: {e}");
        std::process::exit(exit_code(&e));
    }
}
