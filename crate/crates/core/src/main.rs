use clap::Parser;

use fpt_core::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
