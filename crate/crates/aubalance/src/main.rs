use clap::Parser;

use aubalance::cli::{run, Args};

fn main() {
    let args = Args::parse();
    std::process::exit(run(&args));
}
