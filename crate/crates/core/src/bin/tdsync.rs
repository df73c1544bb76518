use clap::Parser;

use tdsync::cli::{main_with, CliArgs};

fn main() {
    std::process::exit(main_with(CliArgs::parse()));
}
