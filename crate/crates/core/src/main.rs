use clap::Parser;

use confhor::cli::{run, Cli};
use confhor::numerics::init_thread_pool;

fn main() {
    init_thread_pool();
    std::process::exit(run(Cli::parse()));
}
