use manifold_seg::cli::{configure_threads, run_command};

fn main() {
    configure_threads();
    std::process::exit(run_command(std::env::args().collect()));
}
