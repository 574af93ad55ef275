//! Command-line entry point.

fn main() {
    let code = continual_dp::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
