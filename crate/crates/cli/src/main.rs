fn main() {
    std::process::exit(occulp_cli::main_with_args(std::env::args_os()));
}
