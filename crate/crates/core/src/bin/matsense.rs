fn main() {
    std::process::exit(matsense::cli::run(std::env::args_os()));
}
