fn main() {
    std::process::exit(hyperpam::cli::run(std::env::args_os()));
}
