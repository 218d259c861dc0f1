fn main() {
    std::process::exit(emcm::cli::run(std::env::args_os()));
}
