fn main() {
    std::process::exit(logkpp::cli::run(std::env::args_os()));
}
