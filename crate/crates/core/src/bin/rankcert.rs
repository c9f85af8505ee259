fn main() {
    std::process::exit(rankcert::cli::run(std::env::args_os()));
}
