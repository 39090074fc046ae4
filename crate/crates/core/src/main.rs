fn main() {
    std::process::exit(finsler_core::cli::run(std::env::args_os()));
}
