fn main() {
    std::process::exit(cantor_core::cli::run(std::env::args_os()));
}
