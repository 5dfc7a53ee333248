fn main() {
    std::process::exit(artivae::cli::main_with_args(std::env::args_os()));
}
