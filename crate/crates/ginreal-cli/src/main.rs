fn main() {
    std::process::exit(ginreal_cli::cli::main_with_args(std::env::args_os()));
}
