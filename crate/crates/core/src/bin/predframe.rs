fn main() {
    std::process::exit(predframe::cli::main_with_args(std::env::args_os()));
}
