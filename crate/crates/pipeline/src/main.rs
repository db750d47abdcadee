fn main() {
    std::process::exit(marsmc::cli::main_with_args(std::env::args_os()));
}
