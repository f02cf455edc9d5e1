fn main() {
    std::process::exit(endex::cli::main_with_args(std::env::args_os()));
}
