fn main() {
    std::process::exit(sgn_cli::main_with_args(std::env::args_os()));
}
