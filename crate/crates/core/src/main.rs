fn main() {
    std::process::exit(plsim::cli::main_with_args(std::env::args_os()));
}
