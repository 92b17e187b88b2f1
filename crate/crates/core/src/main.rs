fn main() {
    std::process::exit(hyperpot::cli::main_with_args(std::env::args_os()));
}
