fn main() {
    std::process::exit(irflow::cli::main_with_args(std::env::args_os()));
}
