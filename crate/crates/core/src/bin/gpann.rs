fn main() {
    std::process::exit(gpann::cli::main_with_args(std::env::args_os()));
}
