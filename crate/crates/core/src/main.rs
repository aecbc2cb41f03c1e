fn main() {
    std::process::exit(edfcap::cli::main_with_args(std::env::args_os().collect()));
}
