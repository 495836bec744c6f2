fn main() {
    std::process::exit(qclab::cli::main_with_args(std::env::args_os()));
}
