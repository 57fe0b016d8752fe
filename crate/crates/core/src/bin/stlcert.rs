fn main() {
    std::process::exit(stlcert::cli::main_with_args(std::env::args_os()));
}
