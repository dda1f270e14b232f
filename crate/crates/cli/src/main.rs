fn main() {
    std::process::exit(twisted_tori_cli::main_with_args(std::env::args_os()));
}
