fn main() {
    std::process::exit(vak_cli::main_with_args(std::env::args_os()));
}
