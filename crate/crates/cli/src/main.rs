fn main() {
    std::process::exit(rso_cli::main_with_args(std::env::args_os()));
}
