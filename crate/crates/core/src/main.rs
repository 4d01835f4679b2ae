fn main() {
    std::process::exit(mongeampere::cli::main_with_args(std::env::args_os()));
}
