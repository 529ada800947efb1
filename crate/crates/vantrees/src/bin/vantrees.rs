fn main() {
    std::process::exit(vantrees::cli::main_from_args(std::env::args_os()));
}
