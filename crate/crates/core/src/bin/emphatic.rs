fn main() {
    std::process::exit(emphatic::cli::main_with_args(std::env::args_os()));
}
