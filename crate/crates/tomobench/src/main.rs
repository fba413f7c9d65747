fn main() {
    std::process::exit(tomobench::cli::main_with_args(std::env::args_os()));
}
