fn main() {
    std::process::exit(clickbait::cli::main_with_args(std::env::args_os()));
}
