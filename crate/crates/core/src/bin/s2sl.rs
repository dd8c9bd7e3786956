fn main() {
    std::process::exit(s2sl::cli::main_with_args(std::env::args_os()));
}
