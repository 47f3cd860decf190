fn main() {
    std::process::exit(scaffold_gait::cli::main_with_args(std::env::args_os()));
}
