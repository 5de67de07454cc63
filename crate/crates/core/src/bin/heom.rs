fn main() {
    std::process::exit(heom_core::cli::main_with_args(std::env::args_os()));
}
