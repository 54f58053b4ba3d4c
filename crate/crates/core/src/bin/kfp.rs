fn main() {
    std::process::exit(kfp_core::cli::main_with_args(std::env::args_os()));
}
