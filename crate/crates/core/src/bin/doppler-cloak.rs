fn main() {
    std::process::exit(doppler_cloak::cli::main_with_args(std::env::args_os()));
}
