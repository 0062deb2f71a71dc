fn main() {
    std::process::exit(learnable_mmf::cli::main_with_args(std::env::args_os()));
}
