fn main() {
    std::process::exit(bdmpc::cli::main_with_args(std::env::args_os()));
}
