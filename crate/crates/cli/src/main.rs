fn main() {
    std::process::exit(stirlab_cli::main_with_args(std::env::args_os()));
}
