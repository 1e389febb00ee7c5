fn main() {
    std::process::exit(pathkernel_cli::run(std::env::args_os()));
}
