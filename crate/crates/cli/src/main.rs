fn main() {
    std::process::exit(pcgseg_cli::run(std::env::args_os()));
}
